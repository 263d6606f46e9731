"""Published power-imbalanced codebooks, verbatim to four decimals.

Each user's codebook is a K x M block; rows are resources, columns are
codewords.  Blocks are separated by blank lines.
"""

A_4x6_M4 = """
0                 0                 0                 0
-0.2378+1.0684j   -0.0684+0.3074j   0.0684-0.3074j    0.2378-1.0684j
0                 0                 0                 0
-0.2840           0.9869            -0.9869           0.2840

-0.2378+1.0684j   -0.0684+0.3074j   0.0684-0.3074j    0.2378-1.0684j
0                 0                 0                 0
-0.2840           0.9869            -0.9869           0.2840
0                 0                 0                 0

0.6744+0.3794j    0.1941+0.1092j    -0.1941-0.1092j   -0.6744-0.3794j
-0.1941-0.1092j   0.6744+0.3794j    -0.6744-0.3794j   0.1941+0.1092j
0                 0                 0                 0
0                 0                 0                 0

0                 0                 0                 0
0                 0                 0                 0
0.6744+0.3794j    0.1941+0.1092j    -0.1941-0.1092j   -0.6744-0.3794j
-0.1941-0.1092j   0.6744+0.3794j    -0.6744-0.3794j   0.1941+0.1092j

0.9869            0.2840            -0.2840           -0.9869
0                 0                 0                 0
0                 0                 0                 0
0.0684-0.3074j    -0.2378+1.0684j   0.2378-1.0684j    -0.0684+0.3074j

0                 0                 0                 0
0.9869            0.2840            -0.2840           -0.9869
0.0684-0.3074j    -0.2378+1.0684j   0.2378-1.0684j    -0.0684+0.3074j
0                 0                 0                 0
"""

B_5x10_M4 = """
-0.6927+0.7932j   -0.2312+0.2647j   0.2312-0.2647j    0.6927-0.7932j
-0.1838           0.5509            -0.5509           0.1838
0                 0                 0                 0
0                 0                 0                 0
0                 0                 0                 0

-0.5559+0.8876j   -0.1855+0.2962j   0.1855-0.2962j    0.5559-0.8876j
0                 0                 0                 0
-0.3038-0.1705j   0.9104+0.5110j    -0.9104-0.5110j   0.3038+0.1705j
0                 0                 0                 0
0                 0                 0                 0

0.9104+0.5110j    0.3038+0.1705j    -0.3038-0.1705j   -0.9104-0.5110j
0                 0                 0                 0
0                 0                 0                 0
0.1855-0.2962j    -0.5559+0.8876j   0.5559-0.8876j    -0.1855+0.2962j
0                 0                 0                 0

0.5509            0.1838            -0.1838           -0.5509
0                 0                 0                 0
0                 0                 0                 0
0                 0                 0                 0
0.2312-0.2647j    -0.6927+0.7932j   0.6927-0.7932j    -0.2312+0.2647j

0                 0                 0                 0
-0.6927+0.7932j   -0.2312+0.2647j   0.2312-0.2647j    0.6927-0.7932j
-0.1838           0.5509            -0.5509           0.1838
0                 0                 0                 0
0                 0                 0                 0

0                 0                 0                 0
-0.5559+0.8876j   -0.1855+0.2962j   0.1855-0.2962j    0.5559-0.8876j
0                 0                 0                 0
-0.3038-0.1705j   0.9104+0.5110j    -0.9104-0.5110j   0.3038+0.1705j
0                 0                 0                 0

0                 0                 0                 0
0.9104+0.5110j    0.3038+0.1705j    -0.3038-0.1705j   -0.9104-0.5110j
0                 0                 0                 0
0                 0                 0                 0
0.1855-0.2962j    -0.5559+0.8876j   0.5559-0.8876j    -0.1855+0.2962j

0                 0                 0                 0
0                 0                 0                 0
-0.6927+0.7932j   -0.2312+0.2647j   0.2312-0.2647j    0.6927-0.7932j
-0.1838           0.5509            -0.5509           0.1838
0                 0                 0                 0

0                 0                 0                 0
0                 0                 0                 0
-0.5559+0.8876j   -0.1855+0.2962j   0.1855-0.2962j    0.5559-0.8876j
0                 0                 0                 0
-0.3038-0.1705j   0.9104+0.5110j    -0.9104-0.5110j   0.3038+0.1705j

0                 0                 0                 0
0                 0                 0                 0
0                 0                 0                 0
-0.6927+0.7932j   -0.2312+0.2647j   0.2312-0.2647j    0.6927-0.7932j
-0.1838           0.5509            -0.5509           0.1838
"""

TABLES = {
    "A_4x6_M4": ("S4x6", A_4x6_M4),
    "B_5x10_M4": ("S5x10", B_5x10_M4),
}


def parse_table(text):
    """Parse a table into a nested list ``[user][resource][codeword]``."""
    blocks = [b for b in text.strip().split("\n\n") if b.strip()]
    return [[[complex(tok) for tok in line.split()] for line in b.strip().splitlines()]
            for b in blocks]
