"""Two-dimensional Star-QAM mother constellation.

The constellation is a real 2 x M matrix parameterised by a single ring
ratio ``omega > 1``.  Amplitude levels are ``w_i = (i - 1)(omega - 1) + 1``
for ``i = 1..M/2``::

    row 1:  [ w_{M/2}, ..., w_1, -w_1, ..., -w_{M/2} ]
    row 2:  [ -w_1, w_2, ..., w_{M/2}, -w_{M/2}, ..., -w_2, w_1 ]
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

log = logging.getLogger(__name__)


def _check_domain(M, omega):
    if not isinstance(M, (int, np.integer)) or M < 4 or (M & (M - 1)):
        raise ConfigError(f"M must be a power of two >= 4, got {M!r}")
    if not np.isfinite(omega) or omega <= 1:
        raise ConfigError(f"omega must exceed 1, got {omega!r}")


def amplitude_levels(M, omega):
    """Return ``[w_1, ..., w_{M/2}]``."""
    i = np.arange(1, M // 2 + 1)
    return (i - 1) * (omega - 1) + 1.0


@dataclass(frozen=True, eq=False)
class MotherConstellation:
    M: int
    omega: float
    rows: np.ndarray

    @property
    def energy(self):
        return dimension_energy(self.M, self.omega)


def build_mc(M, omega):
    _check_domain(M, omega)
    w = amplitude_levels(M, float(omega))
    row1 = np.concatenate([w[::-1], -w])
    row2 = np.concatenate([[-w[0]], w[1:], -w[:0:-1], [w[0]]])
    rows = np.vstack([row1, row2])
    rows.setflags(write=False)
    return MotherConstellation(int(M), float(omega), rows)


def dimension_energy(M, omega):
    """Energy of one constellation row (sum of squared entries)."""
    _check_domain(M, omega)
    t = omega - 1.0
    return M * (M - 1) * (M - 2) * t**2 / 12.0 + M * (M - 2) * t / 2.0 + M


def mc_mpd_closed_form(M, omega):
    """Piecewise analytic minimum product distance, as published.

    Exact for M = 4.  For M > 4 it over-estimates the true value on parts
    of the omega axis; :func:`mc_mpd_brute_force` is authoritative there.
    """
    _check_domain(M, omega)
    first = 1.0 + (5.0 / 3.0) * (M > 4)
    second = M - 2 + math.sqrt((M - 3) ** 2 + 4)
    if omega <= first:
        return 4.0 * (omega - 1) ** 2
    if omega <= second:
        return omega**2 - 1.0
    return (2 * M - 4) * (omega - 1) + 4.0


def mc_mpd_brute_force(mc):
    """Minimum product distance by exhaustive pair enumeration.

    For each column pair the product runs over the rows in which the two
    entries differ.  Identical columns give 0.
    """
    C = np.asarray(mc.rows, dtype=float)
    M = C.shape[1]
    best = math.inf
    for p in range(M):
        for q in range(p + 1, M):
            diff = np.abs(C[:, p] - C[:, q])
            nz = diff[diff > 0]
            prod = float(np.prod(nz)) if nz.size else 0.0
            best = min(best, prod)
    return best


def mc_mpd(M, omega):
    """Authoritative MPD of the mother constellation.

    Uses the brute-force value and logs whenever it disagrees with the
    published closed form.
    """
    brute = mc_mpd_brute_force(build_mc(M, omega))
    closed = mc_mpd_closed_form(M, omega)
    if not math.isclose(brute, closed, rel_tol=1e-9):
        log.info("closed-form MPD %.6g differs from enumeration %.6g at M=%d omega=%.6g",
                 closed, brute, M, omega)
    return brute
