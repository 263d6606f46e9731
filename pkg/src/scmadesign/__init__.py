"""Power-imbalanced SCMA codebook design, distance metrics and link simulation."""

from .codebook import (
    CodebookSet,
    build_codebooks,
    design_codebooks,
    load_codebooks,
    reference_codebooks,
    save_codebooks,
    superimpose,
)
from .constellation import build_mc, dimension_energy, mc_mpd_brute_force, mc_mpd_closed_form
from .errors import BudgetExceededError, ConfigError, InfeasibleError, InvariantError, ScmaError
from .link import MpaConfig, StopRule, ber_sweep, ml_decode, mpa_decode
from .metrics import gamma_mpd_closed_form, med_exact, med_monte_carlo, system_mpd
from .optimizer import DesignPoint, GaConfig, ga_optimize
from .signature import ResourceWeights, build_signature, builtin_template, girth

__version__ = "0.1.0"
