"""Genetic-algorithm search for power-imbalanced codebook parameters.

Maximise the MED of the superimposed constellation over the per-occupancy
energies, phases and the ring ratio omega, subject to a floor ``kappa`` on
the analytic system MPD and ``sum(E) = M J / K``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .codebook import design_codebooks, DEFAULT_BUDGET
from .errors import ConfigError
from .metrics import gamma_mpd_closed_form, med_exact, med_monte_carlo
from .signature import builtin_template, energy_target

INFEASIBLE = -math.inf
# keeps genes strictly inside open box bounds
_EDGE = 1e-6


@dataclass(frozen=True)
class DesignPoint:
    energies: tuple
    phases: tuple
    omega: float

    def to_dict(self):
        return {"E": list(self.energies), "phi": list(self.phases), "omega": self.omega}


@dataclass
class GaConfig:
    population_size: int = 50
    generations: int = 50
    kappa: float = 0.0
    med_method: str = "auto"
    Q: int = 5000
    t_max: int = 20
    seed: int = 0
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    mutation_scale: float = 0.05
    elitism_count: int = 2
    tournament_size: int = 2
    omega_max: float = 10.0
    workers: int = 1

    def __post_init__(self):
        if self.population_size < 2:
            raise ConfigError(f"population_size must be >= 2, got {self.population_size}")
        if self.generations < 1:
            raise ConfigError(f"generations must be >= 1, got {self.generations}")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if not 0 <= self.elitism_count < self.population_size:
            raise ConfigError("elitism_count must be in [0, population_size)")
        if self.tournament_size < 1:
            raise ConfigError("tournament_size must be >= 1")
        if self.omega_max <= 1:
            raise ConfigError("omega_max must exceed 1")
        if self.med_method not in ("auto", "exact", "monte_carlo"):
            raise ConfigError(f"unknown med_method {self.med_method!r}")


@dataclass
class Fitness:
    med: float
    mpd: float
    feasible: bool

    @property
    def value(self):
        return self.med if self.feasible else INFEASIBLE


@dataclass
class OptimizationResult:
    best: DesignPoint
    best_med: float
    best_mpd: float
    feasible: bool
    history: list
    evaluations: int
    config: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "feasible": self.feasible,
            "best": self.best.to_dict(),
            "best_med": self.best_med,
            "best_mpd": self.best_mpd,
            "evaluations": self.evaluations,
            "history": [None if math.isnan(h) else h for h in self.history],
            "config": self.config,
        }


def project_energies(raw, target_sum):
    """Rescale positive energies so they sum to ``target_sum``."""
    raw = np.asarray(raw, dtype=float)
    if np.any(~np.isfinite(raw)) or np.any(raw <= 0):
        raise ConfigError(f"energies must be positive, got {raw}")
    if not target_sum > 0:
        raise ConfigError(f"target_sum must be positive, got {target_sum}")
    return raw * (target_sum / raw.sum())


def _resolve_med_method(cfg, M, J):
    if cfg.med_method != "auto":
        return cfg.med_method
    return "exact" if M**J < DEFAULT_BUDGET else "monte_carlo"


def evaluate_candidate(point, M, template, cfg):
    """MED, analytic MPD and feasibility of one design point."""
    if isinstance(template, str):
        template = builtin_template(template)
    mpd = gamma_mpd_closed_form(template, point.energies, M, point.omega)
    cs = design_codebooks(template, point.energies, point.phases, point.omega, M)
    if _resolve_med_method(cfg, M, template.J) == "exact":
        med = med_exact(cs).value
    else:
        med = med_monte_carlo(cs, cfg.Q, cfg.t_max, seed=cfg.seed).value
    return Fitness(med, mpd, mpd >= cfg.kappa)


class _Problem:
    """Genome layout ``[raw E (d_f), phi (d_f), omega]`` and its search box."""

    def __init__(self, M, template, cfg):
        self.M = M
        self.template = template
        self.cfg = cfg
        self.d_f = template.d_f
        self.target = energy_target(M, template)
        n = 2 * self.d_f + 1
        self.lo = np.empty(n)
        self.hi = np.empty(n)
        self.lo[: self.d_f], self.hi[: self.d_f] = _EDGE, self.target
        self.lo[self.d_f:-1], self.hi[self.d_f:-1] = _EDGE, np.pi - _EDGE
        self.lo[-1], self.hi[-1] = 1.0 + _EDGE, cfg.omega_max

    def repair(self, g):
        g = np.clip(g, self.lo, self.hi)
        g[: self.d_f] = project_energies(g[: self.d_f], self.target)
        return g

    def decode(self, g):
        return DesignPoint(tuple(map(float, g[: self.d_f])),
                           tuple(map(float, g[self.d_f:-1])), float(g[-1]))

    def random(self, rng):
        return self.repair(rng.uniform(self.lo, self.hi))


def _better(a, b):
    """Feasible beats infeasible; ties in fitness are broken by MPD."""
    return (a.value, a.mpd) > (b.value, b.mpd)


def _tournament(rng, fits, size):
    idx = rng.integers(0, len(fits), size=size)
    best = idx[0]
    for i in idx[1:]:
        if _better(fits[i], fits[best]):
            best = i
    return best


def ga_optimize(M, template, cfg):
    """Real-coded GA with tournament selection, uniform crossover,
    Gaussian mutation and elitism.

    Offspring ``i`` of generation ``g`` draws all its randomness from a
    stream seeded by ``(seed, g, i)``, so results are identical for any
    ``cfg.workers``.  The returned result is the best feasible individual
    ever evaluated; when none is feasible ``feasible`` is False and ``best``
    is the individual with the largest MPD.
    """
    if isinstance(template, str):
        template = builtin_template(template)
    prob = _Problem(M, template, cfg)
    width = prob.hi - prob.lo

    def evaluate(pop):
        points = [prob.decode(g) for g in pop]
        if cfg.workers > 1:
            with ThreadPoolExecutor(cfg.workers) as ex:
                return list(ex.map(lambda p: evaluate_candidate(p, M, template, cfg), points))
        return [evaluate_candidate(p, M, template, cfg) for p in points]

    pop = [prob.random(np.random.default_rng([cfg.seed, 0, i]))
           for i in range(cfg.population_size)]
    fits = evaluate(pop)
    evaluations = len(pop)

    best_g, best_f = None, None
    best_mpd_g, best_mpd_f = None, None
    history = []

    def track(pop, fits):
        nonlocal best_g, best_f, best_mpd_g, best_mpd_f
        for g, f in zip(pop, fits):
            if f.feasible and (best_f is None or f.med > best_f.med):
                best_g, best_f = g.copy(), f
            if best_mpd_f is None or f.mpd > best_mpd_f.mpd:
                best_mpd_g, best_mpd_f = g.copy(), f
        history.append(best_f.med if best_f is not None else math.nan)

    track(pop, fits)
    for gen in range(1, cfg.generations):
        order = sorted(range(len(pop)), key=lambda i: (fits[i].value, fits[i].mpd), reverse=True)
        elite = [pop[i] for i in order[: cfg.elitism_count]]
        elite_fits = [fits[i] for i in order[: cfg.elitism_count]]
        children = []
        for i in range(cfg.population_size - cfg.elitism_count):
            rng = np.random.default_rng([cfg.seed, gen, i])
            a = pop[_tournament(rng, fits, cfg.tournament_size)]
            b = pop[_tournament(rng, fits, cfg.tournament_size)]
            if rng.random() < cfg.crossover_rate:
                mask = rng.random(a.size) < 0.5
                child = np.where(mask, a, b)
            else:
                child = a.copy()
            mutate = rng.random(child.size) < cfg.mutation_rate
            child = child + mutate * rng.normal(0.0, cfg.mutation_scale * width)
            children.append(prob.repair(child))
        child_fits = evaluate(children)
        evaluations += len(children)
        pop = elite + children
        fits = elite_fits + child_fits
        track(pop, fits)

    cfg_dict = asdict(cfg)
    if best_f is None:
        return OptimizationResult(prob.decode(best_mpd_g), best_mpd_f.med, best_mpd_f.mpd,
                                  False, history, evaluations, cfg_dict)
    return OptimizationResult(prob.decode(best_g), best_f.med, best_f.mpd, True, history,
                              evaluations, cfg_dict)
