"""Minimum Euclidean distance and minimum product distance of codebook sets."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .codebook import check_budget, index_tuples, superimposed_points, DEFAULT_BUDGET
from .constellation import dimension_energy, mc_mpd_closed_form
from .errors import ConfigError
from .signature import builtin_template

# below this many superimposed points exact MED enumerates all pairs directly
PAIRWISE_LIMIT = 2**8
_CHUNK = 200_000


@dataclass
class MedEstimate:
    value: float
    method: str
    pairs_examined: int
    Q: int | None = None
    t_max: int | None = None
    seed: int | None = None
    # closest pair of index tuples
    witness: tuple | None = None
    degenerate: bool = False

    def to_dict(self):
        d = asdict(self)
        if self.witness is not None:
            d["witness"] = [list(map(int, w)) for w in self.witness]
        return d


@dataclass
class MpdReport:
    per_user: list
    system: float
    closed_form: float | None = None
    degenerate_users: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _as_real(points):
    return np.hstack([points.real, points.imag])


def _min_pair(points):
    """Smallest squared distance among rows of ``points`` and its index pair."""
    n = len(points)
    d2 = pdist(_as_real(points), "sqeuclidean")
    k = int(np.argmin(d2))
    # invert the condensed index
    i = int(n - 2 - math.floor(math.sqrt(-8 * k + 4 * n * (n - 1) - 7) / 2 - 0.5))
    j = int(k + i + 1 - n * (n - 1) // 2 + (n - i) * ((n - i) - 1) // 2)
    return float(d2[k]), i, j


def _med_pairwise(cs):
    tuples = index_tuples(cs.M, cs.J)
    d2, i, j = _min_pair(superimposed_points(cs, tuples))
    return d2, (tuple(map(int, tuples[i])), tuple(map(int, tuples[j])))


def _user_differences(cs):
    """Distinct difference vectors ``x_j(a) - x_j(b)`` per user, with one (a, b) each."""
    out = []
    for j in range(cs.J):
        X = cs.entries[j]
        a, b = np.meshgrid(np.arange(cs.M), np.arange(cs.M), indexing="ij")
        a, b = a.ravel(), b.ravel()
        D = (X[:, a] - X[:, b]).T
        key = np.round(np.hstack([D.real, D.imag]), 12)
        _, first = np.unique(key, axis=0, return_index=True)
        first = np.sort(first)
        out.append((D[first], a[first], b[first]))
    return out


def _med_branch_bound(cs):
    """Exact MED via branch-and-bound over per-user codeword differences.

    Every pair of superimposed codewords differs by ``sum_j d_j`` with each
    ``d_j`` a difference of two codewords of user ``j``.  Users are added one
    at a time; a partial sum is dropped once a lower bound on its final
    squared norm exceeds the best complete value found so far.  The bound
    per resource is ``max(0, |partial| - sum of the largest remaining
    difference moduli)``.
    """
    J, K = cs.J, cs.K
    diffs = _user_differences(cs)
    scale = float(np.max(np.abs(cs.entries)) ** 2)
    zero_tol = 1e-18 * max(scale, 1.0)

    # seed the bound with the best single-user difference
    best = math.inf
    for D, _, _ in diffs:
        e = np.sum(np.abs(D) ** 2, axis=1)
        e = e[e > zero_tol]
        if e.size:
            best = min(best, float(e.min()))
    rem = np.zeros((J + 1, K))
    for t in range(J - 1, -1, -1):
        rem[t] = rem[t + 1] + np.abs(diffs[t][0]).max(axis=0)

    state = {"best": best, "choice": None, "collision": None}

    def descend(S, choice, nonzero, t):
        if t == J:
            e = np.sum(np.abs(S) ** 2, axis=1)
            coll = nonzero & (e <= zero_tol)
            if coll.any() and state["collision"] is None:
                state["collision"] = choice[np.argmax(coll)]
            e = np.where(e > zero_tol, e, np.inf)
            k = int(np.argmin(e))
            if e[k] <= state["best"]:
                state["best"] = float(e[k])
                state["choice"] = choice[k]
            return
        D = diffs[t][0]
        n_opt = len(D)
        S2 = (S[:, None, :] + D[None, :, :]).reshape(-1, K)
        lb = np.maximum(np.abs(S2) - rem[t + 1], 0.0) ** 2
        keep = lb.sum(axis=1) <= state["best"] * (1 + 1e-12)
        opt = np.tile(np.arange(n_opt), len(S))[keep]
        parent = np.repeat(np.arange(len(S)), n_opt)[keep]
        S2 = S2[keep]
        c2 = np.column_stack([choice[parent], opt])
        nz2 = nonzero[parent] | np.any(D[opt] != 0, axis=1)
        for s in range(0, len(S2), _CHUNK):
            descend(S2[s:s + _CHUNK], c2[s:s + _CHUNK], nz2[s:s + _CHUNK], t + 1)

    descend(np.zeros((1, K), complex), np.zeros((1, 0), int), np.zeros(1, bool), 0)

    choice = state["collision"] if state["collision"] is not None else state["choice"]
    if choice is None:
        return state["best"], None, False
    p = tuple(int(diffs[j][1][c]) for j, c in enumerate(choice))
    q = tuple(int(diffs[j][2][c]) for j, c in enumerate(choice))
    if state["collision"] is not None:
        return 0.0, (p, q), True
    return state["best"], (p, q), False


def med_exact(cs, budget=DEFAULT_BUDGET, algorithm="auto"):
    """Exact minimum Euclidean distance over all superimposed codewords.

    ``algorithm`` is ``"pairwise"`` (enumerate every pair), ``"branch_bound"``
    or ``"auto"`` (pairwise for small constellations).  Both return the
    minimum over all ``M^J (M^J - 1) / 2`` pairs.  Colliding superimposed
    codewords give ``value == 0`` with ``degenerate`` set and the colliding
    index tuples in ``witness``.
    """
    n = check_budget(cs, budget)
    if algorithm == "auto":
        algorithm = "pairwise" if n <= PAIRWISE_LIMIT else "branch_bound"
    if algorithm == "pairwise":
        d2, witness = _med_pairwise(cs)
        degenerate = d2 <= 1e-18 * max(float(np.max(np.abs(cs.entries)) ** 2), 1.0)
        if degenerate:
            d2 = 0.0
    elif algorithm == "branch_bound":
        d2, witness, degenerate = _med_branch_bound(cs)
    else:
        raise ConfigError(f"unknown MED algorithm {algorithm!r}")
    return MedEstimate(math.sqrt(d2), "exact", n * (n - 1) // 2,
                       witness=witness, degenerate=bool(degenerate))


def _sample_tuples(rng, M, J, Q):
    """Q index tuples drawn uniformly with replacement, repeats removed.

    A repeated tuple is the same superimposed codeword, not a second point.
    """
    tuples = np.unique(rng.integers(0, M, size=(Q, J)), axis=0)
    while len(tuples) < 2:
        tuples = np.unique(np.vstack([tuples, rng.integers(0, M, size=(1, J))]), axis=0)
    return tuples


def _mc_batch(cs, Q, seed, batch):
    rng = np.random.default_rng([seed, batch])
    tuples = _sample_tuples(rng, cs.M, cs.J, Q)
    d2, i, j = _min_pair(superimposed_points(cs, tuples))
    return d2, (tuple(map(int, tuples[i])), tuple(map(int, tuples[j])))


def med_monte_carlo(cs, Q=5000, t_max=20, seed=0, aggregate="min", workers=1):
    """Monte Carlo MED estimate.

    Each of ``t_max`` batches draws ``Q`` index tuples uniformly at random and
    takes the exact MED among the distinct ones.  Batches are combined by
    their minimum, which can never fall below the true MED;
    ``aggregate="last"`` keeps only the final batch instead.  Batch ``b`` draws from a stream seeded by ``(seed, b)`` so
    the result does not depend on ``workers``.
    """
    if Q < 2 or t_max < 1:
        raise ConfigError(f"need Q >= 2 and t_max >= 1, got Q={Q}, t_max={t_max}")
    if aggregate not in ("min", "last"):
        raise ConfigError(f"aggregate must be 'min' or 'last', got {aggregate!r}")
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            batches = list(ex.map(lambda b: _mc_batch(cs, Q, seed, b), range(t_max)))
    else:
        batches = [_mc_batch(cs, Q, seed, b) for b in range(t_max)]
    if aggregate == "last":
        d2, witness = batches[-1]
    else:
        d2, witness = min(batches, key=lambda r: r[0])
    return MedEstimate(math.sqrt(d2), "monte_carlo", t_max * Q * (Q - 1) // 2,
                       Q=Q, t_max=t_max, seed=seed, witness=witness,
                       degenerate=bool(d2 == 0.0))


def codebook_mpd(cb):
    """Minimum product distance of one user's codebook.

    ``cb`` is a :class:`~scmadesign.codebook.Codebook` or a K x M array.
    Duplicate codewords give 0.
    """
    X = np.asarray(getattr(cb, "entries", cb))
    if X.shape[1] < 2:
        raise ConfigError("a codebook needs at least two codewords for MPD")
    X = X[np.any(X != 0, axis=1)]
    tol = 1e-12 * max(float(np.abs(X).max()), 1.0)
    best = math.inf
    M = X.shape[1]
    for p in range(M):
        for q in range(p + 1, M):
            diff = np.abs(X[:, p] - X[:, q])
            nz = diff[diff > tol]
            best = min(best, float(np.prod(nz)) if nz.size else 0.0)
    return best


def system_mpd(cs, closed_form=None):
    per_user = [codebook_mpd(cb) for cb in cs.codebooks]
    return MpdReport(per_user, min(per_user), closed_form,
                     [j for j, v in enumerate(per_user) if v == 0.0])


def gamma_mpd_closed_form(template, energies, M, omega):
    """Analytic system MPD of a Star-QAM design.

    ``min_j sqrt(E_a E_b) / E * MPD(C)`` where ``(a, b)`` are the two weights
    user ``j`` carries; for S4x6 this is ``min{sqrt(E1 E3), E2} / E * MPD(C)``.
    """
    if isinstance(template, str):
        template = builtin_template(template)
    E = np.asarray(energies, dtype=float)
    if E.shape != (template.d_f,):
        raise ConfigError(f"template needs {template.d_f} energies, got {E.shape}")
    pair = min(math.sqrt(E[a - 1] * E[b - 1])
               for a, b in (template.user_z_indices(j) for j in range(template.J)))
    return pair / dimension_energy(M, omega) * mc_mpd_closed_form(M, omega)


def metrics_report(med, mpd):
    """JSON-ready metrics document."""
    return {
        "med": {"value": med.value, "method": med.method, "Q": med.Q, "t_max": med.t_max,
                "seed": med.seed, "pairs_examined": med.pairs_examined,
                "degenerate": med.degenerate,
                "witness": None if med.witness is None else [list(w) for w in med.witness]},
        "mpd": {"per_user": mpd.per_user, "system": mpd.system, "closed_form": mpd.closed_form,
                "degenerate_users": mpd.degenerate_users},
    }
