"""Signature templates, resource weights and factor-graph utilities."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvariantError

N_ACTIVE = 2

# Entry i > 0 means z_i occupies the cell, 0 means inactive.
_TEMPLATES = {
    "S4x6": [
        [0, 1, 2, 0, 3, 0],
        [1, 0, 2, 0, 0, 3],
        [0, 3, 0, 2, 0, 1],
        [3, 0, 0, 2, 1, 0],
    ],
    "S5x10": [
        [1, 2, 3, 4, 0, 0, 0, 0, 0, 0],
        [4, 0, 0, 0, 1, 2, 3, 0, 0, 0],
        [0, 3, 0, 0, 4, 0, 0, 1, 2, 0],
        [0, 0, 2, 0, 0, 3, 0, 4, 0, 1],
        [0, 0, 0, 1, 0, 0, 2, 0, 3, 4],
    ],
}

TEMPLATE_NAMES = tuple(_TEMPLATES)


@dataclass(frozen=True, eq=False)
class SignatureTemplate:
    placement: np.ndarray
    name: str = "custom"

    def __post_init__(self):
        P = np.array(self.placement, dtype=int)
        if P.ndim != 2 or P.size == 0:
            raise InvariantError("template shape", f"expected a 2-D matrix, got shape {P.shape}")
        col = np.count_nonzero(P, axis=0)
        if np.any(col != N_ACTIVE):
            raise InvariantError("N=2 nonzero cells per column", f"column counts {col.tolist()}")
        row = np.count_nonzero(P, axis=1)
        if np.any(row != row[0]) or row[0] == 0:
            raise InvariantError("d_f nonzero cells per row", f"row counts {row.tolist()}")
        if P.min() < 0 or P.max() > row[0]:
            raise InvariantError("placement index range", f"indices must lie in 0..{row[0]}")
        P.setflags(write=False)
        object.__setattr__(self, "placement", P)

    @property
    def K(self):
        return self.placement.shape[0]

    @property
    def J(self):
        return self.placement.shape[1]

    @property
    def d_f(self):
        return int(np.count_nonzero(self.placement[0]))

    @property
    def overload(self):
        return self.J / self.K

    def active_rows(self, user):
        """Resource indices (0-based) occupied by ``user`` (0-based)."""
        return np.flatnonzero(self.placement[:, user])

    def user_z_indices(self, user):
        """The pair of z indices carried by ``user`` in resource order."""
        rows = self.active_rows(user)
        return tuple(int(self.placement[r, user]) for r in rows)


def builtin_template(name):
    try:
        return SignatureTemplate(np.array(_TEMPLATES[name]), name)
    except KeyError:
        raise ConfigError(f"unknown template {name!r}; known: {', '.join(TEMPLATE_NAMES)}") from None


def indicator_matrix(t):
    return (t.placement > 0).astype(int)


def girth(ind):
    """Shortest cycle length of the user/resource bipartite graph.

    Returns ``None`` when the graph has no cycle.
    """
    ind = np.asarray(ind)
    K, J = ind.shape
    # nodes 0..K-1 are resources, K..K+J-1 are users
    adj = [[] for _ in range(K + J)]
    for k, j in zip(*np.nonzero(ind)):
        adj[k].append(K + j)
        adj[K + j].append(k)

    best = None
    for root in range(K + J):
        dist = {root: 0}
        parent = {root: -1}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            if best is not None and 2 * dist[u] + 1 >= best:
                break
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    parent[v] = u
                    queue.append(v)
                elif parent[u] != v:
                    length = dist[u] + dist[v] + 1
                    if best is None or length < best:
                        best = length
    return best


@dataclass(frozen=True)
class ResourceWeights:
    """Per-occupancy energies ``E_i`` and phases ``phi_i``.

    Phases are accepted on ``[0, pi)`` so reference codebooks with a real
    positive weight load verbatim; the optimiser keeps them strictly inside.
    """

    energies: tuple
    phases: tuple

    def __post_init__(self):
        E = tuple(float(e) for e in self.energies)
        phi = tuple(float(p) for p in self.phases)
        if len(E) != len(phi):
            raise ConfigError(f"{len(E)} energies but {len(phi)} phases")
        if any(not np.isfinite(e) or e <= 0 for e in E):
            raise ConfigError(f"energies must be positive, got {E}")
        if any(not (0.0 <= p < np.pi) for p in phi):
            raise ConfigError(f"phases must lie in [0, pi), got {phi}")
        object.__setattr__(self, "energies", E)
        object.__setattr__(self, "phases", phi)

    @property
    def z(self):
        return np.sqrt(np.array(self.energies)) * np.exp(1j * np.array(self.phases))

    def is_normalized(self, target, rtol=1e-9):
        return abs(sum(self.energies) - target) <= rtol * target


@dataclass(frozen=True, eq=False)
class SignatureMatrix:
    entries: np.ndarray
    template: SignatureTemplate
    weights: ResourceWeights
    mc_energy: float


def energy_target(M, t):
    """Required sum of per-occupancy energies, ``M J / K``."""
    return M * t.J / t.K


def build_signature(t, w, mc_energy, M):
    """Fill the template with ``z_i = sqrt(E_i / E) exp(j phi_i)``."""
    if len(w.energies) != t.d_f:
        raise ConfigError(f"template needs {t.d_f} energies, got {len(w.energies)}")
    if not mc_energy > 0:
        raise ConfigError(f"mc_energy must be positive, got {mc_energy}")
    target = energy_target(M, t)
    if not w.is_normalized(target):
        raise ConfigError(f"energies sum to {sum(w.energies):.12g}, expected M*J/K = {target:.12g}")
    z = np.sqrt(np.array(w.energies) / mc_energy) * np.exp(1j * np.array(w.phases))
    lut = np.concatenate([[0], z])
    S = lut[t.placement]
    S.setflags(write=False)
    return SignatureMatrix(S, t, w, float(mc_energy))


def energy_matrix(t, energies):
    energies = np.asarray(energies, dtype=float)
    if energies.shape != (t.d_f,):
        raise ConfigError(f"template needs {t.d_f} energies, got {energies.shape}")
    return np.concatenate([[0.0], energies])[t.placement]


def is_power_imbalanced(t, energies, atol=1e-9):
    """True when users receive unequal total energy.

    For S4x6 this is ``E1 + E3 != 2 E2``; for S5x10 ``E1 + E4 != E2 + E3``.
    """
    per_user = energy_matrix(t, energies).sum(axis=0)
    return bool(np.ptp(per_user) > atol)


def ezc(column):
    """Diagonalise a sparse signature column and drop its all-zero columns."""
    column = np.asarray(column)
    nz = np.flatnonzero(column)
    if nz.size != N_ACTIVE:
        raise ConfigError(f"column must have exactly {N_ACTIVE} nonzero entries, got {nz.size}")
    out = np.zeros((column.size, N_ACTIVE), dtype=np.result_type(column, complex))
    out[nz, np.arange(N_ACTIVE)] = column[nz]
    return out
