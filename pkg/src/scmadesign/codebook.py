"""Per-user sparse codebooks, superposition and codebook files.

Codeword and user indices are 0-based throughout the Python API.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _reference
from .constellation import build_mc, dimension_energy
from .errors import BudgetExceededError, ConfigError, InvariantError
from .signature import (
    N_ACTIVE,
    ResourceWeights,
    build_signature,
    builtin_template,
    energy_target,
    ezc,
)

SCHEMA = "scma-codebook/1"
DEFAULT_BUDGET = 2**24
REFERENCE_IDS = tuple(_reference.TABLES)

# normalisation tolerance for sets built in floating point vs. printed to 4 decimals
BUILT_RTOL = 1e-6
REFERENCE_RTOL = 2e-2


@dataclass(frozen=True, eq=False)
class Codebook:
    user: int
    entries: np.ndarray

    @property
    def active_resources(self):
        return np.flatnonzero(np.any(self.entries != 0, axis=1))

    @property
    def compact(self):
        """The N x M block of nonzero rows."""
        return self.entries[self.active_resources]


@dataclass(frozen=True, eq=False)
class CodebookSet:
    """J user codebooks stacked as a ``(J, K, M)`` complex array."""

    entries: np.ndarray
    provenance: dict = field(default_factory=lambda: {"kind": "generated"})
    template: str | None = None
    design_point: dict | None = None

    def __post_init__(self):
        X = np.array(self.entries, dtype=complex)
        if X.ndim != 3:
            raise InvariantError("codebook shape", f"expected (J, K, M), got {X.shape}")
        X.setflags(write=False)
        object.__setattr__(self, "entries", X)

    @property
    def J(self):
        return self.entries.shape[0]

    @property
    def K(self):
        return self.entries.shape[1]

    @property
    def M(self):
        return self.entries.shape[2]

    @property
    def N(self):
        return N_ACTIVE

    @property
    def d_f(self):
        return int(self.indicator.sum(axis=1).max())

    @property
    def dims(self):
        return {"M": self.M, "J": self.J, "K": self.K, "N": self.N, "d_f": self.d_f}

    @property
    def indicator(self):
        """K x J occupancy matrix."""
        return np.any(self.entries != 0, axis=2).T.astype(int)

    @property
    def codebooks(self):
        return [Codebook(j, self.entries[j]) for j in range(self.J)]

    def total_energy(self):
        return float(np.sum(np.abs(self.entries) ** 2))

    def scaled(self, s):
        return CodebookSet(self.entries * s, dict(self.provenance), self.template, self.design_point)


def validate(cs, rtol=BUILT_RTOL):
    """Raise :class:`InvariantError` naming the first failing invariant."""
    for j, cb in enumerate(cs.codebooks):
        if cb.active_resources.size != N_ACTIVE:
            raise InvariantError("N=2 nonzero rows",
                                 f"user {j} has {cb.active_resources.size} nonzero rows")
    X = cs.entries
    scale = max(np.abs(X).max(), 1.0)
    if not np.allclose(X, -X[:, :, ::-1], rtol=0, atol=1e-9 * scale):
        raise InvariantError("antipodal symmetry", "codeword m must equal -(codeword M-1-m)")
    target = cs.M * cs.J
    total = cs.total_energy()
    if abs(total - target) > rtol * target:
        raise InvariantError("normalization",
                             f"total energy {total:.6g}, expected M*J = {target}")


def build_codebooks(sig, mc):
    """``chi_j = ezc(diag(S[:, j])) @ C`` for every user."""
    t = sig.template
    if sig.entries.shape != (t.K, t.J):
        raise ConfigError("signature matrix does not match its template")
    if not np.isclose(sig.mc_energy, mc.energy, rtol=1e-12):
        raise ConfigError("signature built for a different mother constellation energy")
    if not sig.weights.is_normalized(energy_target(mc.M, t)):
        raise ConfigError("signature weights are not normalised for this M")
    X = np.stack([ezc(sig.entries[:, j]) @ mc.rows for j in range(t.J)])
    dp = {"E": list(sig.weights.energies), "phi": list(sig.weights.phases), "omega": mc.omega}
    return CodebookSet(X, {"kind": "generated"}, t.name, dp)


def design_codebooks(template, energies, phases, omega, M):
    """Convenience wrapper: template + design point -> CodebookSet."""
    if isinstance(template, str):
        template = builtin_template(template)
    mc = build_mc(M, omega)
    w = ResourceWeights(tuple(energies), tuple(phases))
    sig = build_signature(template, w, mc.energy, M)
    return build_codebooks(sig, mc)


def superimpose(cs, indices):
    """Sum of the selected codeword of each user, a length-K vector."""
    idx = np.asarray(indices, dtype=int)
    if idx.shape != (cs.J,):
        raise ConfigError(f"need {cs.J} indices, got shape {idx.shape}")
    if np.any(idx < 0) or np.any(idx >= cs.M):
        raise ConfigError(f"indices must lie in 0..{cs.M - 1}")
    return cs.entries[np.arange(cs.J), :, idx].sum(axis=0)


def check_budget(cs, budget=DEFAULT_BUDGET):
    n = cs.M**cs.J
    if n >= budget:
        raise BudgetExceededError(
            f"{cs.M}^{cs.J} = {n} superimposed codewords reaches the enumeration budget "
            f"{budget}; use Monte Carlo MED or the MPA decoder instead")
    return n


def index_tuples(M, J):
    """All ``M**J`` index tuples in lexicographic order, shape (M**J, J)."""
    grids = np.indices((M,) * J, dtype=np.int32)
    return grids.reshape(J, -1).T


def superimposed_points(cs, tuples=None):
    """Superimposed codewords for ``tuples`` (all of them by default), shape (n, K)."""
    if tuples is None:
        check_budget(cs)
        tuples = index_tuples(cs.M, cs.J)
    tuples = np.asarray(tuples)
    out = np.zeros((tuples.shape[0], cs.K), dtype=complex)
    for j in range(cs.J):
        out += cs.entries[j].T[tuples[:, j]]
    return out


def enumerate_superimposed(cs, budget=DEFAULT_BUDGET):
    """Yield ``(indices, vector)`` pairs in lexicographic index order."""
    check_budget(cs, budget)
    for idx in itertools.product(range(cs.M), repeat=cs.J):
        yield idx, superimpose(cs, idx)


def fit_design_point(cs, template):
    """Recover ``(energies, phases, omega)`` from a generated-style codebook set.

    Energies are the mean squared norm of every row carrying ``z_i``; omega
    comes from the ratio of outer to inner amplitudes of rows built from the
    first constellation row; phases are circular means of the recovered
    ``z_i``.
    """
    if isinstance(template, str):
        template = builtin_template(template)
    if (cs.K, cs.J) != (template.K, template.J):
        raise ConfigError("codebook set does not match template dimensions")
    M = cs.M
    half = M // 2
    energy = [[] for _ in range(template.d_f)]
    z_est = [[] for _ in range(template.d_f)]
    ratios = []
    for j in range(cs.J):
        for n, r in enumerate(template.active_rows(j)):
            i = template.placement[r, j] - 1
            row = cs.entries[j, r]
            energy[i].append(np.sum(np.abs(row) ** 2))
            if n == 0:
                # row = z * [w_{M/2}, ..., w_1, ...]
                z_est[i].append(row[half - 1])
                ratios.append(abs(row[0]) / abs(row[half - 1]))
            else:
                # row = z * [-w_1, ...]
                z_est[i].append(-row[0])
    E = np.array([np.mean(e) for e in energy])
    top = float(np.mean(ratios))
    omega = 1.0 + (top - 1.0) / (half - 1)
    phases = np.array([np.angle(np.mean(np.exp(1j * np.angle(z)))) for z in z_est])
    phases = np.mod(phases, 2 * np.pi)
    return E, phases, omega


def reference_codebooks(ref_id):
    try:
        template, table = _reference.TABLES[ref_id]
    except KeyError:
        raise ConfigError(f"unknown reference id {ref_id!r}; known: {', '.join(REFERENCE_IDS)}") from None
    X = np.array(_reference.parse_table(table), dtype=complex)
    return CodebookSet(X, {"kind": "reference", "id": ref_id}, template)


def _encode(cs):
    doc = {
        "schema": SCHEMA,
        "M": cs.M,
        "J": cs.J,
        "K": cs.K,
        "codebooks": [[[[float(v.real), float(v.imag)] for v in row] for row in cb]
                      for cb in cs.entries],
        "provenance": cs.provenance,
    }
    if cs.template is not None:
        doc["template"] = cs.template
    if cs.design_point is not None:
        doc["design_point"] = {k: (list(map(float, v)) if isinstance(v, (list, tuple, np.ndarray))
                                   else float(v)) for k, v in cs.design_point.items()}
    return doc


def dumps(cs):
    return json.dumps(_encode(cs), indent=1)


def save_codebooks(cs, path):
    Path(path).write_text(dumps(cs) + "\n")


def loads(text, source="<string>"):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: malformed codebook file: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        got = doc.get("schema") if isinstance(doc, dict) else None
        raise ConfigError(f"{source}: unsupported schema {got!r}, expected {SCHEMA!r}")
    try:
        M, J, K = int(doc["M"]), int(doc["J"]), int(doc["K"])
        raw = np.array(doc["codebooks"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: malformed codebook file: {exc!r}") from None
    if raw.shape != (J, K, M, 2):
        raise ConfigError(f"{source}: codebooks have shape {raw.shape}, expected {(J, K, M, 2)}")
    provenance = doc.get("provenance") or {}
    loaded_from = {"kind": "loaded", "path": source}
    if provenance:
        loaded_from["origin"] = provenance
    cs = CodebookSet(raw[..., 0] + 1j * raw[..., 1], loaded_from, doc.get("template"),
                     doc.get("design_point"))
    rtol = REFERENCE_RTOL if provenance.get("kind") == "reference" else BUILT_RTOL
    validate(cs, rtol)
    return cs


def load_codebooks(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return loads(text, str(path))
