"""Downlink link-level simulation: channel, MPA and ML detection, BER sweeps.

Received signal per transmission: ``y = diag(h) sum_j x_j + n`` with
``n ~ CN(0, sigma2 I)``.  AWGN uses ``h = 1``; Rayleigh draws ``h_k ~ CN(0, 1)``
independently per resource and per transmission, known at the receiver.

Eb/N0 convention: the codebooks carry total energy ``M J``, so a superimposed
transmission has average energy ``J`` spread over ``J log2(M)`` bits, giving
``Eb = 1 / log2(M)`` and ``sigma2 = Eb / (Eb/N0)``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import logsumexp

from .codebook import check_budget, superimposed_points, DEFAULT_BUDGET
from .errors import ConfigError

EBN0_DEFINITION = "Eb = 1/log2(M) (total codebook energy M*J, J*log2(M) bits per transmission); sigma2 = Eb / 10^(EbN0_dB/10) per complex resource"


@dataclass
class ChannelSample:
    h: np.ndarray
    noise_variance: float


@dataclass(frozen=True)
class MpaConfig:
    iterations: int = 8
    damping: float = 0.0
    domain: str = "log"

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if not 0.0 <= self.damping < 1.0:
            raise ConfigError(f"damping must lie in [0, 1), got {self.damping}")
        if self.domain not in ("log", "probability"):
            raise ConfigError(f"domain must be 'log' or 'probability', got {self.domain!r}")


@dataclass(frozen=True)
class StopRule:
    min_errors: int = 200
    max_bits: int = 10**8
    # require min_errors for every user rather than in total
    per_user: bool = False


def bits_per_symbol(M):
    return int(round(math.log2(M)))


def ebn0_to_noise_variance(ebn0_db, M):
    return (1.0 / bits_per_symbol(M)) / 10.0 ** (np.asarray(ebn0_db, dtype=float) / 10.0)


def draw_channel(rng, shape, channel):
    if channel == "awgn":
        return np.ones(shape, dtype=complex)
    if channel == "rayleigh":
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    raise ConfigError(f"unknown channel {channel!r}; use 'awgn' or 'rayleigh'")


def draw_noise(rng, shape, sigma2):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(sigma2 / 2.0)


def transmit(cs, indices, h, noise):
    """``y = h * x(indices) + noise``; ``indices`` is (J,) or (B, J)."""
    idx = np.asarray(indices, dtype=int)
    single = idx.ndim == 1
    idx = np.atleast_2d(idx)
    if idx.shape[1] != cs.J or np.any(idx < 0) or np.any(idx >= cs.M):
        raise ConfigError(f"indices must have {cs.J} entries in 0..{cs.M - 1}")
    x = superimposed_points(cs, idx)
    y = np.asarray(h) * x + np.asarray(noise)
    return y[0] if single else y


class FactorGraph:
    """Resource/user adjacency and per-resource codeword sums for MPA."""

    def __init__(self, cs):
        self.M, self.J, self.K = cs.M, cs.J, cs.K
        ind = cs.indicator
        self.users = [np.flatnonzero(ind[k]) for k in range(self.K)]
        # (resource, slot) pairs feeding each user
        self.links = [[] for _ in range(self.J)]
        for k, us in enumerate(self.users):
            for slot, u in enumerate(us):
                self.links[u].append((k, slot))
        self.sums = []
        for k, us in enumerate(self.users):
            grids = np.indices((self.M,) * len(us))
            s = np.zeros(grids.shape[1:], dtype=complex)
            for slot, u in enumerate(us):
                s = s + cs.entries[u, k][grids[slot]]
            self.sums.append(s)


@dataclass
class MpaResult:
    # (B, J, M) posterior probabilities
    posteriors: np.ndarray
    # (B, J) hard decisions
    decisions: np.ndarray


def _expand(msg, slot, ndim):
    """Reshape a (B, M) message to broadcast along axis ``slot + 1``."""
    shape = [msg.shape[0]] + [1] * ndim
    shape[slot + 1] = msg.shape[1]
    return msg.reshape(shape)


def mpa_decode(y, h, cs, sigma2, cfg=MpaConfig(), graph=None):
    """Sum-product message passing on the factor graph, flooding schedule.

    ``y`` and ``h`` are (K,) or (B, K).  Resource nodes marginalise over the
    ``M^(d_f - 1)`` interfering combinations using the likelihood
    ``exp(-|y_k - h_k s|^2 / sigma2)``; user nodes combine the messages of
    their other resources.
    """
    y = np.asarray(y, dtype=complex)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    h = np.broadcast_to(np.asarray(h, dtype=complex), y.shape)
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(h))):
        raise ConfigError("non-finite received signal or channel")
    if not sigma2 > 0:
        raise ConfigError(f"sigma2 must be positive, got {sigma2}")
    g = graph or FactorGraph(cs)
    B, M = y.shape[0], g.M

    loglik = []
    for k in range(g.K):
        s = g.sums[k]
        d = y[:, k].reshape((B,) + (1,) * s.ndim) - h[:, k].reshape((B,) + (1,) * s.ndim) * s
        loglik.append(-(d.real**2 + d.imag**2) / sigma2)

    log_domain = cfg.domain == "log"
    if log_domain:
        nu = [[np.full((B, M), -math.log(M)) for _ in g.users[k]] for k in range(g.K)]
    else:
        lik = [np.exp(L - L.max(axis=tuple(range(1, L.ndim)), keepdims=True)) for L in loglik]
        nu = [[np.full((B, M), 1.0 / M) for _ in g.users[k]] for k in range(g.K)]
    mu = [[None] * len(g.users[k]) for k in range(g.K)]

    def normalise(m):
        if log_domain:
            return m - logsumexp(m, axis=1, keepdims=True)
        # floor keeps a fully underflowed message from turning into NaN
        m = np.maximum(m, 1e-300)
        return m / m.sum(axis=1, keepdims=True)

    for it in range(cfg.iterations):
        for k in range(g.K):
            n_users = len(g.users[k])
            for slot in range(n_users):
                axes = tuple(a + 1 for a in range(n_users) if a != slot)
                if log_domain:
                    T = loglik[k]
                    for other in range(n_users):
                        if other != slot:
                            T = T + _expand(nu[k][other], other, n_users)
                    new = normalise(logsumexp(T, axis=axes).reshape(B, M))
                else:
                    T = lik[k]
                    for other in range(n_users):
                        if other != slot:
                            T = T * _expand(nu[k][other], other, n_users)
                    new = normalise(T.sum(axis=axes).reshape(B, M))
                if cfg.damping and it > 0:
                    new = normalise((1 - cfg.damping) * new + cfg.damping * mu[k][slot])
                mu[k][slot] = new
        for u in range(g.J):
            for k, slot in g.links[u]:
                acc = 0.0 if log_domain else 1.0
                for k2, slot2 in g.links[u]:
                    if k2 != k:
                        acc = acc + mu[k2][slot2] if log_domain else acc * mu[k2][slot2]
                if np.isscalar(acc):
                    acc = np.full((B, M), acc)
                nu[k][slot] = normalise(acc)

    post = np.empty((B, g.J, M))
    for u in range(g.J):
        acc = 0.0 if log_domain else 1.0
        for k, slot in g.links[u]:
            acc = acc + mu[k][slot] if log_domain else acc * mu[k][slot]
        post[:, u] = np.exp(normalise(acc)) if log_domain else normalise(acc)
    decisions = np.argmax(post, axis=2)
    if single:
        return MpaResult(post[0], decisions[0])
    return MpaResult(post, decisions)


def ml_decode(y, h, cs, sigma2=None, budget=DEFAULT_BUDGET, points=None):
    """Exhaustive maximum-likelihood detection.

    Minimises ``|y - h * x(n)|^2`` over all ``M^J`` superimposed codewords;
    ties go to the lexicographically smallest index tuple.  ``sigma2`` does
    not affect the decision and is accepted for interface symmetry.
    """
    check_budget(cs, budget)
    y = np.asarray(y, dtype=complex)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    h = np.broadcast_to(np.asarray(h, dtype=complex), y.shape)
    if points is None:
        points = superimposed_points(cs)
    n = len(points)
    best = np.empty(len(y), dtype=np.int64)
    chunk = max(1, 2**22 // (n * cs.K))
    for s in range(0, len(y), chunk):
        d = y[s:s + chunk, None, :] - h[s:s + chunk, None, :] * points[None, :, :]
        best[s:s + chunk] = np.argmin(np.sum(d.real**2 + d.imag**2, axis=2), axis=1)
    out = np.empty((len(y), cs.J), dtype=np.int64)
    for j in range(cs.J - 1, -1, -1):
        out[:, j] = best % cs.M
        best //= cs.M
    return out[0] if single else out


def labels(M, labeling="gray"):
    """Bit label of each codeword index."""
    m = np.arange(M)
    if labeling == "gray":
        return m ^ (m >> 1)
    if labeling == "natural":
        return m
    raise ConfigError(f"unknown labeling {labeling!r}; use 'gray' or 'natural'")


def _popcount(x):
    x = np.asarray(x, dtype=np.int64)
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x >>= 1
    return count


@dataclass
class BerPoint:
    ebn0_db: float
    bits: int
    errors: int
    per_user_bits: list
    per_user_errors: list

    @property
    def ber(self):
        return self.errors / self.bits if self.bits else math.nan

    @property
    def per_user_ber(self):
        return [e / b if b else math.nan for e, b in zip(self.per_user_errors, self.per_user_bits)]


@dataclass
class BerCurve:
    points: list
    channel: str
    decoder: str
    seed: int
    config: dict = field(default_factory=dict)

    def ber(self):
        return np.array([p.ber for p in self.points])

    def per_user_ber(self):
        """(n_points, J) array."""
        return np.array([p.per_user_ber for p in self.points])

    def to_csv(self):
        J = len(self.points[0].per_user_bits) if self.points else 0
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["ebn0_db", "bits", "errors", "ber"] + [f"user{j + 1}_ber" for j in range(J)])
        for p in self.points:
            w.writerow([repr(float(p.ebn0_db)), p.bits, p.errors, repr(p.ber)]
                       + [repr(b) for b in p.per_user_ber])
        return buf.getvalue()

    def sidecar(self):
        return {
            "channel": self.channel,
            "decoder": self.decoder,
            "seed": self.seed,
            "ebn0_definition": EBN0_DEFINITION,
            "config": self.config,
            "points": [dict(asdict(p), ber=p.ber, per_user_ber=p.per_user_ber) for p in self.points],
        }


def _run_batch(cs, channel, decoder, sigma2, batch_size, seed, point, batch, mpa_cfg,
               label_of, graph, points):
    rng = np.random.default_rng([seed, point, batch])
    b = bits_per_symbol(cs.M)
    bits = rng.integers(0, 2, size=(batch_size, cs.J, b))
    tx_label = bits @ (1 << np.arange(b - 1, -1, -1))
    index_of = np.argsort(label_of)
    tx = index_of[tx_label]
    h = draw_channel(rng, (batch_size, cs.K), channel)
    noise = draw_noise(rng, (batch_size, cs.K), sigma2)
    y = h * superimposed_points(cs, tx) + noise
    if decoder == "ml":
        rx = ml_decode(y, h, cs, sigma2, points=points)
    else:
        rx = mpa_decode(y, h, cs, sigma2, mpa_cfg, graph).decisions
    return _popcount(label_of[rx] ^ tx_label).sum(axis=0)


def ber_sweep(cs, channel="awgn", decoder="mpa", ebn0_grid_db=(0, 2, 4, 6, 8, 10, 12),
              stop_rule=StopRule(), seed=0, mpa_cfg=MpaConfig(), labeling="gray",
              batch_size=2000, workers=1):
    """Monte Carlo BER per Eb/N0 point with per-user error counts.

    Trials run in batches of ``batch_size``; batch ``b`` at grid point ``p``
    uses a random stream seeded by ``(seed, p, b)``.  A point stops after the
    first batch that meets ``stop_rule``; batches are consumed in order, so
    ``workers`` only changes speed, never the result.
    """
    grid = [float(x) for x in np.atleast_1d(ebn0_grid_db)]
    if not grid or not all(np.isfinite(grid)):
        raise ConfigError("Eb/N0 grid must be a non-empty list of finite values")
    if decoder not in ("mpa", "ml"):
        raise ConfigError(f"unknown decoder {decoder!r}; use 'mpa' or 'ml'")
    if channel not in ("awgn", "rayleigh"):
        raise ConfigError(f"unknown channel {channel!r}; use 'awgn' or 'rayleigh'")
    if batch_size < 1 or stop_rule.min_errors < 1 or stop_rule.max_bits < 1:
        raise ConfigError("batch_size, min_errors and max_bits must be positive")
    label_of = labels(cs.M, labeling)
    points = None
    if decoder == "ml":
        check_budget(cs)
        points = superimposed_points(cs)
    graph = FactorGraph(cs)
    b = bits_per_symbol(cs.M)
    per_batch_bits = batch_size * b

    out = []
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for p, ebn0 in enumerate(grid):
            sigma2 = float(ebn0_to_noise_variance(ebn0, cs.M))
            errors = np.zeros(cs.J, dtype=np.int64)
            user_bits = 0
            batch = 0
            done = False
            while not done:
                wave = range(batch, batch + max(workers, 1))
                run = lambda bi: _run_batch(cs, channel, decoder, sigma2, batch_size, seed, p, bi,
                                            mpa_cfg, label_of, graph, points)
                results = pool.map(run, wave) if pool else map(run, wave)
                for err in results:
                    errors += err
                    user_bits += per_batch_bits
                    batch += 1
                    hit = errors.min() if stop_rule.per_user else errors.sum()
                    if hit >= stop_rule.min_errors or user_bits * cs.J >= stop_rule.max_bits:
                        done = True
                        break
            out.append(BerPoint(ebn0, int(user_bits * cs.J), int(errors.sum()),
                                [int(user_bits)] * cs.J, [int(e) for e in errors]))
    finally:
        if pool:
            pool.shutdown()
    config = {"ebn0_grid_db": grid, "stop_rule": asdict(stop_rule), "mpa": asdict(mpa_cfg),
              "labeling": labeling, "batch_size": batch_size}
    return BerCurve(out, channel, "ml" if decoder == "ml" else "mpa", seed, config)
