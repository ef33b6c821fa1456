"""Bob's receiver: MMSE-GDFE front end, MAP/ML lattice decoding and the reliability bounds."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import channel as ch
from . import enumeration as en
from . import lattice as la
from .wiretap import WiretapCode, encode_batch

__all__ = [
    "GdfePreprocessor",
    "EffectiveNoiseStats",
    "mmse_gdfe",
    "decode",
    "decode_batch",
    "received_min_distance_bound",
    "tail_threshold",
    "tail_bound_check",
    "error_rate",
    "ErrorRateReport",
]

DEFAULT_ETAS = (0.1, 0.5, 1.0)
TAIL_TS = (0.5, 1.0, 2.0, 4.0)
SHARD_SIZE = 1000


@dataclass(frozen=True, eq=False)
class GdfePreprocessor:
    """QR blocks of ``[H; rho^{-1/2} I] = [Q1; Q2] R`` with ``diag(R) > 0``."""

    Q1: np.ndarray
    Q2: np.ndarray
    RFactor: np.ndarray
    rho_b: float
    H: np.ndarray

    def front_end(self, y: np.ndarray) -> np.ndarray:
        """``Q1^H y`` for a vector or a batch of row vectors."""
        return np.asarray(y) @ self.Q1.conj()

    def constant(self, y: np.ndarray) -> float:
        """``C(y) = ||y||^2 - ||Q1^H y||^2``, the x-independent remainder."""
        return float(np.linalg.norm(y) ** 2 - np.linalg.norm(self.Q1.conj().T @ y) ** 2)

    def identity_residual(self, y: np.ndarray, x: np.ndarray) -> float:
        """Relative mismatch of ``||y - Hx||^2 + ||x||^2/rho = ||Q1^H y - R x||^2 + C(y)``."""
        lhs = np.linalg.norm(y - self.H @ x) ** 2 + np.linalg.norm(x) ** 2 / self.rho_b
        rhs = np.linalg.norm(self.Q1.conj().T @ y - self.RFactor @ x) ** 2 + self.constant(y)
        return float(abs(lhs - rhs) / max(1.0, abs(lhs)))

    def effective_noise(self, w: np.ndarray, x: np.ndarray) -> np.ndarray:
        """``v = Q1^H w - rho^{-1} R^{-H} x`` (rows are samples)."""
        rinv_h = np.linalg.inv(self.RFactor).conj().T
        return np.asarray(w) @ self.Q1.conj() - (np.asarray(x) @ rinv_h.T) / self.rho_b


@dataclass
class EffectiveNoiseStats:
    delta: float
    sigma_eff: float
    norms_sq: np.ndarray = field(repr=False)


def mmse_gdfe(h, rho_b: float) -> GdfePreprocessor:
    """MMSE-GDFE preprocessing for the channel matrix ``H`` (a diagonal given as a vector, or a full matrix)."""
    if not rho_b > 0:
        raise ValueError("rho_b must be positive")
    h = np.asarray(h, dtype=complex)
    hm = np.diag(h) if h.ndim == 1 else h
    k = hm.shape[1]
    stacked = np.vstack([hm, np.eye(k) / math.sqrt(rho_b)])
    q, r = np.linalg.qr(stacked)
    ph = np.diag(r) / np.abs(np.diag(r))
    q = q * ph
    r = ph.conj()[:, None] * r
    return GdfePreprocessor(q[: hm.shape[0]], q[hm.shape[0]:], r, float(rho_b), hm)


def _decoder_lattice(code: WiretapCode, pre: GdfePreprocessor, metric: str) -> la.ComplexLattice:
    if metric == "map":
        return la.apply_matrix(code.fine, pre.RFactor)
    if metric == "ml":
        return la.apply_matrix(code.fine, pre.H)
    raise ValueError("metric must be 'map' or 'ml'")


def decode_batch(code: WiretapCode, y: np.ndarray, h, rho_b: float, metric: str = "map") -> np.ndarray:
    """Decode each row of ``y`` received through the same channel ``h``."""
    pre = mmse_gdfe(h, rho_b)
    lat = _decoder_lattice(code, pre, metric)
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    targets = pre.front_end(y) if metric == "map" else y
    real_t = la.to_real(targets)
    out = np.empty(len(y), dtype=np.int64)
    for i, t in enumerate(real_t):
        coords, _ = en.closest_coords(lat.basis, t)
        out[i] = code.cosets.message_of_coords(coords)
    return out


def decode(code: WiretapCode, y: np.ndarray, h, rho_b: float, metric: str = "map") -> int:
    """MAP (regularised) or ML decoding of one received vector to a message index."""
    return int(decode_batch(code, np.asarray(y)[None, :], h, rho_b, metric)[0])


class MinDistance(NamedTuple):
    exact_sq: float | None
    amgm_sq: float


def amgm_bound_sq(code: WiretapCode, h, rho_b: float) -> float:
    """``alpha_b^2 k prod(1/rho + |h_i|^2)^{1/k}``; valid because algebraic norms of nonzero integers are >= 1."""
    h = np.asarray(h, dtype=complex)
    g = np.log(1.0 / rho_b + np.abs(h) ** 2)
    return code.alpha_b**2 * code.k * math.exp(float(g.mean()))


def received_min_distance_bound(code: WiretapCode, h, rho_b: float, exact: bool = True) -> MinDistance:
    """Squared minimum distance of ``R L_b`` by enumeration and its AM-GM lower bound."""
    bound = amgm_bound_sq(code, h, rho_b)
    if not exact or code.fine.dim > en.MAX_DIMENSION:
        return MinDistance(None, bound)
    pre = mmse_gdfe(h, rho_b)
    d2 = la.shortest_vector(la.apply_matrix(code.fine, pre.RFactor)).length ** 2
    if d2 < bound * (1 - 1e-9):
        raise AssertionError(f"enumerated d_R^2={d2} below the AM-GM bound {bound}")
    return MinDistance(d2, bound)


def tail_threshold(t: float, k: int) -> float:
    return 1.0 + 2.0 * math.sqrt(t / k) + 2.0 * t


def eta_to_t(eta: float, k: int) -> float:
    """The ``t`` with ``tail_threshold(t, k) = 1 + eta``."""
    s = (-1.0 / math.sqrt(k) + math.sqrt(1.0 / k + 2.0 * eta)) / 2.0
    return s * s


def coarse_delta(code: WiretapCode) -> float:
    """Subgaussian slack delta = ln((1+eps)/(1-eps)) with eps = eps_{L_e}(sqrt(P))."""
    eps = code.eps_coarse.hi
    if eps >= 1:
        return math.inf
    return math.log((1 + eps) / (1 - eps))


class TailRow(NamedTuple):
    t: float
    threshold: float
    exceedance: float
    std_error: float
    bound: float
    ok: bool


def _effective_noise_samples(code, h, rho_b, trials, rng, messages=None):
    pre = mmse_gdfe(h, rho_b)
    sigma2 = code.P / rho_b
    if messages is None:
        messages = rng.integers(0, code.index, trials)
    x = encode_batch(code, messages, rng)
    w = ch.complex_normal(rng, x.shape, sigma2)
    return pre.effective_noise(w, x), sigma2


def tail_bound_check(code: WiretapCode, h, rho_b: float, trials: int, rng: np.random.Generator, ts: Sequence[float] = TAIL_TS):
    """Exceedance of ``||v||^2 / (k sigma_b^2)`` over the subgaussian thresholds, with ``sigma_b^2 = P / rho_b``."""
    v, sigma2 = _effective_noise_samples(code, h, rho_b, trials, rng)
    ratio = (np.abs(v) ** 2).sum(1) / (code.k * sigma2)
    delta = coarse_delta(code)
    rows = []
    for t in ts:
        thr = tail_threshold(t, code.k)
        p = float(np.mean(ratio > thr))
        se = math.sqrt(max(p * (1 - p), 1.0 / trials) / trials)
        bound = math.exp(delta - t)
        rows.append(TailRow(t, thr, p, se, bound, p <= bound + 3 * se))
    return rows, EffectiveNoiseStats(delta, math.sqrt(sigma2), ratio * code.k * sigma2)


# -- error rate ---------------------------------------------------------------

@dataclass
class _Counts:
    trials: int = 0
    errors: int = 0
    term1: np.ndarray = None
    term2: np.ndarray = None

    def add(self, other: "_Counts") -> None:
        self.trials += other.trials
        self.errors += other.errors
        self.term1 = other.term1 if self.term1 is None else self.term1 + other.term1
        self.term2 = other.term2 if self.term2 is None else self.term2 + other.term2


def _run_shard(code, model, snr, n, rng, etas, probs, metric) -> _Counts:
    k = code.k
    sigma2 = code.P / snr
    hs = ch.sample_channels(model, k, n, rng)
    if probs is None:
        msgs = rng.integers(0, code.index, n)
    else:
        msgs = rng.choice(code.index, size=n, p=probs)
    x = encode_batch(code, msgs, rng)
    w = ch.complex_normal(rng, x.shape, sigma2)
    y = hs * x + w
    thr = np.array([1.0 + e for e in etas])
    errors = 0
    t1 = np.zeros(len(etas), dtype=np.int64)
    t2 = np.zeros(len(etas), dtype=np.int64)
    cache = {}
    for i in range(n):
        key = hs[i].tobytes()
        if key not in cache:
            pre = mmse_gdfe(hs[i], snr)
            lat = _decoder_lattice(code, pre, metric)
            d2 = la.shortest_vector(la.apply_matrix(code.fine, pre.RFactor)).length ** 2
            cache = {key: (pre, lat, d2)} if model.is_random else {**cache, key: (pre, lat, d2)}
        pre, lat, d2 = cache[key]
        target = pre.front_end(y[i]) if metric == "map" else y[i]
        coords, _ = en.closest_coords(lat.basis, la.to_real(target))
        errors += int(code.cosets.message_of_coords(coords) != msgs[i])
        v = pre.effective_noise(w[i], x[i])
        t1 += (np.sum(np.abs(v) ** 2) / (k * sigma2)) >= thr
        t2 += (d2 / (4 * k * sigma2)) < thr
    return _Counts(n, errors, t1, t2)


class ErrorRateReport(NamedTuple):
    snr: float
    trials: int
    errors: int
    p_e: float
    ci: tuple
    etas: tuple
    delta: float
    term1_analytic: tuple  # e^delta e^{-t(eta)}: rigorous subgaussian tail
    term1_display: tuple  # e^delta e^{-k eta^2}: simplified display form, reported only
    term1_empirical: tuple
    term2_empirical: tuple  # P{d_R^2 / 4k sigma^2 < 1 + eta} with exact d_R per draw
    bound: float  # min over eta of min(1, term1_analytic + term2_empirical)
    bound_empirical: float  # min over eta of term1_empirical + term2_empirical

    @property
    def ci_width(self) -> float:
        return self.ci[1] - self.ci[0]


def error_rate(
    code: WiretapCode,
    model: ch.ChannelModel,
    snr: float,
    trials: int,
    rng: np.random.Generator | None = None,
    *,
    seed: int | None = None,
    threads: int = 1,
    message_probs=None,
    etas: Sequence[float] = DEFAULT_ETAS,
    metric: str = "map",
) -> ErrorRateReport:
    """Monte Carlo block error rate at ``snr = P / sigma_b^2`` with the two-term reliability bound.

    Pass ``seed`` for sharded runs: shard ``j`` uses the stream derived from
    ``(seed, j)`` and holds ``SHARD_SIZE`` trials, so results do not depend on
    ``threads``. Otherwise all trials use ``rng``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    probs = None if message_probs is None else np.asarray(message_probs, dtype=float)
    if probs is not None and (probs.shape != (code.index,) or abs(probs.sum() - 1) > 1e-9 or probs.min() < 0):
        raise ValueError("message_probs must be a distribution over the messages")
    etas = tuple(float(e) for e in etas)
    total = _Counts()
    if seed is None:
        if rng is None:
            raise ValueError("give rng or seed")
        total.add(_run_shard(code, model, snr, trials, rng, etas, probs, metric))
    else:
        sizes = [SHARD_SIZE] * (trials // SHARD_SIZE) + ([trials % SHARD_SIZE] if trials % SHARD_SIZE else [])
        jobs = [(j, n) for j, n in enumerate(sizes)]

        def work(job):
            j, n = job
            return _run_shard(code, model, snr, n, ch.spawn_rng(seed, j), etas, probs, metric)

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                parts = list(pool.map(work, jobs))
        else:
            parts = [work(j) for j in jobs]
        for p in parts:
            total.add(p)
    n = total.trials
    delta = coarse_delta(code)
    t1a = tuple(min(1.0, math.exp(delta - eta_to_t(e, code.k))) for e in etas)
    t1d = tuple(min(1.0, math.exp(delta - code.k * e * e)) for e in etas)
    t1e = tuple(float(c) / n for c in total.term1)
    t2e = tuple(float(c) / n for c in total.term2)
    bound = min(min(1.0, a + b) for a, b in zip(t1a, t2e))
    bound_emp = min(min(1.0, a + b) for a, b in zip(t1e, t2e))
    return ErrorRateReport(
        float(snr), n, total.errors, total.errors / n, ch.wilson_interval(total.errors, n),
        etas, delta, t1a, t1d, t1e, t2e, bound, bound_emp,
    )
