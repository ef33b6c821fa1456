"""Secrecy side: faded flatness, leakage bounds, outage decomposition, quadrature leakage."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from . import channel as ch
from . import gaussian as ga
from . import lattice as la
from .gaussian import Interval
from .wiretap import WiretapCode

__all__ = [
    "FadedFlatness",
    "faded_matrix",
    "faded_flatness",
    "dual_lambda1_check",
    "leakage_bound",
    "outage_probability",
    "leakage_decomposition",
    "empirical_leakage",
    "SecrecyReport",
]


class FadedFlatness(NamedTuple):
    eps: Interval
    eta_bound: float  # upper bound on the smoothing parameter (at 2^-2k) of the faded lattice
    condition: bool  # eta_bound <= sqrt(2 pi): the faded lattice is flat at unit parameter
    sigma_condition: float  # alpha_e G prod(sigma^2 + P|h|^2)^{1/2k} / (sqrt(2 pi P) sigma)


def _check_h(h) -> np.ndarray:
    h = np.asarray(h, dtype=complex).reshape(-1)
    if np.any(h == 0):
        raise ValueError("zero fading coefficient")
    return h


def faded_matrix(h, P: float, sigma_e2: float) -> np.ndarray:
    """``sqrt(Sigma)^{-1} H`` with Sigma^{-1} = (H H^H)^{-1} / P + I / sigma_e^2.

    Sigma is the harmonic combination of the faded codeword covariance P H H^H
    and Eve's noise covariance sigma_e^2 I.
    """
    h = _check_h(h)
    hm = np.diag(h)
    sigma_inv = np.linalg.inv(hm @ hm.conj().T) / P + np.eye(len(h)) / sigma_e2
    w, v = np.linalg.eigh(sigma_inv)
    return (v * np.sqrt(w)) @ v.conj().T @ hm


def faded_flatness(code: WiretapCode, h, P: float, sigma_e2: float) -> FadedFlatness:
    """Flatness factor of ``sqrt(Sigma)^{-1} H L_e`` at unit parameter, with the analytic smoothing bound.

    When the analytic condition holds the certified value must not exceed 2^-2k.
    """
    h = _check_h(h)
    k = code.k
    lat = la.apply_matrix(code.coarse, faded_matrix(h, P, sigma_e2))
    eps = ga.flatness_factor(lat, 1.0)
    prod = math.exp(float(np.mean(np.log(sigma_e2 + P * np.abs(h) ** 2))) / 2)
    eta = code.alpha_e * code.G_eff * prod / (math.sqrt(P) * math.sqrt(sigma_e2))
    cond = eta <= math.sqrt(2 * math.pi)
    if cond and eps.lo > 2.0 ** (-2 * k):
        raise AssertionError(f"analytic condition holds but flatness {eps.lo} > 2^-2k")
    return FadedFlatness(eps, eta, cond, eta / math.sqrt(2 * math.pi))


class DualCheck(NamedTuple):
    lambda1: float
    bound: float
    ok: bool


def dual_lambda1_check(field, h, P: float, sigma_e2: float) -> DualCheck:
    """Exact lambda_1 of the dual faded lattice of psi(O_F) against ``2 sqrt(k P) sigma / (G prod(...)^{1/2k})``."""
    h = _check_h(h)
    unit = la.from_ring(field)
    faded = la.apply_matrix(unit, faded_matrix(h, P, sigma_e2))
    lam = la.shortest_vector(la.dual(faded)).length
    k = field.k
    prod = math.exp(float(np.mean(np.log(sigma_e2 + P * np.abs(h) ** 2))) / 2)
    bound = 2 * math.sqrt(k) * math.sqrt(P * sigma_e2) / (field.root_discriminant * prod)
    return DualCheck(lam, bound, lam >= bound * (1 - 1e-9))


def leakage_bound(eps: float, k: int, R: float) -> float:
    """``8 k eps R - 8 eps ln(8 eps)`` in nats."""
    if not 0 < eps <= 0.5:
        raise ValueError("eps must lie in (0, 1/2]")
    return 8 * k * eps * R - 8 * eps * math.log(8 * eps)


def outage_probability(
    model: ch.ChannelModel, snr: float, k: int, C_e: float, delta: float, trials: int, rng: np.random.Generator
) -> float:
    """P{k^-1 sum ln(1 + snr |h_i|^2) > C_e + delta}; exact (0 or 1) for deterministic channels."""
    n = trials if model.is_random else 1
    h = ch.sample_channels(model, k, n, rng)
    gains = np.log1p(snr * np.abs(h) ** 2).mean(axis=1)
    return float(np.mean(gains > C_e + delta))


class Decomposition(NamedTuple):
    outage_probability: float
    outage_term: float
    conditional_term: float | None
    certified: bool
    sigma_condition: float


def leakage_decomposition(
    code: WiretapCode,
    model: ch.ChannelModel,
    C_e: float | None,
    delta: float,
    trials: int,
    rng: np.random.Generator,
) -> Decomposition:
    """Split the average leakage into an outage part and a conditional part.

    Eve's noise variance is ``model.noise_variance``. Outage means the empirical
    log-gain average exceeds ``C_e + delta``; deterministic channels are
    evaluated exactly (no sampling).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    k = code.k
    snr = code.P / model.noise_variance
    if C_e is None:
        C_e = ch.exact_capacity(model, snr)
    p_out = outage_probability(model, snr, k, C_e, delta, trials, rng)
    sc = code.alpha_e * code.G_eff * math.exp((C_e + delta) / 2) / math.sqrt(2 * math.pi * code.P)
    certified = sc <= 1
    cond = leakage_bound(2.0 ** (-2 * k), k, code.R) if certified else None
    return Decomposition(p_out, p_out * k * code.R, cond, certified, sc)


# -- quadrature leakage ----------------------------------------------------------

class LeakageEstimate(NamedTuple):
    value: float  # nats
    error: float  # quadrature error estimate
    resolution: int


def _message_mixtures(code: WiretapCode, h: np.ndarray, sigma_e2: float):
    """Per-message output components (faded points, weights)."""
    comps = []
    for m in range(code.index):
        spec = ga.DiscreteGaussianSpec(code.coarse, code.cosets.leaders[m], code.sigma_s)
        pmf = ga.brute_force_pmf(spec, tail_tol=1e-12)
        comps.append((la.to_real(pmf.points * h), pmf.probs))
    return comps


def _mi_on_grid(comps, probs, sigma_e2, n, half, d):
    hstep = 2 * half / n
    axis = -half + hstep * (np.arange(n) + 0.5)
    mesh = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    var = sigma_e2 / 2
    norm = (2 * math.pi * var) ** (-d / 2)
    dens = np.zeros((len(comps), len(mesh)))
    for m, (pts, w) in enumerate(comps):
        step = max(1, 2_000_000 // len(mesh))
        for s in range(0, len(pts), step):
            d2 = ((mesh[:, None, :] - pts[None, s : s + step, :]) ** 2).sum(-1)
            dens[m] += (np.exp(-d2 / (2 * var)) * w[None, s : s + step]).sum(1)
    dens *= norm
    mix = probs @ dens
    total = 0.0
    cell = hstep**d
    for m in range(len(comps)):
        if probs[m] == 0:
            continue
        pm = dens[m]
        ok = (pm > 0) & (mix > 0)  # cells where both densities underflow carry no mass
        total += probs[m] * float(np.sum(pm[ok] * np.log(pm[ok] / mix[ok]))) * cell
    return total


def empirical_leakage(
    code: WiretapCode,
    h,
    sigma_e2: float,
    message_probs=None,
    budget: float = 1e-5,
    start_resolution: int | None = None,
) -> LeakageEstimate:
    """I(M; Z) for a fixed fading draw by grid quadrature of the finite-input, continuous-output channel.

    ``message_probs`` defaults to uniform. The grid covers the faded codeword
    support plus 9 noise standard deviations and is doubled until two
    resolutions agree to ``budget / 10``.
    """
    k = code.k
    if k > 2:
        raise ValueError("quadrature leakage needs k <= 2")
    if code.index > 16:
        raise ValueError("at most 16 messages")
    h = _check_h(h)
    probs = np.full(code.index, 1.0 / code.index) if message_probs is None else np.asarray(message_probs, float)
    if probs.shape != (code.index,) or abs(probs.sum() - 1) > 1e-9 or probs.min() < 0:
        raise ValueError("message_probs must be a distribution over the messages")
    comps = _message_mixtures(code, h, sigma_e2)
    reach = max(float(np.max(np.abs(pts))) for pts, _ in comps)
    half = reach + 9 * math.sqrt(sigma_e2 / 2)
    d = 2 * k
    n = start_resolution or (128 if k == 1 else 16)
    prev = _mi_on_grid(comps, probs, sigma_e2, n, half, d)
    limit = 2048 if k == 1 else 48
    while True:
        n = n * 2 if k == 1 else n + 8
        cur = _mi_on_grid(comps, probs, sigma_e2, n, half, d)
        err = abs(cur - prev)
        prev = cur
        if err <= budget / 10 or n >= limit:
            break
    return LeakageEstimate(max(cur, 0.0), err, n)


@dataclass
class SecrecyReport:
    eps_faded: tuple
    leakage_bound_nats: float | None
    leakage_bound_bits: float | None
    outage_term: float
    conditional_term: float | None
    empirical_leakage: float | None
    empirical_error: float | None
    k: int
    R: float
    C_e: float
    delta: float
    G_eff: float

    def __post_init__(self):
        for name in ("leakage_bound_nats", "outage_term", "conditional_term", "empirical_leakage"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)


def secrecy_report(
    code: WiretapCode,
    model: ch.ChannelModel,
    h,
    delta: float,
    trials: int,
    rng: np.random.Generator,
    with_empirical: bool = False,
) -> SecrecyReport:
    """Faded flatness at ``h``, the leakage bound with the measured eps, and the outage decomposition."""
    sigma_e2 = model.noise_variance
    C_e = ch.exact_capacity(model, code.P / sigma_e2)
    ff = faded_flatness(code, h, code.P, sigma_e2)
    lb = leakage_bound(ff.eps.hi, code.k, code.R) if 0 < ff.eps.hi <= 0.5 else None
    dec = leakage_decomposition(code, model, C_e, delta, trials, rng)
    emp = empirical_leakage(code, h, sigma_e2) if with_empirical else None
    return SecrecyReport(
        eps_faded=(ff.eps.lo, ff.eps.hi),
        leakage_bound_nats=lb,
        leakage_bound_bits=None if lb is None else lb / math.log(2),
        outage_term=dec.outage_term,
        conditional_term=dec.conditional_term,
        empirical_leakage=None if emp is None else emp.value,
        empirical_error=None if emp is None else emp.error,
        k=code.k,
        R=code.R,
        C_e=C_e,
        delta=delta,
        G_eff=code.G_eff,
    )
