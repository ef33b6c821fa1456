"""Lattice Gaussian measures: flatness factor, smoothing parameter, sampling.

Conventions: a complex Gaussian with parameter sigma has density
``(pi sigma^2)^-k exp(-||z - c||^2 / sigma^2)`` on C^k, i.e. variance sigma^2 per
complex dimension and sigma^2 / 2 per real coordinate. A discrete Gaussian
over the coset ``L + c`` puts weight ``exp(-||x||^2 / sigma^2)`` on each point
``x`` of the coset (it is centred at the origin).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import enumeration as en
from . import lattice as la
from .lattice import ComplexLattice, TailNotCertified

__all__ = [
    "CovarianceSpec",
    "DiscreteGaussianSpec",
    "Interval",
    "SubgaussianCertificate",
    "SamplerRefused",
    "Lemma1NotApplicable",
    "CertificateUnavailable",
    "TailNotCertified",
    "flatness_factor",
    "flatness_grid_max",
    "smoothing_parameter",
    "klein_threshold",
    "sample_discrete_gaussian",
    "brute_force_pmf",
    "lemma1_distance",
    "subgaussian_check",
]


class SamplerRefused(ValueError):
    """Sigma is below the per-coordinate threshold where Klein's sampler is trusted."""


class Lemma1NotApplicable(ValueError):
    """The flatness condition eps_L(sqrt(Sigma)) <= eps <= 1/2 fails."""


class CertificateUnavailable(ValueError):
    """Flatness factor >= 1: no subgaussian certificate."""


class Interval(NamedTuple):
    lo: float
    hi: float

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class CovarianceSpec:
    """Either an isotropic ``sigma`` or a Hermitian positive-definite k x k ``matrix``.

    The isotropic case corresponds to the covariance matrix ``sigma**2 * I``.
    """

    sigma: float | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if (self.sigma is None) == (self.matrix is None):
            raise ValueError("give exactly one of sigma or matrix")
        if self.sigma is not None:
            if not self.sigma > 0:
                raise ValueError("sigma must be positive")
        else:
            m = np.array(self.matrix, dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("covariance must be square")
            if np.max(np.abs(m - m.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
                raise ValueError("covariance must be Hermitian")
            ev = np.linalg.eigvalsh(m)
            if ev.min() <= 1e-12 * max(np.trace(m).real, 1e-300):
                raise ValueError("covariance must be positive definite")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)

    @classmethod
    def isotropic(cls, sigma: float) -> "CovarianceSpec":
        return cls(sigma=float(sigma))

    @property
    def is_isotropic(self) -> bool:
        return self.sigma is not None

    def as_matrix(self, k: int) -> np.ndarray:
        if self.sigma is not None:
            return self.sigma**2 * np.eye(k, dtype=complex)
        if self.matrix.shape != (k, k):
            raise ValueError(f"covariance is {self.matrix.shape}, lattice needs {k}x{k}")
        return self.matrix

    def sqrt(self, k: int) -> np.ndarray:
        return _herm_power(self.as_matrix(k), 0.5)

    def inv_sqrt(self, k: int) -> np.ndarray:
        return _herm_power(self.as_matrix(k), -0.5)


def _herm_power(m: np.ndarray, p: float) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    return (v * w**p) @ v.conj().T


@dataclass(frozen=True)
class DiscreteGaussianSpec:
    """Discrete Gaussian on the coset ``lattice + shift``."""

    lattice: ComplexLattice
    shift: np.ndarray
    sigma: CovarianceSpec

    def __post_init__(self):
        c = np.asarray(self.shift, dtype=complex).reshape(-1)
        if c.shape != (self.lattice.k,) or not np.all(np.isfinite(c)):
            raise ValueError("shift must be a finite vector in C^k")
        object.__setattr__(self, "shift", c)
        if isinstance(self.sigma, (int, float)):
            object.__setattr__(self, "sigma", CovarianceSpec.isotropic(self.sigma))


@dataclass(frozen=True)
class SubgaussianCertificate:
    delta: float
    sigma_param: float


def _as_cov(sigma) -> CovarianceSpec:
    return sigma if isinstance(sigma, CovarianceSpec) else CovarianceSpec.isotropic(sigma)


# -- flatness and smoothing --------------------------------------------------

def whiten(lat: ComplexLattice, sigma) -> ComplexLattice:
    """``sqrt(Sigma)^-1 L``: the lattice whose unit-parameter flatness equals eps_L(sqrt(Sigma))."""
    cov = _as_cov(sigma)
    return la.apply_matrix(lat, cov.inv_sqrt(lat.k))


def flatness_factor(lat: ComplexLattice, sigma, rtol: float = 1e-3) -> Interval:
    """Certified enclosure of the flatness factor via the dual theta series.

    eps_L(sigma) = sum over nonzero dual vectors of exp(-pi^2 sigma^2 ||y||^2);
    correlated covariances are whitened into the lattice first.
    """
    cov = _as_cov(sigma)
    if cov.is_isotropic:
        series = la.ThetaSeries(la.dual(lat))
        return Interval(*series.enclosure(math.pi**2 * cov.sigma**2, rtol))
    return flatness_factor(whiten(lat, cov), 1.0, rtol)


def flatness_grid_max(lat: ComplexLattice, sigma: float, grid: int = 64) -> tuple[float, np.ndarray]:
    """Direct evaluation of max |V(L) sum_l f_sigma(z - l) - 1| over a grid of the basis cell.

    Only for k = 1. Returns ``(max_deviation, argmax_point)``.
    """
    if lat.k != 1:
        raise ValueError("direct flatness evaluation is implemented for k = 1 only")
    frac = (np.arange(grid) / grid)
    a, b = np.meshgrid(frac, frac, indexing="ij")
    pts = np.stack([a.ravel(), b.ravel()], axis=1) @ lat.basis  # real 2-vectors
    reach = 12.0 * sigma + float(np.max(np.linalg.norm(lat.basis, axis=1))) * 2
    coords, _ = en.ball_points(lat.basis, np.zeros(2), reach)
    lam = coords @ lat.basis
    dens = np.zeros(len(pts))
    for chunk in np.array_split(np.arange(len(lam)), max(1, len(lam) // 256)):
        d2 = ((pts[:, None, :] - lam[None, chunk, :]) ** 2).sum(-1)
        dens += np.exp(-d2 / sigma**2).sum(1)
    dens *= lat.volume / (math.pi * sigma**2)
    dev = np.abs(dens - 1.0)
    i = int(np.argmax(dev))
    return float(dev[i]), pts[i]


def smoothing_parameter(lat: ComplexLattice, eps: float, rel_tol: float = 1e-9) -> float:
    """Smallest s = sqrt(2 pi) sigma with dual theta sum <= eps (returned value is an upper bracket)."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    series = la.ThetaSeries(la.dual(lat))
    lam = series.lambda1
    k = lat.k

    def hi_value(sig):
        return series.enclosure(math.pi**2 * sig**2)[1]

    def lo_value(sig):
        series._ensure(max(series.radius, 3.0 * lam))
        return float(np.sum(np.exp(-math.pi**2 * sig**2 * series._norms)))

    sig_hi = 2.0 * math.sqrt(k) / lam / math.sqrt(2 * math.pi)
    while hi_value(sig_hi) > eps:
        sig_hi *= 1.5
    sig_lo = sig_hi / 1.5
    while lo_value(sig_lo) <= eps:
        sig_hi = sig_lo
        sig_lo /= 1.5
    while sig_hi - sig_lo > rel_tol * sig_hi:
        mid = 0.5 * (sig_lo + sig_hi)
        if hi_value(mid) <= eps:
            sig_hi = mid
        else:
            sig_lo = mid
    return math.sqrt(2 * math.pi) * sig_hi


# -- sampling ----------------------------------------------------------------

def klein_threshold(lat: ComplexLattice, eps: float | None = None) -> float:
    """Smallest sigma accepted by the Klein sampler.

    Each Gram-Schmidt coordinate is an integer Gaussian of width
    ``sqrt(pi) sigma / ||b~_i||`` (Micciancio-Regev units); requiring it to exceed
    the bound sqrt(ln(2 + 2/eps) / pi) on eta_eps(Z) with eps = 2^-2k gives
    ``sigma >= max_i ||b~_i|| sqrt(ln(2 + 2/eps)) / pi``.
    """
    if eps is None:
        eps = 2.0 ** (-2 * lat.k)
    _, r = en.triangularize(lat.basis)
    return float(np.max(np.abs(np.diag(r)))) * math.sqrt(math.log(2 + 2 / eps)) / math.pi


def _sample_z(centers: np.ndarray, widths: np.ndarray, rng: np.random.Generator, tau: float = 12.0) -> np.ndarray:
    """Integer Gaussians with weights exp(-(z - c)^2 / (2 s^2)).

    Narrow widths (s < 1/2) use the exact inverse CDF over a short candidate
    window; wider ones use rejection from a uniform on +-tau s.
    """
    if len(centers) and float(np.max(widths)) < 0.5:
        span = int(math.ceil(tau * float(np.max(widths)))) + 1
        base = np.floor(centers).astype(np.int64)
        z = base[:, None] + np.arange(-span, span + 2)[None, :]
        logw = -((z - centers[:, None]) ** 2) / (2 * widths[:, None] ** 2)
        w = np.exp(logw - logw.max(axis=1, keepdims=True))
        cdf = np.cumsum(w, axis=1)
        u = rng.random(len(centers)) * cdf[:, -1]
        pick = np.minimum((cdf < u[:, None]).sum(axis=1), z.shape[1] - 1)
        return z[np.arange(len(centers)), pick]
    out = np.empty(len(centers), dtype=np.int64)
    todo = np.arange(len(centers))
    lo = np.floor(centers - tau * widths).astype(np.int64)
    hi = np.ceil(centers + tau * widths).astype(np.int64)
    while len(todo):
        z = rng.integers(lo[todo], hi[todo] + 1)
        accept = rng.random(len(todo)) < np.exp(-((z - centers[todo]) ** 2) / (2 * widths[todo] ** 2))
        out[todo[accept]] = z[accept]
        todo = todo[~accept]
    return out


def klein_coords(basis: np.ndarray, centers: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Klein's randomized nearest plane: coords ``u`` with ``u @ basis`` near each real center."""
    q, r = en.triangularize(basis)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    y = centers @ q
    n = basis.shape[0]
    u = np.zeros((len(centers), n), dtype=np.int64)
    s_real = sigma / math.sqrt(2.0)
    for i in range(n - 1, -1, -1):
        rii = r[i, i]
        z = _sample_z(y[:, i] / rii, np.full(len(y), s_real / rii), rng)
        u[:, i] = z
        y -= z[:, None] * r[:, i][None, :]
    return u


def _check_sampler(lat: ComplexLattice, sigma: float) -> None:
    need = klein_threshold(lat)
    if sigma < need:
        raise SamplerRefused(
            f"sigma={sigma:.6g} below the Klein sampler threshold {need:.6g} for this lattice"
        )


def sample_coset_points(
    lat: ComplexLattice, shifts: np.ndarray, sigma: float, rng: np.random.Generator, strict: bool = True
) -> np.ndarray:
    """One draw from D_{L + shift, sigma} per row of ``shifts`` (complex, N x k)."""
    if strict:
        _check_sampler(lat, sigma)
    shifts = np.atleast_2d(np.asarray(shifts, dtype=complex))
    u = klein_coords(lat.basis, -la.to_real(shifts), sigma, rng)
    return lat.point(u) + shifts


def sample_discrete_gaussian(
    spec: DiscreteGaussianSpec, rng: np.random.Generator, size: int | None = None, strict: bool = True
) -> np.ndarray:
    """Klein sampler for D_{L + c, sigma}; isotropic sigma only.

    With ``strict`` (the default) the call is refused below :func:`klein_threshold`.
    Returns a k-vector, or an array of shape ``(size, k)``.
    """
    if not spec.sigma.is_isotropic:
        raise ValueError("the sampler handles isotropic sigma; whiten the lattice first")
    n = 1 if size is None else int(size)
    pts = sample_coset_points(spec.lattice, np.repeat(spec.shift[None, :], n, axis=0), spec.sigma.sigma, rng, strict)
    return pts[0] if size is None else pts


class PMF(NamedTuple):
    points: np.ndarray  # complex (N, k)
    coords: np.ndarray  # integer (N, 2k): points = coords @ basis + shift
    probs: np.ndarray
    tail_mass: float  # upper bound on the probability outside the enumerated ball
    radius: float


def brute_force_pmf(spec: DiscreteGaussianSpec, radius: float | None = None, tail_tol: float = 1e-9) -> PMF:
    """Exact discrete Gaussian probabilities on every coset point within ``radius`` of the origin.

    Probabilities are normalised over the enumerated points; ``tail_mass`` bounds
    what lies outside. With ``radius=None`` the radius grows until the bound
    drops below ``tail_tol``.
    """
    lat, cov = spec.lattice, spec.sigma
    k = lat.k
    a = cov.inv_sqrt(k)  # whiten: weights become exp(-||a x||^2)
    wl = la.apply_matrix(lat, a)
    wshift = a @ spec.shift
    center = -la.to_real(wshift)
    lam1 = la.shortest_vector(wl).length
    _, nearest_d2 = en.closest_coords(wl.basis, center)
    floor = math.exp(-nearest_d2)
    if radius is None:
        radius = math.sqrt(nearest_d2) + lam1
        while la.theta_tail_bound(1.0, radius, lam1, wl.dim) > tail_tol * floor:
            radius *= 1.1
    coords, d2 = en.ball_points(wl.basis, center, radius)
    if len(coords) == 0:
        raise ValueError("radius too small: no coset points enumerated")
    w = np.exp(-d2)
    total = float(w.sum())
    tail = la.theta_tail_bound(1.0, radius, lam1, wl.dim) / total
    pts = lat.point(coords) + spec.shift
    return PMF(pts, coords, w / total, tail, radius)


# -- Lemma 1 (sum of discrete and continuous Gaussians) ----------------------

class Lemma1Result(NamedTuple):
    epsilon_used: float
    flatness: Interval
    measured_V: float
    bound_4eps: float
    quadrature_error: float


def _real_cov(cov_c: np.ndarray) -> np.ndarray:
    return la.complex_matrix_to_real(cov_c) / 2.0


def _gauss_logpdf_real(x: np.ndarray, cov: np.ndarray) -> np.ndarray:
    d = cov.shape[0]
    cinv = np.linalg.inv(cov)
    _, logdet = np.linalg.slogdet(cov)
    q = np.einsum("...i,ij,...j->...", x, cinv, x)
    return -0.5 * q - 0.5 * (d * math.log(2 * math.pi) + logdet)


def _grid_l1(pmf: PMF, cov2: np.ndarray, cov0: np.ndarray, n: int, half_width: float) -> float:
    d = cov0.shape[0]
    h = 2 * half_width / n
    axis = -half_width + h * (np.arange(n) + 0.5)
    mesh = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    centers = la.to_real(pmf.points)
    f0 = np.exp(_gauss_logpdf_real(mesh, cov0))
    g = np.zeros(len(mesh))
    cinv = np.linalg.inv(cov2)
    _, logdet = np.linalg.slogdet(cov2)
    norm = math.exp(-0.5 * (d * math.log(2 * math.pi) + logdet))
    step = max(1, int(2_000_000 // max(len(mesh), 1)))
    for s in range(0, len(centers), step):
        diff = mesh[:, None, :] - centers[None, s : s + step, :]
        q = np.einsum("mpi,ij,mpj->mp", diff, cinv, diff)
        g += (np.exp(-0.5 * q) * pmf.probs[None, s : s + step]).sum(1)
    g *= norm
    return float(np.abs(g - f0).sum() * h**d)


def lemma1_distance(
    lat: ComplexLattice,
    sigma1,
    sigma2,
    shift=None,
    eps: float | None = None,
    budget: float = 1e-4,
    start_resolution: int | None = None,
) -> Lemma1Result:
    """L1 distance between X1 + X2 and the Gaussian with covariance Sigma1 + Sigma2.

    X1 ~ D_{L + shift, sqrt(Sigma1)}, X2 ~ f_{sqrt(Sigma2)}. The integral runs on a
    midpoint grid over +-8 standard deviations, refined until two successive
    grids agree to ``budget / 10``. Refuses when the flatness condition fails.
    """
    k = lat.k
    if k > 2:
        raise ValueError("quadrature is limited to k <= 2")
    s1 = _as_cov(sigma1).as_matrix(k)
    s2 = _as_cov(sigma2).as_matrix(k)
    s_harm = np.linalg.inv(np.linalg.inv(s1) + np.linalg.inv(s2))
    s_harm = (s_harm + s_harm.conj().T) / 2
    flat = flatness_factor(lat, CovarianceSpec(matrix=s_harm))
    eps_used = flat.hi if eps is None else float(eps)
    if not flat.hi <= eps_used <= 0.5:
        raise Lemma1NotApplicable(
            f"need eps_L(sqrt(Sigma)) <= eps <= 1/2, have flatness {flat.hi:.4g} and eps {eps_used:.4g}"
        )
    if shift is None:
        shift = np.zeros(k)
    pmf = brute_force_pmf(DiscreteGaussianSpec(lat, shift, CovarianceSpec(matrix=s1)), tail_tol=1e-12)
    cov0 = _real_cov(s1 + s2)
    cov2 = _real_cov(s2)
    half = 8.0 * math.sqrt(float(np.max(np.linalg.eigvalsh(cov0))))
    n = start_resolution or (128 if k == 1 else 16)
    prev = _grid_l1(pmf, cov2, cov0, n, half)
    limit = 2048 if k == 1 else 48
    while True:
        n2 = n * 2 if k == 1 else n + 8
        cur = _grid_l1(pmf, cov2, cov0, n2, half)
        err = abs(cur - prev)
        n, prev = n2, cur
        if err <= budget / 10 or n >= limit:
            break
    quad_err = err + pmf.tail_mass
    return Lemma1Result(eps_used, flat, cur, 4 * eps_used, quad_err)


# -- subgaussian tails ---------------------------------------------------------

class SubgaussianReport(NamedTuple):
    certificate: SubgaussianCertificate
    flatness: Interval
    tests: list  # (t, empirical_mgf, standard_error, bound)
    margin: float  # min over tests of (bound - (mgf - 3 se)) / bound
    passed: bool


def subgaussian_check(
    spec: DiscreteGaussianSpec,
    a: np.ndarray | None,
    trials: int,
    rng: np.random.Generator,
    magnitudes=(0.5, 1.0, 2.0),
) -> SubgaussianReport:
    """Monte Carlo MGF of Re(t^H A x) against ((1+eps)/(1-eps)) exp(sigma^2/2 ||A^H t||^2).

    ``t`` runs over every real axis of C^k (real and imaginary directions) at
    each magnitude, plus ``t = 0``.
    """
    if not spec.sigma.is_isotropic:
        raise ValueError("isotropic sigma required")
    sigma = spec.sigma.sigma
    k = spec.lattice.k
    a = np.eye(k, dtype=complex) if a is None else np.asarray(a, dtype=complex)
    flat = flatness_factor(spec.lattice, sigma)
    eps = flat.hi
    if eps >= 1:
        raise CertificateUnavailable(f"flatness factor {eps:.4g} >= 1")
    delta = math.log((1 + eps) / (1 - eps))
    x = sample_discrete_gaussian(spec, rng, size=trials)
    ax = x @ a.T
    tvecs = [np.zeros(k, dtype=complex)]
    for mag in magnitudes:
        for i in range(k):
            for unit in (1.0, 1j):
                t = np.zeros(k, dtype=complex)
                t[i] = mag * unit
                tvecs.append(t)
    tests = []
    margin = math.inf
    for t in tvecs:
        vals = np.exp(np.real(ax @ t.conj()))
        mgf = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        bound = math.exp(delta) * math.exp(sigma**2 / 2 * float(np.linalg.norm(a.conj().T @ t) ** 2))
        tests.append((t, mgf, se, bound))
        margin = min(margin, (bound - (mgf - 3 * se)) / bound)
    return SubgaussianReport(SubgaussianCertificate(delta, sigma), flat, tests, margin, margin >= 0)
