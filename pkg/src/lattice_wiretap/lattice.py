"""Complex lattices in C^k with the real inner product Re(x^H y).

A lattice is stored through its real generator matrix: row ``j`` is the image
of the j-th generator under ``phi(z) = (Re z_1..Re z_k, Im z_1..Im z_k)``, which
is an isometry onto R^{2k}.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from . import _exact
from . import enumeration as en
from . import numberfield as nf


def to_real(z: np.ndarray) -> np.ndarray:
    """phi: C^k -> R^{2k}; works row-wise on 2-d input."""
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag], axis=-1)


def to_complex(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    k = v.shape[-1] // 2
    return v[..., :k] + 1j * v[..., k:]


def complex_matrix_to_real(a: np.ndarray) -> np.ndarray:
    """Real 2k x 2k matrix ``M`` with ``phi(a @ z) = M @ phi(z)``."""
    a = np.asarray(a, dtype=complex)
    return np.block([[a.real, -a.imag], [a.imag, a.real]])


@dataclass(frozen=True, eq=False)
class ComplexLattice:
    """Full-rank lattice in C^k.

    ``basis`` is the 2k x 2k real generator matrix (rows are generators).
    ``field`` and ``scale`` are set when the lattice is ``scale * psi(O_F)``;
    they let coset construction multiply by field elements.
    """

    basis: np.ndarray
    field: nf.NumberField | None = dc_field(default=None, repr=False)
    scale: float | None = None

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] % 2:
            raise ValueError(f"basis must be a square matrix of even size, got shape {b.shape}")
        if abs(np.linalg.det(b)) < 1e-300:
            raise ValueError("basis is singular")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def k(self) -> int:
        return self.basis.shape[0] // 2

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def gram(self) -> np.ndarray:
        return self.basis @ self.basis.T

    @property
    def volume(self) -> float:
        return float(abs(np.linalg.det(self.basis)))

    @property
    def generators(self) -> np.ndarray:
        """Generators as complex vectors (2k x k)."""
        return to_complex(self.basis)

    def point(self, coords) -> np.ndarray:
        """Complex lattice vector(s) with the given integer coordinates."""
        return to_complex(np.asarray(coords, dtype=float) @ self.basis)

    def coordinates(self, z) -> np.ndarray:
        """Real coordinates of ``z`` in this basis (integral iff z is in the lattice)."""
        return np.linalg.solve(self.basis.T, to_real(z).T).T

    def scaled(self, alpha: float) -> "ComplexLattice":
        s = None if self.scale is None else self.scale * alpha
        return ComplexLattice(self.basis * alpha, self.field, s)

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "real_generator_matrix": self.basis.ravel().tolist()})

    @classmethod
    def from_json(cls, text: str) -> "ComplexLattice":
        data = json.loads(text)
        n = 2 * int(data["k"])
        return cls(np.array(data["real_generator_matrix"], dtype=float).reshape(n, n))


class ShortVector(NamedTuple):
    length: float
    vector: np.ndarray
    coords: np.ndarray


class ClosestPoint(NamedTuple):
    vector: np.ndarray
    coords: np.ndarray
    distance: float


class ThetaTail(NamedTuple):
    partial_sum: float
    tail_bound: float


class TailNotCertified(RuntimeError):
    """A truncated theta sum could not be certified to the requested precision."""


# -- constructors -----------------------------------------------------------

def from_ring(field: nf.NumberField, scale: float = 1.0) -> ComplexLattice:
    """``scale * psi(O_F)`` generated by the embedded integral basis."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    return ComplexLattice(to_real(scale * field.basis_embeddings), field, float(scale))


def from_ideal(field: nf.NumberField, ideal: nf.FractionalIdeal, scale: float = 1.0) -> ComplexLattice:
    rows = np.array([[float(v) for v in row] for row in ideal.basis_matrix])
    return ComplexLattice(to_real(scale * (rows @ field.basis_embeddings)))


def conjugate(lat: ComplexLattice) -> ComplexLattice:
    k = lat.k
    b = lat.basis.copy()
    b[:, k:] *= -1
    return ComplexLattice(b)


def dual(lat: ComplexLattice) -> ComplexLattice:
    """Dual under <x, y> = Re(x^H y): rows satisfy ``B @ B_dual.T = I``."""
    return ComplexLattice(np.linalg.inv(lat.basis).T)


def apply_matrix(lat: ComplexLattice, a: np.ndarray) -> ComplexLattice:
    """The lattice ``a @ lat`` for a nonsingular complex k x k matrix."""
    m = complex_matrix_to_real(a)
    return ComplexLattice(lat.basis @ m.T)


def apply_diagonal(lat: ComplexLattice, h: Sequence[complex]) -> ComplexLattice:
    """Componentwise multiplication of every generator by the fading vector ``h``."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (lat.k,):
        raise ValueError(f"expected {lat.k} fading coefficients, got shape {h.shape}")
    if np.any(h == 0):
        raise ValueError("zero fading coefficient: the faded lattice is degenerate")
    return apply_matrix(lat, np.diag(h))


def unimodular_equivalent(a: ComplexLattice, b: ComplexLattice, tol: float = 1e-9) -> bool:
    """True when the two generator matrices differ by an integer matrix of determinant +-1."""
    u = a.basis @ np.linalg.inv(b.basis)
    ui = np.rint(u)
    if np.max(np.abs(u - ui)) > tol:
        return False
    return abs(abs(np.linalg.det(ui)) - 1.0) < 1e-9


# -- searches ---------------------------------------------------------------

def shortest_vector(lat: ComplexLattice) -> ShortVector:
    coords, d2 = en.shortest_coords(lat.basis)
    return ShortVector(math.sqrt(d2), lat.point(coords), coords)


def cvp(lat: ComplexLattice, target) -> ClosestPoint:
    """Exact closest lattice vector to a complex target."""
    t = np.asarray(target, dtype=complex)
    if t.shape != (lat.k,):
        raise ValueError(f"target must have {lat.k} complex entries")
    coords, d2 = en.closest_coords(lat.basis, to_real(t))
    return ClosestPoint(lat.point(coords), coords, math.sqrt(d2))


# -- theta sums -------------------------------------------------------------

def point_count_bound(rho: float, lambda1: float, dim: int) -> float:
    """Packing bound on the number of (shifted) lattice points in a ball of radius rho."""
    return (1.0 + 2.0 * rho / lambda1) ** dim


def theta_tail_bound(c: float, radius: float, lambda1: float, dim: int) -> float:
    """Rigorous upper bound on sum_{||x|| > radius} exp(-c ||x||^2) over a (shifted) lattice.

    Shells of width ``lambda1 / 2`` are charged the packing count of their outer
    radius and the weight of their inner radius; the shell series is summed
    until it falls off geometrically and the remainder is bounded by that ratio.
    """
    h = lambda1 / 2.0
    total = 0.0
    prev = None
    j = 0
    while True:
        inner = radius + j * h
        log_term = dim * math.log1p(2.0 * (inner + h) / lambda1) - c * inner * inner
        term = math.exp(log_term) if log_term > -745 else 0.0
        total += term
        if prev is not None and prev > 0:
            ratio = term / prev
            if ratio < 0.5 and (term == 0.0 or term < 1e-17 * total):
                return total + term * ratio / (1 - ratio)
        if prev == 0.0 and term == 0.0 and j > 4:
            return total
        prev = term
        j += 1
        if j > 100000:  # pragma: no cover
            raise TailNotCertified("tail series did not converge")


def theta_tail(lat: ComplexLattice, c: float, radius: float, lambda1: float | None = None) -> ThetaTail:
    """Partial sum of exp(-c||x||^2) over 0 < ||x|| <= radius plus a tail bound."""
    if c <= 0:
        raise ValueError("c must be positive")
    if lambda1 is None:
        lambda1 = shortest_vector(lat).length
    _, d2 = en.ball_points(lat.basis, np.zeros(lat.dim), radius)
    d2 = d2[d2 > 1e-18 * max(lambda1 * lambda1, 1e-300)]
    partial = float(np.sum(np.exp(-c * d2)))
    return ThetaTail(partial, theta_tail_bound(c, radius, lambda1, lat.dim))


class ThetaSeries:
    """Cached sum_{x in L \\ 0} exp(-c ||x||^2) with certified enclosures.

    The squared norms inside the current enumeration radius are stored, so
    evaluating many ``c`` values (bisection, sweeps) costs one enumeration.
    """

    def __init__(self, lat: ComplexLattice, max_points: int = en.DEFAULT_MAX_POINTS):
        self.lattice = lat
        self.lambda1 = shortest_vector(lat).length
        self.max_points = max_points
        self.radius = 0.0
        self._norms = np.zeros(0)

    def _ensure(self, radius: float) -> None:
        if radius <= self.radius:
            return
        try:
            _, d2 = en.ball_points(self.lattice.basis, np.zeros(self.lattice.dim), radius, self.max_points)
        except en.EnumerationTooLarge as exc:
            raise TailNotCertified(str(exc)) from exc
        self._norms = np.sort(d2[d2 > 1e-18 * self.lambda1**2])
        self.radius = radius

    def required_radius(self, c: float, rtol: float) -> float:
        floor = 2.0 * math.exp(-c * self.lambda1**2)  # +-shortest vector is always in the sum
        r = self.lambda1
        while theta_tail_bound(c, r, self.lambda1, self.lattice.dim) > rtol * floor:
            if floor == 0.0 and theta_tail_bound(c, r, self.lambda1, self.lattice.dim) == 0.0:
                break
            r *= 1.1
        return r

    def enclosure(self, c: float, rtol: float = 1e-3) -> tuple[float, float]:
        """Interval ``[lo, hi]`` holding the full theta sum; tail <= rtol * lo."""
        r = self.required_radius(c, rtol)
        self._ensure(r)
        lo = float(np.sum(np.exp(-c * self._norms)))
        tail = theta_tail_bound(c, self.radius, self.lambda1, self.lattice.dim)
        if tail > rtol * lo and tail > 1e-300:
            raise TailNotCertified(f"tail {tail:.3g} exceeds {rtol:g} of partial sum {lo:.3g}")
        return lo, lo + tail


# -- cosets -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CosetSystem:
    """The quotient fine/coarse with Smith-form message labels.

    ``change`` is the integer matrix with ``coarse.basis = change @ fine.basis``.
    With ``U @ change @ V = diag(d)``, a fine vector with coordinates ``x`` lies
    in the coset labelled by ``(x @ V) mod d`` read as a mixed-radix integer.
    """

    fine: ComplexLattice
    coarse: ComplexLattice
    change: np.ndarray
    index: int
    invariants: tuple[int, ...]
    snf_v: np.ndarray
    leader_coords: np.ndarray
    leaders: np.ndarray
    nesting: object = None

    def message_of_coords(self, coords) -> int:
        res = (np.asarray(coords, dtype=object) @ self.snf_v.astype(object))
        m = 0
        for r, d in zip(res, self.invariants):
            m = m * d + int(r) % d
        return m

    def reduce(self, z) -> int:
        """Message index of the coset holding the fine-lattice vector ``z``."""
        x = self.fine.coordinates(z)
        xi = np.rint(x)
        if np.max(np.abs(x - xi)) > 1e-6:
            raise ValueError("vector is not in the fine lattice")
        return self.message_of_coords(xi.astype(np.int64))

    def in_coarse(self, z, tol: float = 1e-6) -> bool:
        x = self.coarse.coordinates(z)
        return bool(np.max(np.abs(x - np.rint(x))) <= tol)


def _mixed_radix(m: int, radices: Sequence[int]) -> list[int]:
    out = []
    for d in reversed(radices):
        out.append(m % d)
        m //= d
    return out[::-1]


def build_cosets(fine: ComplexLattice, coarse_spec) -> CosetSystem:
    """Nest a coarse lattice inside ``fine`` and label the cosets.

    ``coarse_spec`` is an integer ``c`` (coarse = c * fine) or a field element
    ``a`` given as integral-basis coordinates (coarse = psi(a) * fine, needs
    ``fine`` built by :func:`from_ring`).
    """
    n = fine.dim
    if isinstance(coarse_spec, (int, np.integer)):
        c = int(coarse_spec)
        if c == 0:
            raise ValueError("zero scaling gives no sublattice")
        change = [[c * int(i == j) for j in range(n)] for i in range(n)]
    else:
        if fine.field is None:
            raise ValueError("element nesting needs a lattice built from a number field")
        a = [Fraction(v) for v in coarse_spec]
        if all(v == 0 for v in a):
            raise ValueError("zero element gives no sublattice")
        mult = nf.multiplication_matrix(fine.field, a)
        if not _exact.is_integral(mult):
            raise ValueError("element is not integral: change of basis is not an integer matrix")
        change = [[int(v) for v in row] for row in mult]
    u, d, v = _exact.smith_normal_form(change)
    invariants = tuple(d[i][i] for i in range(n))
    index = math.prod(invariants)
    coarse = ComplexLattice(np.array(change, dtype=float) @ fine.basis)
    v_inv = _exact.inverse(v)
    change_inv = _exact.inverse(change)
    leader_coords = []
    for m in range(index):
        r = _mixed_radix(m, invariants)
        x = _exact.vecmat(r, v_inv)
        y = _exact.vecmat(x, change_inv)
        shift = [math.floor(t) for t in y]
        x = [xi - si for xi, si in zip(x, _exact.vecmat(shift, change))]
        leader_coords.append([int(t) for t in x])
    leader_coords = np.array(leader_coords, dtype=np.int64)
    return CosetSystem(
        fine=fine,
        coarse=coarse,
        change=np.array(change, dtype=np.int64),
        index=index,
        invariants=invariants,
        snf_v=np.array(v, dtype=np.int64),
        leader_coords=leader_coords,
        leaders=fine.point(leader_coords),
        nesting=coarse_spec,
    )
