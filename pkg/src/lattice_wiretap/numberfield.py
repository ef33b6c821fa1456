"""Totally complex number fields: embeddings, discriminant, codifferent, norms.

Field elements are coordinate vectors (ints or ``Fraction``) over the field's
integral basis. Everything that feeds an identity we want to hold exactly
(trace forms, ideal bases, norms) is computed in rational arithmetic; floating
point only appears once we embed into C^k.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

import mpmath
import numpy as np

from . import _exact

FieldElement = Sequence  # coordinates over the integral basis

_ROOT_DPS = 60


class InvalidFieldError(ValueError):
    """Raised when field data is inconsistent (not totally complex, bad basis...)."""


@dataclass(frozen=True)
class FractionalIdeal:
    """A Z-module of full rank inside the field.

    ``basis_matrix`` rows are coordinates over the integral basis.
    """

    basis_matrix: tuple[tuple[Fraction, ...], ...]
    norm: Fraction

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "FractionalIdeal":
        mat = tuple(tuple(Fraction(v) for v in row) for row in rows)
        d = _exact.det(mat)
        if d == 0:
            raise InvalidFieldError("ideal basis matrix is singular")
        return cls(mat, abs(d))


class NumberField:
    """A totally complex field F = Q[x]/(f) of degree n = 2k.

    Parameters
    ----------
    name : str
        Catalog label.
    min_poly : sequence of int
        Coefficients of the monic minimal polynomial in ascending powers.
    integral_basis : sequence of sequences, optional
        ``n`` rows of rational coordinates over the power basis. Defaults to
        the power basis (correct for the cyclotomic catalog entries).
    discriminant : int, optional
        Expected discriminant; checked against the computed value.
    """

    def __init__(self, name: str, min_poly: Sequence[int], integral_basis=None, discriminant: int | None = None):
        poly = tuple(int(c) for c in min_poly)
        n = len(poly) - 1
        if n < 2 or n % 2:
            raise InvalidFieldError(f"degree must be even and positive, got {n}")
        if poly[-1] != 1:
            raise InvalidFieldError("minimal polynomial must be monic")
        if integral_basis is None:
            integral_basis = _exact.identity(n)
        basis = tuple(tuple(Fraction(v) for v in row) for row in integral_basis)
        if len(basis) != n or any(len(row) != n for row in basis):
            raise InvalidFieldError("integral basis must be n x n")
        if _exact.det(basis) == 0:
            raise InvalidFieldError("integral basis is singular")

        self.name = name
        self.degree = n
        self.k = n // 2
        self.min_poly = poly
        self.integral_basis = basis
        self._basis_inv = _exact.inverse(basis)
        self._reductions = _power_reductions(poly)

        mp_roots = _roots(poly)
        if any(abs(mpmath.im(r)) < mpmath.mpf(10) ** -20 for r in mp_roots):
            raise InvalidFieldError(f"{name}: minimal polynomial has a real root, field not totally complex")
        upper = sorted((r for r in mp_roots if mpmath.im(r) > 0), key=lambda r: float(mpmath.arg(r)))
        if len(upper) != self.k:
            raise InvalidFieldError(f"{name}: expected {self.k} roots in the upper half plane")
        with mpmath.workdps(_ROOT_DPS):
            self._mp_roots = tuple(upper) + tuple(mpmath.conj(r) for r in upper)
        self.roots = np.array([complex(r) for r in upper])
        # basis_embeddings[j, l] = sigma_l(b_j) for the k chosen embeddings
        self.basis_embeddings = np.array(
            [[complex(_eval_mp(row, r)) for r in upper] for row in basis], dtype=complex
        )
        self.trace_gram = tuple(
            tuple(self._trace_power(_poly_mulmod(_row(bi), _row(bj), self._reductions)) for bj in basis)
            for bi in basis
        )
        exact_disc = _exact.det(self.trace_gram)
        if exact_disc.denominator != 1:
            raise InvalidFieldError(f"{name}: trace form determinant is not an integer; basis not integral")
        self.discriminant = discriminant_from_embeddings(self)
        if self.discriminant != int(exact_disc):
            raise InvalidFieldError(f"{name}: embedding and trace-form discriminants disagree")
        if discriminant is not None and int(discriminant) != self.discriminant:
            raise InvalidFieldError(
                f"{name}: catalog discriminant {discriminant} != computed {self.discriminant}"
            )

    @property
    def root_discriminant(self) -> float:
        return abs(self.discriminant) ** (1.0 / self.degree)

    def __repr__(self) -> str:
        return f"NumberField({self.name!r}, degree={self.degree}, d={self.discriminant})"

    # -- coordinate plumbing -------------------------------------------------
    def _check(self, x: FieldElement) -> list[Fraction]:
        if len(x) != self.degree:
            raise ValueError(f"element has {len(x)} coordinates, field degree is {self.degree}")
        return [Fraction(v) for v in x]

    def to_power(self, x: FieldElement) -> list[Fraction]:
        return _exact.vecmat(self._check(x), self.integral_basis)

    def from_power(self, p: Sequence) -> list[Fraction]:
        return _exact.vecmat(list(p), self._basis_inv)

    def _trace_power(self, p: Sequence[Fraction]) -> Fraction:
        return sum((c * s for c, s in zip(p, self._power_sums)), Fraction(0))

    @property
    def _power_sums(self) -> tuple[Fraction, ...]:
        # Tr(x^j) = trace of the j-th power of the companion matrix
        return _power_sums(self.min_poly)

    def one(self) -> list[Fraction]:
        return self.from_power([1] + [0] * (self.degree - 1))

    def generator(self) -> list[Fraction]:
        """Coordinates of the root x of the minimal polynomial."""
        return self.from_power([0, 1] + [0] * (self.degree - 2))


def _row(r: Sequence[Fraction]) -> list[Fraction]:
    return list(r)


def _roots(poly: tuple[int, ...]):
    with mpmath.workdps(_ROOT_DPS):
        return mpmath.polyroots(list(reversed(poly)), maxsteps=500, extraprec=400)


def _eval_mp(power_coords: Sequence[Fraction], root):
    with mpmath.workdps(_ROOT_DPS):
        acc = mpmath.mpc(0)
        for c in reversed(power_coords):
            acc = acc * root + mpmath.mpf(c.numerator) / c.denominator
        return acc


@lru_cache(maxsize=None)
def _power_reductions(poly: tuple[int, ...]) -> tuple[tuple[Fraction, ...], ...]:
    """x^m mod f in the power basis for m = 0 .. 2n-2."""
    n = len(poly) - 1
    out = []
    cur = [Fraction(0)] * n
    cur[0] = Fraction(1)
    for _ in range(2 * n - 1):
        out.append(tuple(cur))
        top = cur[-1]
        cur = [Fraction(0)] + cur[:-1]
        if top:
            cur = [c - top * p for c, p in zip(cur, poly[:-1])]
    return tuple(out)


@lru_cache(maxsize=None)
def _power_sums(poly: tuple[int, ...]) -> tuple[Fraction, ...]:
    n = len(poly) - 1
    red = _power_reductions(poly)
    sums = []
    for j in range(n):
        # trace of multiplication by x^j on the power basis
        tr = Fraction(0)
        for i in range(n):
            tr += red[i + j][i]
        sums.append(tr)
    return tuple(sums)


def _poly_mulmod(a: Sequence[Fraction], b: Sequence[Fraction], red) -> list[Fraction]:
    n = len(a)
    out = [Fraction(0)] * n
    for i, ai in enumerate(a):
        if not ai:
            continue
        for j, bj in enumerate(b):
            if bj:
                c = ai * bj
                for t, r in enumerate(red[i + j]):
                    if r:
                        out[t] += c * r
    return out


# -- public operations -------------------------------------------------------

def embed(field: NumberField, x: FieldElement) -> np.ndarray:
    """Relative canonical embedding: one complex embedding per conjugate pair."""
    coords = np.array([float(v) for v in field._check(x)])
    return coords @ field.basis_embeddings


def embed_all(field: NumberField, x: FieldElement) -> np.ndarray:
    """All n embeddings (chosen k followed by their conjugates)."""
    e = embed(field, x)
    return np.concatenate([e, e.conj()])


def discriminant_from_embeddings(field: NumberField) -> int:
    """d_F = det(T)^2 with T the full n x n embedding matrix of the integral basis."""
    n = field.degree
    with mpmath.workdps(_ROOT_DPS):
        t = mpmath.matrix(n, n)
        for j, row in enumerate(field.integral_basis):
            for l, r in enumerate(field._mp_roots):
                t[j, l] = _eval_mp(row, r)
        d2 = mpmath.det(t) ** 2
        value = mpmath.re(d2)
        nearest = int(mpmath.nint(value))
        if abs(mpmath.im(d2)) > 0.5 or abs(value - nearest) >= 0.5 or abs(value - nearest) > 1e-20 * max(1, abs(nearest)):
            raise InvalidFieldError("embedding determinant squared is not an integer; invalid integral basis")
    return nearest


def discriminant(field: NumberField) -> int:
    return field.discriminant


def multiply(field: NumberField, x: FieldElement, y: FieldElement) -> list[Fraction]:
    p = _poly_mulmod(field.to_power(x), field.to_power(y), field._reductions)
    return field.from_power(p)


def multiplication_matrix(field: NumberField, x: FieldElement) -> list[list[Fraction]]:
    """Rows are the coordinates of x * b_j over the integral basis."""
    n = field.degree
    basis_coords = _exact.identity(n)
    return [multiply(field, x, e) for e in basis_coords]


def element_norm_trace(field: NumberField, x: FieldElement) -> tuple[Fraction, Fraction]:
    m = multiplication_matrix(field, x)
    tr = sum((m[i][i] for i in range(field.degree)), Fraction(0))
    return _exact.det(m), tr


def trace(field: NumberField, x: FieldElement) -> Fraction:
    return field._trace_power(field.to_power(x))


def codifferent(field: NumberField) -> FractionalIdeal:
    """Trace dual of the ring of integers.

    Rows of the returned basis are the dual basis ``b_i^v`` with
    ``Tr(b_i^v b_j) = delta_ij``.
    """
    try:
        inv = _exact.inverse(field.trace_gram)
    except ZeroDivisionError:
        raise InvalidFieldError("trace form is singular") from None
    return FractionalIdeal.from_rows(inv)


def principal_ideal(field: NumberField, a: FieldElement) -> FractionalIdeal:
    """The ideal a * O_F."""
    if all(Fraction(v) == 0 for v in field._check(a)):
        raise ValueError("zero element generates no lattice")
    return FractionalIdeal.from_rows(multiplication_matrix(field, a))


def ring_of_integers(field: NumberField) -> FractionalIdeal:
    return FractionalIdeal.from_rows(_exact.identity(field.degree))


# -- catalog -----------------------------------------------------------------

def _catalog_text(path: str | Path | None) -> str:
    if path is None:
        return resources.files("lattice_wiretap").joinpath("data/fields.json").read_text()
    return Path(path).read_text()


def load_catalog(path: str | Path | None = None) -> dict[str, NumberField]:
    """Load ``{name: NumberField}`` from a catalog JSON file.

    Schema: ``{"fields": [{name, degree, min_poly_coeffs, integral_basis,
    discriminant}]}`` with coefficients in ascending powers and basis entries
    as rational strings (``"1/2"``).
    """
    data = json.loads(_catalog_text(path))
    out = {}
    for entry in data["fields"]:
        if len(entry["min_poly_coeffs"]) - 1 != entry["degree"]:
            raise InvalidFieldError(f"{entry['name']}: degree does not match polynomial")
        out[entry["name"]] = NumberField(
            entry["name"],
            entry["min_poly_coeffs"],
            [[Fraction(v) for v in row] for row in entry["integral_basis"]],
            entry["discriminant"],
        )
    return out


@lru_cache(maxsize=1)
def _default_catalog() -> dict[str, NumberField]:
    return load_catalog()


def catalog() -> dict[str, NumberField]:
    return dict(_default_catalog())


def get_field(name: str) -> NumberField:
    cat = _default_catalog()
    if name not in cat:
        raise KeyError(f"unknown field {name!r}; catalog has {sorted(cat)}")
    return cat[name]
