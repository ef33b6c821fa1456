"""Nested wiretap code design and the discrete Gaussian coset encoder."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import gaussian as ga
from . import lattice as la
from . import numberfield as nf
from .gaussian import Interval
from .lattice import CosetSystem

__all__ = [
    "DesignRefused",
    "WiretapCode",
    "design_code",
    "rprime_floor",
    "encode",
    "encode_batch",
    "secrecy_rate_region",
]

NESTING_TOLERANCE = 0.25


class DesignRefused(ValueError):
    """The requested design violates a rate condition or cannot be realised."""


@dataclass(frozen=True, eq=False)
class WiretapCode:
    """A nested pair ``L_e = coarse`` inside ``L_b = alpha_b psi(O_F)``.

    ``alpha_e`` is the volume-equivalent scaling of the coarse lattice:
    ``Vol(L_e) = Vol(alpha_e psi(O_F))``. It equals ``c * alpha_b`` for integer
    nesting and ``|N(a)|^{1/2k} alpha_b`` for nesting by an element ``a``.
    """

    field: nf.NumberField
    cosets: CosetSystem
    alpha_b: float
    alpha_e: float
    P: float
    R: float
    R_prime: float
    G_eff: float
    R_target: float | None
    eps_coarse: Interval
    C_e: float | None = None

    @property
    def k(self) -> int:
        return self.field.k

    @property
    def index(self) -> int:
        return self.cosets.index

    @property
    def R_b(self) -> float:
        return self.R + self.R_prime

    @property
    def fine(self) -> la.ComplexLattice:
        return self.cosets.fine

    @property
    def coarse(self) -> la.ComplexLattice:
        return self.cosets.coarse

    @property
    def sigma_s(self) -> float:
        return math.sqrt(self.P)

    @property
    def alpha_e_rate_formula(self) -> float:
        """alpha_e from the rate split, sqrt(2 pi e P / (G e^{R'})); equals alpha_e when the index matches R."""
        return math.sqrt(2 * math.pi * math.e * self.P / (self.G_eff * math.exp(self.R_prime)))

    @property
    def flatness_ok(self) -> bool:
        """Whether eps_{L_e}(sqrt(P)) <= 2^-2k is certified."""
        return self.eps_coarse.hi <= 2.0 ** (-2 * self.k)

    @property
    def rprime_condition(self) -> bool | None:
        """R' >= C_e + 1 + ln G_eff, when C_e was supplied."""
        if self.C_e is None:
            return None
        return self.R_prime >= self.C_e + 1 + math.log(self.G_eff)

    def descriptor(self, seed: int | None = None) -> dict:
        nest = self.cosets.nesting
        if not isinstance(nest, (int, np.integer)):
            nest = {"element": [str(Fraction(v)) for v in nest]}
        else:
            nest = {"integer": int(nest)}
        return {
            "field_name": self.field.name,
            "k": self.k,
            "P": self.P,
            "R": self.R,
            "R_prime": self.R_prime,
            "nesting_spec": nest,
            "alpha_b": self.alpha_b,
            "alpha_e": self.alpha_e,
            "seed": seed,
        }

    def report(self) -> dict:
        d = self.descriptor()
        d.update(
            index=self.index,
            R_target=self.R_target,
            R_b=self.R_b,
            G_eff=self.G_eff,
            G_label="G_eff (root discriminant of the field)",
            alpha_e_rate_formula=self.alpha_e_rate_formula,
            rprime_floor=rprime_floor(self.G_eff),
            eps_coarse=[self.eps_coarse.lo, self.eps_coarse.hi],
            flatness_ok=self.flatness_ok,
            C_e=self.C_e,
            rprime_condition=self.rprime_condition,
        )
        return d

    def to_json(self, seed: int | None = None) -> str:
        return json.dumps(self.descriptor(seed), sort_keys=True)


def rprime_floor(g: float) -> float:
    """ln(e G / 2): R' must exceed this value."""
    return math.log(math.e * g / 2.0)


def secrecy_rate_region(c_b: float, c_e: float, g_eff: float) -> float:
    """Upper end ``C_b - C_e - ln(2 G^2 / pi)`` of the achievable secrecy rates (may be negative)."""
    if c_b < c_e:
        raise ValueError("need C_b >= C_e")
    return c_b - c_e - math.log(2.0 * g_eff**2 / math.pi)


def _element_candidates(field: nf.NumberField):
    """(index, element) pairs for small nonzero integral elements, via float norms."""
    n = field.degree
    span = 2 if n <= 4 else 1
    grid = np.array(list(itertools.product(range(-span, span + 1), repeat=n)), dtype=float)
    grid = grid[np.any(grid != 0, axis=1)]
    emb = grid @ field.basis_embeddings
    norms = np.rint(np.prod(np.abs(emb) ** 2, axis=1)).astype(np.int64)
    # shortest coefficient vector per norm value
    best: dict[int, np.ndarray] = {}
    weight = np.abs(grid).sum(1)
    for i in np.lexsort((weight, norms)):
        best.setdefault(int(norms[i]), grid[i])
    return [(idx, [int(v) for v in e]) for idx, e in best.items() if idx >= 1]


def _choose_nesting(field: nf.NumberField, target_index: float):
    n = field.degree
    options = []
    c = 1
    while True:
        idx = c**n
        options.append((idx, c))
        if idx > 4 * target_index:
            break
        c += 1
    options += _element_candidates(field)
    # nearest in log scale; integers first on ties
    return min(options, key=lambda o: (abs(math.log(o[0] / target_index)), not isinstance(o[1], int)))


def design_code(
    field,
    P: float,
    R_target: float | None,
    R_prime: float,
    nesting=None,
    k: int | None = None,
    C_e: float | None = None,
) -> WiretapCode:
    """Design a nested code for ``field`` at power ``P``.

    ``nesting`` is an integer ``c`` (coarse = c * fine, index c^{2k}), an
    integral element given by integral-basis coordinates (index |N(a)|), or
    ``None`` to search for the index nearest ``e^{k R_target}``.
    """
    if isinstance(field, str):
        field = nf.get_field(field)
    if k is not None and k != field.k:
        raise ValueError(f"field {field.name} has k={field.k}, requested k={k}")
    if not P > 0:
        raise ValueError("P must be positive")
    k = field.k
    g = field.root_discriminant
    floor = rprime_floor(g)
    if not R_prime > floor:
        raise DesignRefused(
            f"R′ = {R_prime:.6g} violates R′ > ln(eG/2) = {floor:.6g} with G = G_eff = {g:.6g}"
        )
    if nesting is None:
        if R_target is None:
            raise ValueError("give R_target or an explicit nesting")
        target = math.exp(k * R_target)
        _, nesting = _choose_nesting(field, target)
    alpha_e = math.sqrt(2 * math.pi * math.e * P / (g * math.exp(R_prime)))
    unit = la.from_ring(field)
    probe = la.build_cosets(unit, nesting)
    index = probe.index
    if R_target is not None:
        target = math.exp(k * R_target)
        if abs(index - target) > NESTING_TOLERANCE * target:
            raise DesignRefused(
                f"no realizable index within 25% of e^(kR)={target:.6g}; "
                f"nearest index {index} gives R = {math.log(index) / k:.6g}"
            )
    alpha_b = alpha_e / index ** (1.0 / (2 * k))
    fine = la.from_ring(field, alpha_b)
    cosets = la.build_cosets(fine, nesting)
    eps = ga.flatness_factor(cosets.coarse, math.sqrt(P))
    return WiretapCode(
        field=field,
        cosets=cosets,
        alpha_b=alpha_b,
        alpha_e=alpha_e,
        P=float(P),
        R=math.log(index) / k,
        R_prime=float(R_prime),
        G_eff=g,
        R_target=R_target,
        eps_coarse=eps,
        C_e=C_e,
    )


def encode_batch(code: WiretapCode, messages, rng: np.random.Generator, strict: bool = True) -> np.ndarray:
    """One codeword per message: draws from D_{L_e + lambda_m, sqrt(P)}; returns (n, k) complex."""
    m = np.atleast_1d(np.asarray(messages, dtype=np.int64))
    if np.any((m < 0) | (m >= code.index)):
        raise ValueError(f"message out of range 0..{code.index - 1}")
    return ga.sample_coset_points(code.coarse, code.cosets.leaders[m], code.sigma_s, rng, strict)


def encode(code: WiretapCode, m: int, rng: np.random.Generator, strict: bool = True) -> np.ndarray:
    return encode_batch(code, [m], rng, strict)[0]
