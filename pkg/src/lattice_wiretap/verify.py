"""Invariant suite used by the ``verify`` subcommand.

Each check yields :class:`Check` rows of ``(name, case, value, reference, ok)``.
"""

from __future__ import annotations

import math
from typing import Iterator, NamedTuple

import numpy as np

from . import analysis as an
from . import channel as ch
from . import gaussian as ga
from . import lattice as la
from . import numberfield as nf
from . import receiver as rc
from . import wiretap as wt


class Check(NamedTuple):
    name: str
    case: str
    value: float
    reference: float
    ok: bool


def field_checks(field: nf.NumberField) -> Iterator[Check]:
    k, d = field.k, abs(field.discriminant)
    dual_ideal = nf.codifferent(field)
    yield Check("codifferent_norm", field.name, float(dual_ideal.norm * d), 1.0, abs(dual_ideal.norm * d - 1) < 1e-12)
    ring = la.from_ring(field)
    vol = 2.0 ** (-k) * math.sqrt(d)
    yield Check("volume", field.name, ring.volume, vol, abs(ring.volume / vol - 1) < 1e-9)
    target = la.conjugate(la.from_ideal(field, dual_ideal, 2.0))
    eq = la.unimodular_equivalent(la.dual(ring), target)
    yield Check("dual_is_2conj_codifferent", field.name, float(eq), 1.0, eq)
    lam = la.shortest_vector(ring).length
    yield Check("lambda1_ring", field.name, lam, math.sqrt(k), lam >= math.sqrt(k) * (1 - 1e-12))
    lam_d = la.shortest_vector(la.from_ideal(field, dual_ideal)).length
    ref = math.sqrt(k) * float(dual_ideal.norm) ** (1 / (2 * k))
    yield Check("lambda1_codifferent", field.name, lam_d, ref, lam_d >= ref * (1 - 1e-12))
    eps = 2.0 ** (-2 * k)
    eta = ga.smoothing_parameter(ring, eps)
    g = field.root_discriminant
    yield Check("smoothing_le_root_disc", field.name, eta, g, eta <= g)
    rhs = 2 * math.sqrt(k) / la.shortest_vector(la.dual(ring)).length
    yield Check("smoothing_le_2sqrtk_over_dual_lambda1", field.name, eta, rhs, eta <= rhs)


def gdfe_checks(rng: np.random.Generator, instances: int = 200) -> Iterator[Check]:
    worst = 0.0
    for _ in range(instances):
        k = int(rng.integers(1, 9))
        h = ch.complex_normal(rng, k)
        rho = float(10 ** rng.uniform(-1, 3))
        pre = rc.mmse_gdfe(h, rho)
        y = ch.complex_normal(rng, k, 4.0)
        x = ch.complex_normal(rng, k, 4.0)
        worst = max(worst, pre.identity_residual(y, x))
    yield Check("gdfe_identity_residual", f"{instances} instances", worst, 1e-9, worst < 1e-9)


def default_code(field: nf.NumberField, P: float = 10.0) -> wt.WiretapCode:
    """Index-2^{2k} code with R' one and a half nats above the floor."""
    return wt.design_code(field, P, None, wt.rprime_floor(field.root_discriminant) + 1.5, nesting=2)


def roundtrip_checks(code: wt.WiretapCode, rng: np.random.Generator) -> Iterator[Check]:
    msgs = np.arange(code.index)
    x = wt.encode_batch(code, msgs, rng)
    out = rc.decode_batch(code, x, np.ones(code.k), 1e12)
    bad = int(np.sum(out != msgs))
    yield Check("noiseless_roundtrip_errors", code.field.name, float(bad), 0.0, bad == 0)


def distance_checks(code: wt.WiretapCode, rho: float, draws: int, rng: np.random.Generator) -> Iterator[Check]:
    worst = math.inf
    for _ in range(draws):
        h = ch.complex_normal(rng, code.k)
        md = rc.received_min_distance_bound(code, h, rho)
        worst = min(worst, md.exact_sq / md.amgm_sq)
    yield Check("dR_over_amgm_min", f"{code.field.name} rho={rho!r}", worst, 1.0, worst >= 1 - 1e-9)


def dual_faded_checks(field: nf.NumberField, P: float, sigma_e2: float, draws: int, rng) -> Iterator[Check]:
    worst = math.inf
    for _ in range(draws):
        h = ch.complex_normal(rng, field.k)
        dc = an.dual_lambda1_check(field, h, P, sigma_e2)
        worst = min(worst, dc.lambda1 / dc.bound)
    yield Check("faded_dual_lambda1_over_bound_min", field.name, worst, 1.0, worst >= 1 - 1e-9)


def formula_checks() -> Iterator[Check]:
    v = wt.secrecy_rate_region(5, 1, 2)
    yield Check("secrecy_rate_region", "Cb=5 Ce=1 G=2", v, 4 - math.log(8 / math.pi), abs(v - (4 - math.log(8 / math.pi))) < 1e-12)
    v = an.leakage_bound(2.0**-20, 10, 1.0)
    yield Check("leakage_bound", "eps=2^-20 k=10 R=1", v, 1.66e-4, abs(v - 1.66e-4) < 5e-7)
    v = ch.capacity(ch.ChannelModel.gaussian(), 10.0)[0]
    yield Check("gaussian_capacity", "rho=10", v, math.log(11), v == math.log(11))


def run_all(config: dict, rng_seed: int) -> list[Check]:
    rng = np.random.default_rng(ch.derive_seed(rng_seed, 0))
    rows: list[Check] = []
    fields = nf.catalog()
    for f in fields.values():
        rows += field_checks(f)
    rows += gdfe_checks(rng)
    for f in fields.values():
        code = default_code(f)
        rows += roundtrip_checks(code, rng)
    draws = int(config.get("fading_draws", 20))
    for f in fields.values():
        if f.k <= 2:
            code = default_code(f)
            rows += distance_checks(code, 10.0, draws, rng)
            rows += dual_faded_checks(f, 10.0, 1.0, draws, rng)
    rows += formula_checks()
    gauss = ch.ChannelModel.gaussian(1.0)
    code = default_code(fields["Q(i)"])
    dec = an.leakage_decomposition(code, gauss, None, 0.5, 100, rng)
    rows.append(Check("gaussian_outage_term", "Q(i)", dec.outage_term, 0.0, dec.outage_term == 0.0))
    return rows
