import math
from fractions import Fraction

import numpy as np
import pytest

from lattice_wiretap import numberfield as nf

CYCLOTOMIC = {"Q(i)": 4, "Q(zeta3)": 3, "Q(zeta5)": 5, "Q(zeta8)": 8, "Q(zeta12)": 12, "Q(zeta15)": 15}


def _prime_factors(n):
    out, p = [], 2
    while p * p <= n:
        while n % p == 0:
            out.append(p)
            n //= p
        p += 1
    if n > 1:
        out.append(n)
    return sorted(set(out))


def cyclotomic_discriminant(n):
    """Closed form (-1)^{phi/2} n^phi / prod p^{phi/(p-1)}."""
    ps = _prime_factors(n)
    phi = n
    for p in ps:
        phi = phi // p * (p - 1)
    den = 1
    for p in ps:
        den *= p ** (phi // (p - 1))
    return (-1) ** (phi // 2) * n**phi // den


@pytest.mark.parametrize("name,n", CYCLOTOMIC.items())
def test_discriminant_matches_cyclotomic_formula(name, n):
    f = nf.get_field(name)
    assert f.discriminant == cyclotomic_discriminant(n)
    assert nf.discriminant_from_embeddings(f) == f.discriminant


@pytest.mark.parametrize("name", CYCLOTOMIC)
def test_codifferent_norm(name):
    f = nf.get_field(name)
    assert nf.codifferent(f).norm * abs(f.discriminant) == 1


@pytest.mark.parametrize("name", CYCLOTOMIC)
def test_trace_of_dual_basis_is_identity(name):
    f = nf.get_field(name)
    dual = nf.codifferent(f).basis_matrix
    for i, row in enumerate(dual):
        for j in range(f.degree):
            e_j = [Fraction(int(t == j)) for t in range(f.degree)]
            assert nf.trace(f, nf.multiply(f, row, e_j)) == (1 if i == j else 0)


def test_norm_of_one_minus_zeta5():
    f = nf.get_field("Q(zeta5)")
    x = [a - b for a, b in zip(f.one(), f.generator())]
    norm, _ = nf.element_norm_trace(f, x)
    assert norm == 5


def test_embeddings_are_roots_of_unity():
    f = nf.get_field("Q(zeta8)")
    z = nf.embed(f, f.generator())
    assert np.allclose(np.abs(z), 1)
    assert np.allclose(z**8, 1)
    # one per conjugate pair: upper half plane
    assert np.all(z.imag > 0)


def test_norm_is_product_of_embeddings(rng):
    f = nf.get_field("Q(zeta12)")
    for _ in range(10):
        x = [Fraction(int(v)) for v in rng.integers(-3, 4, f.degree)]
        if not any(x):
            continue
        norm, tr = nf.element_norm_trace(f, x)
        emb = nf.embed(f, x)
        assert math.isclose(float(norm), float(np.prod(np.abs(emb) ** 2)), rel_tol=1e-9)
        assert math.isclose(float(tr), 2 * float(np.sum(emb.real)), rel_tol=1e-9, abs_tol=1e-9)


def test_multiplication_is_commutative(rng):
    f = nf.get_field("Q(zeta5)")
    a = [Fraction(int(v)) for v in rng.integers(-5, 6, 4)]
    b = [Fraction(int(v)) for v in rng.integers(-5, 6, 4)]
    assert nf.multiply(f, a, b) == nf.multiply(f, b, a)


def test_principal_ideal_norm():
    f = nf.get_field("Q(i)")
    ideal = nf.principal_ideal(f, [1, 1])
    assert ideal.norm == 2


def test_reducible_polynomial_rejected():
    with pytest.raises(nf.InvalidFieldError):
        nf.NumberField("bad", [-1, 0, 1])  # x^2 - 1


def test_real_field_rejected():
    with pytest.raises(nf.InvalidFieldError):
        nf.NumberField("Q(sqrt2)", [-2, 0, 1])


def test_unknown_field():
    with pytest.raises(KeyError):
        nf.get_field("Q(zeta7)")
