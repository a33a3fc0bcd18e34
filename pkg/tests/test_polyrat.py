import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from friedrichs import (
    InvalidInput,
    Polynomial,
    RationalFunction,
    partial_fractions,
    poly_roots,
)


def roots_dict(pairs):
    return sorted(((complex(r), int(m)) for r, m in pairs),
                  key=lambda t: (t[0].real, t[0].imag))


def test_roots_quadratic():
    out = poly_roots(Polynomial([1, 0, 1]))
    assert all(m == 1 for _, m in out)
    assert np.allclose(sorted(r.imag for r, _ in out), [-1, 1], atol=1e-12)
    assert max(abs(r.real) for r, _ in out) <= 1e-12


def test_roots_double():
    out = poly_roots(Polynomial([1, 2, 1]))
    assert len(out) == 1
    r, m = out[0]
    assert m == 2 and abs(r + 1) <= 1e-7


def test_roots_cubic_123():
    # coefficients of (w-1)(w-2)(w-3) expanded by hand
    out = poly_roots(Polynomial([-6, 11, -6, 1]))
    rs = sorted(r.real for r, _ in out)
    assert np.allclose(rs, [1, 2, 3], atol=1e-9)


def test_roots_zero_poly_rejected():
    with pytest.raises(InvalidInput):
        poly_roots(Polynomial([0.0]))


def test_roots_multiplicity_four_cluster():
    # companion eigenvalues of an m-fold root scatter in a disc ~ eps^(1/m);
    # the cluster radius must grow with the detected multiplicity or the
    # four-fold pole splits into spurious simple ones
    p = Polynomial.from_roots([1j] * 4 + [-1j] * 4)
    out = poly_roots(p)
    assert sorted(m for _, m in out) == [4, 4]
    for r, _ in out:
        assert abs(abs(r.imag) - 1) < 1e-12 and abs(r.real) < 1e-12


def test_roots_mixed_multiplicity():
    p = Polynomial.from_roots([2.0, 2.0, 2.0, -1.5, 0.5j, -0.5j])
    out = roots_dict(poly_roots(p))
    ms = sorted(m for _, m in out)
    assert ms == [1, 1, 1, 3]


def test_roots_close_but_distinct_not_merged():
    p = Polynomial.from_roots([1.0, 1.0 + 1e-5])
    out = poly_roots(p)
    assert sorted(m for _, m in out) == [1, 1]


@given(st.lists(st.complex_numbers(max_magnitude=3.0, min_magnitude=0.05,
                                   allow_nan=False, allow_infinity=False),
                min_size=1, max_size=6))
@settings(max_examples=60, deadline=None)
def test_roots_rebuild_property(roots):
    # separate everything by a fixed margin so multiplicities are unambiguous
    sep = []
    for r in roots:
        if all(abs(r - s) > 0.1 for s in sep):
            sep.append(r)
    p = Polynomial.from_roots(sep)
    out = poly_roots(p)
    assert sum(m for _, m in out) == len(sep)
    rebuilt = Polynomial.from_roots(
        [r for r, m in out for _ in range(m)]).monic()
    assert np.allclose(rebuilt.coef, p.monic().coef, rtol=1e-10, atol=1e-10)


def test_partial_fractions_two_simple_poles():
    r = RationalFunction([1.0], np.polynomial.polynomial.polymul([1, 1], [2, 1]))
    dec = partial_fractions(r)
    terms = {complex(np.round(t.pole.real)): t.coeffs[0] for t in dec.terms}
    assert abs(terms[-1] - 1) < 1e-10 and abs(terms[-2] + 1) < 1e-10


def test_partial_fractions_double_pole_pair():
    # Laurent of 1/(w^2+1)^2 at w=i: -1/(4u^2) - (i/4)/u with u = w-i;
    # cross-checked by re-summation at w=1 giving exactly 1/4
    r = RationalFunction([1.0], [1, 0, 2, 0, 1])
    dec = partial_fractions(r)
    for t in dec.terms:
        assert t.order == 2
        c1, c2 = t.coeffs
        sign = 1.0 if t.pole.imag > 0 else -1.0
        assert abs(c1 + sign * 0.25j) < 1e-10
        assert abs(c2 + 0.25) < 1e-10
    assert abs(dec(1.0) - 0.25) < 1e-12


def test_partial_fractions_symmetric_residues():
    r = RationalFunction([0.0, 1.0], [1, 0, 1])
    dec = partial_fractions(r)
    for t in dec.terms:
        assert abs(t.coeffs[0] - 0.5) < 1e-12


def test_partial_fractions_improper_rejected():
    with pytest.raises(InvalidInput):
        partial_fractions(RationalFunction([1, 0, 1], [1, 1]))


def test_partial_fractions_order_five_rejected():
    den = [1.0]
    for _ in range(5):
        den = np.polynomial.polynomial.polymul(den, [1, 1])
    with pytest.raises(InvalidInput):
        partial_fractions(RationalFunction([1.0], den))


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=40, deadline=None)
def test_partial_fractions_resummation(seed):
    # invariant: re-summation reproduces the function, and the first-order
    # coefficients cancel whenever the function is O(w^-2) at infinity
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 4))
    den = [1.0]
    for a in rng.choice(np.arange(0.5, 8.0, 0.5), size=k, replace=False):
        den = np.polynomial.polynomial.polymul(den, [a, 0, 1])
    num = rng.uniform(-2, 2, size=2 * k - 1)  # degree <= deg den - 2
    r = RationalFunction(num, den)
    dec = partial_fractions(r)
    ws = rng.uniform(0.0, 10.0, size=20)
    direct = r(ws)
    summed = np.zeros_like(ws, dtype=complex)
    for t in dec.terms:
        for j, c in enumerate(t.coeffs, start=1):
            summed += c / (ws - t.pole) ** j
    scale = np.max(np.abs(direct)) + 1e-30
    assert np.max(np.abs(direct - summed)) <= 1e-8 * max(scale, 1.0)
    assert abs(sum(t.coeffs[0] for t in dec.terms)) <= 1e-8 * max(
        1.0, max(abs(c) for t in dec.terms for c in t.coeffs))


def test_rat_conjugate():
    r = RationalFunction([0.0, 1 + 1j], [2, 1])
    rc = r.conjugate()
    assert np.allclose(rc.num.coef, [0.0, 1 - 1j])
    w = 1.7
    assert abs(rc(w) - np.conj(r(w))) < 1e-14
    rr = RationalFunction([1.0, 2.0], [1, 0, 1])
    assert np.allclose(rr.conjugate().num.coef, rr.num.coef)


def test_series_at_zero_values():
    r = RationalFunction([0, 1], [1, 0, 2, 0, 1])  # w/(w^2+1)^2
    c = r.series_at_zero(3)
    assert np.allclose(c, [0, 1, 0, -2], atol=1e-10)
    geom = RationalFunction([1.0], [1.0, -1.0])
    assert np.allclose(geom.series_at_zero(4), [1, 1, 1, 1, 1], atol=1e-10)
    const = RationalFunction([5.0], [1.0])
    assert np.allclose(const.series_at_zero(2), [5, 0, 0], atol=1e-12)


def test_series_at_zero_truncation_order():
    r = RationalFunction([1.0, 0.5], [1, 0, 2, 0, 1])
    order = 3
    c = r.series_at_zero(order)
    ws = np.geomspace(1e-4, 1e-2, 9)
    resid = np.abs(r(ws) - np.polynomial.polynomial.polyval(ws, c))
    slope = np.polyfit(np.log(ws), np.log(resid), 1)[0]
    assert abs(slope - (order + 1)) <= 0.1


def test_series_pole_at_origin_rejected():
    from friedrichs.errors import SingularOrigin
    with pytest.raises(SingularOrigin):
        RationalFunction([1.0], [0.0, 1.0]).series_at_zero(2)
