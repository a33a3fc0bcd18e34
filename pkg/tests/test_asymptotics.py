"""Long-time decay laws, the inverse-log Fourier series, gamma-function
derivative recursion, and the remainder-order probe utility."""

import dataclasses

import numpy as np
import pytest

from friedrichs import (
    ClassificationMismatch,
    InvalidInput,
    Kind,
    ResolventEvaluator,
    CutoffFunction,
    build_asymptote_model,
    classify_zero_energy,
    gamma_derivatives_at_one,
    log_decay_asymptote,
    log_fourier_series,
    oscillatory_integral,
    power_law_asymptote,
    remainder_order_probe,
)

from helpers import is_hermitian, is_psd


# 30-digit references for Gamma^(k)(1), frozen from an arbitrary-precision run
GAMMA_DERIVS_AT_ONE = [
    1.0,
    -0.57721566490153286061,
    1.9781119906559451108,
    -5.4448744564853177341,
    23.561474084025604496,
    -117.83940826837742425,
]


def test_gamma_derivatives_values():
    got = gamma_derivatives_at_one(5)
    assert np.allclose(got, GAMMA_DERIVS_AT_ONE, rtol=1e-14)
    assert abs(got[1] + np.euler_gamma) < 1e-16
    assert abs(got[2] - (np.euler_gamma**2 + np.pi**2 / 6.0)) < 1e-14


def test_gamma_derivatives_validation():
    assert gamma_derivatives_at_one(0).tolist() == [1.0]
    with pytest.raises(InvalidInput):
        gamma_derivatives_at_one(-1)


# -- inverse-log series ---------------------------------------------------------

def test_log_series_leading_term_exact():
    for t in (1e4, 1e6, 1e8):
        assert log_fourier_series(t, 2, terms=1) == 1.0 / np.log(t)


def test_log_series_second_term():
    t = 1e8
    lt = np.log(t)
    second = log_fourier_series(t, 2, terms=2) - log_fourier_series(t, 2, terms=1)
    expect = lt**-2 * (-np.euler_gamma - 1j * np.pi / 2.0)
    assert abs(second - expect) < 1e-15 * abs(expect)


def test_log_series_q3_leading():
    t = 1e6
    assert abs(log_fourier_series(t, 3, terms=1) + 0.5 * np.log(t) ** -2) < 1e-18


def test_log_series_vectorized():
    ts = np.array([1e4, 1e6])
    out = log_fourier_series(ts, 2, terms=3)
    assert out.shape == (2,)
    for t, v in zip(ts, out):
        assert v == log_fourier_series(float(t), 2, terms=3)


def test_log_series_validation():
    with pytest.raises(InvalidInput):
        log_fourier_series(1e4, 1)
    with pytest.raises(InvalidInput):
        log_fourier_series(2.0, 2)
    with pytest.raises(InvalidInput):
        log_fourier_series(1e4, 2, terms=0)
    with pytest.raises(InvalidInput):
        log_fourier_series(1e4, 2, terms=7)


def test_log_series_partial_sums_converge_to_numeric():
    # the series must approach the actual Fourier integral of
    # phi(w) / (w log^2 w) as terms are added, at each probe time
    phi = CutoffFunction(0.4, 0.2)
    f = lambda w: phi(w) / (w * np.log(w) ** 2)
    ts = np.array([1e6, 1e8, 1e10])
    vals, _ = oscillatory_integral(f, ts, 1e-14, 0.6, tolerance=1e-9,
                                   head_mass=1.0 / abs(np.log(1e-14)))
    for t, v in zip(ts, vals):
        errs = [abs(v - log_fourier_series(float(t), 2, terms=n)) for n in (1, 2, 3)]
        assert errs[0] > errs[1] > errs[2]


# -- power-law decay --------------------------------------------------------------

def test_power_law_model_b_leading(evaluators, classifications):
    ev = evaluators("model_b")
    cls = classifications("model_b")
    model = build_asymptote_model(ev, cls)
    assert model.kind is Kind.REGULAR
    assert model.n_b == 2
    t = 1e5
    kinv = 1.0 / np.real(cls.kzero[0, 0])
    lead = ev.lam2 * 2.0 * kinv**2 * np.exp(-3.0 * (np.log(t) + 1j * np.pi / 2.0))
    got = power_law_asymptote(ev, cls, t)[0, 0]
    assert abs(got - lead) < 1e-8 * abs(lead)


def test_power_law_scaling_ratio(evaluators, classifications):
    ev = evaluators("model_b")
    cls = classifications("model_b")
    t = 1e6
    v1 = power_law_asymptote(ev, cls, t)[0, 0]
    v2 = power_law_asymptote(ev, cls, 2.0 * t)[0, 0]
    assert abs(v2 / v1 - 2.0**-3) < 1e-8


def test_power_law_coefficient_hermitian_psd(evaluators, classifications):
    model = build_asymptote_model(evaluators("two_level"), classifications("two_level"))
    assert model.kind is Kind.REGULAR
    assert model.n_b == 1
    assert len(model.matrices) == 3
    assert is_hermitian(model.matrices[0], 1e-12)
    assert is_psd(model.matrices[0], 1e-12)


def test_power_law_zero_coupling(models):
    model = dataclasses.replace(models["model_b"], coupling=0.0)
    ev = ResolventEvaluator(model)
    cls = classify_zero_energy(ev)
    assert np.all(power_law_asymptote(ev, cls, 10.0) == 0.0)


def test_power_law_wrong_kind(evaluators, classifications):
    with pytest.raises(ClassificationMismatch):
        power_law_asymptote(evaluators("model_a_critical"),
                            classifications("model_a_critical"), 100.0)


# -- logarithmic decay -------------------------------------------------------------

def test_log_decay_model_a_critical(evaluators, classifications):
    ev = evaluators("model_a_critical")
    cls = classifications("model_a_critical")
    model = build_asymptote_model(ev, cls)
    assert model.kind is Kind.FIRST
    assert model.n_b == 1
    assert np.allclose(model.matrices[0], [[1.0]], atol=1e-12)
    t = 1e6
    got = log_decay_asymptote(ev, cls, t)[0, 0]
    assert abs(got - np.pi / (4.0 * np.log(t))) < 1e-12


def test_log_decay_scaling_ratio(evaluators, classifications):
    ev = evaluators("model_a_critical")
    cls = classifications("model_a_critical")
    t = 1e3
    ratio = log_decay_asymptote(ev, cls, t**2)[0, 0] / log_decay_asymptote(ev, cls, t)[0, 0]
    assert abs(ratio - 0.5) < 1e-14


def test_log_decay_domain_and_kind_errors(evaluators, classifications):
    ev = evaluators("model_a_critical")
    cls = classifications("model_a_critical")
    with pytest.raises(InvalidInput):
        log_decay_asymptote(ev, cls, 2.0)
    with pytest.raises(ClassificationMismatch):
        log_decay_asymptote(evaluators("model_b"), classifications("model_b"), 1e4)


def test_asymptote_model_second_third_kind_rejected(evaluators, classifications):
    for name in ("model_b_critical", "three_level_third_kind"):
        with pytest.raises(ClassificationMismatch):
            build_asymptote_model(evaluators(name), classifications(name))


def test_asymptote_value_rejects_nonpositive_time(evaluators, classifications):
    model = build_asymptote_model(evaluators("model_b"), classifications("model_b"))
    with pytest.raises(InvalidInput):
        model.value(0.0)
    with pytest.raises(InvalidInput):
        model.value(-1.0)


# -- remainder-order probe -----------------------------------------------------------

def test_probe_recovers_slope():
    grid = np.geomspace(1e-4, 1e-1, 8)
    report = remainder_order_probe(lambda x: x**2 + 5.0 * x**3,
                                   lambda x: x**2, grid, expected=3.0)
    assert report.passed
    assert not report.exact
    assert abs(report.slope - 3.0) < 0.01


def test_probe_log_power_division():
    grid = np.geomspace(1e-6, 1e-3, 8)
    report = remainder_order_probe(lambda x: x**2 * abs(np.log(x)),
                                   lambda x: 0.0, grid, expected=2.0, log_power=1.0)
    assert report.passed
    assert abs(report.slope - 2.0) < 1e-10


def test_probe_exact_match():
    grid = np.geomspace(1e-4, 1e-1, 8)
    report = remainder_order_probe(lambda x: x**2, lambda x: x**2, grid, expected=1.0)
    assert report.exact
    assert report.passed
    assert np.isnan(report.slope)


def test_probe_grid_validation():
    with pytest.raises(InvalidInput):
        remainder_order_probe(lambda x: x, lambda x: 0.0,
                              np.geomspace(1e-3, 1e-1, 8), expected=1.0)
    with pytest.raises(InvalidInput):
        remainder_order_probe(lambda x: x, lambda x: 0.0,
                              np.array([1e-4, 1e-1]), expected=1.0)
