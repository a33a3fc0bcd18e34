"""Shared test utilities: random admissible models and matrix predicates."""

import numpy as np
from numpy.polynomial import polynomial as npoly

from friedrichs import scenario_from_dict, validate_model


def _pairs(coefs):
    return [[float(np.real(c)), float(np.imag(c))] for c in coefs]


def random_admissible_model(rng, nmax=3, allow_complex=True):
    """Random ModelSpec satisfying every admissibility constraint.

    Poles come from factors (w^2 + a) with a on a coarse grid >= 0.5, so
    every pole sits at least 0.7 off the half-line and products across
    levels are either exactly shared (order 2, supported) or well
    separated.  Numerators are low degree with |q(0)| bounded away from 0.

    Grid spacing 1.25 keeps distinct pole pairs >= 0.2 apart: double-pole
    pairs closer than ~0.05 push partial-fraction coefficients to ~1/sep^2
    with near-cancellation, and float64 root accuracy (~3e-13) then floors
    the closed transforms near 1e-8 absolute -- outside what quadrature
    agreement at 1e-8 relative can certify.  Near-degenerate clustering
    itself is pinned separately by the polynomial regression tests.
    """
    n = int(rng.integers(1, nmax + 1))
    parity = int(rng.integers(0, 2))
    levels = np.sort(rng.uniform(0.3, 3.0, size=n))
    ffs = []
    for _ in range(n):
        h = int(rng.choice([1, 3] if parity else [2, 4]))
        dnum = int(rng.integers(0, 2))
        k = max(1, int(np.ceil((h + 2 * dnum + 2) / 4)))
        avals = rng.choice(np.arange(0.5, 9.0, 1.25), size=k, replace=False)
        den = [1.0]
        for a in avals:
            den = npoly.polymul(den, [a, 0.0, 1.0])
        num = rng.uniform(-2.0, 2.0, size=dnum + 1)
        if allow_complex and rng.random() < 0.3:
            num = num + 1j * rng.uniform(-1.0, 1.0, size=dnum + 1)
        if abs(num[0]) < 0.2:
            num[0] = 0.2 + abs(num[0]) if rng.random() < 0.5 else -0.2 - abs(num[0])
        ffs.append({"half_power": h,
                    "numerator": _pairs(num),
                    "denominator": _pairs(den)})
    model = scenario_from_dict({
        "levels": [float(x) for x in levels],
        "coupling": float(rng.uniform(0.1, 0.8)),
        "form_factors": ffs,
    })
    assert validate_model(model).ok
    return model


def is_hermitian(x, tol=1e-12):
    x = np.asarray(x)
    return np.linalg.norm(x - x.conj().T, 2) <= tol * max(1.0, np.linalg.norm(x, 2))


def is_psd(x, tol=1e-12):
    ev = np.linalg.eigvalsh(0.5 * (x + np.conj(x).T))
    return ev[0] >= -tol * max(1.0, abs(ev[-1]))


def rank_leq_one(x, tol=1e-12):
    s = np.linalg.svd(np.asarray(x), compute_uv=False)
    return s.size < 2 or s[1] <= tol * max(1.0, s[0])
