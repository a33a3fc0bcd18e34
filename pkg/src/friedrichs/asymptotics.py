"""Closed-form long-time behaviour of the reduced propagator.

Two regimes, decided by the zero-energy classification:

  * K(0) invertible (regular): algebraic decay.  With n_b the order of the
    first nonvanishing Taylor matrix of Gamma at 0,

      Ut(t) ~ lam^2 K(0)^-1 [ sum_{m=0}^{2} (n_b+m)! / (it)^{n_b+1+m}
                              Gamma_{n_b+m} ] K(0)^-1 .

  * kernel with Gamma_1 positive on it (first kind): logarithmically slow
    decay, Ut(t) ~ (lam^2 log t)^-1 (Q_1 Gamma_1 Q_1)^-1 on M_1.

Also the inverse-log-power series for scalar Fourier integrals with an
w^-1 (log w)^-q singularity at the origin (q >= 2):

  int_0^inf e^{-itw} w^-1 (log w)^-q phi(w) dw
    ~ phi(0) (-1)^q/(q-1) sum_j C(q+j-2, j) (log t)^{1-q-j} D_j ,
  D_j = (d/dnu - i pi/2)^j Gamma(nu) at nu=1,

whose Gamma-derivative values come from the cumulant recursion for
log Gamma(1+x) (gamma and zeta values), not numerical differentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .classify import Kind, ZeroEnergyClassification, _restricted_inverse
from .errors import ClassificationMismatch, InvalidInput
from .polyrat import DEFAULT_TOL, Tolerances
from .model import gamma_small_expansion
from .resolvent import ResolventEvaluator

__all__ = [
    "AsymptoteModel",
    "ProbeReport",
    "gamma_derivatives_at_one",
    "log_fourier_series",
    "build_asymptote_model",
    "power_law_asymptote",
    "log_decay_asymptote",
    "remainder_order_probe",
]


def gamma_derivatives_at_one(kmax: int) -> np.ndarray:
    """[Gamma(1), Gamma'(1), ..., Gamma^(kmax)(1)] via exp of the
    log-Gamma Taylor series: c_1 = -gamma, c_m = (-1)^m zeta(m)/m."""
    if kmax < 0:
        raise InvalidInput("kmax must be nonnegative")
    c = np.zeros(kmax + 1)
    if kmax >= 1:
        c[1] = -np.euler_gamma
    for m in range(2, kmax + 1):
        c[m] = (-1.0) ** m * zeta(m) / m
    g = np.zeros(kmax + 1)
    g[0] = 1.0
    for k in range(1, kmax + 1):
        g[k] = sum(m * c[m] * g[k - m] for m in range(1, k + 1)) / k
    return np.array([math.factorial(k) * g[k] for k in range(kmax + 1)])


def log_fourier_series(t, q: int, terms: int = 2) -> complex:
    """Partial sum of the inverse-log-power expansion (see module docstring)
    for phi(0) = 1.  Valid for t > e; terms <= 6."""
    if q < 2:
        raise InvalidInput("series requires q >= 2")
    if not 1 <= terms <= 6:
        raise InvalidInput("terms must be in 1..6")
    t = np.asarray(t, dtype=float)
    if np.any(t <= np.e):
        raise InvalidInput("series requires t > e")
    lt = np.log(t)
    derivs = gamma_derivatives_at_one(terms - 1)
    pref = (-1.0) ** q / (q - 1)
    total = np.zeros_like(lt, dtype=complex)
    for j in range(terms):
        dj = sum(
            math.comb(j, m) * (-1j * np.pi / 2.0) ** (j - m) * derivs[m]
            for m in range(j + 1)
        )
        total = total + math.comb(q + j - 2, j) * lt ** (1 - q - j) * dj
    out = pref * total
    return complex(out) if out.ndim == 0 else out


@dataclass
class AsymptoteModel:
    kind: Kind
    lam: float
    n_b: int
    n_a: int
    matrices: list  # regular: K(0)^-1 Gamma_{n_b+m} K(0)^-1; first: [B^-1 on M_1]

    def value(self, t):
        """Asymptote matrices at times t (vectorized: (..., N, N))."""
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0.0):
            raise InvalidInput("t must be positive")
        lam2 = self.lam**2
        if self.kind is Kind.REGULAR:
            out = np.zeros(t.shape + self.matrices[0].shape, dtype=complex)
            for m, mat in enumerate(self.matrices):
                p = self.n_b + 1 + m
                # (it)^(-p) for t > 0
                phase = np.exp(-p * (np.log(t) + 1j * np.pi / 2.0))
                out = out + math.factorial(self.n_b + m) * phase[..., None, None] * mat
            return lam2 * out
        if np.any(t <= np.e):
            raise InvalidInput("log-decay asymptote requires t > e")
        return self.matrices[0] / (lam2 * np.log(t))[..., None, None]


def build_asymptote_model(ev: ResolventEvaluator, cls: ZeroEnergyClassification,
                          tol: Tolerances = DEFAULT_TOL) -> AsymptoteModel:
    """Pick the decay law from the classification and assemble its
    coefficient matrices.  Cross-checks the (n_a, n_b) compatibility: an
    invertible K(0) demands n_b = 1 with any n_a >= 1, or n_b >= 2 with
    n_a = 1; a first-kind kernel demands n_b = 1."""
    if ev.lam2 == 0.0:
        # every asymptote carries a lam^2 prefactor; the continuum-order
        # bookkeeping is undefined without coupling, and irrelevant
        n_a = 0
    else:
        n_a = ev.se.a_series(depth=3).atilde_order
    n_b, gammas = gamma_small_expansion(ev.se.gamma, depth=2, tol=tol)
    if cls.kind is Kind.REGULAR:
        if ev.lam2 != 0.0 and not (n_b == 1 or n_a == 1):
            raise ClassificationMismatch(
                "power law needs n_b = 1 or n_a = 1 (got n_b=%d, n_a=%d)" % (n_b, n_a)
            )
        kinv = np.linalg.inv(cls.kzero)
        mats = [kinv @ g @ kinv for g in gammas]
        return AsymptoteModel(kind=Kind.REGULAR, lam=ev.lam, n_b=n_b, n_a=n_a,
                              matrices=mats)
    if cls.kind is Kind.FIRST:
        if n_b != 1:
            raise ClassificationMismatch(
                "log-decay law needs n_b = 1 (got n_b=%d)" % n_b
            )
        b = cls.q1 @ cls.gamma1 @ cls.q1
        binv = _restricted_inverse(b, cls.m1_basis)
        return AsymptoteModel(kind=Kind.FIRST, lam=ev.lam, n_b=n_b, n_a=n_a,
                              matrices=[binv])
    raise ClassificationMismatch(
        "no closed-form asymptote for kind %r" % cls.kind.value
    )


def power_law_asymptote(ev: ResolventEvaluator, cls: ZeroEnergyClassification,
                        t, tol: Tolerances = DEFAULT_TOL):
    model = build_asymptote_model(ev, cls, tol)
    if model.kind is not Kind.REGULAR:
        raise ClassificationMismatch("power law asymptote needs a regular model")
    return model.value(t)


def log_decay_asymptote(ev: ResolventEvaluator, cls: ZeroEnergyClassification,
                        t, tol: Tolerances = DEFAULT_TOL):
    model = build_asymptote_model(ev, cls, tol)
    if model.kind is not Kind.FIRST:
        raise ClassificationMismatch("log-decay asymptote needs a first-kind model")
    return model.value(t)


@dataclass
class ProbeReport:
    slope: float
    expected: float
    tolerance: float
    passed: bool
    exact: bool
    grid: np.ndarray
    residuals: np.ndarray


def remainder_order_probe(quantity, expansion, grid, expected: float,
                          log_power: float = 0.0,
                          tolerance: float = 0.15) -> ProbeReport:
    """Least-squares slope of log |quantity - expansion| against log x on a
    geometric grid spanning >= 3 decades, optionally dividing out
    |log x|^log_power first.  A difference at rounding level everywhere is
    reported as an exact match (slope fit would be meaningless noise)."""
    grid = np.asarray(grid, dtype=float)
    if grid.size < 4 or grid.max() / grid.min() < 1e3:
        raise InvalidInput("probe grid must span at least three decades")
    diffs = np.empty(grid.size)
    ref = 0.0
    for i, x in enumerate(grid):
        d = np.asarray(quantity(x)) - np.asarray(expansion(x))
        diffs[i] = np.linalg.norm(np.atleast_1d(d))
        ref = max(ref, float(np.linalg.norm(np.atleast_1d(np.asarray(expansion(x))))))
    if np.all(diffs <= 1e-13 * max(ref, 1e-300)):
        return ProbeReport(slope=float("nan"), expected=expected,
                           tolerance=tolerance, passed=True, exact=True,
                           grid=grid, residuals=diffs)
    scaled = diffs / np.abs(np.log(grid)) ** log_power
    mask = scaled > 0.0
    if mask.sum() < 3:
        raise InvalidInput("too few nonzero residuals to fit an order")
    slope = np.polyfit(np.log(grid[mask]), np.log(scaled[mask]), 1)[0]
    return ProbeReport(slope=float(slope), expected=expected, tolerance=tolerance,
                       passed=bool(abs(slope - expected) <= tolerance), exact=False,
                       grid=grid, residuals=diffs)
