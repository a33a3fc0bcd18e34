"""Brute-force cross-checks, kept deliberately independent of the
closed-form machinery: a dense discretization of the continuum that is
diagonalized outright, and thin wrappers over adaptive quadrature.

Nothing here knows about Cauchy transforms or boundary values; agreement
between this module and the analytic path is the package's main evidence
of correctness.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate

from .errors import InvalidInput
from .model import ModelSpec

__all__ = [
    "DiscretizedHamiltonian",
    "ConvergenceReport",
    "oracle_quadrature",
    "oracle_principal_value",
    "oracle_evolution",
    "oracle_resolvent",
    "discretize_state",
    "convergence_study",
]

_MAX_CELLS = 8000


class DiscretizedHamiltonian:
    """Finite Hermitian stand-in for the level-plus-continuum Hamiltonian.

    The half-line is cut into `m` cells (geometric grading, ratio 1.05,
    from w = 1e-6 up to where the graded step reaches the uniform step,
    then uniform out to `omega_disc`); each cell becomes one mode at its
    midpoint with coupling lam * v_n(w_j) * sqrt(cell width).
    """

    def __init__(self, model: ModelSpec, m: int, omega_disc: float = None,
                 wmin: float = 1e-6, ratio: float = 1.05):
        if not 2 <= m <= _MAX_CELLS:
            raise InvalidInput("cell count must be in [2, %d]" % _MAX_CELLS)
        self.model = model
        self.m = int(m)
        if omega_disc is None:
            pole = max(
                (max(abs(p) for p, _ in f.tail.poles()) for f in model.form_factors),
                default=1.0,
            )
            omega_disc = 50.0 * max(pole, max(abs(float(w)) for w in model.levels), 1.0)
        self.omega_disc = float(omega_disc)
        edges = [0.0, float(wmin)]
        while len(edges) < self.m + 1:
            rem = self.m + 1 - len(edges)
            cur = edges[-1]
            ustep = (self.omega_disc - cur) / rem
            gstep = cur * (ratio - 1.0)
            if gstep >= ustep:
                edges.extend(np.linspace(cur, self.omega_disc, rem + 1)[1:])
                break
            edges.append(cur + gstep)
        self.edges = np.asarray(edges)
        self.grid = 0.5 * (self.edges[:-1] + self.edges[1:])
        self.weights = np.diff(self.edges)

    @cached_property
    def matrix(self) -> np.ndarray:
        n = self.model.nlevels
        lam = self.model.coupling
        dim = n + self.m
        v = self.model.form_values(self.grid)  # (m, n)
        coup = lam * np.conj(v) * np.sqrt(self.weights)[:, None]
        k0 = self.model.k0
        # a real symmetric matrix halves eigh memory twice over; at the
        # 8000-cell reference grid the complex path does not fit
        real = np.all(np.imag(coup) == 0.0) and np.all(np.imag(k0) == 0.0)
        h = np.zeros((dim, dim), dtype=float if real else complex)
        h[:n, :n] = np.real(k0) if real else k0
        h[n:, n:] = np.diag(self.grid)
        cp = np.real(coup) if real else coup
        h[:n, n:] = cp.T
        h[n:, :n] = np.conj(cp)
        return h

    @cached_property
    def eigensystem(self):
        return np.linalg.eigh(self.matrix)

    @cached_property
    def positive_mask(self) -> np.ndarray:
        evals = self.eigensystem[0]
        near = np.abs(evals) <= 1e-10
        if np.any(near):
            warnings.warn(
                "eigenvalue within 1e-10 of zero: positive-spectrum projection "
                "is grid-ambiguous", RuntimeWarning,
            )
        return evals > 0.0


def oracle_evolution(dh: DiscretizedHamiltonian, psi, t):
    """<psi|P e^{-itH} P|psi> on the discretized space, P = projector onto
    positive-energy eigenvectors; psi lives on the level block."""
    psi = np.asarray(psi, dtype=complex).ravel()
    n = dh.model.nlevels
    if psi.size != n:
        raise InvalidInput("psi must have one entry per level")
    evals, evecs = dh.eigensystem
    mask = dh.positive_mask
    c = evecs[:n, mask].conj().T @ psi  # <e_k|psi>
    t = np.asarray(t, dtype=float)
    phases = np.exp(-1j * np.outer(np.atleast_1d(t), evals[mask]))
    amps = phases @ (np.abs(c) ** 2)
    return amps if t.ndim else complex(amps[0])


def oracle_resolvent(dh: DiscretizedHamiltonian, z: complex) -> np.ndarray:
    """Level block of (H_disc - z)^-1."""
    n = dh.model.nlevels
    dim = dh.matrix.shape[0]
    rhs = np.zeros((dim, n), dtype=complex)
    rhs[:n, :n] = np.eye(n)
    sol = np.linalg.solve(dh.matrix - z * np.eye(dim), rhs)
    return sol[:n, :n]


def discretize_state(dh: DiscretizedHamiltonian, psi, tail) -> np.ndarray:
    """Full-space vector [psi; f(w_j) sqrt(D_j)] for a level part psi and a
    continuum wavefunction f."""
    psi = np.asarray(psi, dtype=complex).ravel()
    fv = np.asarray(tail(dh.grid), dtype=complex).ravel()
    return np.concatenate([psi, fv * np.sqrt(dh.weights)])


def oracle_quadrature(integrand, domain, tolerance: float = 1e-10,
                      limit: int = 400):
    """Adaptive reference integration; complex-valued integrands split into
    real and imaginary parts.  domain = (a, b), b may be inf."""
    a, b = domain
    re, re_err = integrate.quad(lambda x: np.real(integrand(x)), a, b,
                                epsabs=tolerance, epsrel=tolerance, limit=limit)
    im, im_err = integrate.quad(lambda x: np.imag(integrand(x)), a, b,
                                epsabs=tolerance, epsrel=tolerance, limit=limit)
    if im == 0.0 and im_err < max(tolerance, 1e2 * abs(re) * tolerance):
        return re
    return re + 1j * im


def oracle_principal_value(numerator, c: float, domain=(0.0, np.inf),
                           tolerance: float = 1e-10) -> float:
    """PV int numerator(w)/(w - c) dw over the half line, c inside: the
    symmetric window [a, 2c - a'] handled by Cauchy-weighted quadrature,
    the rest by plain quadrature."""
    a, b = domain
    if not a < c < b:
        raise InvalidInput("principal value point must lie inside the domain")
    cut = min(2.0 * c - a, b)
    val, _ = integrate.quad(lambda w: np.real(numerator(w)), a, cut,
                            weight="cauchy", wvar=c,
                            epsabs=tolerance, epsrel=tolerance, limit=400)
    imag, _ = integrate.quad(lambda w: np.imag(numerator(w)), a, cut,
                             weight="cauchy", wvar=c,
                             epsabs=tolerance, epsrel=tolerance, limit=400)
    if imag != 0.0:
        val = val + 1j * imag
    if cut < b:
        val += oracle_quadrature(lambda w: numerator(w) / (w - c), (cut, b),
                                 tolerance)
    return val


@dataclass
class ConvergenceReport:
    sizes: list
    values: list
    differences: np.ndarray
    orders: np.ndarray

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.differences) < 0.0))

    @property
    def observed_order(self) -> float:
        return float(self.orders[-1]) if self.orders.size else float("nan")


def convergence_study(dhs, quantity) -> ConvergenceReport:
    """Evaluate `quantity` (callable on a DiscretizedHamiltonian) across a
    refinement sequence and report Cauchy differences and observed orders
    (order measured against the cell count)."""
    dhs = list(dhs)
    if len(dhs) < 3:
        raise InvalidInput("need at least three refinements")
    values = [quantity(dh) for dh in dhs]
    diffs = np.array([
        float(np.linalg.norm(np.atleast_1d(np.asarray(values[i + 1]) - np.asarray(values[i]))))
        for i in range(len(values) - 1)
    ])
    orders = np.array([
        np.log(diffs[i] / diffs[i + 1]) / np.log(dhs[i + 2].m / dhs[i + 1].m)
        if diffs[i + 1] > 0.0 else np.inf
        for i in range(len(diffs) - 1)
    ])
    return ConvergenceReport(sizes=[dh.m for dh in dhs], values=values,
                             differences=diffs, orders=orders)
