"""Reduced resolvent on the level subspace and its boundary values.

With K(z) = K0 - lambda^2 S(z), the reduced resolvent of the full
Hamiltonian compressed to the level subspace is Rt(z) = (K(z) - z)^(-1).
Boundary operators on the cut are K+-(w) = K0 - lambda^2 D(w) -+ i pi
lambda^2 Gamma(w); the spectral density of the continuous part is

    Im Rt+(w) = (Rt+ - Rt-) / 2i = pi lambda^2 Rt+(w) Gamma(w) Rt-(w),

computed here in the product form with Rt- = (Rt+)^dagger, which is
positive semidefinite by construction and free of subtractive cancellation
even where Rt+- is nearly singular.

Discrete spectrum: negative eigenvalues are located by a sign-change scan
of det(K(x) - x) on the negative axis (the matrix is Hermitian there), and
resonances by a Newton search for zeros of det(K_II(z) - z) on the second
sheet, K_II(z) = K0 - lambda^2 (S(z) + 2 pi i Gamma(z)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EigenvalueProximity, EmbeddedEigenvalue, InvalidInput
from .model import ModelSpec
from .polyrat import DEFAULT_TOL, Tolerances
from .selfenergy import SelfEnergyEvaluator

__all__ = [
    "ResolventEvaluator",
    "SpectralDensity",
    "reduced_resolvent",
    "boundary_resolvent",
    "spectral_density",
    "scan_positive_spectrum",
    "find_negative_eigenvalues",
    "find_resonance_poles",
]


def _herm(x):
    return 0.5 * (x + np.conj(np.swapaxes(x, -1, -2)))


def _solve_batched(mats, rhs_identity_dim):
    eye = np.eye(rhs_identity_dim, dtype=complex)
    return np.linalg.solve(mats, np.broadcast_to(eye, mats.shape).copy())


class ResolventEvaluator:
    """K(z), Rt(z) and friends for one model."""

    def __init__(self, model: ModelSpec, se: SelfEnergyEvaluator = None,
                 tol: Tolerances = DEFAULT_TOL):
        self.model = model
        self.tol = tol
        self.se = se if se is not None else SelfEnergyEvaluator(model, tol=tol)
        self.n = self.se.n
        self.k0 = model.k0
        self.lam = model.coupling
        self.lam2 = model.coupling**2
        self.kzero = _herm(self.k0 - self.lam2 * self.se.s0)

    @classmethod
    def from_model(cls, model: ModelSpec, tol: Tolerances = DEFAULT_TOL):
        return cls(model, None, tol)

    @property
    def scale(self) -> float:
        """Natural magnitude of K(0) pieces, for kernel thresholds."""
        return max(
            np.linalg.norm(self.k0, 2),
            self.lam2 * np.linalg.norm(self.se.s0, 2),
            1.0e-30,
        )

    # -- off-axis -----------------------------------------------------------

    def kmat(self, z):
        z = np.asarray(z, dtype=complex)
        return self.k0 - self.lam2 * self.se.value(z)

    def resolvent(self, z):
        """Rt(z) = (K(z) - z)^(-1) for z off the closed half-line."""
        z_arr = np.asarray(z, dtype=complex)
        a = self.kmat(z_arr) - z_arr[..., None, None] * np.eye(self.n)
        if np.ndim(z) == 0:
            sv = np.linalg.svd(a, compute_uv=False)
            # reference max(sv[0], scale + |z|): sv[0] alone is vacuous for
            # a single level, where it IS the near-zero value being tested
            ref = max(sv[0], self.scale + abs(complex(z_arr)))
            if sv[-1] <= 1e-12 * ref:
                raise EigenvalueProximity(complex(z_arr), np.linalg.det(a))
            return np.linalg.inv(a)
        return _solve_batched(a, self.n)

    def second_sheet_kmat(self, z):
        z = np.asarray(z, dtype=complex)
        return self.k0 - self.lam2 * self.se.second_sheet(z)

    # -- boundary -----------------------------------------------------------

    def boundary_operator(self, w, side: int):
        """K+-(w) for w > 0 (side = +1 upper, -1 lower)."""
        d, g = self.se.boundary(w)
        return self.k0 - self.lam2 * d - 1j * np.pi * side * self.lam2 * g

    def boundary_resolvent(self, w, side: int, check: bool = True):
        w_arr = np.atleast_1d(np.asarray(w, dtype=float))
        k = self.boundary_operator(w_arr, side)
        a = k - w_arr[..., None, None] * np.eye(self.n)
        if check:
            sv = np.linalg.svd(a, compute_uv=False)
            bad = sv[..., -1] <= self.tol.singular * np.maximum(sv[..., 0], 1.0)
            if np.any(bad):
                wb = w_arr[bad][0]
                raise EmbeddedEigenvalue(
                    "K%+d(w) - w numerically singular at w=%.6e" % (side, wb)
                )
        out = _solve_batched(a, self.n)
        return out if np.ndim(w) else out[0]

    def density(self, w, check: bool = False, check_tol: float = 1e-9):
        """Im Rt+(w) (matrix) via the product form; with check=True the
        subtractive form (Rt+ - Rt-)/2i is compared against it."""
        w_arr = np.atleast_1d(np.asarray(w, dtype=float))
        d, g = self.se.boundary(w_arr)
        eye = np.eye(self.n)
        kp = self.k0 - self.lam2 * d - 1j * np.pi * self.lam2 * g
        a = kp - w_arr[..., None, None] * eye
        rp = _solve_batched(a, self.n)
        rm = np.conj(np.swapaxes(rp, -1, -2))
        rho = np.pi * self.lam2 * _herm(rp @ g @ rm)
        if check:
            km = self.k0 - self.lam2 * d + 1j * np.pi * self.lam2 * g
            rm2 = _solve_batched(km - w_arr[..., None, None] * eye, self.n)
            alt = (rp - rm2) / 2j
            dev = np.max(np.abs(alt - rho))
            ref = max(np.max(np.abs(rho)), 1.0)
            if dev > check_tol * ref:
                raise EigenvalueProximity(
                    float(w_arr[0]), dev,
                    "spectral-density cross-check failed: %.3e" % dev,
                )
        return rho if np.ndim(w) else rho[0]

    def density_floor(self, w):
        """Rounding-noise scale of density(w).

        The solve loses cond(K+ - w) eps relative accuracy, so below
        ~16 eps cond ||rho|| the evaluated density carries no information;
        quadrature must not try to resolve structure under this floor.
        (Near a critical coupling the floor reaches O(||rho||) itself at the
        kernel-saturation crossover, where K(w) - w is pure cancellation.)
        """
        w_arr = np.atleast_1d(np.asarray(w, dtype=float))
        d, g = self.se.boundary(w_arr)
        eye = np.eye(self.n)
        a = (self.k0 - self.lam2 * d - 1j * np.pi * self.lam2 * g
             - w_arr[..., None, None] * eye)
        rp = _solve_batched(a, self.n)
        rho = np.pi * self.lam2 * _herm(rp @ g @ np.conj(np.swapaxes(rp, -1, -2)))
        # the cancellation is in *forming* K+(w) - w, whose terms are
        # O(formation scale) even where the sum is near zero, so the error
        # reference is that scale over sigma_min -- not cond(A), which is
        # identically 1 for a single level
        sv = np.linalg.svd(a, compute_uv=False)
        form = (np.linalg.norm(self.k0, 2) + w_arr
                + self.lam2 * np.abs(d).reshape(w_arr.shape + (-1,)).sum(axis=-1)
                + np.pi * self.lam2 * np.abs(g).reshape(w_arr.shape + (-1,)).sum(axis=-1))
        amp = np.abs(rho).reshape(w_arr.shape + (-1,)).max(axis=-1)
        out = 4.0 * np.finfo(float).eps * (form / sv[..., -1]) * amp
        return out if np.ndim(w) else float(out[0])

    # -- spectrum scans -------------------------------------------------------

    def scan_positive_spectrum(self, grid=None):
        """Smallest singular value of K+(w) - w on a grid; returns
        (grid, sigma_min, flagged) where flagged collects embedded-eigenvalue
        candidates below the singular threshold."""
        if grid is None:
            hi = 10.0 * max(1.0, max(abs(x) for x in self.model.levels),
                            self.se.gamma.max_pole_magnitude())
            grid = np.geomspace(1e-3, hi, 240)
        grid = np.asarray(grid, dtype=float)
        k = self.boundary_operator(grid, +1)
        a = k - grid[..., None, None] * np.eye(self.n)
        sv = np.linalg.svd(a, compute_uv=False)
        smin = sv[..., -1]
        scale = np.maximum(sv[..., 0], 1.0)
        flagged = grid[smin <= self.tol.singular * scale]
        return grid, smin, flagged

    def negative_eigenvalues(self, xmax=None, npoints=400):
        """Zeros of det(K(x) - x) on [-xmax, -1e-8] by sign scan + bisection."""
        if xmax is None:
            xmax = (max(abs(x) for x in self.model.levels)
                    + 2.0 * self.lam2 * np.linalg.norm(self.se.s0, 2) + 1.0)

        def det_at(x):
            a = _herm(self.kmat(complex(x))) - x * np.eye(self.n)
            return float(np.real(np.linalg.det(a)))

        xs = -np.geomspace(1e-8, xmax, npoints)[::-1]
        vals = np.array([det_at(x) for x in xs])
        roots = []
        for i in range(len(xs) - 1):
            va, vb = vals[i], vals[i + 1]
            if va == 0.0:
                roots.append(xs[i])
                continue
            if va * vb < 0.0:
                lo, hi = xs[i], xs[i + 1]
                flo = va
                while hi - lo > 1e-12:
                    mid = 0.5 * (lo + hi)
                    fm = det_at(mid)
                    if fm == 0.0:
                        lo = hi = mid
                        break
                    if flo * fm < 0.0:
                        hi = mid
                    else:
                        lo, flo = mid, fm
                roots.append(0.5 * (lo + hi))
        out = []
        for x in roots:
            a = _herm(self.kmat(complex(x))) - x * np.eye(self.n)
            evals, evecs = np.linalg.eigh(a)
            k = int(np.argmin(np.abs(evals)))
            v = evecs[:, k]
            res = np.linalg.norm(a @ v)
            if res <= 1e-8 * max(1.0, self.scale):
                out.append((float(x), v))
        return out

    def resonance_poles(self, re_range, im_range, seeds=(12, 8),
                        det_tol=1e-10, max_iter=80):
        """Zeros of det(K_II(z) - z) inside a rectangle of the lower
        half-plane; Newton iteration from a seed grid, deduplicated."""
        re0, re1 = sorted(float(x) for x in re_range)
        im0, im1 = sorted(float(x) for x in im_range)
        if im1 > -1e-3:
            raise InvalidInput("rectangle must stay below the axis (Im <= -1e-3)")
        eye = np.eye(self.n)

        def f(z):
            return complex(np.linalg.det(self.second_sheet_kmat(z) - z * eye))

        res = []
        gre = np.linspace(re0, re1, seeds[0])
        gim = np.linspace(im0, im1, seeds[1])
        span = max(re1 - re0, im1 - im0, 1.0)
        for zr in gre:
            for zi in gim:
                z = complex(zr, zi)
                ok = False
                for _ in range(max_iter):
                    h = 1e-7 * (1.0 + abs(z))
                    try:
                        fz = f(z)
                        dfz = (f(z + h) - f(z - h)) / (2.0 * h)
                    except (InvalidInput, np.linalg.LinAlgError):
                        break
                    if not np.isfinite(fz) or not np.isfinite(dfz) or dfz == 0.0:
                        break
                    step = fz / dfz
                    z = z - step
                    if z.imag >= 0.0 or abs(z) > 10.0 * (abs(re1) + abs(im0) + span):
                        break
                    if abs(step) <= 1e-13 * (1.0 + abs(z)):
                        ok = True
                        break
                if not ok:
                    continue
                if not (re0 - 1e-9 <= z.real <= re1 + 1e-9 and im0 - 1e-9 <= z.imag <= im1 + 1e-9):
                    continue
                if abs(f(z)) > det_tol:
                    continue
                if all(abs(z - p) > 1e-8 for p in res):
                    res.append(z)
        return sorted(res, key=lambda p: (p.real, p.imag))


@dataclass
class SpectralDensity:
    """Sampled spectral density on a grid (for CSV emission and checks)."""

    grid: np.ndarray
    values: np.ndarray  # (nw, N, N), Hermitian PSD
    diagnostics: dict = field(default_factory=dict)

    @classmethod
    def sample(cls, ev: ResolventEvaluator, grid):
        grid = np.asarray(grid, dtype=float)
        return cls(grid=grid, values=ev.density(grid))


# -- free-function forms --------------------------------------------------------


def reduced_resolvent(ev: ResolventEvaluator, z):
    return ev.resolvent(z)


def boundary_resolvent(ev: ResolventEvaluator, w, side: int, check: bool = True):
    return ev.boundary_resolvent(w, side, check)


def spectral_density(ev: ResolventEvaluator, w, check: bool = False):
    return ev.density(w, check=check)


def scan_positive_spectrum(ev: ResolventEvaluator, grid=None):
    return ev.scan_positive_spectrum(grid)


def find_negative_eigenvalues(ev: ResolventEvaluator, xmax=None, npoints=400):
    return ev.negative_eigenvalues(xmax, npoints)


def find_resonance_poles(ev: ResolventEvaluator, re_range, im_range, **kw):
    return ev.resonance_poles(re_range, im_range, **kw)
