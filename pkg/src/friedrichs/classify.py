"""Zero-energy structure: kernel of K(0), resonance/eigenvector split,
critical couplings, and the small-z expansions of the reduced resolvent.

The kernel M of K(0) = K0 - lambda^2 S(0) splits under the quadratic form
of Gamma_1 (the first Taylor matrix of Gamma at 0) into

    M_2 = { psi in M : <psi|Gamma_1|psi> = 0 }   (bound states at threshold:
          the tail -lambda sum psi_n v_n / w is square integrable), and
    M_1 = M intersect M_2-perp                    (zero-energy resonances).

Kinds: regular (M = 0), first (only M_1), second (only M_2), third (both).
Q_1, Q_2 are orthogonal projectors onto M_1, M_2 and Q_0 = 1 - Q_1 - Q_2.

Near z = 0 (z off the half-line, log z taken with arg in (0, 2pi)):

  first kind:
    Rt(z) ~ (lambda^2 z log z)^(-1) B+ + (lambda^4 z log^2 z)^(-1)
            B+ (Q_1 + lambda^2 Q_1 A_1 Q_1 + i pi lambda^2 B) B+,
    with B = Q_1 Gamma_1 Q_1 inverted on M_1;

  second kind:
    Q_2 Rt(z) Q_2 ~ -(1/z) [Q_2 (1 + lambda^2 A_1) Q_2]^(-1) on M_2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BorderlineClassification,
    ClassificationMismatch,
    InvalidInput,
    NonNormalizableMode,
)
from .polyrat import DEFAULT_TOL, RationalFunction, Tolerances
from .model import combination_gamma
from .resolvent import ResolventEvaluator
from .selfenergy import log_minus, moment_integral

__all__ = [
    "Kind",
    "ZeroEnergyClassification",
    "ZeroMode",
    "CriticalCoupling",
    "ThirdKindBlocks",
    "classify_zero_energy",
    "critical_couplings",
    "build_zero_mode",
    "small_z_expansion_first_kind",
    "small_z_expansion_second_kind",
    "third_kind_blocks",
]


class Kind(enum.Enum):
    REGULAR = "regular"
    FIRST = "first"
    SECOND = "second"
    THIRD = "third"


def _herm(x):
    return 0.5 * (x + np.conj(x.T))


@dataclass
class ZeroEnergyClassification:
    kind: Kind
    kzero: np.ndarray
    eigenvalues: np.ndarray
    threshold: float
    kernel_basis: np.ndarray  # (N, dim M), orthonormal columns
    m1_basis: np.ndarray
    m2_basis: np.ndarray
    gamma1: np.ndarray
    q0: np.ndarray
    q1: np.ndarray
    q2: np.ndarray

    @property
    def dim_kernel(self) -> int:
        return self.kernel_basis.shape[1]

    @property
    def dim_m1(self) -> int:
        return self.m1_basis.shape[1]

    @property
    def dim_m2(self) -> int:
        return self.m2_basis.shape[1]


def classify_zero_energy(ev: ResolventEvaluator,
                         tol: Tolerances = DEFAULT_TOL) -> ZeroEnergyClassification:
    """Diagonalize K(0), split its kernel under the Gamma_1 form, and name
    the kind.  Eigenvalues within a decade of the kernel threshold (relative
    to the natural scale of K(0)'s pieces) raise BorderlineClassification."""
    n = ev.n
    kz = _herm(ev.kzero)
    vals, vecs = np.linalg.eigh(kz)
    tau = tol.kernel * ev.scale
    border = [v for v in vals if 0.1 * tau < abs(v) < 10.0 * tau]
    if border:
        raise BorderlineClassification(border, tau)
    kmask = np.abs(vals) <= tau
    kernel = vecs[:, kmask]

    gamma1 = _herm(ev.se.gamma.series(1)[1])
    g1norm = np.linalg.norm(gamma1, 2)

    if kernel.shape[1] == 0:
        empty = np.zeros((n, 0), dtype=complex)
        eye = np.eye(n, dtype=complex)
        return ZeroEnergyClassification(
            kind=Kind.REGULAR, kzero=kz, eigenvalues=vals, threshold=tau,
            kernel_basis=empty, m1_basis=empty, m2_basis=empty, gamma1=gamma1,
            q0=eye, q1=np.zeros((n, n), dtype=complex), q2=np.zeros((n, n), dtype=complex),
        )

    if g1norm == 0.0:
        m2 = kernel
        m1 = np.zeros((n, 0), dtype=complex)
    else:
        b = _herm(kernel.conj().T @ gamma1 @ kernel)
        bvals, bvecs = np.linalg.eigh(b)
        tau_b = tol.kernel * g1norm
        border = [v for v in bvals if 0.1 * tau_b < abs(v) < 10.0 * tau_b]
        if border:
            raise BorderlineClassification(border, tau_b)
        small = np.abs(bvals) <= tau_b
        m2 = kernel @ bvecs[:, small]
        m1 = kernel @ bvecs[:, ~small]

    def proj(basis):
        if basis.shape[1] == 0:
            return np.zeros((n, n), dtype=complex)
        return basis @ basis.conj().T

    q1, q2 = proj(m1), proj(m2)
    q0 = np.eye(n, dtype=complex) - q1 - q2
    if m1.shape[1] and m2.shape[1]:
        kind = Kind.THIRD
    elif m1.shape[1]:
        kind = Kind.FIRST
    else:
        kind = Kind.SECOND
    return ZeroEnergyClassification(
        kind=kind, kzero=kz, eigenvalues=vals, threshold=tau,
        kernel_basis=kernel, m1_basis=m1, m2_basis=m2, gamma1=gamma1,
        q0=q0, q1=q1, q2=q2,
    )


@dataclass
class CriticalCoupling:
    level: int
    lam2: float
    lam: float
    kappa: float
    bracket: tuple


def critical_couplings(ev: ResolventEvaluator, level: int,
                       interval=None, margin: float = 0.1,
                       subintervals: int = 200):
    """Couplings lambda* at which the level-th eigenvalue of K(0) crosses 0.

    The n-th ascending eigenvalue kappa_n(lambda^2) of K0 - lambda^2 S(0) is
    scanned over lambda^2 in the bracket [w_n/sigma_max, w_n/sigma_min]
    (sigma = extreme eigenvalues of S(0)) widened by `margin`, with a sign
    scan over `subintervals` pieces and bisection to |kappa| <= 1e-12.
    """
    n = ev.n
    if not 1 <= level <= n:
        raise InvalidInput("level index out of range")
    wn = float(ev.model.levels[level - 1])
    svals = np.linalg.eigh(_herm(ev.se.s0))[0]
    smin, smax = float(svals[0]), float(svals[-1])
    if interval is None:
        if wn <= 0.0:
            raise InvalidInput("level energy must be positive for a default bracket")
        if smin <= 0.0:
            raise InvalidInput("S(0) not positive definite; pass an explicit interval")
        lo = (wn / smax) * (1.0 - margin)
        hi = (wn / smin) * (1.0 + margin)
    else:
        lo, hi = (float(interval[0]), float(interval[1]))
        if not 0.0 <= lo < hi:
            raise InvalidInput("invalid search interval")
    k0 = ev.k0
    s0 = _herm(ev.se.s0)

    def kappa(l2):
        return float(np.linalg.eigvalsh(_herm(k0 - l2 * s0))[level - 1])

    grid = np.linspace(lo, hi, subintervals + 1)
    vals = np.array([kappa(x) for x in grid])
    out = []
    for i in range(subintervals):
        va, vb = vals[i], vals[i + 1]
        if va == 0.0:
            root, kr = grid[i], va
        elif va * vb < 0.0:
            a, b, fa = grid[i], grid[i + 1], va
            root, kr = None, None
            for _ in range(200):
                mid = 0.5 * (a + b)
                fm = kappa(mid)
                if abs(fm) <= 1e-12:
                    root, kr = mid, fm
                    break
                if fa * fm < 0.0:
                    b = mid
                else:
                    a, fa = mid, fm
            if root is None:
                root, kr = 0.5 * (a + b), kappa(0.5 * (a + b))
        else:
            continue
        if not out or abs(root - out[-1].lam2) > 1e-10 * max(1.0, abs(root)):
            out.append(CriticalCoupling(level=level, lam2=float(root),
                                        lam=float(np.sqrt(root)), kappa=float(kr),
                                        bracket=(lo, hi)))
    return out


@dataclass
class ZeroMode:
    """A normalized threshold eigenvector: level part psi plus continuum
    tail f(w) = -lambda sum_n psi_n v_n(w) / w."""

    psi: np.ndarray
    tail_norm_sq: float
    norm_sq: float
    gamma_form: RationalFunction  # <psi|Gamma(w)|psi>
    _model: object

    def tail(self, w):
        v = self._model.form_values(w)
        lam = self._model.coupling
        w = np.asarray(w, dtype=complex)
        return -lam * (v @ self.psi) / w


def build_zero_mode(ev: ResolventEvaluator, psi,
                    cls: ZeroEnergyClassification = None,
                    tol: Tolerances = DEFAULT_TOL) -> ZeroMode:
    """Assemble the zero-energy eigenvector for psi in M_2 and compute its
    tail norm  lambda^2 int <psi|Gamma(w)|psi> / w^2 dw  in closed form."""
    psi = np.asarray(psi, dtype=complex).ravel()
    nrm = np.linalg.norm(psi)
    if nrm == 0.0:
        raise InvalidInput("psi must be nonzero")
    if cls is None:
        cls = classify_zero_energy(ev, tol)
    if cls.kind not in (Kind.SECOND, Kind.THIRD):
        raise ClassificationMismatch("zero modes exist only for second/third kind")
    resid = np.linalg.norm(cls.kzero @ psi) / (nrm * max(ev.scale, 1e-300))
    if resid > 1e-8:
        raise InvalidInput("psi is not in the kernel of K(0): residual %.3e" % resid)
    g1 = np.real(np.conj(psi) @ cls.gamma1 @ psi)
    g1scale = max(np.linalg.norm(cls.gamma1, 2), 1e-300)
    if g1 > 1e-8 * g1scale * nrm**2:
        raise NonNormalizableMode(
            "<psi|Gamma_1|psi> = %.3e > 0: tail is not square integrable" % g1
        )
    gform = combination_gamma(ev.model, psi, tol)
    lam2 = ev.lam2
    tail_sq = float(np.real(moment_integral(gform, 2, tol))) * lam2 if not gform.is_zero else 0.0
    return ZeroMode(
        psi=psi,
        tail_norm_sq=tail_sq,
        norm_sq=float(nrm**2 + tail_sq),
        gamma_form=gform,
        _model=ev.model,
    )


def _restricted_inverse(mat, basis):
    """(V^+ mat V)^(-1) mapped back to the full space: V B^-1 V^+."""
    if basis.shape[1] == 0:
        raise ClassificationMismatch("restriction subspace is trivial")
    b = basis.conj().T @ mat @ basis
    return basis @ np.linalg.inv(b) @ basis.conj().T


def _log_upper(z):
    """log z with arg in (0, 2pi): the branch the small-z expansions use."""
    return log_minus(z) + 1j * np.pi


def small_z_expansion_first_kind(ev: ResolventEvaluator,
                                 cls: ZeroEnergyClassification, z,
                                 a1: np.ndarray = None):
    """Two-term approximant of Rt(z) near 0 for first-kind models."""
    if cls.kind is not Kind.FIRST:
        raise ClassificationMismatch("first-kind expansion needs a first-kind model")
    lam2 = ev.lam2
    if lam2 == 0.0:
        raise InvalidInput("expansion undefined at zero coupling")
    if a1 is None:
        a1 = ev.se.a_series(depth=1).coefficients[0]
    q1, g1 = cls.q1, cls.gamma1
    b = q1 @ g1 @ q1
    binv = _restricted_inverse(b, cls.m1_basis)
    mid = q1 + lam2 * (q1 @ a1 @ q1) + 1j * np.pi * lam2 * b
    z = np.asarray(z, dtype=complex)
    lz = np.asarray(_log_upper(z))
    t1 = binv[None, ...] / (lam2 * z * lz)[..., None, None] if z.ndim else binv / (lam2 * z * lz)
    t2c = binv @ mid @ binv
    t2 = (t2c[None, ...] / (lam2**2 * z * lz**2)[..., None, None]
          if z.ndim else t2c / (lam2**2 * z * lz**2))
    return t1 + t2


def small_z_expansion_second_kind(ev: ResolventEvaluator,
                                  cls: ZeroEnergyClassification, z,
                                  a1: np.ndarray = None):
    """Leading approximant of Q2 Rt(z) Q2 near 0 for second/third kind."""
    if cls.kind not in (Kind.SECOND, Kind.THIRD):
        raise ClassificationMismatch("second-kind expansion needs M_2 nontrivial")
    lam2 = ev.lam2
    if a1 is None:
        a1 = ev.se.a_series(depth=1).coefficients[0]
    core = np.eye(ev.n) + lam2 * a1
    cinv = _restricted_inverse(core, cls.m2_basis)
    z = np.asarray(z, dtype=complex)
    if z.ndim:
        return -cinv[None, ...] / z[..., None, None]
    return -cinv / z


@dataclass
class ThirdKindBlocks:
    """E_kl = Q_k (K+-(w) - w) Q_l blocks and their partitioned inverse."""

    omega: float
    side: int
    blocks: dict  # (k, l) -> (N, N) matrix
    a_inv: np.ndarray  # inverse on M0 + M1, mapped back to C^N
    d_inv: np.ndarray  # inverse of the Schur complement on M2
    reconstruction_residual: float
    resolvent_residual: float


def third_kind_blocks(ev: ResolventEvaluator, cls: ZeroEnergyClassification,
                      w: float, side: int = +1) -> ThirdKindBlocks:
    """Blocks of the boundary operator in the M0/M1/M2 decomposition and the
    2x2 partitioned inverse diagnostics at one w > 0."""
    if cls.kind is not Kind.THIRD:
        raise ClassificationMismatch("block decomposition needs a third-kind model")
    n = ev.n
    k = ev.boundary_operator(float(w), side) - float(w) * np.eye(n)
    qs = [cls.q0, cls.q1, cls.q2]
    blocks = {(i, j): qs[i] @ k @ qs[j] for i in range(3) for j in range(3)}

    # orthonormal basis adapted to M0 + M1 vs M2
    b0 = np.linalg.svd(cls.q0)[0][:, : n - cls.dim_m1 - cls.dim_m2]
    u = np.concatenate([b0, cls.m1_basis, cls.m2_basis], axis=1)
    t = u.conj().T @ k @ u
    na = n - cls.dim_m2
    a, bb = t[:na, :na], t[:na, na:]
    c, d = t[na:, :na], t[na:, na:]
    ainv = np.linalg.inv(a)
    schur = d - c @ ainv @ bb
    sinv = np.linalg.inv(schur)
    top = np.concatenate([ainv + ainv @ bb @ sinv @ c @ ainv, -ainv @ bb @ sinv], axis=1)
    bot = np.concatenate([-sinv @ c @ ainv, sinv], axis=1)
    part = np.concatenate([top, bot], axis=0)
    direct = np.linalg.inv(t)
    rec = np.linalg.norm(part - direct) / max(np.linalg.norm(direct), 1e-300)
    rt = u @ part @ u.conj().T
    rt_direct = ev.boundary_resolvent(float(w), side, check=False)
    res = np.linalg.norm(rt - rt_direct) / max(np.linalg.norm(rt_direct), 1e-300)
    return ThirdKindBlocks(
        omega=float(w), side=side, blocks=blocks,
        a_inv=u[:, :na] @ ainv @ u[:, :na].conj().T,
        d_inv=u[:, na:] @ sinv @ u[:, na:].conj().T,
        reconstruction_residual=float(rec),
        resolvent_residual=float(res),
    )
