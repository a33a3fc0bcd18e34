"""Closed-form Cauchy transforms of rational functions on [0, inf) and the
self-energy matrix built from them.

For a proper rational eta with poles a_k off the half-line,

    I(zeta) = int_0^inf eta(w) / (w - zeta) dw,   zeta off [0, inf),

is evaluated exactly from the pole decomposition of eta.  Writing
u = zeta - a and L(x) = log_minus(x) = log|x| + i(arg x - pi) with
arg x in (0, 2pi), each pole term contributes

    J_j(a, zeta) = (L(a) - L(zeta)) / u^j
                   + sum_{s=1}^{j-1} (-1)^(s-1) / (s a^s u^(j-s)),

which is the (j-1)-th a-derivative of the elementary j=1 case divided by
(j-1)!.  The transform splits as I(zeta) = Rat(zeta) - L(zeta) eta(zeta)
where the rational part

    Rat(zeta) = sum_{k,j} c_kj [ L(a_k)/u^j + inner sum ]

carries no branch cut and extends to the half-line itself.  Near zeta = a
the J term has a removable singularity and is evaluated by its Taylor
series J_j(a, a+u) = sum_s u^s (-a)^(-(j+s)) / (j+s).

The self-energy of a model is S(z) = I-transform applied entrywise to
Gamma; on the cut S has boundary values D(w) +- i pi Gamma(w) with
D(w) = Rat(w) - log(w) Gamma(w), and the continuation of S through the cut
from above is S(z) + 2 pi i Gamma(z).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BranchBoundary,
    DegenerateCoupling,
    InvalidInput,
    NonIntegrable,
    PoleCollision,
)
from .model import GammaMatrix, ModelSpec, build_gamma, gamma_small_expansion
from .polyrat import (
    DEFAULT_TOL,
    PoleDecomposition,
    RationalFunction,
    Tolerances,
    halfline_distance,
    partial_fractions,
    validate_no_poles_on_halfline,
)

__all__ = [
    "log_minus",
    "CauchyClosedForm",
    "cauchy_transform",
    "halfline_integral",
    "moment_integral",
    "SelfEnergyEvaluator",
    "self_energy",
    "self_energy_zero",
    "boundary_values",
    "a_series",
    "second_sheet_self_energy",
]

_SERIES_TERMS = 12
_SERIES_FRACTION = 0.09  # switch radius as a fraction of dist(pole, half-line)


def log_minus(z):
    """log(-z) on the branch arg(-z) = arg(z) - pi, arg(z) in (0, 2pi).

    Real-valued on the negative axis, -i pi/2 at z = i, and approaching
    log(w) - i pi on the upper lip of the cut.  Points on [0, inf) raise
    BranchBoundary.
    """
    z = np.asarray(z, dtype=complex)
    on_cut = (z.imag == 0.0) & (z.real >= 0.0)
    if np.any(on_cut):
        raise BranchBoundary("log_minus undefined on the half-line [0, inf)")
    ang = np.angle(z)
    ang = np.where(ang <= 0.0, ang + 2.0 * np.pi, ang)
    out = np.log(np.abs(z)) + 1j * (ang - np.pi)
    return out if out.shape else complex(out)


def _inner_sum(a, u, j):
    """sum_{s=1}^{j-1} (-1)^(s-1) / (s a^s u^(j-s)) shared by J and Rat."""
    acc = np.zeros_like(u)
    for s in range(1, j):
        acc = acc + ((-1.0) ** (s - 1)) / (s * a**s * u ** (j - s))
    return acc


class CauchyClosedForm:
    """Exact transform machinery for one rational function."""

    def __init__(self, eta: RationalFunction, tol: Tolerances = DEFAULT_TOL):
        self.eta = eta
        self.tol = tol
        if eta.is_zero:
            self.decomposition = PoleDecomposition(terms=())
        else:
            if not eta.proper:
                raise InvalidInput("Cauchy transform requires a proper rational function")
            validate_no_poles_on_halfline(eta, tol)
            self.decomposition = partial_fractions(eta, tol)
        self._logs = {t.pole: complex(log_minus(t.pole)) for t in self.decomposition.terms}
        self._switch = {
            t.pole: _SERIES_FRACTION * halfline_distance(t.pole)
            for t in self.decomposition.terms
        }

    # -- pieces ------------------------------------------------------------

    def transform(self, zeta):
        """I(zeta) for zeta off [0, inf); scalar or array."""
        zeta_in = zeta
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        lz = log_minus(zeta)  # raises on the cut
        lz = np.atleast_1d(np.asarray(lz))
        out = np.zeros_like(zeta)
        for t in self.decomposition.terms:
            a = t.pole
            u = zeta - a
            au = np.abs(u)
            if np.any(au < 1e-13 * (1.0 + abs(a))):
                raise PoleCollision("evaluation point coincides with pole %s" % a)
            near = au < self._switch[a]
            far = ~near
            la = self._logs[a]
            for j, c in enumerate(t.coeffs, start=1):
                if c == 0.0:
                    continue
                if np.any(far):
                    uf = u[far]
                    out[far] += c * ((la - lz[far]) / uf**j + _inner_sum(a, uf, j))
                if np.any(near):
                    un = u[near]
                    acc = np.zeros_like(un)
                    for s in range(_SERIES_TERMS):
                        acc = acc + un**s * (-a) ** (-(j + s)) / (j + s)
                    out[near] += c * acc
        return out if np.ndim(zeta_in) else complex(out[0])

    def rational_part(self, x):
        """Rat(x) = I(x) + log_minus(x) eta(x); pole-free off the a_k, in
        particular finite on the half-line."""
        x_in = x
        x = np.atleast_1d(np.asarray(x, dtype=complex))
        out = np.zeros_like(x)
        for t in self.decomposition.terms:
            a = t.pole
            u = x - a
            la = self._logs[a]
            for j, c in enumerate(t.coeffs, start=1):
                if c == 0.0:
                    continue
                out += c * (la / u**j + _inner_sum(a, u, j))
        return out if np.ndim(x_in) else complex(out[0])

    def halfline_integral(self) -> complex:
        """int_0^inf eta(w) dw via residues of eta(z) log(-z)."""
        if self.eta.is_zero:
            return 0.0 + 0.0j
        if not self.eta.integrable_tail:
            raise NonIntegrable("integrand must be O(w^-2) at infinity")
        rs = self.decomposition.residue_sum
        scale = max(max(abs(c) for t in self.decomposition.terms for c in t.coeffs), 1e-300)
        if abs(rs) > 1e-8 * scale:
            raise NonIntegrable("residue sum %.3e != 0: tail is not O(w^-2)" % abs(rs))
        total = 0.0 + 0.0j
        for t in self.decomposition.terms:
            a = t.pole
            total += t.coeffs[0] * self._logs[a]
            for j in range(2, t.order + 1):
                c = t.coeffs[j - 1]
                total += c * ((-1.0) ** j) * a ** (1 - j) / (j - 1)
        return -total


def cauchy_transform(eta, zeta, tol: Tolerances = DEFAULT_TOL):
    """Convenience wrapper: accepts RationalFunction or CauchyClosedForm."""
    cf = eta if isinstance(eta, CauchyClosedForm) else CauchyClosedForm(eta, tol)
    return cf.transform(zeta)


def halfline_integral(r, tol: Tolerances = DEFAULT_TOL) -> complex:
    cf = r if isinstance(r, CauchyClosedForm) else CauchyClosedForm(r, tol)
    return cf.halfline_integral()


def moment_integral(r: RationalFunction, p: int, tol: Tolerances = DEFAULT_TOL) -> complex:
    """int_0^inf r(w) / w^p dw for p in {1, 2}; requires the numerator of r
    to vanish at 0 to order >= p."""
    if p not in (1, 2):
        raise InvalidInput("moment order p must be 1 or 2")
    if r.is_zero:
        return 0.0 + 0.0j
    try:
        num = r.num.shifted_down(p)
    except InvalidInput as exc:
        raise NonIntegrable(
            "moment p=%d diverges: numerator vanishes to lower order at 0" % p
        ) from exc
    return halfline_integral(RationalFunction(num, r.den), tol)


@dataclass
class ASeries:
    """Taylor data of A(z) = Rat(z) - Rat(0) at the origin.

    coefficients[n-1] is the matrix A_n; atilde_order and atilde_lead refer
    to  Atilde(z) = z / lambda^2 + A(z).
    """

    radius: float
    coefficients: list
    atilde_order: int
    atilde_lead: np.ndarray


class SelfEnergyEvaluator:
    """Entrywise closed-form self-energy for one model.

    S(z) has the splitting S(z) = S(0) + A(z) - log_minus(z) Gamma(z) with
    A(z) = Rat(z) - Rat(0); boundary values on the cut are D +- i pi Gamma.
    """

    def __init__(self, model: ModelSpec, gamma: GammaMatrix = None,
                 tol: Tolerances = DEFAULT_TOL):
        self.model = model
        self.tol = tol
        self.gamma = gamma if gamma is not None else build_gamma(model, tol)
        n = self.gamma.n
        self.forms = [
            [CauchyClosedForm(self.gamma.entries[m][nn], tol) for nn in range(n)]
            for m in range(n)
        ]
        self.n = n
        self.s0 = self._hermitize(self.rational_matrix(0.0))

    @classmethod
    def build(cls, model: ModelSpec, tol: Tolerances = DEFAULT_TOL):
        return cls(model, None, tol)

    @staticmethod
    def _hermitize(x):
        return 0.5 * (x + np.conj(np.swapaxes(x, -1, -2)))

    def _entrywise(self, fn, z):
        z_in = z
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.zeros(z.shape + (self.n, self.n), dtype=complex)
        for m in range(self.n):
            for nn in range(self.n):
                out[..., m, nn] = fn(self.forms[m][nn], z)
        return out if np.ndim(z_in) else out[0]

    # -- evaluations ---------------------------------------------------------

    def value(self, z):
        """S(z) for z off [0, inf)."""
        return self._entrywise(lambda cf, zz: cf.transform(zz), z)

    def rational_matrix(self, x):
        return self._entrywise(lambda cf, zz: cf.rational_part(zz), x)

    def gamma_at(self, z):
        return self.gamma.value(z)

    def a_matrix(self, z):
        """A(z) = Rat(z) - Rat(0); analytic in the disk up to the first pole."""
        return self.rational_matrix(z) - self.s0

    def boundary(self, w):
        """(D(w), Gamma(w)) for w on the open half-line; S+- = D +- i pi Gamma."""
        w_arr = np.atleast_1d(np.asarray(w, dtype=float))
        if np.any(w_arr <= 0.0):
            raise InvalidInput("boundary values require w > 0")
        d = self.rational_matrix(w_arr.astype(complex))
        g = self.gamma.value(w_arr.astype(complex))
        d = d - np.log(w_arr)[..., None, None] * g
        d = self._hermitize(d)
        g = self._hermitize(g)
        if np.ndim(w) == 0:
            return d[0], g[0]
        return d, g

    def boundary_value(self, w, side: int):
        """S(w + i0) for side=+1, S(w - i0) for side=-1."""
        d, g = self.boundary(w)
        return d + 1j * np.pi * side * g

    def second_sheet(self, z):
        """Continuation of S through the cut from above: S(z) + 2 pi i Gamma(z).
        On the cut itself this equals the upper boundary value."""
        z_arr = np.asarray(z, dtype=complex)
        if np.ndim(z_arr) == 0:
            if z_arr.imag == 0.0 and z_arr.real > 0.0:
                return self.boundary_value(float(z_arr.real), +1)
            return self.value(z) + 2j * np.pi * self.gamma_at(z)
        out = np.empty(z_arr.shape + (self.n, self.n), dtype=complex)
        on_cut = (z_arr.imag == 0.0) & (z_arr.real > 0.0)
        if np.any(on_cut):
            out[on_cut] = self.boundary_value(z_arr[on_cut].real, +1)
        if np.any(~on_cut):
            rest = z_arr[~on_cut]
            out[~on_cut] = self.value(rest) + 2j * np.pi * self.gamma_at(rest)
        return out

    # -- series data ----------------------------------------------------------

    def zero_value(self) -> np.ndarray:
        """S(0) by the moment route int Gamma(w)/w dw (equals Rat(0))."""
        out = np.zeros((self.n, self.n), dtype=complex)
        for m in range(self.n):
            for nn in range(self.n):
                out[m, nn] = moment_integral(self.gamma.entries[m][nn], 1, self.tol)
        return self._hermitize(out)

    def moment_matrix(self, p: int) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=complex)
        for m in range(self.n):
            for nn in range(self.n):
                out[m, nn] = moment_integral(self.gamma.entries[m][nn], p, self.tol)
        return self._hermitize(out)

    def a_series(self, depth: int = 6) -> ASeries:
        """Taylor matrices A_1..A_depth by a 64-point circle rule of radius
        half the distance to the nearest Gamma pole, plus the leading order
        of Atilde(z) = z/lambda^2 + A(z)."""
        if depth < 1:
            raise InvalidInput("depth must be >= 1")
        dist = self.gamma.min_pole_distance()
        if not np.isfinite(dist):
            dist = 2.0
        r0 = 0.5 * dist
        nodes = 64
        zs = r0 * np.exp(2j * np.pi * np.arange(nodes) / nodes)
        vals = self.rational_matrix(zs)  # (nodes, N, N)
        coef = np.fft.fft(vals, axis=0) / nodes
        mats = []
        for k in range(1, depth + 1):
            mk = self._hermitize(coef[k] / r0**k)
            mats.append(mk)
        lam = self.model.coupling
        if lam == 0.0:
            raise DegenerateCoupling("Atilde requires a nonzero coupling")
        atilde = [mats[0] + np.eye(self.n) / lam**2] + mats[1:]
        scale = max(1.0 / lam**2, max(np.linalg.norm(m) for m in mats), 1e-300)
        order = None
        for k, m in enumerate(atilde, start=1):
            if np.linalg.norm(m) > self.tol.series * scale:
                order = k
                break
        if order is None:
            raise InvalidInput("Atilde vanishes to every computed order")
        return ASeries(radius=r0, coefficients=mats,
                       atilde_order=order, atilde_lead=atilde[order - 1])

    def gamma_expansion(self, depth: int = 2):
        return gamma_small_expansion(self.gamma, depth, self.tol)


# -- free-function forms -------------------------------------------------------


def self_energy(se: SelfEnergyEvaluator, z):
    return se.value(z)


def self_energy_zero(se: SelfEnergyEvaluator) -> np.ndarray:
    return se.zero_value()


def boundary_values(se: SelfEnergyEvaluator, w):
    return se.boundary(w)


def a_series(se: SelfEnergyEvaluator, depth: int = 6) -> ASeries:
    return se.a_series(depth)


def second_sheet_self_energy(se: SelfEnergyEvaluator, z):
    return se.second_sheet(z)
