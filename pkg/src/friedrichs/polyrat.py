"""Polynomials and rational functions with the exact operations the
closed-form Cauchy machinery needs.

Everything is complex-coefficient, dense, ascending-degree.  Degrees stay
small (products of a few form factors), so the algorithms favour robustness
and transparency over asymptotics: companion-matrix roots with one Newton
polish, cluster merging for multiple roots, and Taylor-shift / power-series
division for partial fractions.

Conventions
-----------
* Coefficients are trimmed relative to the largest one (``Tolerances.trim``).
* Rational functions are normalized to a monic denominator.
* A pole decomposition of r = num/den with deg num < deg den is the exact
  representation  r(z) = sum_k sum_{j=1..m_k} c_{k,j} / (z - a_k)^j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import InvalidInput, SingularOrigin

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "Polynomial",
    "RationalFunction",
    "PoleTerm",
    "PoleDecomposition",
    "poly_roots",
    "partial_fractions",
    "rat_conjugate",
    "rat_series_at_zero",
    "rat_eval",
    "rat_derivative",
    "validate_no_poles_on_halfline",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used throughout the package.

    trim       relative threshold for dropping trailing polynomial coefficients
    root       acceptable residual |p(r)| / scale for a polished root
    cluster    absolute distance below which roots are merged into one
    partial_fraction  relative re-summation error allowed for a decomposition
    axis       exclusion distance of denominator roots from [0, inf)
    series     relative threshold for treating a series coefficient as zero
    kernel     relative eigenvalue threshold for kernels of Hermitian matrices
    singular   smallest acceptable singular value of a boundary operator
    """

    trim: float = 1e-12
    root: float = 1e-9
    cluster: float = 1e-7
    partial_fraction: float = 1e-8
    axis: float = 1e-6
    series: float = 1e-12
    kernel: float = 1e-9
    singular: float = 1e-10


DEFAULT_TOL = Tolerances()


def _trim_coef(coef, rel):
    coef = np.atleast_1d(np.asarray(coef, dtype=complex)).ravel()
    if coef.size == 0:
        return np.zeros(1, dtype=complex)
    scale = np.max(np.abs(coef))
    if scale == 0.0:
        return np.zeros(1, dtype=complex)
    keep = coef.size
    while keep > 1 and abs(coef[keep - 1]) <= rel * scale:
        keep -= 1
    return coef[:keep].copy()


class Polynomial:
    """Dense polynomial with ascending complex coefficients."""

    __slots__ = ("coef",)

    def __init__(self, coef, tol: Tolerances = DEFAULT_TOL):
        self.coef = _trim_coef(coef, tol.trim)

    # -- basic structure ---------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coef) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coef) == 1 and self.coef[0] == 0.0

    @property
    def lead(self) -> complex:
        return complex(self.coef[-1])

    @classmethod
    def from_roots(cls, roots, lead=1.0):
        c = np.polynomial.polynomial.polyfromroots(np.asarray(roots, dtype=complex))
        return cls(np.asarray(c, dtype=complex) * lead)

    @classmethod
    def one(cls):
        return cls([1.0])

    # -- evaluation and calculus -------------------------------------------

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), self.coef)

    def derivative(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial([0.0])
        return Polynomial(np.polynomial.polynomial.polyder(self.coef))

    def taylor_at(self, a) -> np.ndarray:
        """Coefficients of p(a + u) in powers of u (repeated Horner shift)."""
        a = complex(a)
        t = self.coef.astype(complex).copy()
        m = len(t)
        for i in range(m):
            for j in range(m - 2, i - 1, -1):
                t[j] = t[j] + a * t[j + 1]
        return t

    # -- arithmetic ---------------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(np.convolve(self.coef, other.coef))
        return Polynomial(self.coef * complex(other))

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial([complex(other)])
        n = max(len(self.coef), len(other.coef))
        c = np.zeros(n, dtype=complex)
        c[: len(self.coef)] += self.coef
        c[: len(other.coef)] += other.coef
        return Polynomial(c)

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial([complex(other)])
        return self + (other * (-1.0))

    def __neg__(self):
        return self * (-1.0)

    def shifted_up(self, p: int) -> "Polynomial":
        """Multiply by z**p."""
        if p == 0:
            return Polynomial(self.coef)
        return Polynomial(np.concatenate([np.zeros(p, dtype=complex), self.coef]))

    def shifted_down(self, p: int, tol: Tolerances = DEFAULT_TOL) -> "Polynomial":
        """Divide by z**p; requires the first p coefficients to vanish."""
        if p == 0:
            return Polynomial(self.coef)
        scale = np.max(np.abs(self.coef))
        if len(self.coef) <= p:
            if scale == 0.0:
                return Polynomial([0.0])
            raise InvalidInput("polynomial does not vanish to order %d at 0" % p)
        head = np.abs(self.coef[:p])
        if scale > 0 and np.any(head > 1e-9 * scale):
            raise InvalidInput("polynomial does not vanish to order %d at 0" % p)
        return Polynomial(self.coef[p:])

    def conjugate(self) -> "Polynomial":
        return Polynomial(np.conj(self.coef))

    def monic(self) -> "Polynomial":
        if self.is_zero:
            raise InvalidInput("zero polynomial has no monic normalization")
        return Polynomial(self.coef / self.lead)

    def __repr__(self):
        return "Polynomial(%s)" % np.array2string(self.coef, precision=6)


def poly_roots(p: Polynomial, tol: Tolerances = DEFAULT_TOL):
    """Roots with multiplicities: companion eigenvalues, one Newton polish,
    then single-link clustering of near-coincident roots.

    Returns a list of (root, multiplicity) sorted by (Re, Im).
    """
    if p.is_zero:
        raise InvalidInput("roots of the zero polynomial are undefined")
    if p.degree == 0:
        return []
    raw = np.polynomial.polynomial.polyroots(p.coef)
    dp = p.derivative()
    polished = []
    for r in raw:
        d = dp(r)
        if d != 0.0:
            step = p(r) / d
            if np.isfinite(step) and abs(step) < 0.5 * (1.0 + abs(r)):
                r = r - step
        polished.append(complex(r))

    # single-link clustering.  A multiplicity-m root scatters the companion
    # eigenvalues over a disc of radius ~eps^(1/m), which for m >= 3 dwarfs
    # any fixed tolerance, so the merge radius must know the multiplicity
    # before the cluster exists.  The Newton ratio p p'' / p'^2 -> (m-1)/m
    # near an m-fold root and ~eps/sep^2 near a simple one, so it separates
    # the two cases cleanly for sep >> sqrt(eps).
    eps = np.finfo(float).eps
    ddp = dp.derivative()
    coef_abs = np.abs(p.coef)
    radius = []
    for r in polished:
        # p(r) at the scattered root is pure rounding (that is what makes it
        # a numerical root), so the ratio must be probed at a point displaced
        # beyond the widest scatter eps^(1/8); there p ~ c dz^m is clean and
        # p p''/p'^2 = (m-1)/m + O(probe/pole gap).
        q_pt = r + eps ** 0.125 * (1.0 + abs(r)) * np.exp(0.3j)
        pv, dv = p(q_pt), dp(q_pt)
        if dv == 0.0:
            mhat = 8 if pv == 0.0 else 1
        else:
            mhat = int(round(1.0 / max(abs(1.0 - pv * ddp(q_pt) / dv**2), 1.0 / 8.0)))
            mhat = min(max(mhat, 1), 8)
        # backward-error scatter: evaluation noise eps*sum|c_k||r|^k against
        # the local leading term |p^(m)(r)|/m!.  Misjudged mhat self-corrects:
        # at a true m-fold root an underestimated mhat leaves p^(mhat)(r)
        # itself of size scatter^(m-mhat), and the ratio lands back on the
        # true scatter scale either way.
        q = p
        for _ in range(mhat):
            q = q.derivative()
        lead = abs(q(r)) / math.factorial(mhat)
        noise = eps * npoly.polyval(abs(r), coef_abs)
        if lead > 0.0:
            delta = (noise / lead) ** (1.0 / mhat)
        else:
            delta = eps ** (1.0 / min(mhat + 1, 8)) * (1.0 + abs(r))
        # never merge past half the probe displacement: distinct roots
        # separated by more than that are individually resolved, while the
        # eigenvalues of a genuine m-fold cluster chain together through
        # single-link at ~scatter/m spacing well below it
        rad = max(tol.cluster, 6.0 * delta)
        radius.append(min(rad, 0.5 * eps ** 0.125 * (1.0 + abs(r))))
    order = sorted(range(len(polished)), key=lambda i: (polished[i].real, polished[i].imag))
    groups = []
    for i in order:
        placed = False
        for g in groups:
            if any(abs(polished[i] - polished[j]) < max(radius[i], radius[j]) for j in g):
                g.append(i)
                placed = True
                break
        if not placed:
            groups.append([i])
    out = []
    for g in groups:
        center = sum(polished[j] for j in g) / len(g)
        m = len(g)
        if m > 1:
            # plain Newton is only linear at a multiple root and leaves an
            # O(sqrt(eps)) cluster; the (m-1)-th derivative has a simple
            # root there, so polish that instead
            q = p
            for _ in range(m - 1):
                q = q.derivative()
            dq = q.derivative()
            for _ in range(8):
                d = dq(center)
                if d == 0.0:
                    break
                step = q(center) / d
                if not np.isfinite(step) or abs(step) >= 0.5 * (1.0 + abs(center)):
                    break
                center = center - step
                if abs(step) <= 1e-16 * (1.0 + abs(center)):
                    break
        out.append((center, m))
    out.sort(key=lambda rm: (rm[0].real, rm[0].imag))
    return out


def _series_divide(num, den, order):
    """First (order+1) Taylor coefficients of num/den given den[0] != 0."""
    num = np.asarray(num, dtype=complex)
    den = np.asarray(den, dtype=complex)
    if den[0] == 0.0:
        raise SingularOrigin("series division by a series vanishing at 0")
    out = np.zeros(order + 1, dtype=complex)
    for k in range(order + 1):
        s = num[k] if k < len(num) else 0.0
        top = min(k, len(den) - 1)
        for j in range(1, top + 1):
            s -= den[j] * out[k - j]
        out[k] = s / den[0]
    return out


class RationalFunction:
    """num/den with monic denominator; den must be nonzero."""

    __slots__ = ("num", "den")

    def __init__(self, num: Polynomial, den: Polynomial, tol: Tolerances = DEFAULT_TOL):
        if not isinstance(num, Polynomial):
            num = Polynomial(num, tol)
        if not isinstance(den, Polynomial):
            den = Polynomial(den, tol)
        if den.is_zero:
            raise InvalidInput("rational function with zero denominator")
        lead = den.lead
        self.num = Polynomial(num.coef / lead, tol)
        self.den = Polynomial(den.coef / lead, tol)

    # -- structure ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def integrable_tail(self) -> bool:
        """True when r = O(1/w^2) at infinity."""
        return self.is_zero or self.num.degree + 2 <= self.den.degree

    @property
    def proper(self) -> bool:
        return self.is_zero or self.num.degree < self.den.degree

    def poles(self, tol: Tolerances = DEFAULT_TOL):
        return poly_roots(self.den, tol)

    # -- evaluation and calculus -------------------------------------------

    def __call__(self, z):
        return self.num(z) / self.den(z)

    def derivative(self) -> "RationalFunction":
        n, d = self.num, self.den
        return RationalFunction(n.derivative() * d - n * d.derivative(), d * d)

    def conjugate(self) -> "RationalFunction":
        """Coefficient-wise conjugate: equals conj(r(conj z)) pointwise."""
        return RationalFunction(self.num.conjugate(), self.den.conjugate())

    def series_at_zero(self, order: int) -> np.ndarray:
        if self.den(0.0) == 0.0:
            raise SingularOrigin("rational function singular at 0")
        return _series_divide(self.num.coef, self.den.coef, order)

    # -- arithmetic ---------------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, RationalFunction):
            return RationalFunction(self.num * other.num, self.den * other.den)
        return RationalFunction(self.num * other, self.den)

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, RationalFunction):
            other = RationalFunction(Polynomial([complex(other)]), Polynomial.one())
        if self.is_zero:
            return RationalFunction(other.num, other.den)
        if other.is_zero:
            return RationalFunction(self.num, self.den)
        if np.array_equal(self.den.coef, other.den.coef):
            return RationalFunction(self.num + other.num, self.den)
        return _add_over_lcm(self, other)

    def __sub__(self, other):
        if not isinstance(other, RationalFunction):
            other = RationalFunction(Polynomial([complex(other)]), Polynomial.one())
        return self + (other * (-1.0))

    def reduced(self, tol: Tolerances = DEFAULT_TOL) -> "RationalFunction":
        """Cancel numerator/denominator roots that agree within tol.cluster."""
        if self.is_zero:
            return self
        nr = [r for r, m in poly_roots(self.num, tol) for _ in range(m)]
        dr = [r for r, m in poly_roots(self.den, tol) for _ in range(m)]
        keep_n = list(nr)
        keep_d = []
        for rd in dr:
            hit = None
            for i, rn in enumerate(keep_n):
                if abs(rd - rn) < tol.cluster:
                    hit = i
                    break
            if hit is None:
                keep_d.append(rd)
            else:
                keep_n.pop(hit)
        if len(keep_d) == len(dr):
            return self
        lead = self.num.lead  # den is monic
        return RationalFunction(
            Polynomial.from_roots(keep_n, lead), Polynomial.from_roots(keep_d)
        )

    def __repr__(self):
        return "RationalFunction(num=%r, den=%r)" % (self.num, self.den)


def _add_over_lcm(a: RationalFunction, b: RationalFunction,
                  tol: Tolerances = DEFAULT_TOL) -> RationalFunction:
    """Sum with the least common denominator in root space.

    Multiplying denominators outright doubles shared pole orders; the
    inflated orders then exceed what clustering can re-cancel (a
    multiplicity-2m cluster scatters like eps^(1/2m), far past tol.cluster),
    so the common factor must never be formed in the first place.
    """
    ra = poly_roots(a.den, tol)
    rb = poly_roots(b.den, tol)
    merged = []                     # lcm root multiset
    comp_a, comp_b = [], []         # factors each numerator absorbs
    used = [False] * len(rb)
    shared = False
    for root_a, ma in ra:
        mb = 0
        for j, (root_b, mbj) in enumerate(rb):
            if not used[j] and abs(root_b - root_a) < tol.cluster:
                used[j] = True
                mb = mbj
                shared = True
                break
        m = max(ma, mb)
        merged.append((root_a, m))
        if m > ma:
            comp_a.append((root_a, m - ma))
        if m > mb:
            comp_b.append((root_a, m - mb))
    for j, (root_b, mb) in enumerate(rb):
        if not used[j]:
            merged.append((root_b, mb))
            comp_a.append((root_b, mb))
    if not shared:
        # disjoint poles: plain cross-multiplication is exact
        return RationalFunction(
            a.num * b.den + b.num * a.den, a.den * b.den
        )

    def from_pairs(pairs):
        return Polynomial.from_roots([r for r, m in pairs for _ in range(m)])

    num = a.num * from_pairs(comp_a) + b.num * from_pairs(comp_b)
    return RationalFunction(num, from_pairs(merged))


@dataclass(frozen=True)
class PoleTerm:
    pole: complex
    order: int
    coeffs: tuple  # coeffs[j-1] multiplies 1/(z - pole)^j


@dataclass(frozen=True)
class PoleDecomposition:
    """Exact pole representation of a proper rational function."""

    terms: tuple

    @property
    def residue_sum(self) -> complex:
        return sum(t.coeffs[0] for t in self.terms)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for t in self.terms:
            u = z - t.pole
            for j, c in enumerate(t.coeffs, start=1):
                out = out + c / u**j
        return out


_MAX_POLE_ORDER = 4


def partial_fractions(r: RationalFunction, tol: Tolerances = DEFAULT_TOL) -> PoleDecomposition:
    """Decompose a proper rational function into pole terms.

    Coefficients at a pole a of order m come from the Taylor expansion of
    num/(den/(z-a)^m) around a, computed by Taylor shift and power-series
    division.  Pole orders above 4 are rejected; the closed forms downstream
    are only exercised (and only tested) up to that order.
    """
    if r.is_zero:
        return PoleDecomposition(terms=())
    if not r.proper:
        raise InvalidInput("partial fractions require deg num < deg den")
    terms = []
    for a, m in r.poles(tol):
        if m > _MAX_POLE_ORDER:
            raise InvalidInput("pole order %d exceeds supported order %d" % (m, _MAX_POLE_ORDER))
        dshift = Polynomial(r.den.taylor_at(a))
        scale = np.max(np.abs(dshift.coef))
        head = np.abs(dshift.coef[:m])
        if np.any(head > 1e-5 * scale):
            raise InvalidInput(
                "denominator does not vanish to declared order %d at pole %s" % (m, a)
            )
        q = dshift.coef[m:]
        nshift = r.num.taylor_at(a)
        g = _series_divide(nshift, q, m - 1)
        coeffs = tuple(complex(g[m - j]) for j in range(1, m + 1))
        terms.append(PoleTerm(pole=complex(a), order=m, coeffs=coeffs))

    dec = PoleDecomposition(terms=tuple(terms))

    # cheap self-check on a ring that stays away from every pole
    rad = 2.0 * max(1.0, max(abs(t.pole) for t in terms))
    zs = rad * np.exp(2j * np.pi * np.arange(11) / 11)
    ref = r(zs)
    err = np.max(np.abs(dec(zs) - ref)) / max(np.max(np.abs(ref)), 1e-300)
    if err > 1e4 * tol.partial_fraction:
        raise InvalidInput(
            "ill-conditioned partial fractions: re-summation error %.3e" % err
        )
    return dec


# -- free-function forms ------------------------------------------------------


def rat_conjugate(r: RationalFunction) -> RationalFunction:
    return r.conjugate()


def rat_series_at_zero(r: RationalFunction, order: int) -> np.ndarray:
    return r.series_at_zero(order)


def rat_eval(r: RationalFunction, z):
    return r(z)


def rat_derivative(r: RationalFunction) -> RationalFunction:
    return r.derivative()


def halfline_distance(a: complex) -> float:
    """Distance from a point to the closed half-line [0, inf)."""
    a = complex(a)
    if a.real >= 0.0:
        return abs(a.imag)
    return abs(a)


def validate_no_poles_on_halfline(r: RationalFunction, tol: Tolerances = DEFAULT_TOL):
    """Raise InvalidInput when any denominator root comes within tol.axis
    of [0, inf); returns the pole list otherwise."""
    ps = r.poles(tol)
    for a, _ in ps:
        if halfline_distance(a) <= tol.axis:
            raise InvalidInput(
                "denominator root %s within %.1e of the half-line" % (a, tol.axis)
            )
    return ps
