"""Model definition: levels, coupling, and rational form factors.

A form factor is v(w) = w^(h/2) * q(w) with h a positive integer and q a
rational function that is finite and nonzero at 0 and has no poles on
[0, inf).  All factors of one model must share the parity of h, so that
every product  conj(v_m) * v_n  is a genuine rational function of w; those
products populate the matrix Gamma(w), the central object downstream.

Scenario files are JSON:

    {
      "levels": [1.0],
      "coupling": 0.3,
      "form_factors": [
        {"half_power": 1,
         "numerator":   [[1.0, 0.0]],
         "denominator": [[1.0, 0.0], [0.0, 0.0], [1.0, 0.0]]}
      ]
    }

with complex coefficients stored ascending-degree as [re, im] pairs.
Loading and saving round-trips the floats bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, NonRationalProduct, SchemaError
from .polyrat import (
    DEFAULT_TOL,
    Polynomial,
    RationalFunction,
    Tolerances,
    halfline_distance,
    validate_no_poles_on_halfline,
)

__all__ = [
    "FormFactor",
    "ModelSpec",
    "GammaMatrix",
    "build_gamma",
    "gamma_small_expansion",
    "validate_model",
    "combination_gamma",
    "load_scenario",
    "save_scenario",
    "scenario_to_dict",
    "scenario_from_dict",
]


@dataclass(frozen=True)
class FormFactor:
    """v(w) = w^(half_power/2) * tail(w)."""

    half_power: int
    tail: RationalFunction

    def __post_init__(self):
        if int(self.half_power) < 1:
            raise InvalidInput("half_power must be a positive integer")
        if self.tail.den(0.0) == 0.0:
            raise InvalidInput("form factor tail has a pole at 0")
        if self.tail.is_zero or self.tail(0.0) == 0.0:
            raise InvalidInput("form factor tail must be nonzero at 0")

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        return w ** (self.half_power / 2.0) * self.tail(w)

    @property
    def parity(self) -> int:
        return self.half_power % 2


@dataclass(frozen=True)
class ModelSpec:
    """Levels (ascending), coupling constant, and one form factor per level."""

    levels: tuple
    coupling: float
    form_factors: tuple

    def __post_init__(self):
        levels = tuple(float(x) for x in self.levels)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "coupling", float(self.coupling))
        object.__setattr__(self, "form_factors", tuple(self.form_factors))
        if len(levels) == 0:
            raise InvalidInput("at least one level required")
        if len(levels) != len(self.form_factors):
            raise InvalidInput("need exactly one form factor per level")
        if any(levels[i] > levels[i + 1] for i in range(len(levels) - 1)):
            raise InvalidInput("levels must be sorted ascending")

    @property
    def nlevels(self) -> int:
        return len(self.levels)

    @property
    def k0(self) -> np.ndarray:
        return np.diag(np.asarray(self.levels, dtype=float)).astype(complex)

    def form_values(self, w):
        """Stack of v_n(w), shape (..., N)."""
        w = np.asarray(w, dtype=complex)
        return np.stack([f(w) for f in self.form_factors], axis=-1)


class GammaMatrix:
    """Matrix of rational functions Gamma_mn(w) = conj(v_m)(w) v_n(w).

    On the positive half-line this is Hermitian, positive semidefinite and of
    rank at most one; off the real axis the entries are the unique rational
    continuation of those boundary values.
    """

    def __init__(self, entries, half_powers):
        self.entries = entries  # nested list [m][n] of RationalFunction
        self.half_powers = tuple(half_powers)
        self.n = len(entries)

    def value(self, z):
        """Entrywise evaluation; z scalar or array, result (..., N, N)."""
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape + (self.n, self.n), dtype=complex)
        for m in range(self.n):
            for nn in range(self.n):
                out[..., m, nn] = self.entries[m][nn](z)
        return out

    def series(self, order):
        """Taylor coefficient matrices at 0 up to the given order (inclusive)."""
        coefs = np.zeros((order + 1, self.n, self.n), dtype=complex)
        for m in range(self.n):
            for nn in range(self.n):
                coefs[:, m, nn] = self.entries[m][nn].series_at_zero(order)
        return coefs

    @property
    def is_zero(self) -> bool:
        return all(self.entries[m][nn].is_zero
                   for m in range(self.n) for nn in range(self.n))

    def max_pole_magnitude(self) -> float:
        out = 0.0
        for m in range(self.n):
            for nn in range(self.n):
                e = self.entries[m][nn]
                if e.is_zero:
                    continue
                out = max(out, max(abs(a) for a, _ in e.poles()))
        return out

    def min_pole_distance(self) -> float:
        """Smallest |pole| over all entries (radius of analyticity at 0)."""
        out = np.inf
        for m in range(self.n):
            for nn in range(self.n):
                e = self.entries[m][nn]
                if e.is_zero:
                    continue
                out = min(out, min(abs(a) for a, _ in e.poles()))
        return out


def build_gamma(model: ModelSpec, tol: Tolerances = DEFAULT_TOL) -> GammaMatrix:
    """Assemble the rational matrix Gamma from the form factors.

    Requires all half powers to share parity so the w^((h_m+h_n)/2) prefactor
    is an integer power.  Shared denominator factors (detected by root
    matching) are cancelled entry by entry.
    """
    hs = [f.half_power for f in model.form_factors]
    if len({h % 2 for h in hs}) > 1:
        raise NonRationalProduct(
            "mixed form-factor parity: products conj(v_m) v_n are not rational"
        )
    n = model.nlevels
    entries = []
    for m in range(n):
        row = []
        qm = model.form_factors[m].tail.conjugate()
        for nn in range(n):
            qn = model.form_factors[nn].tail
            p = (hs[m] + hs[nn]) // 2
            num = (qm.num * qn.num).shifted_up(p)
            den = qm.den * qn.den
            row.append(RationalFunction(num, den).reduced(tol))
        entries.append(row)
    return GammaMatrix(entries, hs)


def gamma_small_expansion(gamma: GammaMatrix, depth: int = 2, tol: Tolerances = DEFAULT_TOL):
    """Leading vanishing order n_b of Gamma at 0 and the coefficient matrices
    Gamma_{n_b} ... Gamma_{n_b + depth}.

    Returns (n_b, [matrices]).  The leading matrix is Hermitian positive
    semidefinite; a model whose Gamma vanishes identically is rejected.
    """
    max_h = max(self_h for self_h in gamma.half_powers)
    order = max_h + depth + 2
    coefs = gamma.series(order)
    scale = max(np.max(np.abs(coefs)), 1e-300)
    nb = None
    for k in range(1, order + 1):
        if np.max(np.abs(coefs[k])) > tol.series * scale:
            nb = k
            break
    if nb is None:
        raise InvalidInput("Gamma vanishes at 0 to every computed order")
    while nb + depth > order:
        order = nb + depth
        coefs = gamma.series(order)
    mats = [coefs[nb + j] for j in range(depth + 1)]
    lead = mats[0]
    herm_err = np.max(np.abs(lead - lead.conj().T))
    if herm_err > 1e-9 * max(np.max(np.abs(lead)), 1e-300):
        raise InvalidInput("leading coefficient matrix is not Hermitian")
    eigs = np.linalg.eigvalsh(0.5 * (lead + lead.conj().T))
    if eigs.min() < -1e-9 * max(eigs.max(), 1e-300):
        raise InvalidInput("leading coefficient matrix is not positive semidefinite")
    return nb, mats


def combination_gamma(model: ModelSpec, psi, tol: Tolerances = DEFAULT_TOL) -> RationalFunction:
    """The scalar rational function <psi| Gamma(w) |psi> for a fixed vector."""
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.shape != (model.nlevels,):
        raise InvalidInput("psi must have one entry per level")
    gamma = build_gamma(model, tol)
    acc = RationalFunction(Polynomial([0.0]), Polynomial.one())
    for m in range(model.nlevels):
        for nn in range(model.nlevels):
            c = np.conj(psi[m]) * psi[nn]
            if c == 0.0:
                continue
            acc = acc + gamma.entries[m][nn] * c
    return acc.reduced(tol)


@dataclass
class ValidationReport:
    ok: bool
    issues: list = field(default_factory=list)
    checks: list = field(default_factory=list)

    def add(self, label, ok, detail=""):
        self.checks.append((label, ok, detail))
        if not ok:
            self.ok = False
            self.issues.append("%s: %s" % (label, detail))


def validate_model(model: ModelSpec, tol: Tolerances = DEFAULT_TOL) -> ValidationReport:
    """Structural admissibility checks; returns a report rather than raising
    so the CLI can print everything at once."""
    rep = ValidationReport(ok=True)

    hs = [f.half_power for f in model.form_factors]
    rep.add("parity", len({h % 2 for h in hs}) == 1, "half powers of mixed parity")

    for i, f in enumerate(model.form_factors):
        label = "form_factor[%d]" % i
        try:
            validate_no_poles_on_halfline(f.tail, tol)
            rep.add(label + ".poles", True)
        except InvalidInput as exc:
            rep.add(label + ".poles", False, str(exc))
        q0 = f.tail(0.0)
        rep.add(label + ".origin", q0 != 0.0, "tail vanishes at 0")
        # integrability: v in L2 near infinity needs h + 2 deg num + 2 <= 2 deg den
        ok = f.half_power + 2 * f.tail.num.degree + 2 <= 2 * f.tail.den.degree
        rep.add(label + ".decay", ok, "form factor is not square integrable at infinity")

    if rep.ok:
        gamma = build_gamma(model, tol)
        ws = np.linspace(0.1, 5.0, 23)
        g = gamma.value(ws)
        herm = np.max(np.abs(g - np.conj(np.swapaxes(g, -1, -2))))
        rep.add("gamma.hermitian", herm < 1e-10 * max(1.0, np.max(np.abs(g))), "%.3e" % herm)
        v = model.form_values(ws)
        outer = np.conj(v[..., :, None]) * v[..., None, :]
        rank1 = np.max(np.abs(g - outer))
        rep.add("gamma.rank_one", rank1 < 1e-9 * max(1.0, np.max(np.abs(g))), "%.3e" % rank1)
        for m in range(model.nlevels):
            for nn in range(model.nlevels):
                e = gamma.entries[m][nn]
                if e.is_zero:
                    continue
                okdeg = e.num.degree + 2 <= e.den.degree
                rep.add("gamma[%d][%d].tail" % (m, nn), okdeg, "entry not O(w^-2)")
                n0 = abs(e.num(0.0))
                sc = max(np.max(np.abs(e.num.coef)), 1e-300)
                rep.add("gamma[%d][%d].origin" % (m, nn), n0 <= 1e-10 * sc, "numerator(0) != 0")
    return rep


# -- scenario (de)serialization ----------------------------------------------


def _pairs_to_coef(pairs, what):
    try:
        arr = [complex(float(re), float(im)) for re, im in pairs]
    except (TypeError, ValueError) as exc:
        raise SchemaError("%s must be a list of [re, im] pairs" % what) from exc
    if len(arr) == 0:
        raise SchemaError("%s must be non-empty" % what)
    return np.asarray(arr, dtype=complex)


def _coef_to_pairs(coef):
    return [[float(c.real), float(c.imag)] for c in np.asarray(coef, dtype=complex)]


def scenario_from_dict(data) -> ModelSpec:
    if not isinstance(data, dict):
        raise SchemaError("scenario must be a JSON object")
    for key in ("levels", "coupling", "form_factors"):
        if key not in data:
            raise SchemaError("missing required key %r" % key)
    levels = data["levels"]
    if not isinstance(levels, list) or not levels:
        raise SchemaError("levels must be a non-empty list of numbers")
    try:
        levels = [float(x) for x in levels]
    except (TypeError, ValueError) as exc:
        raise SchemaError("levels must be numbers") from exc
    try:
        coupling = float(data["coupling"])
    except (TypeError, ValueError) as exc:
        raise SchemaError("coupling must be a number") from exc
    ffs = data["form_factors"]
    if not isinstance(ffs, list) or len(ffs) != len(levels):
        raise SchemaError("form_factors must list one entry per level")
    factors = []
    for i, f in enumerate(ffs):
        if not isinstance(f, dict):
            raise SchemaError("form_factors[%d] must be an object" % i)
        for key in ("half_power", "numerator", "denominator"):
            if key not in f:
                raise SchemaError("form_factors[%d] missing key %r" % (i, key))
        h = f["half_power"]
        if not isinstance(h, int) or h < 1:
            raise SchemaError("form_factors[%d].half_power must be a positive integer" % i)
        num = _pairs_to_coef(f["numerator"], "form_factors[%d].numerator" % i)
        den = _pairs_to_coef(f["denominator"], "form_factors[%d].denominator" % i)
        try:
            tail = RationalFunction(Polynomial(num), Polynomial(den))
            factors.append(FormFactor(half_power=h, tail=tail))
        except InvalidInput as exc:
            raise SchemaError("form_factors[%d]: %s" % (i, exc)) from exc
    try:
        return ModelSpec(levels=tuple(levels), coupling=coupling, form_factors=tuple(factors))
    except InvalidInput as exc:
        raise SchemaError(str(exc)) from exc


def scenario_to_dict(model: ModelSpec) -> dict:
    return {
        "levels": [float(x) for x in model.levels],
        "coupling": float(model.coupling),
        "form_factors": [
            {
                "half_power": int(f.half_power),
                "numerator": _coef_to_pairs(f.tail.num.coef),
                "denominator": _coef_to_pairs(f.tail.den.coef),
            }
            for f in model.form_factors
        ],
    }


def load_scenario(path) -> ModelSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError("invalid JSON in %s: %s" % (path, exc)) from exc
    return scenario_from_dict(data)


def save_scenario(model: ModelSpec, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(model), fh, indent=2)
        fh.write("\n")
