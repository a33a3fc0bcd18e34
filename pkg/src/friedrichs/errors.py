"""Exception taxonomy shared across the package.

Every failure mode that callers are expected to catch gets its own class so
that the CLI can map them onto stable exit codes.  All of them derive from
FriedrichsError; input-shaped problems additionally derive from ValueError.
"""


class FriedrichsError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(FriedrichsError, ValueError):
    """Caller handed us something outside an operation's domain."""


class SchemaError(InvalidInput):
    """A scenario file does not match the documented JSON layout."""


class SingularOrigin(InvalidInput):
    """A series expansion at 0 was requested for a function singular there."""


class BranchBoundary(InvalidInput):
    """Evaluation requested on the branch cut [0, inf) where the analytic
    continuation is two-valued; use the dedicated boundary-value operations."""


class PoleCollision(InvalidInput):
    """An evaluation point coincides with a pole of the integrand."""


class NonIntegrable(InvalidInput):
    """A half-line integral was requested for a function that does not decay
    (or is too singular at the origin) to be absolutely integrable."""


class NonRationalProduct(InvalidInput):
    """Form factors of mixed half-integer parity: their products are not
    rational and the closed-form machinery does not apply."""


class DegenerateCoupling(InvalidInput):
    """Operation requires a nonzero coupling constant."""


class EigenvalueProximity(FriedrichsError):
    """A resolvent evaluation point sits numerically on the discrete spectrum."""

    def __init__(self, z, detval, msg=None):
        self.z = z
        self.detval = detval
        super().__init__(msg or f"resolvent nearly singular at z={z}: |det|={abs(detval):.3e}")


class EmbeddedEigenvalue(FriedrichsError):
    """The boundary operator K+-(w) - w is singular at some w > 0, i.e. the
    model has (numerically) an eigenvalue embedded in the continuum."""


class BorderlineClassification(FriedrichsError):
    """Singular values of the zero-energy operator fall inside the ambiguous
    window around the kernel threshold; the classification is not trustworthy."""

    def __init__(self, values, threshold, msg=None):
        self.values = list(values)
        self.threshold = threshold
        super().__init__(
            msg
            or "ambiguous kernel: singular values %s within a decade of threshold %.3e"
            % (["%.3e" % abs(v) for v in self.values], threshold)
        )


class ClassificationMismatch(FriedrichsError):
    """An operation was invoked for a zero-energy kind it does not cover."""


class NonNormalizableMode(FriedrichsError):
    """A candidate zero-energy vector has a non square-integrable tail."""


class UndefinedSurvival(FriedrichsError):
    """Survival probability requested for a state with (numerically) zero
    projection onto the continuous subspace."""


class BudgetExceeded(FriedrichsError):
    """An adaptive computation hit its work cap before meeting tolerance."""

    def __init__(self, msg, achieved=None, requested=None):
        self.achieved = achieved
        self.requested = requested
        super().__init__(msg)
