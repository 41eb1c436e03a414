"""Exception types shared across the package."""


class MixSenseError(Exception):
    """Base class for all errors raised by this package."""


class NonPositiveDimension(MixSenseError):
    """A dimension parameter (R, Q, M, N_rls) is below one."""


class OutOfRange(MixSenseError):
    """A scalar or vector parameter lies outside its admissible interval."""


class DimensionMismatch(MixSenseError):
    """Operands have inconsistent shapes."""


class ZeroVector(MixSenseError):
    """A vector that must have positive norm is identically zero."""


class BadArity(MixSenseError):
    """Requested support size exceeds the vector length."""


class CoherenceBudgetExhausted(MixSenseError):
    """A column failed the coherence screen for every allowed attempt.

    Signals that the (r_act, mu_thr, Q) combination is jointly infeasible.
    """


class AlphabetTooLarge(MixSenseError):
    """More mixtures requested than distinct supports exist."""


class ParseError(MixSenseError):
    """A config or matrix file could not be parsed."""


class InvariantViolation(MixSenseError):
    """A loaded object fails one of its structural invariants."""


class NoFeasiblePoint(MixSenseError):
    """Exhaustive search found no point satisfying the constraints."""


class EmptyVector(MixSenseError):
    """An operation received a zero-length vector."""
