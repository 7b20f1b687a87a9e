"""Exception hierarchy shared by all modules.

Errors are grouped by how the CLI maps them to exit codes: configuration and
parse problems, resource-budget overruns, and conjecture-violation witnesses
(a computation that finished but contradicted an expected structural
property).
"""


class QcanonError(Exception):
    """Base class for all package errors."""


class ParseError(QcanonError):
    """Malformed input text (scalar grammar, presentation file, manifest)."""


class ConfigError(QcanonError):
    """Inconsistent or missing configuration."""


# -- scalar arithmetic ------------------------------------------------------

class DivideByZero(QcanonError):
    pass


class FieldMismatch(QcanonError):
    """Operands built over incompatible field configurations."""


class NoExtension(QcanonError):
    """Quadratic-extension operation on a plain rational-function field."""


class NotRegularAtZero(QcanonError):
    """degree_at_zero on a value with a pole at q = 0."""


class PoleAtOne(QcanonError):
    pass


class NotBarInvariant(QcanonError):
    pass


# -- algebra construction ---------------------------------------------------

class RankMismatch(QcanonError):
    pass


class AsymmetricTensor(QcanonError):
    pass


class CalibrationFailed(QcanonError):
    """No candidate scale reproduces the reference data."""


class LengthBudgetExceeded(QcanonError):
    """Basis closure not reached within the word-length budget."""


class NotSemisimple(QcanonError):
    """A radical element was detected while splitting."""


class ExtensionDegreeTooHigh(QcanonError):
    """Splitting would need a field extension of degree > 2."""


class SplittingFailed(QcanonError):
    """The desk-scale splitting strategies did not separate all blocks."""


class MissingWeightData(QcanonError):
    pass


# -- canonical-basis construction -------------------------------------------

class EmptyFiber(QcanonError):
    """No admissible lift exists; conjecture-violation signal."""


class AmbiguousMinimum(QcanonError):
    """Two incomparable or equal minima in a fiber; conjecture violation."""


class NoMinimum(QcanonError):
    pass


class AmbiguousScaling(QcanonError):
    """Tie between scaling exponents; conjecture violation."""


class SearchBudgetExceeded(QcanonError):
    pass


# -- crystal -----------------------------------------------------------------

class NoDisjointBasis(QcanonError):
    """No disjoint-monomial-support basis of L/qL; conjecture violation."""


class DirectSumFailure(QcanonError):
    """Lattice does not split along a module direct sum; hard error."""


# -- positivity ---------------------------------------------------------------

class UnidentifiedFactor(QcanonError):
    """A quasi-subcell factor matches no Specht module character."""


CONJECTURE_VIOLATIONS = (
    EmptyFiber,
    AmbiguousMinimum,
    NoMinimum,
    AmbiguousScaling,
    NoDisjointBasis,
    UnidentifiedFactor,
)

RESOURCE_ERRORS = (
    LengthBudgetExceeded,
    SearchBudgetExceeded,
    SplittingFailed,
    ExtensionDegreeTooHigh,
)
