"""Exception hierarchy shared by every qca_lab module.

The CLI maps each family onto an exit code through ``exit_code``.
"""


class QCAError(Exception):
    exit_code = 1


class InputError(QCAError, ValueError):
    """Malformed rule, configuration, state or argument."""

    exit_code = 2


class RuleError(InputError):
    pass


class MissingTableEntry(RuleError):
    pass


class QuiescenceViolation(RuleError):
    pass


class DuplicateSymbol(RuleError):
    pass


class EmptyNeighborhood(RuleError):
    pass


class RegionMismatch(InputError):
    pass


class NotNormalized(InputError):
    pass


class BobCellEqual(InputError):
    pass


class CapExceeded(QCAError):
    """A desk-scale resource cap was hit."""

    exit_code = 3


class GraphTooLarge(CapExceeded):
    pass


class RegionTooLarge(CapExceeded):
    pass


class WindowTooLarge(CapExceeded):
    pass


class SpaceTooLarge(CapExceeded):
    pass


class WindowTooSmall(InputError):
    pass


class ZeroVector(QCAError, ArithmeticError):
    exit_code = 4


class HaloUnavailable(QCAError):
    exit_code = 4


class RuledOut(QCAError):
    """The request contradicts a structural property of the rule."""

    exit_code = 5


class RuleReversible(RuledOut):
    pass


class RuleIsOpen(RuledOut):
    pass


class RuleNotInjective(RuledOut):
    pass


class NotOpen(RuledOut):
    pass


class OracleDisagreement(QCAError, AssertionError):
    pass
