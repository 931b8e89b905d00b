"""Exception hierarchy shared by every hilok module.

Three top-level branches matter to callers: DomainError (bad input, CLI exit
4), PrecisionExhausted (windows too small to certify the answer, CLI exit 3),
and InternalInconsistency (an invariant the library itself must maintain was
violated; always a bug).
"""


class HilokError(Exception):
    pass


class DomainError(HilokError):
    """Input outside an operation's contract."""


class PrecisionExhausted(HilokError):
    """The tracked window cannot certify the requested result."""


class InternalInconsistency(HilokError):
    """A structural invariant failed; indicates a bug, not bad input."""


# gf
class NotPrime(DomainError):
    pass


class ReducibleModulus(DomainError):
    pass


# tower
class ParseError(DomainError):
    pass


class SpecMismatch(DomainError):
    pass


class ZeroOrUnknownLeadingTerm(DomainError):
    pass


class NegativeValuation(DomainError):
    pass


# witt
class TorsionRing(DomainError):
    pass


class LengthMismatch(DomainError):
    pass


class ResidueMismatch(DomainError):
    pass


# forms
class WindowTooSmall(PrecisionExhausted):
    pass


class NonConvergence(PrecisionExhausted):
    pass


# kmilnor
class ZeroEntry(DomainError):
    pass


class LevelCapReached(PrecisionExhausted):
    pass


# hcoh
class DegreeMismatch(DomainError):
    pass


class NotAClass(DomainError):
    pass


class NonUnitEntry(DomainError):
    pass


# recip
class DimensionMismatch(DomainError):
    pass


# ext
class TrivialExtension(DomainError):
    pass


class MultipleLEntries(DomainError):
    pass


class HypothesisViolation(DomainError):
    pass


class TooLarge(DomainError):
    pass
