"""Exception hierarchy and enumeration-cap plumbing.

Every potentially explosive enumeration in the package is guarded by an
explicit cap.  Exceeding a cap raises ``EnumerationCapExceeded``; nothing is
ever silently truncated.  The global default can be overridden with the
``ORTHOKIT_CAP`` environment variable.
"""

from __future__ import annotations

import os

DEFAULT_CAP = 2_000_000
CAP_ENV_VAR = "ORTHOKIT_CAP"


class OrthokitError(Exception):
    """Base class for all orthokit errors."""


class UsageError(OrthokitError):
    """Bad arguments at the API or CLI boundary."""


class EnumerationCapExceeded(OrthokitError):
    def __init__(self, what: str, cap: int):
        super().__init__(f"{what}: enumeration exceeds cap {cap}")
        self.what = what
        self.cap = cap


# -- test-space construction -------------------------------------------------

class EmptyTest(OrthokitError):
    pass


class RedundantTests(OrthokitError):
    pass


class UnknownLabel(OrthokitError):
    pass


class LabelCollision(OrthokitError):
    pass


class UncoveredOutcome(OrthokitError):
    pass


# -- states ------------------------------------------------------------------

class NumericKindMismatch(OrthokitError):
    pass


class PositivityViolation(OrthokitError):
    pass


class NotAState(OrthokitError):
    pass


# -- morphisms ---------------------------------------------------------------

class MorphismError(OrthokitError):
    """Validation failure; carries a witness describing the violation."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class NotLocallyInjective(MorphismError):
    pass


class ImageNotEvent(MorphismError):
    pass


class ImagesNotPerspective(MorphismError):
    pass


class PullbackNotState(MorphismError):
    pass


class DomainMismatch(OrthokitError):
    pass


class HypothesisUnmet(OrthokitError):
    pass


# -- logic / structure maps ----------------------------------------------------

class NotAlgebraic(OrthokitError):
    pass


class LawViolation(OrthokitError):
    pass


class NotCoherence(MorphismError):
    pass


class NotSequential(MorphismError):
    pass


class NotAMorphism(MorphismError):
    pass


class NotGAlgebra(MorphismError):
    pass


class ZeroMarginal(OrthokitError):
    pass


# -- quantum generators --------------------------------------------------------

class NotOrthonormal(OrthokitError):
    pass


class DepthCapExceeded(OrthokitError):
    pass


# -- cli / documents -----------------------------------------------------------

class ParseError(OrthokitError):
    pass


class MissingStructure(OrthokitError):
    pass


class UnknownName(OrthokitError):
    pass


def resolve_cap(cap: int | None = None) -> int:
    """Explicit cap, else ORTHOKIT_CAP from the environment, else the default."""
    if cap is not None:
        if cap < 0:
            raise UsageError("cap must be nonnegative")
        return cap
    raw = os.environ.get(CAP_ENV_VAR)
    if raw:
        try:
            return int(raw)
        except ValueError as exc:
            raise UsageError(f"bad {CAP_ENV_VAR} value: {raw!r}") from exc
    return DEFAULT_CAP


class CapCounter:
    """Counts enumerated objects and raises once the cap would be exceeded."""

    __slots__ = ("cap", "count", "what")

    def __init__(self, what: str, cap: int | None = None):
        self.what = what
        self.cap = resolve_cap(cap)
        self.count = 0

    def tick(self, k: int = 1) -> None:
        self.count += k
        if self.count > self.cap:
            raise EnumerationCapExceeded(self.what, self.cap)
