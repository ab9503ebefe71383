"""Shared exception types for the lattice-model library."""


class LatModelError(Exception):
    """Base class for all library-specific errors."""


class BoundExceeded(LatModelError):
    """An enumeration or budget bound was exceeded."""


class PoleAtZero(LatModelError):
    """Specialization at t = 0 hit a denominator vanishing at 0."""


class NonUnitPivot(LatModelError):
    """Row reduction over a truncated series ring would divide by a non-unit."""


class NonUnitDivision(LatModelError):
    """Division by a non-unit in a local ring."""


class DegenerateF(LatModelError):
    """F^(1) does not have dimension 1; m1 is undefined for this model/chain."""


class NotDeformable(LatModelError):
    """The chain already has the maximal Hodge invariant (e, 0)."""


class ContainmentViolated(LatModelError):
    """A deformed generator left the ambient standard lattice (bug trap)."""


class NoValidAuxVector(LatModelError):
    """A recipe could not find its required auxiliary vector (bug trap)."""


class AllMinorsVanish(LatModelError):
    """Truncated-precision certification was inconclusive at the given N."""


class NotFound(LatModelError):
    """Witness search exhausted its budget without a matching family."""


class InvalidInput(LatModelError):
    """Malformed or inconsistent user input."""
