"""Exception types shared across the package."""


class NNLabError(Exception):
    """Base class for all package errors."""


class DomainError(NNLabError):
    """A site or edge does not belong to the domain it was used with."""


class SpecError(NNLabError):
    """Invalid construction parameters (bad torus side, odd ZM side, ...)."""


class ConstructionError(NNLabError):
    """A digraph violates the hypotheses required to realize it with weights."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class StructureError(NNLabError):
    """A realized graph violates a structural guarantee (e.g. a long cycle)."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class UnsupportedDimensionError(NNLabError):
    """Operation only defined for a specific dimension (dual lattice: d=2)."""
