"""Exception types shared across the toolkit."""


class DeltaConvexError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(DeltaConvexError, ValueError):
    """Malformed input: non-finite entries, wrong shapes, bad frames."""


class DomainError(DeltaConvexError, ValueError):
    """A parameter lies outside the range where a formula is defined."""


class StencilError(DeltaConvexError):
    """A finite-difference stencil touches an inactive node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class EmptyDomainError(DeltaConvexError):
    """No grid node satisfies the eligibility requirement."""


class SamplingError(DeltaConvexError):
    """Rejection sampling accepted too few draws."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DegeneracyError(DeltaConvexError):
    """The radial equation stops being solvable for the second derivative."""

    def __init__(self, message, radius=None):
        super().__init__(message)
        self.radius = radius


class ResolutionError(DeltaConvexError):
    """Too few shells or radii to run an estimator."""


class FieldFormatError(DeltaConvexError):
    """A CSV field file does not match its declared grid."""

    def __init__(self, message, missing=None):
        super().__init__(message)
        self.missing = list(missing or [])
