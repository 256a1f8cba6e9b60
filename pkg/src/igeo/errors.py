"""Exception types shared across the package."""


class IgeoError(Exception):
    """Base class for all igeo errors."""


class DegenerateFacet(IgeoError):
    """A facet's Gram determinant is below the degeneracy tolerance."""

    def __init__(self, facet_id, message=None):
        self.facet_id = facet_id
        super().__init__(message or f"facet {facet_id} is degenerate")


class NotClosed(IgeoError):
    """A ridge of the mesh is not shared by exactly two facets."""


class UnsupportedDimension(IgeoError):
    """The requested ambient dimension is not supported by this generator."""


class InvalidFlag(IgeoError):
    """Flag-measure index constraints (0 <= q < r <= n-1) violated."""


class DegenerateSlice(IgeoError):
    """The slicing flat grazes a vertex or facet; the caller should resample."""


class PersistentDegeneracy(IgeoError):
    """A line query stayed degenerate after the maximum number of jitter retries."""


class InsufficientBudget(IgeoError):
    """Monte Carlo standard errors exceed the usable threshold for the check."""


class MeshFormatError(IgeoError):
    """An nOFF file could not be parsed."""
