"""Surface areas and projected r-volumes of closed hypersurfaces in R^n.

Five mutually-verifying estimators from integral geometry (weighted
projection, line counting, ray casting, tubular neighborhoods, direct
summation) over dimension-generic simplicial meshes, plus Grassmannian mean
r-volumes and their recursion check.
"""

from .errors import (
    DegenerateFacet,
    DegenerateSlice,
    IgeoError,
    InsufficientBudget,
    InvalidFlag,
    MeshFormatError,
    NotClosed,
    PersistentDegeneracy,
    UnsupportedDimension,
)
from .mesh import (
    SimplicialMesh,
    ValidationReport,
    bounding_ball,
    enclosed_volume,
    exact_surface_area,
    facet_measure,
    facet_normal,
    validate_mesh,
)
from .meshio import dumps_noff, loads_noff, read_noff, write_noff
from .measures import (
    MeasureValue,
    ball_recursion_identity,
    ball_volume_omega,
    flag_measure,
    grassmannian_volume,
    line_measure_ball,
    sphere_area_O,
)
from .rng import RandomStream
from .shapes import make_box, make_reuleaux, make_sphere, make_star, make_torus
from .mesh import AffineFlat, OrientedLine
from .samplers import (
    Estimate,
    sample_ball_point,
    sample_grassmannian,
    sample_line_meeting_ball,
    sample_sphere,
)
from .intersect import (
    HitRecord,
    count_line_mesh,
    flat_hits_mesh,
    intersect_ray_facet,
    point_mesh_distance,
    slice_components,
)
from .estimators import (
    MODE_BODY_SHADOW,
    MODE_COMPONENTS,
    RecursionCheck,
    cauchy_area,
    crofton_area,
    mean_rvolume,
    projected_area_exact,
    projected_area_raycast,
    projected_rvolume,
    recursion_check,
    silhouette_volume,
    tube_area,
)

__version__ = "0.1.0"
