"""Compatibility certification and constructive integration of submanifold
data targeting products of real space forms."""

from .ambient import (
    IsometryAlignment,
    MultiproductSpec,
    SpaceFormFactor,
    align_isometry,
    ambient_curvature,
    ambient_inner,
    factor_constraint_residual,
    geodesic_distance,
)
from .compat import (
    check_algebraic,
    check_curvature_equations,
    check_differential,
    compatibility_verdict,
    gauss_curvature,
)
from .dataset import (
    CompatReport,
    GeometricDataset,
    OperatorQuadruple,
    PROFILES,
    ToleranceProfile,
    christoffels,
    derive_adjoint_s,
    load_dataset,
    save_dataset,
    shape_operator,
)
from .errors import (
    AlignmentError,
    DimensionError,
    FixtureError,
    RankError,
    SchemaError,
    SpaceformsError,
    ValidationError,
)
from .family import RotatedDataset, generate_family, rotate_dataset
from .flatconn import (
    ParallelFrame,
    TotalBundle,
    build_parallel_frame,
    curvature_residual,
    d_coefficients,
    parallel_transport,
)
from .grid import Chart
from .immersion import (
    ImmersionField,
    export_csv,
    export_obj,
    reconstruct,
    synthesize_immersion,
    verify_immersion,
)
from .s2xs2 import (
    ComplexDecomposition,
    check_complex_relations,
    classify_surface,
    decompose_complex,
    gauss_curvature_s2s2,
    kahler_functions,
    to_projection_operators,
)
from . import fixtures

__version__ = "0.1.0"
