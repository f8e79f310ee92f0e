"""Anchor deployment and localization accuracy for bent-ray acoustics.

The package splits into geometry (ray closed forms and their numerical
oracle), fisher (jacobians, information matrix, noise models), deployment
(the surface-circle layout, its closed-form objective and optimizer, and
the cube/random baselines), estimation (measurement simulation and the
weighted Gauss-Newton solver), and harness (seeded Monte-Carlo sweeps
with CSV/SVG output).  The cli module wires them to the `auvgeom`
command.
"""

from .errors import (
    AuvgeomError,
    DegenerateAfterRetries,
    DegenerateGeometry,
    DivergedEstimate,
    EmptyTable,
    GrazingRay,
    NoConvergedTrials,
    NoEigenray,
    NonPositiveK,
    SingularFim,
    SingularNormalMatrix,
    TooFewAnchors,
    UnsupportedCount,
    VerticalRay,
    ZeroDiagonal,
    ZeroHorizontalRange,
)
from .geometry import (
    Position,
    RayGeometry,
    SoundSpeedProfile,
    arc_length,
    bearing,
    deviation_angle,
    elevation_angle,
    horizontal_range,
    ray_geometry,
    ray_travel_time,
    snell_travel_time_oracle,
    sound_speed,
)
from .fisher import (
    FimResult,
    NoiseModel,
    diagonal_lower_bound,
    fim,
    jacobian,
    jacobian_row,
    noise_variance,
)
from .deployment import (
    BaselineLayout,
    KSearchResult,
    OptimizerConfig,
    UscLayout,
    cube_positions,
    default_box_for,
    default_cube_for,
    grid_search_k,
    k_objective,
    optimize_k,
    random_positions,
    usc_positions,
    usc_trace_crlb_closed_form,
)
from .estimation import (
    DepthAnchored,
    EstimateResult,
    EstimatorConfig,
    FixedPoint,
    MeasurementSample,
    TruthPerturbed,
    estimate_position,
    estimate_positions,
    rmse,
    simulate_measurements,
)
from .harness import (
    Axis,
    Cube,
    FIGURE_SPECS,
    FixedAnchors,
    Random,
    ResultTable,
    RmUsc,
    Row,
    RsUsc,
    Scenario,
    Static,
    SweepSpec,
    Usc,
    Variant,
    csv_text,
    emit_plot,
    export_csv,
    load_csv,
    run_scenario,
    sweep,
)

__version__ = "0.1.0"
