"""Monte-Carlo scenarios, parameter sweeps, and result export.

A Scenario bundles one simulated world: the true AUV position, an
anchor deployment rule, the sound profile, the noise model, a movement
model, and a trial budget under a master seed.  Sweeps vary one axis
over a list of values for one or more named schemes and produce a flat
result table that exports to CSV and SVG.

Reproducibility contract: every trial derives its own generator from
SeedSequence([master_seed, trial_index, movement_seed]) split into
(movement, deployment, noise) streams, so results are independent of
worker count and trial execution order, and byte-identical across runs.
Rows from Monte-Carlo runs report the depth-augmented CRLB trace
averaged over the per-trial geometry, matching what the estimator (which
also uses the depth sensor) can attain.  Radius-scale sweep rows skip
the Monte-Carlo part and carry the closed-form timing-only trace.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import _svg
from .deployment import (
    cube_positions,
    default_box_for,
    default_cube_for,
    k_objective,
    optimize_k,
    random_positions,
    usc_positions,
)
from .errors import AuvgeomError, EmptyTable, NoConvergedTrials
from .estimation import (
    DEPTH_NOISE_VAR,
    EstimatorConfig,
    _effective_distance,
    estimate_trials,
)
from .fisher import NoiseModel, _sigma2_core, _time_and_rows, fim
from .geometry import Position, SoundSpeedProfile

DIVERGENCE_FLAG_FRACTION = 0.05


# ---------------------------------------------------------------------------
# deployment and movement descriptors


@dataclass(frozen=True)
class Usc:
    """Surface circle of n anchors at radius scale_k times the AUV depth.

    scale_k None means: optimize the scale for the scenario's depth and
    noise model when the scenario runs.
    """

    scale_k: float | None = None
    n: int = 8


@dataclass(frozen=True)
class Cube:
    """Cube baseline; side and center default to the depth-derived rule."""

    side: float | None = None
    center: Position | None = None
    n: int = 8


@dataclass(frozen=True)
class Random:
    """Uniform draws from a box; seed None redraws each trial."""

    box: tuple[tuple[float, float], ...] | None = None
    seed: int | None = None
    n: int = 8


@dataclass(frozen=True)
class FixedAnchors:
    """A literal anchor list, for pre-built comparison layouts."""

    anchors: tuple[Position, ...]

    def __post_init__(self) -> None:
        if len(self.anchors) < 4:
            raise ValueError("need at least 4 anchors")


@dataclass(frozen=True)
class Static:
    pass


@dataclass(frozen=True)
class RmUsc:
    """AUV drifts by delta_meters in a random direction; anchors stay
    where the initial position put them."""

    delta_meters: float
    seed: int = 0


@dataclass(frozen=True)
class RsUsc:
    """Same drift as RmUsc, but the circle is rebuilt around the moved
    AUV every trial."""

    delta_meters: float
    seed: int = 0


Deployment = Usc | Cube | Random | FixedAnchors
Movement = Static | RmUsc | RsUsc


@dataclass(frozen=True)
class Scenario:
    auv_truth: Position
    deployment: Deployment
    ssp: SoundSpeedProfile
    noise: NoiseModel
    trials: int
    master_seed: int
    movement: Movement = field(default_factory=Static)

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.master_seed < 0:
            raise ValueError("master_seed must be >= 0")
        if isinstance(self.movement, (RmUsc, RsUsc)):
            if self.movement.delta_meters < 0:
                raise ValueError("delta_meters must be >= 0")
            if not isinstance(self.deployment, Usc):
                raise ValueError("movement models are defined for Usc deployments")


class Axis(str, Enum):
    ANCHOR_COUNT = "anchor_count"
    SIGMA_MS = "sigma_ms"
    STEEPNESS_A = "steepness_a"
    DELTA_METERS = "delta_meters"
    SCALE_K = "scale_k"


@dataclass(frozen=True)
class Variant:
    """Per-scheme overrides applied to the base scenario."""

    deployment: Deployment | None = None
    movement: Movement | None = None


@dataclass(frozen=True)
class SweepSpec:
    axis: Axis
    values: tuple[float, ...]
    base: Scenario
    schemes: dict[str, Variant] | None = None

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("sweep needs at least one axis value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("axis values must be strictly increasing")


@dataclass(frozen=True)
class Row:
    axis_name: str
    axis_value: float
    scheme: str
    n_anchors: int
    k: float
    rmse_m: float
    trace_crlb_m2: float
    diverged: int
    trials: int
    seed: int
    note: str = ""


@dataclass(frozen=True)
class ResultTable:
    rows: tuple[Row, ...]


CSV_HEADER = "axis_name,axis_value,scheme,n_anchors,k,rmse_m,trace_crlb_m2,diverged,trials,seed"


# ---------------------------------------------------------------------------
# scenario execution


def _unit_direction(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _resolve_k(dep: Usc, s: Scenario) -> float:
    if dep.scale_k is not None:
        return dep.scale_k
    return optimize_k(s.auv_truth.z, dep.n, s.ssp, s.noise).k_star


def _fixed_layout(s: Scenario) -> tuple[list[Position] | None, float, int]:
    """Anchors shared by all trials, or None when redrawn per trial.

    Returns (anchors, k_used, n_anchors).
    """
    dep = s.deployment
    if isinstance(dep, Usc):
        k = _resolve_k(dep, s)
        return usc_positions(s.auv_truth, dep.n, k), k, dep.n
    if isinstance(dep, Cube):
        d_center, d_side = default_cube_for(s.auv_truth)
        side = dep.side if dep.side is not None else d_side
        center = dep.center if dep.center is not None else d_center
        return cube_positions(center, side, dep.n), float("nan"), dep.n
    if isinstance(dep, Random):
        box = dep.box if dep.box is not None else default_box_for(s.auv_truth)
        if dep.seed is None:
            return None, float("nan"), dep.n
        return random_positions(box, dep.n, dep.seed), float("nan"), dep.n
    return list(dep.anchors), float("nan"), len(dep.anchors)


def _augmented_trace(
    q: np.ndarray,
    p: np.ndarray,
    ssp: SoundSpeedProfile,
    noise: NoiseModel,
    depth_weight: float,
) -> float:
    """Mean over trials of tr((F_tof + depth info)^-1), NaN-tolerant."""
    _, rows = _time_and_rows(q, p, ssp)
    sigma2 = _sigma2_core(noise, _effective_distance(q, p, ssp, noise))
    f = np.einsum("tni,tnj->tij", rows / sigma2[..., None], rows)
    f[:, 2, 2] += depth_weight
    with np.errstate(all="ignore"):
        ok = np.all(np.isfinite(f), axis=(1, 2))
        traces = np.full(len(q), np.nan)
        if ok.any():
            traces[ok] = np.trace(np.linalg.inv(f[ok]), axis1=1, axis2=2)
    return float(np.nanmean(traces))


def _run_mc(s: Scenario) -> tuple[float, float, int, float, int]:
    """One Monte-Carlo execution: (rmse, trace, diverged, k_used, n)."""
    anchors0, k_used, n = _fixed_layout(s)
    move = s.movement
    move_seed = getattr(move, "seed", 0)
    delta = getattr(move, "delta_meters", 0.0)

    if anchors0 is not None:
        # fail fast on layouts that cannot localize at all
        fim(s.auv_truth, anchors0, s.ssp, s.noise)
        p0 = np.array([p.as_array() for p in anchors0])

    truth = np.empty((s.trials, 3))
    anchor_stack = np.empty((s.trials, n, 3))
    rtt = np.empty((s.trials, n))
    depth_meas = np.empty(s.trials)
    auv0 = s.auv_truth.as_array()
    box = None
    if isinstance(s.deployment, Random):
        box = (
            s.deployment.box
            if s.deployment.box is not None
            else default_box_for(s.auv_truth)
        )

    for t in range(s.trials):
        streams = np.random.SeedSequence([s.master_seed, t, move_seed]).spawn(3)
        move_rng = np.random.default_rng(streams[0])
        dep_rng = np.random.default_rng(streams[1])
        noise_rng = np.random.default_rng(streams[2])

        if isinstance(move, (RmUsc, RsUsc)):
            q = auv0 + delta * _unit_direction(move_rng)
            q[2] = max(q[2], 1.0)
        else:
            q = auv0
        if isinstance(move, RsUsc):
            trial_anchors = usc_positions(Position(*q), n, k_used)
            pa = np.array([p.as_array() for p in trial_anchors])
        elif anchors0 is None:
            trial_anchors = random_positions(box, n, dep_rng)
            pa = np.array([p.as_array() for p in trial_anchors])
        else:
            pa = p0

        truth[t] = q
        anchor_stack[t] = pa
        t_true, _ = _time_and_rows(q, pa, s.ssp)
        sigma = np.sqrt(_sigma2_core(s.noise, _effective_distance(q, pa, s.ssp, s.noise)))
        rtt[t] = t_true + noise_rng.normal(0.0, 1.0, n) * sigma
        depth_meas[t] = q[2] + noise_rng.normal(0.0, math.sqrt(DEPTH_NOISE_VAR))

    config = EstimatorConfig()
    q_hat, _, converged, _ = estimate_trials(
        rtt, depth_meas, anchor_stack, s.ssp, s.noise, config
    )
    diverged = int((~converged).sum())
    if converged.any():
        err2 = np.sum((q_hat[converged] - truth[converged]) ** 2, axis=1)
        rmse_val = float(np.sqrt(err2.mean()))
    else:
        raise NoConvergedTrials(f"all {s.trials} trials failed to converge")
    trace = _augmented_trace(truth, anchor_stack, s.ssp, s.noise, config.depth_weight)
    return rmse_val, trace, diverged, k_used, n


def run_scenario(s: Scenario, axis_name: str = "single", axis_value: float = 0.0) -> Row:
    """Execute one scenario and summarize it as a table row."""
    rmse_val, trace, diverged, k_used, n = _run_mc(s)
    return Row(
        axis_name=axis_name,
        axis_value=axis_value,
        scheme=_scheme_label(s.deployment, s.movement),
        n_anchors=n,
        k=k_used,
        rmse_m=rmse_val,
        trace_crlb_m2=trace,
        diverged=diverged,
        trials=s.trials,
        seed=s.master_seed,
    )


def _scheme_label(dep: Deployment, move: Movement) -> str:
    if isinstance(move, RmUsc):
        return "rm-usc"
    if isinstance(move, RsUsc):
        return "rs-usc"
    return {
        Usc: "usc",
        Cube: "cube",
        Random: "random",
        FixedAnchors: "fixed",
    }[type(dep)]


def _apply_axis(s: Scenario, axis: Axis, value: float) -> Scenario:
    if axis is Axis.ANCHOR_COUNT:
        if isinstance(s.deployment, FixedAnchors):
            raise ValueError("anchor-count sweeps need a generated deployment")
        return replace(s, deployment=replace(s.deployment, n=int(value)))
    if axis is Axis.SIGMA_MS:
        if s.noise.kind != "constant_variance":
            raise ValueError("sigma sweeps need the constant-variance noise model")
        return replace(s, noise=replace(s.noise, sigma=value * 1e-3))
    if axis is Axis.STEEPNESS_A:
        return replace(s, ssp=replace(s.ssp, steepness_a=value))
    if axis is Axis.DELTA_METERS:
        if not isinstance(s.movement, (RmUsc, RsUsc)):
            raise ValueError("delta sweeps need a movement model")
        return replace(s, movement=replace(s.movement, delta_meters=value))
    if not isinstance(s.deployment, Usc):
        raise ValueError("radius-scale sweeps need a Usc deployment")
    return replace(s, deployment=replace(s.deployment, scale_k=value))


def _sweep_one(spec: SweepSpec, scheme: str, variant: Variant, value: float) -> Row:
    s = spec.base
    if variant.deployment is not None:
        s = replace(s, deployment=variant.deployment)
    if variant.movement is not None:
        s = replace(s, movement=variant.movement)
    s = _apply_axis(s, spec.axis, value)

    if spec.axis is Axis.SCALE_K:
        # analytic rows: no Monte-Carlo, timing-only closed form
        dep = s.deployment
        trace = k_objective(value, s.auv_truth.z, dep.n, s.ssp, s.noise)
        return Row(
            axis_name=spec.axis.value,
            axis_value=value,
            scheme=scheme,
            n_anchors=dep.n,
            k=value,
            rmse_m=float("nan"),
            trace_crlb_m2=trace,
            diverged=0,
            trials=0,
            seed=s.master_seed,
        )

    try:
        rmse_val, trace, diverged, k_used, n = _run_mc(s)
        return Row(
            axis_name=spec.axis.value,
            axis_value=value,
            scheme=scheme,
            n_anchors=n,
            k=k_used,
            rmse_m=rmse_val,
            trace_crlb_m2=trace,
            diverged=diverged,
            trials=s.trials,
            seed=s.master_seed,
        )
    except AuvgeomError as e:
        return Row(
            axis_name=spec.axis.value,
            axis_value=value,
            scheme=scheme,
            n_anchors=getattr(s.deployment, "n", 0),
            k=float("nan"),
            rmse_m=float("nan"),
            trace_crlb_m2=float("nan"),
            diverged=0,
            trials=s.trials,
            seed=s.master_seed,
            note=f"{type(e).__name__}: {e}",
        )


def sweep(spec: SweepSpec, workers: int = 1) -> ResultTable:
    """Run every (scheme, axis value) cell of the sweep.

    Failed cells become annotated rows instead of aborting the table.
    Results are identical for any worker count: tasks are indexed and
    collected in a fixed order, and all randomness is per-trial seeded.
    """
    schemes = spec.schemes or {_scheme_label(spec.base.deployment, spec.base.movement): Variant()}
    tasks = [
        (scheme, variant, value)
        for scheme, variant in schemes.items()
        for value in spec.values
    ]
    if workers <= 1:
        rows = [_sweep_one(spec, sc, va, v) for sc, va, v in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda t: _sweep_one(spec, *t), tasks))
    return ResultTable(rows=tuple(rows))


# ---------------------------------------------------------------------------
# export


def _csv_num(v: float) -> str:
    # repr() keeps the shortest digits that round-trip exactly
    return repr(float(v))


def _row_line(r: Row) -> str:
    return ",".join(
        [
            r.axis_name,
            _csv_num(r.axis_value),
            r.scheme,
            str(r.n_anchors),
            _csv_num(r.k),
            _csv_num(r.rmse_m),
            _csv_num(r.trace_crlb_m2),
            str(r.diverged),
            str(r.trials),
            str(r.seed),
        ]
    )


def csv_text(table: ResultTable, comments: tuple[str, ...] = ()) -> str:
    """Render the table to CSV, with '#' metadata and divergence flags."""
    lines = [f"# {c}" for c in comments]
    lines.append(CSV_HEADER)
    for r in table.rows:
        if r.note:
            lines.append(f"# note: {r.scheme}@{_csv_num(r.axis_value)} {r.note}")
        if r.trials > 0 and r.diverged > DIVERGENCE_FLAG_FRACTION * r.trials:
            lines.append(
                f"# WARNING: {r.scheme}@{_csv_num(r.axis_value)} diverged on "
                f"{r.diverged}/{r.trials} trials"
            )
        lines.append(_row_line(r))
    return "\n".join(lines) + "\n"


def export_csv(table: ResultTable, path: str, comments: tuple[str, ...] = ()) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(csv_text(table, comments))
    except OSError as e:
        raise OSError(f"cannot write CSV to {path!r}: {e}") from e


def load_csv(path: str) -> ResultTable:
    """Parse a CSV written by export_csv; '#' lines are skipped."""
    rows = []
    try:
        with open(path, encoding="utf-8") as f:
            lines = [ln.rstrip("\n") for ln in f if ln.strip()]
    except OSError as e:
        raise OSError(f"cannot read CSV from {path!r}: {e}") from e
    data = [ln for ln in lines if not ln.startswith("#")]
    if not data or data[0] != CSV_HEADER:
        raise ValueError(f"{path!r} does not carry the expected header")
    for ln in data[1:]:
        parts = ln.split(",")
        rows.append(
            Row(
                axis_name=parts[0],
                axis_value=float(parts[1]),
                scheme=parts[2],
                n_anchors=int(parts[3]),
                k=float(parts[4]),
                rmse_m=float(parts[5]),
                trace_crlb_m2=float(parts[6]),
                diverged=int(parts[7]),
                trials=int(parts[8]),
                seed=int(parts[9]),
            )
        )
    return ResultTable(rows=tuple(rows))


_AXIS_LABEL = {
    Axis.ANCHOR_COUNT: "number of anchors",
    Axis.SIGMA_MS: "timing noise sigma [ms]",
    Axis.STEEPNESS_A: "sound speed steepness [1/s]",
    Axis.DELTA_METERS: "AUV displacement [m]",
    Axis.SCALE_K: "radius scale k",
}


def emit_plot(table: ResultTable, spec: SweepSpec | None, path: str) -> None:
    """Write an SVG chart of the table: one line per scheme.

    Plots RMSE when the table has any, otherwise the CRLB trace.  The
    y-axis switches to log scale when values span two decades or more.
    spec None labels the x axis from the rows themselves.
    """
    if not table.rows:
        raise EmptyTable("nothing to plot")
    use_rmse = any(math.isfinite(r.rmse_m) for r in table.rows)
    series: dict[str, list[tuple[float, float]]] = {}
    for r in table.rows:
        y = r.rmse_m if use_rmse else r.trace_crlb_m2
        if math.isfinite(y):
            series.setdefault(r.scheme, []).append((r.axis_value, y))
    if not series:
        raise EmptyTable("no finite values to plot")
    ys = [y for data in series.values() for _, y in data]
    log_y = min(ys) > 0 and max(ys) / min(ys) >= 100.0
    if spec is not None:
        x_label = _AXIS_LABEL.get(spec.axis, spec.axis.value)
    else:
        x_label = table.rows[0].axis_name
    svg = _svg.polyline_chart(
        [(name, data) for name, data in series.items()],
        x_label=x_label,
        y_label="RMSE [m]" if use_rmse else "tr(CRLB) [m^2]",
        log_y=log_y,
    )
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(svg)
    except OSError as e:
        raise OSError(f"cannot write SVG to {path!r}: {e}") from e


# ---------------------------------------------------------------------------
# figure presets


DEFAULT_SSP = SoundSpeedProfile(surface_speed_b=1480.0, steepness_a=0.1)
DEFAULT_TRIALS = 2000


def fig3_spec(master_seed: int = 0) -> SweepSpec:
    """CRLB trace against the radius scale for 4..8 anchors."""
    base = Scenario(
        auv_truth=Position(50.0, 50.0, 50.0),
        deployment=Usc(scale_k=1.0, n=4),
        ssp=DEFAULT_SSP,
        noise=NoiseModel.distance_dependent(),
        trials=1,
        master_seed=master_seed,
    )
    values = tuple(round(0.5 + 0.05 * i, 2) for i in range(21))
    schemes = {f"usc-n{n}": Variant(deployment=Usc(scale_k=1.0, n=n)) for n in range(4, 9)}
    return SweepSpec(axis=Axis.SCALE_K, values=values, base=base, schemes=schemes)


def _fig4_spec(auv: Position, master_seed: int, trials: int) -> SweepSpec:
    base = Scenario(
        auv_truth=auv,
        deployment=Usc(scale_k=None, n=4),
        ssp=DEFAULT_SSP,
        noise=NoiseModel.distance_dependent(),
        trials=trials,
        master_seed=master_seed,
    )
    schemes = {
        "usc": Variant(deployment=Usc(scale_k=None, n=4)),
        "cube": Variant(deployment=Cube()),
        "random": Variant(deployment=Random(seed=None)),
    }
    return SweepSpec(
        axis=Axis.ANCHOR_COUNT, values=(4.0, 5.0, 6.0, 7.0, 8.0), base=base, schemes=schemes
    )


def fig4a_spec(master_seed: int = 0, trials: int = DEFAULT_TRIALS) -> SweepSpec:
    """RMSE against anchor count, three schemes, shallow scene."""
    return _fig4_spec(Position(50.0, 50.0, 50.0), master_seed, trials)


def fig4b_spec(master_seed: int = 0, trials: int = DEFAULT_TRIALS) -> SweepSpec:
    """Same comparison with the AUV at (100, 100, 100)."""
    return _fig4_spec(Position(100.0, 100.0, 100.0), master_seed, trials)


def _rescale_to_mean_range(
    anchors: list[Position], auv: Position, target_mean: float
) -> tuple[Position, ...]:
    a0 = auv.as_array()
    pts = np.array([p.as_array() for p in anchors])
    ranges = np.linalg.norm(pts - a0, axis=1)
    s = target_mean / ranges.mean()
    scaled = a0 + s * (pts - a0)
    return tuple(Position(*row) for row in scaled)


def fig5_spec(master_seed: int = 0, trials: int = DEFAULT_TRIALS) -> SweepSpec:
    """RMSE against timing noise at matched mean anchor-AUV distance.

    The three layouts are frozen up front and radially rescaled about
    the AUV so each has the same mean anchor distance, which isolates
    the geometry effect from the plain range effect.
    """
    auv = Position(50.0, 50.0, 50.0)
    noise = NoiseModel.constant_variance(1e-3)
    k5 = optimize_k(auv.z, 8, DEFAULT_SSP, noise).k_star
    usc = usc_positions(auv, 8, k5)
    mean_range = float(
        np.mean(
            [np.linalg.norm(p.as_array() - auv.as_array()) for p in usc]
        )
    )
    center, side = default_cube_for(auv)
    cube = _rescale_to_mean_range(cube_positions(center, side, 8), auv, mean_range)
    rand = _rescale_to_mean_range(
        random_positions(default_box_for(auv), 8, master_seed), auv, mean_range
    )
    base = Scenario(
        auv_truth=auv,
        deployment=FixedAnchors(tuple(usc)),
        ssp=DEFAULT_SSP,
        noise=noise,
        trials=trials,
        master_seed=master_seed,
    )
    schemes = {
        "usc": Variant(deployment=FixedAnchors(tuple(usc))),
        "cube": Variant(deployment=FixedAnchors(cube)),
        "random": Variant(deployment=FixedAnchors(rand)),
    }
    return SweepSpec(
        axis=Axis.SIGMA_MS, values=(0.1, 0.5, 1.0, 5.0, 10.0), base=base, schemes=schemes
    )


def fig6_spec(master_seed: int = 0, trials: int = DEFAULT_TRIALS) -> SweepSpec:
    """Frozen-anchor vs tracking-anchor robustness to AUV displacement."""
    auv = Position(50.0, 50.0, 50.0)
    noise = NoiseModel.constant_variance(1e-3)
    k6 = optimize_k(auv.z, 8, DEFAULT_SSP, noise).k_star
    base = Scenario(
        auv_truth=auv,
        deployment=Usc(scale_k=k6, n=8),
        ssp=DEFAULT_SSP,
        noise=noise,
        trials=trials,
        master_seed=master_seed,
        movement=RmUsc(0.0),
    )
    schemes = {
        "rm-usc": Variant(movement=RmUsc(0.0)),
        "rs-usc": Variant(movement=RsUsc(0.0)),
    }
    return SweepSpec(
        axis=Axis.DELTA_METERS,
        values=(0.0, 100.0, 200.0, 300.0, 400.0, 500.0),
        base=base,
        schemes=schemes,
    )


FIGURE_SPECS = {
    "3": fig3_spec,
    "4a": fig4a_spec,
    "4b": fig4b_spec,
    "5": fig5_spec,
    "6": fig6_spec,
}
