"""Measurement simulation and Gauss-Newton position estimation.

Measurements are one-way travel times under the bent-ray model plus a
depth-sensor reading with 1 m^2 Gaussian noise.  The estimator runs
iterated Gauss-Newton on the weighted least-squares cost

    sum_i (rtt_i - t_i(q))^2 / sigma_i^2 + w * (depth_meas - q_z)^2,

which for a static position is algebraically the iterated-EKF
measurement update.  Timing weights are re-evaluated at the current
iterate when the noise model is distance dependent.  The whole solver is
vectorized over a batch of samples so Monte-Carlo sweeps pay one numpy
pass instead of a Python loop per trial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateGeometry,
    NoConvergedTrials,
    SingularNormalMatrix,
    TooFewAnchors,
)
from .fisher import NoiseModel, _sigma2_core, _time_and_rows
from .geometry import Position, SoundSpeedProfile

DEPTH_NOISE_VAR = 1.0  # m^2, depth-sensor error variance

BACKTRACK_LIMIT = 15
DIVERGENCE_SPAN_FACTOR = 10.0
# Rounding noise on the whitened cost: travel times carry a few 1e-15 s
# of absolute error, and dividing by millisecond sigmas lifts that to
# ~1e-11 on the summed cost.  Accepting steps within this slack keeps
# the line search from rejecting every move near the optimum; accepted
# uphill drift is bounded by slack * max_iterations.
SSE_SLACK = 1e-9
# Distance-dependent weights make the reweighted iteration a fixed-point
# map that can settle into a stable two-point cycle at high noise.  A
# step that reverses direction against the previous one halves a
# per-sample damping factor (recovered on forward steps), which turns
# the cycle into a contraction toward the fixed point in between.
DAMPING_FLOOR = 1.0 / 1024.0


@dataclass(frozen=True)
class TruthPerturbed:
    """Diagnostic start: truth plus an offset of exact length radius_m."""

    radius_m: float
    seed: int


@dataclass(frozen=True)
class FixedPoint:
    position: Position


@dataclass(frozen=True)
class DepthAnchored:
    """Start at the anchors' horizontal centroid, depth from the sensor."""


@dataclass(frozen=True)
class EstimatorConfig:
    # 0.1 mm stopping tolerance: far below any acoustic ranging error,
    # yet reachable in ~10-30 damped reweighted steps at heavy noise.
    max_iterations: int = 100
    position_tolerance: float = 1e-4
    initial_guess: TruthPerturbed | FixedPoint | DepthAnchored = field(
        default_factory=DepthAnchored
    )
    depth_weight: float = 1.0 / DEPTH_NOISE_VAR

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.position_tolerance > 0:
            raise ValueError("position_tolerance must be positive")
        if self.depth_weight < 0:
            raise ValueError("depth_weight must be >= 0")


@dataclass(frozen=True)
class MeasurementSample:
    rtt: tuple[float, ...]
    depth_meas: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.rtt):
            raise ValueError("travel times must be finite")


@dataclass(frozen=True)
class EstimateResult:
    q_hat: Position
    iterations: int
    converged: bool
    final_residual_norm: float


def _effective_distance(
    q_xyz: np.ndarray, p_xyz: np.ndarray, ssp: SoundSpeedProfile, noise: NoiseModel
) -> np.ndarray:
    """Per-pair distance feeding the noise model: slant range, or arc length."""
    diff = q_xyz[..., None, :] - p_xyz
    r = np.sqrt(np.sum(diff ** 2, axis=-1))
    if not noise.use_arc_length:
        return r
    d = np.hypot(diff[..., 0], diff[..., 1])
    axial = 2.0 * ssp.surface_speed_b / ssp.steepness_a + q_xyz[..., None, 2] + p_xyz[..., 2]
    alpha = np.arctan2(d, axial)
    factor = np.where(alpha > 1e-9, alpha / np.where(alpha > 0, np.sin(alpha), 1.0), 1.0)
    return r * factor


def simulate_measurements(
    q: Position,
    anchors: list[Position],
    ssp: SoundSpeedProfile,
    noise: NoiseModel,
    seed: int | np.random.Generator,
) -> MeasurementSample:
    """One noisy sample: per-anchor timing noise, then the depth reading.

    The draw order (all timing deviates first, depth last) is part of the
    reproducibility contract.  ``seed`` may be a Generator so a harness
    can hand in a stream it controls.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    q_xyz = np.asarray(q.as_array())
    p_xyz = np.array([p.as_array() for p in anchors])
    t, _ = _time_and_rows(q_xyz, p_xyz, ssp)
    if not np.all(np.isfinite(t)):
        raise DegenerateGeometry("invalid ray geometry for at least one anchor")
    sigma = np.sqrt(_sigma2_core(noise, _effective_distance(q_xyz, p_xyz, ssp, noise)))
    rtt = t + rng.normal(0.0, 1.0, len(anchors)) * sigma
    depth = q.z + rng.normal(0.0, math.sqrt(DEPTH_NOISE_VAR))
    return MeasurementSample(rtt=tuple(float(v) for v in rtt), depth_meas=float(depth))


def _initial_points(
    samples_depth: np.ndarray,
    p_b: np.ndarray,
    config: EstimatorConfig,
    truth: Position | None,
    batch: int,
) -> np.ndarray:
    guess = config.initial_guess
    if isinstance(guess, FixedPoint):
        return np.tile(guess.position.as_array(), (batch, 1))
    if isinstance(guess, TruthPerturbed):
        if truth is None:
            raise ValueError("TruthPerturbed initial guess needs the true position")
        rng = np.random.default_rng(guess.seed)
        direction = rng.normal(size=(batch, 3))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        return truth.as_array() + guess.radius_m * direction
    out = np.empty((batch, 3))
    out[:, :2] = p_b[:, :, :2].mean(axis=1)
    out[:, 2] = samples_depth
    return out


def _weighted_sse(
    q: np.ndarray,
    p_xyz: np.ndarray,
    rtt: np.ndarray,
    depth: np.ndarray,
    ssp: SoundSpeedProfile,
    sigma2: np.ndarray,
    w_depth: float,
) -> np.ndarray:
    # sigma2 is frozen at the iterate that produced the step, so the line
    # search descends a fixed objective; re-deriving weights from the
    # candidate would let a good step raise the cost and stall the solver.
    t, _ = _time_and_rows(q, p_xyz, ssp)
    sse = np.sum((rtt - t) ** 2 / sigma2, axis=-1)
    return sse + w_depth * (depth - q[..., 2]) ** 2


def _estimate_batch(
    rtt: np.ndarray,
    depth: np.ndarray,
    anchors,
    ssp: SoundSpeedProfile,
    noise: NoiseModel,
    config: EstimatorConfig,
    truth: Position | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Run every sample's Gauss-Newton iteration in lockstep.

    ``anchors`` is a Position list shared by all samples, an (N, 3)
    array, or an (batch, N, 3) stack giving each sample its own layout.
    Returns (q, iterations, converged, singular, residual_norm).  A
    sample leaves the active set when it converges, diverges, or hits a
    singular normal matrix; finished samples are frozen while the rest
    continue.
    """
    batch, n = rtt.shape
    if n < 4:
        raise TooFewAnchors(f"need at least 4 anchors, got {n}")
    if isinstance(anchors, np.ndarray):
        p_xyz = anchors
    else:
        p_xyz = np.array([p.as_array() for p in anchors])
    p_b = np.broadcast_to(p_xyz, (batch, n, 3)) if p_xyz.ndim == 2 else p_xyz
    if p_b.shape != (batch, n, 3):
        raise ValueError("anchor stack shape does not match the samples")
    max_step = DIVERGENCE_SPAN_FACTOR * np.linalg.norm(
        p_b.max(axis=1) - p_b.min(axis=1), axis=1
    )
    w_depth = config.depth_weight

    q = _initial_points(depth, p_b, config, truth, batch)
    iterations = np.zeros(batch, dtype=int)
    converged = np.zeros(batch, dtype=bool)
    singular = np.zeros(batch, dtype=bool)
    active = np.ones(batch, dtype=bool)
    gamma = np.ones(batch)
    prev_step = np.zeros((batch, 3))

    for _ in range(config.max_iterations):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        qa = q[idx]
        t, rows = _time_and_rows(qa, p_b[idx], ssp)
        sigma2 = _sigma2_core(noise, _effective_distance(qa, p_b[idx], ssp, noise))
        sigma = np.sqrt(sigma2)
        design = rows / sigma[..., None]
        resid = (rtt[idx] - t) / sigma

        # append the depth pseudo-measurement row
        sw = math.sqrt(w_depth)
        depth_row = np.zeros((len(idx), 1, 3))
        depth_row[:, 0, 2] = sw
        design = np.concatenate([design, depth_row], axis=1)
        resid = np.concatenate([resid, (sw * (depth[idx] - qa[:, 2]))[:, None]], axis=1)

        cur_sse = np.sum(resid**2, axis=1)
        jtj = np.einsum("bni,bnj->bij", design, design)
        jtr = np.einsum("bni,bn->bi", design, resid)
        finite = np.all(np.isfinite(jtj), axis=(1, 2))
        with np.errstate(all="ignore"):
            cond = np.full(len(idx), np.inf)
            cond[finite] = np.linalg.cond(jtj[finite])
        bad = ~finite | (cond > 1e12)
        if bad.any():
            singular[idx[bad]] = True
            active[idx[bad]] = False
        good = ~bad
        if not good.any():
            continue
        sub = idx[good]
        delta = np.linalg.solve(jtj[good], jtr[good][..., None])[..., 0]
        iterations[sub] += 1

        reversed_dir = np.einsum("bi,bi->b", prev_step[sub], delta) < 0.0
        gamma[sub] = np.where(
            reversed_dir,
            np.maximum(gamma[sub] * 0.5, DAMPING_FLOOR),
            np.minimum(gamma[sub] * 2.0, 1.0),
        )
        delta = delta * gamma[sub][:, None]
        step_norm = np.linalg.norm(delta, axis=1)
        runaway = step_norm > max_step[sub]
        if runaway.any():
            active[sub[runaway]] = False
        keep = ~runaway
        if not keep.any():
            continue
        sub = sub[keep]
        delta = delta[keep]
        step_norm = step_norm[keep]
        frozen_s2 = sigma2[good][keep]
        ref_sse = cur_sse[good][keep]

        # backtracking: halve the step while the frozen-weight cost worsens
        scale = np.ones(len(sub))
        accepted = np.zeros(len(sub), dtype=bool)
        new_q = q[sub] + delta
        new_sse = _weighted_sse(new_q, p_b[sub], rtt[sub], depth[sub], ssp, frozen_s2, w_depth)
        for _ in range(BACKTRACK_LIMIT):
            ok = ~accepted & (new_sse <= ref_sse + SSE_SLACK * (1.0 + ref_sse))
            accepted |= ok
            if accepted.all():
                break
            rest = ~accepted
            scale[rest] *= 0.5
            new_q[rest] = q[sub[rest]] + scale[rest, None] * delta[rest]
            new_sse[rest] = _weighted_sse(
                new_q[rest], p_b[sub[rest]], rtt[sub[rest]], depth[sub[rest]], ssp,
                frozen_s2[rest], w_depth,
            )
        moved = accepted
        if moved.any():
            ms = sub[moved]
            prev_step[ms] = scale[moved, None] * delta[moved]
            q[ms] = new_q[moved]
            done = scale[moved] * step_norm[moved] <= config.position_tolerance
            converged[ms[done]] = True
            active[ms[done]] = False
        stalled = ~accepted
        if stalled.any():
            # no decrease at float resolution: accept the point as final
            ss = sub[stalled]
            converged[ss] = step_norm[stalled] <= config.position_tolerance
            active[ss] = False

    with np.errstate(invalid="ignore"):
        t_final, _ = _time_and_rows(q, p_b, ssp)
        resid_norm = np.sqrt(np.sum((rtt - t_final) ** 2, axis=1))
    return q, iterations, converged, singular, resid_norm


def estimate_position(
    sample: MeasurementSample,
    anchors: list[Position],
    ssp: SoundSpeedProfile,
    noise: NoiseModel,
    config: EstimatorConfig | None = None,
    truth: Position | None = None,
) -> EstimateResult:
    """Estimate one position from one sample.

    ``truth`` is only consulted by the TruthPerturbed diagnostic start.
    Raises SingularNormalMatrix when the normal equations are singular at
    some iterate; divergence is reported through converged=False.
    """
    cfg = config or EstimatorConfig()
    if len(sample.rtt) != len(anchors):
        raise ValueError("sample length does not match anchor count")
    rtt = np.array([sample.rtt])
    depth = np.array([sample.depth_meas])
    q, iters, conv, singular, resid = _estimate_batch(
        rtt, depth, anchors, ssp, noise, cfg, truth
    )
    if singular[0]:
        raise SingularNormalMatrix("normal matrix numerically singular")
    return EstimateResult(
        q_hat=Position(*q[0]),
        iterations=int(iters[0]),
        converged=bool(conv[0]),
        final_residual_norm=float(resid[0]),
    )


def estimate_positions(
    samples: list[MeasurementSample],
    anchors: list[Position],
    ssp: SoundSpeedProfile,
    noise: NoiseModel,
    config: EstimatorConfig | None = None,
    truth: Position | None = None,
) -> list[EstimateResult]:
    """Batched variant of estimate_position for Monte-Carlo runs.

    Singular trials come back as non-converged results instead of
    raising, so one bad draw cannot abort a sweep.
    """
    cfg = config or EstimatorConfig()
    if not samples:
        return []
    rtt = np.array([s.rtt for s in samples])
    depth = np.array([s.depth_meas for s in samples])
    q, iters, conv, singular, resid = _estimate_batch(
        rtt, depth, anchors, ssp, noise, cfg, truth
    )
    conv = conv & ~singular
    return [
        EstimateResult(
            q_hat=Position(*q[i]),
            iterations=int(iters[i]),
            converged=bool(conv[i]),
            final_residual_norm=float(resid[i]),
        )
        for i in range(len(samples))
    ]


def estimate_trials(
    rtt: np.ndarray,
    depth: np.ndarray,
    anchor_stack: np.ndarray,
    ssp: SoundSpeedProfile,
    noise: NoiseModel,
    config: EstimatorConfig | None = None,
    truth: Position | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Array-in, array-out batch solve for Monte-Carlo harnesses.

    rtt is (trials, N), depth (trials,), anchor_stack (N, 3) shared or
    (trials, N, 3) per trial.  Returns (q_hat, iterations, converged,
    singular); singular trials are non-converged rather than raised.
    """
    cfg = config or EstimatorConfig()
    q, iters, conv, singular, _ = _estimate_batch(
        np.asarray(rtt, dtype=float),
        np.asarray(depth, dtype=float),
        np.asarray(anchor_stack, dtype=float),
        ssp,
        noise,
        cfg,
        truth,
    )
    return q, iters, conv & ~singular, singular


def rmse(estimates: list[EstimateResult], truth: Position) -> float:
    """Root-mean-square position error over the converged estimates.

    Non-converged entries are skipped; callers report their count
    separately.  Raises NoConvergedTrials when nothing converged.
    """
    tx = truth.as_array()
    sq = [
        float(np.sum((e.q_hat.as_array() - tx) ** 2))
        for e in estimates
        if e.converged
    ]
    if not sq:
        raise NoConvergedTrials("no converged estimates to average")
    return math.sqrt(sum(sq) / len(sq))
