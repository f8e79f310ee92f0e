"""Measurement noise, travel-time Jacobian, Fisher information, and CRLB.

The measurement vector stacks one bent-ray travel time per anchor.  With
independent zero-mean Gaussian timing errors of variance sigma_i^2 the
Fisher information matrix for the AUV position is

    FIM = J^T Sigma^{-1} J,    Sigma = diag(sigma_i^2),

where row i of J is the gradient of travel time t_i with respect to the
AUV coordinates.  That gradient has the closed form

    (2 sin(alpha_i) / (a r_i)) * (cos(phi_i), sin(phi_i), tan(theta_i - alpha_i))

and, equivalently, a chain-rule assembly through the intermediate angles
theta and alpha.  ``fim`` additionally rebuilds the matrix from direct
entrywise sums over the per-anchor angles and verifies the two routes
agree to 1e-10 relative before inverting; the 3x3 inverse goes through
the explicit adjugate so results are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGeometry,
    SingularFim,
    TooFewAnchors,
    ZeroDiagonal,
)
from .geometry import (
    COINCIDENT_TOL,
    Position,
    SoundSpeedProfile,
    arc_length,
    bearing,
    deviation_angle,
    elevation_angle,
    horizontal_range,
)

DEGENERACY_TOL = 1e-12
CONDITION_LIMIT = 1e12

KIND_CONSTANT = "constant_variance"
KIND_DISTANCE = "distance_dependent"


@dataclass(frozen=True)
class NoiseModel:
    """Timing-error model for the ToF measurements.

    kind "constant_variance" uses sigma (seconds) for every anchor.  kind
    "distance_dependent" converts an energy-to-noise floor ke_db plus the
    path loss

        A_db(l) = 10 * beta * log10(l / l0) + (l - l0) * l_f_db_per_km / 1000

    into a variance sigma^2 = 10^((ke_db + A_db)/10), in squared seconds
    by convention (the decibel reading of the model; see README).
    frequency_f is carried as metadata only, absorption being supplied
    directly through l_f_db_per_km.  use_arc_length selects the bent-ray
    arc length instead of the straight slant range as the distance
    argument; the two differ by well under 0.1% at the geometries here.
    """

    kind: str = KIND_DISTANCE
    sigma: float = 1e-3
    ke_db: float = -10.0
    beta: float = 2.0
    l0: float = 1000.0
    l_f_db_per_km: float = 1.0
    frequency_f: float | None = None
    use_arc_length: bool = False

    def __post_init__(self) -> None:
        if self.kind not in (KIND_CONSTANT, KIND_DISTANCE):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == KIND_CONSTANT and not self.sigma > 0.0:
            raise ValueError("sigma must be positive")
        if not 1.0 <= self.beta <= 2.0:
            raise ValueError("beta must lie in [1, 2]")
        if not self.l0 > 0.0:
            raise ValueError("l0 must be positive")

    @staticmethod
    def constant_variance(sigma: float) -> "NoiseModel":
        return NoiseModel(kind=KIND_CONSTANT, sigma=sigma)

    @staticmethod
    def distance_dependent(
        ke_db: float = -10.0,
        beta: float = 2.0,
        l0: float = 1000.0,
        l_f_db_per_km: float = 1.0,
        frequency_f: float | None = None,
        use_arc_length: bool = False,
    ) -> "NoiseModel":
        return NoiseModel(
            kind=KIND_DISTANCE,
            ke_db=ke_db,
            beta=beta,
            l0=l0,
            l_f_db_per_km=l_f_db_per_km,
            frequency_f=frequency_f,
            use_arc_length=use_arc_length,
        )


@dataclass(frozen=True)
class FimResult:
    """Fisher matrix, its inverse, and diagnostic scalars.

    offdiag_residual is max |F_jk| over j != k divided by max |F_jj|; it
    is the numerical witness of layout diagonality.
    """

    fim: np.ndarray
    crlb: np.ndarray
    trace_crlb: float
    offdiag_residual: float


def _sigma2_core(noise: NoiseModel, distance_l):
    # vectorized variance; distance_l may be an array
    if noise.kind == KIND_CONSTANT:
        s2 = noise.sigma ** 2
        return np.full(np.shape(distance_l), s2) if np.ndim(distance_l) else s2
    l = np.asarray(distance_l, dtype=float)
    a_db = 10.0 * noise.beta * np.log10(l / noise.l0) + (l - noise.l0) * (
        noise.l_f_db_per_km / 1000.0
    )
    out = np.power(10.0, (noise.ke_db + a_db) / 10.0)
    return out if np.ndim(distance_l) else float(out)


def noise_variance(noise: NoiseModel, distance_l: float) -> float:
    """Timing variance sigma^2 in s^2 at the given distance in meters."""
    if not distance_l > 0.0:
        raise ValueError("distance_l must be positive")
    return float(_sigma2_core(noise, distance_l))


def _anchor_distance(q: Position, p: Position, ssp: SoundSpeedProfile, noise: NoiseModel) -> float:
    if noise.use_arc_length:
        return arc_length(q, p, ssp)
    return math.hypot(horizontal_range(q, p), q.z - p.z)


def jacobian_row(
    q: Position, p: Position, ssp: SoundSpeedProfile, method: str = "closed"
) -> tuple[float, float, float]:
    """Gradient of the travel time with respect to the AUV coordinates.

    method "closed" evaluates

        (2 sin(alpha) / (a r)) * (cos(phi), sin(phi), tan(theta - alpha)),

    method "chain" assembles the same vector through the partials of t
    with respect to theta and alpha and of those angles with respect to
    position.  The two agree to machine precision and are cross-checked
    in the test suite.  Raises DegenerateGeometry when the horizontal
    range vanishes or |cos^2(theta) - sin^2(alpha)| < 1e-12 (the chain
    denominators vanish there).
    """
    d = horizontal_range(q, p)
    if d <= COINCIDENT_TOL:
        raise DegenerateGeometry("zero horizontal range")
    theta = elevation_angle(q, p)
    alpha = deviation_angle(q, p, ssp)
    denom = math.cos(theta) ** 2 - math.sin(alpha) ** 2
    if abs(denom) < DEGENERACY_TOL:
        raise DegenerateGeometry(
            f"|cos^2(theta) - sin^2(alpha)| = {abs(denom):.3e} below tolerance"
        )
    a = ssp.steepness_a
    phi = bearing(q, p)
    r = math.hypot(d, q.z - p.z)

    if method == "closed":
        scale = 2.0 * math.sin(alpha) / (a * r)
        return (
            scale * math.cos(phi),
            scale * math.sin(phi),
            scale * math.tan(theta - alpha),
        )
    if method == "chain":
        l = math.hypot(d, 2.0 * ssp.surface_speed_b / a + q.z + p.z)
        dt_dtheta = 2.0 * math.sin(theta) * math.sin(alpha) / (a * denom)
        dt_dalpha = 2.0 * math.cos(theta) * math.cos(alpha) / (a * denom)
        dtheta = (-math.sin(theta) * math.cos(phi) / r,
                  -math.sin(theta) * math.sin(phi) / r,
                  math.cos(theta) / r)
        dalpha = (math.cos(alpha) * math.cos(phi) / l,
                  math.cos(alpha) * math.sin(phi) / l,
                  -math.sin(alpha) / l)
        return tuple(
            dt_dtheta * dth + dt_dalpha * dal for dth, dal in zip(dtheta, dalpha)
        )
    raise ValueError(f"unknown method {method!r}")


def jacobian(q: Position, anchors: list[Position], ssp: SoundSpeedProfile) -> np.ndarray:
    """Stack jacobian_row over the anchor list into an (N, 3) array.

    Requires at least four anchors; row errors are re-raised with the
    offending anchor index prepended.
    """
    if len(anchors) < 4:
        raise TooFewAnchors(f"need at least 4 anchors, got {len(anchors)}")
    rows = np.empty((len(anchors), 3), dtype=float)
    for i, p in enumerate(anchors):
        try:
            rows[i] = jacobian_row(q, p, ssp)
        except DegenerateGeometry as exc:
            raise DegenerateGeometry(f"anchor {i}: {exc}") from exc
    return rows


def _invert3(m: np.ndarray) -> tuple[np.ndarray, float]:
    # explicit adjugate inverse of a 3x3 matrix; returns (inverse, det)
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    co = np.array(
        [
            [e * i - f * h, c * h - b * i, b * f - c * e],
            [f * g - d * i, a * i - c * g, c * d - a * f],
            [d * h - e * g, b * g - a * h, a * e - b * d],
        ]
    )
    det = a * co[0, 0] + b * co[1, 0] + c * co[2, 0]
    return co / det, det


def fim(
    q: Position,
    anchors: list[Position],
    ssp: SoundSpeedProfile,
    noise: NoiseModel,
) -> FimResult:
    """Fisher information and CRLB for one AUV position and anchor set.

    Assembles J^T Sigma^{-1} J, rebuilds the same matrix from the direct
    entrywise angle sums (prefactor 4/a^2, e.g.
    psi_11 = (4/a^2) * sum sin^2(alpha) cos^2(theta) cos^2(phi) / (d^2 sigma^2)),
    and asserts the two agree to 1e-10 relative.  The CRLB is the
    adjugate 3x3 inverse, refused with SingularFim when the condition
    number exceeds 1e12.
    """
    rows = jacobian(q, anchors, ssp)
    sigma2 = np.array([
        noise_variance(noise, _anchor_distance(q, p, ssp, noise)) for p in anchors
    ])
    fim_rows = rows.T @ (rows / sigma2[:, None])

    # independent entrywise assembly from the per-anchor angles
    a = ssp.steepness_a
    d = np.array([horizontal_range(q, p) for p in anchors])
    theta = np.array([elevation_angle(q, p) for p in anchors])
    alpha = np.array([deviation_angle(q, p, ssp) for p in anchors])
    phi = np.array([bearing(q, p) for p in anchors])
    w = np.sin(alpha) ** 2 * np.cos(theta) ** 2 / (d ** 2 * sigma2)
    tz = np.tan(theta - alpha)
    pre = 4.0 / a ** 2
    psi = np.empty((3, 3))
    psi[0, 0] = pre * np.sum(w * np.cos(phi) ** 2)
    psi[1, 1] = pre * np.sum(w * np.sin(phi) ** 2)
    psi[2, 2] = pre * np.sum(w * tz ** 2)
    psi[0, 1] = psi[1, 0] = pre * np.sum(w * np.cos(phi) * np.sin(phi))
    psi[0, 2] = psi[2, 0] = pre * np.sum(w * np.cos(phi) * tz)
    psi[1, 2] = psi[2, 1] = pre * np.sum(w * np.sin(phi) * tz)

    scale = np.abs(fim_rows).max()
    assert np.abs(fim_rows - psi).max() <= 1e-10 * scale, (
        "matrix-product and entrywise FIM assemblies disagree"
    )

    offdiag = max(
        abs(psi[0, 1]), abs(psi[0, 2]), abs(psi[1, 2])
    ) / max(psi[0, 0], psi[1, 1], psi[2, 2])

    cond = np.linalg.cond(psi)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularFim(f"FIM condition number {cond:.3e} exceeds {CONDITION_LIMIT:.0e}")
    crlb, _ = _invert3(psi)
    crlb = 0.5 * (crlb + crlb.T)  # symmetrize roundoff
    return FimResult(
        fim=psi,
        crlb=crlb,
        trace_crlb=float(np.trace(crlb)),
        offdiag_residual=float(offdiag),
    )


def diagonal_lower_bound(result: FimResult) -> float:
    """Sum of reciprocal Fisher diagonals, a lower bound on trace_crlb.

    Equals trace_crlb exactly when the FIM is diagonal.  Raises
    ZeroDiagonal when a diagonal entry vanishes.
    """
    diag = np.diagonal(result.fim)
    if np.any(diag == 0.0):
        raise ZeroDiagonal("a diagonal Fisher entry is zero")
    return float(np.sum(1.0 / diag))


def _time_and_rows(q_xyz: np.ndarray, p_xyz: np.ndarray, ssp: SoundSpeedProfile):
    """Vectorized travel times and Jacobian rows for batched estimation.

    q_xyz broadcasts as (..., 3) and p_xyz as (..., N, 3); returns
    (t, rows) with shapes (..., N) and (..., N, 3).  Entries are NaN
    wherever the pair is vertical, grazing, or chain-degenerate, so the
    caller can treat invalid geometry as an infinite-cost region.
    """
    b = ssp.surface_speed_b
    a = ssp.steepness_a
    dx = q_xyz[..., None, 0] - p_xyz[..., 0]
    dy = q_xyz[..., None, 1] - p_xyz[..., 1]
    zq = q_xyz[..., None, 2]
    zp = p_xyz[..., 2]
    d = np.hypot(dx, dy)
    dz = zq - zp
    r = np.hypot(d, dz)
    axial = 2.0 * b / a + zq + zp
    theta = np.arctan2(dz, d)
    alpha = np.arctan2(d, axial)
    hi = theta + alpha
    lo = theta - alpha
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        cos_hi = np.cos(hi)
        cos_lo = np.cos(lo)
        denom = np.cos(theta) ** 2 - np.sin(alpha) ** 2
        bad = (
            (d <= COINCIDENT_TOL)
            | (cos_hi <= 1e-12)
            | (cos_lo <= 1e-12)
            | (np.abs(denom) < DEGENERACY_TOL)
        )
        t = (np.arcsinh(np.tan(hi)) - np.arcsinh(np.tan(lo))) / a
        scale = 2.0 * np.sin(alpha) / (a * r)
        rows = np.stack(
            [
                scale * dx / d,
                scale * dy / d,
                scale * np.tan(lo),
            ],
            axis=-1,
        )
        t = np.where(bad, np.nan, t)
        rows = np.where(bad[..., None], np.nan, rows)
    return t, rows


def _slant_range(q_xyz: np.ndarray, p_xyz: np.ndarray) -> np.ndarray:
    """Straight-line distances, q as (..., 3) against anchors (..., N, 3)."""
    diff = q_xyz[..., None, :] - p_xyz
    return np.sqrt(np.sum(diff ** 2, axis=-1))
