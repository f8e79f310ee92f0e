import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auvgeom.errors import (
    GrazingRay,
    NoEigenray,
    VerticalRay,
    ZeroHorizontalRange,
)
from auvgeom.geometry import (
    Position,
    SoundSpeedProfile,
    arc_length,
    aux_l,
    bearing,
    deviation_angle,
    elevation_angle,
    horizontal_range,
    ray_geometry,
    ray_travel_time,
    snell_travel_time_oracle,
    sound_speed,
)

SSP = SoundSpeedProfile(1480.0, 0.1)

# Frozen 50-digit evaluations of the ln-form travel time (independent
# high-precision route), rounded to float64.
T_CANONICAL = 0.044046779716597165669  # q=(50,50,50), p=(92,50,0)
T_DEEP = 0.27749628256273256284  # q=(200,-100,300), p=(-50,40,0)
T_CONST_LIMIT = 0.067570943578688586973  # b=1480, a=1e-6, d=1, dz=100


def scene_positions(min_z=0.0, max_z=1000.0):
    coord = st.floats(-2000.0, 2000.0)
    depth = st.floats(min_z, max_z)
    return st.builds(Position, coord, coord, depth)


@st.composite
def separated_pairs(draw, min_d=10.0):
    q = draw(scene_positions())
    p = draw(scene_positions())
    d = horizontal_range(q, p)
    if d < min_d:
        # push p horizontally away from q instead of rejecting the draw
        phi = draw(st.floats(-math.pi, math.pi))
        p = Position(q.x + min_d * math.cos(phi) + (p.x - q.x),
                     q.y + min_d * math.sin(phi) + (p.y - q.y), p.z)
    return q, p


class TestSoundSpeed:
    def test_surface(self):
        assert sound_speed(SSP, 0.0) == 1480.0

    def test_linear(self):
        assert sound_speed(SSP, 50.0) == pytest.approx(1485.0, abs=1e-12)
        assert sound_speed(SoundSpeedProfile(1500.0, 0.2), 1000.0) == pytest.approx(1700.0)

    def test_profile_validation(self):
        with pytest.raises(ValueError):
            SoundSpeedProfile(-1.0, 0.1)
        with pytest.raises(ValueError):
            SoundSpeedProfile(1480.0, 0.0)

    def test_negative_speed_rejected(self):
        with pytest.raises(ValueError):
            sound_speed(SSP, -20000.0)


class TestHorizontalRangeAndBearing:
    def test_coincident_horizontal(self):
        assert horizontal_range(Position(50, 50, 50), Position(50, 50, 0)) == 0.0

    def test_three_four_five(self):
        assert horizontal_range(Position(3, 4, 10), Position(0, 0, 0)) == pytest.approx(5.0)

    def test_bearing_axes(self):
        assert bearing(Position(1, 0, 5), Position(0, 0, 0)) == 0.0
        assert bearing(Position(0, 1, 5), Position(0, 0, 0)) == pytest.approx(math.pi / 2)
        assert bearing(Position(-1, -1, 5), Position(0, 0, 0)) == pytest.approx(-3 * math.pi / 4)

    def test_bearing_zero_range(self):
        with pytest.raises(ZeroHorizontalRange):
            bearing(Position(0, 0, 50), Position(0, 0, 0))

    @given(separated_pairs())
    def test_bearing_interval(self, pair):
        q, p = pair
        phi = bearing(q, p)
        assert -math.pi < phi <= math.pi


class TestAngles:
    def test_elevation_horizontal(self):
        assert elevation_angle(Position(10, 0, 5), Position(0, 0, 5)) == 0.0

    def test_elevation_45(self):
        assert elevation_angle(Position(0, 0, 50), Position(50, 0, 0)) == pytest.approx(math.pi / 4)

    def test_elevation_canonical(self):
        got = elevation_angle(Position(50, 50, 50), Position(92, 50, 0))
        assert got == pytest.approx(math.atan(50.0 / 42.0), rel=1e-15)

    def test_elevation_vertical(self):
        with pytest.raises(VerticalRay):
            elevation_angle(Position(0, 0, 50), Position(0, 0, 0))

    def test_deviation_vertical_is_zero(self):
        assert deviation_angle(Position(0, 0, 50), Position(0, 0, 0), SSP) == 0.0

    def test_deviation_canonical(self):
        got = deviation_angle(Position(50, 50, 50), Position(92, 50, 0), SSP)
        assert got == pytest.approx(math.atan(42.0 / 29650.0), rel=1e-15)

    def test_deviation_small_steepness(self):
        ssp = SoundSpeedProfile(1480.0, 1e-6)
        assert deviation_angle(Position(0, 0, 50), Position(100, 0, 0), ssp) < 1e-7

    @given(st.floats(1.0, 5000.0), st.floats(1.0, 5000.0), st.floats(0.0, 500.0), st.floats(0.0, 500.0))
    def test_deviation_monotone_in_d(self, d1, d2, zq, zp):
        lo, hi = sorted((d1, d2))
        a_lo = deviation_angle(Position(lo, 0, zq), Position(0, 0, zp), SSP)
        a_hi = deviation_angle(Position(hi, 0, zq), Position(0, 0, zp), SSP)
        assert a_lo <= a_hi
        assert 0.0 <= a_lo < math.pi / 2

    def test_aux_l_origin(self):
        assert aux_l(Position(0, 0, 0), Position(0, 0, 0), SSP) == pytest.approx(29600.0)

    def test_aux_l_canonical(self):
        got = aux_l(Position(50, 50, 50), Position(92, 50, 0), SSP)
        assert got == pytest.approx(math.hypot(42.0, 29650.0), rel=1e-15)

    @given(separated_pairs(min_d=0.0))
    def test_aux_l_floor(self, pair):
        q, p = pair
        assert aux_l(q, p, SSP) >= 2 * SSP.surface_speed_b / SSP.steepness_a


class TestTravelTime:
    def test_coincident_is_zero(self):
        assert ray_travel_time(Position(7, -3, 20), Position(7, -3, 20), SSP) == 0.0

    def test_canonical_frozen(self):
        t = ray_travel_time(Position(50, 50, 50), Position(92, 50, 0), SSP)
        assert t == pytest.approx(T_CANONICAL, rel=1e-12)

    def test_deep_frozen(self):
        t = ray_travel_time(Position(200, -100, 300), Position(-50, 40, 0), SSP)
        assert t == pytest.approx(T_DEEP, rel=1e-12)

    def test_constant_speed_limit(self):
        # near-vertical geometry at tiny steepness stacks two float
        # cancellations; accuracy here is ~1e-7, well inside the 1e-4
        # contract for this regime
        ssp = SoundSpeedProfile(1480.0, 1e-6)
        t = ray_travel_time(Position(0, 0, 100), Position(1, 0, 0), ssp)
        assert t == pytest.approx(T_CONST_LIMIT, rel=1e-6)
        r = math.hypot(1.0, 100.0)
        assert abs(t - r / 1480.0) / t < 1e-4

    def test_constant_speed_limit_improves(self):
        # the spans are abstract numerical-limit scales, chosen so the
        # O(a^2) model error stays above the float cancellation floor on
        # all three rungs
        q, p = Position(0, 0, 30000.0), Position(5000.0, 0, 0)
        r = math.hypot(horizontal_range(q, p), q.z - p.z)
        errs = []
        for a in (1e-4, 1e-5, 1e-6):
            ssp = SoundSpeedProfile(1480.0, a)
            b_mid = sound_speed(ssp, (q.z + p.z) / 2)
            t = ray_travel_time(q, p, ssp)
            errs.append(abs(t - r / b_mid) / t)
        assert errs[0] > errs[1] > errs[2]

    def test_vertical_raises(self):
        with pytest.raises(VerticalRay):
            ray_travel_time(Position(0, 0, 100), Position(0, 0, 0), SSP)

    def test_grazing_raises(self):
        with pytest.raises(GrazingRay):
            ray_travel_time(Position(0, 0, 1000), Position(1e-10, 0, 0), SSP)

    @given(separated_pairs())
    def test_reciprocity(self, pair):
        q, p = pair
        t1 = ray_travel_time(q, p, SSP)
        t2 = ray_travel_time(p, q, SSP)
        assert t2 == pytest.approx(t1, rel=1e-12)

    @given(separated_pairs())
    def test_positive(self, pair):
        q, p = pair
        assert ray_travel_time(q, p, SSP) > 0.0

    @given(separated_pairs())
    def test_matches_log_form(self, pair):
        # the documented ln((1+sin)/cos) form, written out directly
        q, p = pair
        d = horizontal_range(q, p)
        theta = elevation_angle(q, p)
        alpha = deviation_angle(q, p, SSP)

        def F(x):
            return math.log((1 + math.sin(x)) / math.cos(x))

        expected = (F(theta + alpha) - F(theta - alpha)) / SSP.steepness_a
        assert ray_travel_time(q, p, SSP) == pytest.approx(expected, rel=1e-9)


class TestRayGeometry:
    def test_fields_consistent(self):
        q, p = Position(50, 50, 50), Position(92, 50, 0)
        g = ray_geometry(q, p, SSP)
        assert g.horizontal_range_d == pytest.approx(42.0)
        assert g.slant_range_r ** 2 == pytest.approx(
            g.horizontal_range_d ** 2 + (q.z - p.z) ** 2, rel=1e-12
        )
        assert g.bearing_phi == pytest.approx(math.pi)
        assert g.travel_time_t == pytest.approx(T_CANONICAL, rel=1e-12)
        assert g.aux_l == pytest.approx(math.hypot(42.0, 29650.0))

    def test_near_vertical_rejected(self):
        with pytest.raises(ZeroHorizontalRange):
            ray_geometry(Position(50, 50, 50), Position(50 + 1e-13, 50, 0), SSP)

    @given(separated_pairs())
    def test_invariants(self, pair):
        q, p = pair
        g = ray_geometry(q, p, SSP)
        assert g.slant_range_r >= g.horizontal_range_d
        assert 0.0 <= g.deviation_alpha < math.pi / 2
        assert -math.pi / 2 < g.elevation_theta < math.pi / 2
        assert abs(g.elevation_theta + g.deviation_alpha) < math.pi / 2
        assert abs(g.elevation_theta - g.deviation_alpha) < math.pi / 2
        if g.slant_range_r > 0:
            assert g.travel_time_t > 0


class TestArcLength:
    def test_vertical(self):
        assert arc_length(Position(0, 0, 100), Position(0, 0, 0), SSP) == pytest.approx(100.0)

    def test_slightly_exceeds_chord(self):
        q, p = Position(50, 50, 50), Position(92, 50, 0)
        s = arc_length(q, p, SSP)
        r = math.hypot(42.0, 50.0)
        assert s >= r
        assert s == pytest.approx(r, rel=1e-5)  # alpha ~ 1.4e-3 rad


class TestSnellOracle:
    def test_canonical_agreement(self):
        q, p = Position(50, 50, 50), Position(92, 50, 0)
        t_closed = ray_travel_time(q, p, SSP)
        t_oracle = snell_travel_time_oracle(q, p, SSP)
        assert abs(t_oracle - t_closed) / t_closed < 1e-6

    def test_swap_identical(self):
        q, p = Position(50, 50, 50), Position(92, 50, 0)
        assert snell_travel_time_oracle(q, p, SSP) == snell_travel_time_oracle(p, q, SSP)

    def test_vertical_closed_form(self):
        t = snell_travel_time_oracle(Position(0, 0, 100), Position(0, 0, 0), SSP)
        expected = math.log(1490.0 / 1480.0) / 0.1
        assert t == pytest.approx(expected, rel=1e-12)

    def test_constant_speed_limit(self):
        ssp = SoundSpeedProfile(1480.0, 1e-6)
        q, p = Position(0, 0, 100), Position(1, 0, 0)
        t = snell_travel_time_oracle(q, p, ssp)
        r = math.hypot(1.0, 100.0)
        assert abs(t - r / 1480.0) / t < 1e-5

    def test_equal_depths_rejected(self):
        with pytest.raises(ValueError):
            snell_travel_time_oracle(Position(0, 0, 50), Position(100, 0, 50), SSP)

    def test_step_floor(self):
        with pytest.raises(ValueError):
            snell_travel_time_oracle(Position(0, 0, 50), Position(100, 0, 0), SSP, steps=10)

    def test_no_eigenray(self):
        # nearly equal depths, huge horizontal range: only a turning ray
        # could connect these endpoints
        with pytest.raises(NoEigenray):
            snell_travel_time_oracle(Position(0, 0, 101), Position(10000, 0, 100), SSP)

    @settings(max_examples=40)
    @given(
        st.floats(20.0, 2000.0),
        st.floats(5.0, 400.0),
        st.floats(1420.0, 1540.0),
        st.floats(0.02, 0.3),
    )
    def test_matches_closed_form(self, d, dz, b, a):
        # keep the chord elevation away from the vertical (grazing) and
        # safely above the turning limit arccos(C_lo/C_hi), below which
        # no non-turning eigenray exists
        gamma_min = math.acos((b + a * 3.0) / (b + a * (dz + 3.0)))
        floor = max(0.05, 2.5 * gamma_min)
        theta = math.atan2(dz, d)
        if not floor < theta < 1.4:
            d = dz / math.tan(min(max(floor * 1.5, 0.7), 1.4))
        ssp = SoundSpeedProfile(b, a)
        q, p = Position(0, 0, dz + 3.0), Position(d, 0, 3.0)
        t_closed = ray_travel_time(q, p, ssp)
        t_oracle = snell_travel_time_oracle(q, p, ssp)
        assert abs(t_oracle - t_closed) / t_closed < 1e-6
