"""Monte-Carlo harness: reproducibility, sweeps, CSV and SVG output.

The harness promises bit-identical tables for a fixed master seed no
matter how many workers run the sweep, and CSV files that round-trip
through load_csv without losing a digit.  Those promises are what the
tests below pin down; the statistical content of the figures is covered
by the acceptance suite.
"""

import math

import numpy as np
import pytest

from auvgeom.errors import EmptyTable, SingularFim
from auvgeom.fisher import NoiseModel
from auvgeom.geometry import Position, SoundSpeedProfile
from auvgeom.harness import (
    Axis,
    CSV_HEADER,
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
    fig3_spec,
    fig4a_spec,
    fig5_spec,
    fig6_spec,
    k_objective,
    load_csv,
    run_scenario,
    sweep,
)

SSP = SoundSpeedProfile(1480.0, 0.1)
AUV = Position(50.0, 50.0, 50.0)
NOISE = NoiseModel.constant_variance(1e-3)


def small_scenario(trials=40, seed=0, deployment=None, movement=None):
    return Scenario(
        auv_truth=AUV,
        deployment=deployment or Usc(scale_k=0.85, n=8),
        ssp=SSP,
        noise=NOISE,
        trials=trials,
        master_seed=seed,
        movement=movement or Static(),
    )


class TestValidation:
    def test_scenario_rejects_bad_fields(self):
        with pytest.raises(ValueError):
            small_scenario(trials=0)
        with pytest.raises(ValueError):
            small_scenario(seed=-1)
        with pytest.raises(ValueError):
            small_scenario(movement=RmUsc(-1.0))
        with pytest.raises(ValueError):
            small_scenario(deployment=Cube(), movement=RmUsc(100.0))

    def test_fixed_anchors_need_four(self):
        with pytest.raises(ValueError):
            FixedAnchors(anchors=(AUV, AUV, AUV))

    def test_sweep_spec_axis_values(self):
        base = small_scenario()
        with pytest.raises(ValueError):
            SweepSpec(axis=Axis.SIGMA_MS, values=(), base=base)
        with pytest.raises(ValueError):
            SweepSpec(axis=Axis.SIGMA_MS, values=(1.0, 1.0), base=base)
        with pytest.raises(ValueError):
            SweepSpec(axis=Axis.SIGMA_MS, values=(2.0, 1.0), base=base)

    def test_axis_model_mismatches_raise(self):
        dd = Scenario(
            auv_truth=AUV,
            deployment=Usc(scale_k=0.85, n=8),
            ssp=SSP,
            noise=NoiseModel.distance_dependent(),
            trials=5,
            master_seed=0,
        )
        spec = SweepSpec(axis=Axis.SIGMA_MS, values=(1.0, 2.0), base=dd)
        with pytest.raises(ValueError):
            sweep(spec)
        fixed = small_scenario(
            deployment=FixedAnchors(tuple(Position(float(i * 7), 0.0, 0.0) for i in range(4)))
        )
        with pytest.raises(ValueError):
            sweep(SweepSpec(axis=Axis.ANCHOR_COUNT, values=(4.0, 5.0), base=fixed))
        with pytest.raises(ValueError):
            sweep(SweepSpec(axis=Axis.SCALE_K, values=(0.5, 1.0), base=small_scenario(deployment=Cube())))
        with pytest.raises(ValueError):
            sweep(SweepSpec(axis=Axis.DELTA_METERS, values=(0.0, 50.0), base=small_scenario()))


class TestRunScenario:
    def test_deterministic_for_fixed_seed(self):
        a = run_scenario(small_scenario())
        b = run_scenario(small_scenario())
        assert a == b

    def test_seed_changes_result(self):
        a = run_scenario(small_scenario(seed=0))
        b = run_scenario(small_scenario(seed=1))
        assert a.rmse_m != b.rmse_m

    def test_scheme_labels(self):
        assert run_scenario(small_scenario()).scheme == "usc"
        assert run_scenario(small_scenario(deployment=Cube())).scheme == "cube"
        assert run_scenario(small_scenario(deployment=Random(seed=3))).scheme == "random"
        anchors = tuple(Position(50.0 + 60 * math.cos(a), 50.0 + 60 * math.sin(a), 0.0)
                        for a in np.linspace(0.0, 2 * math.pi, 5)[:4])
        assert run_scenario(small_scenario(deployment=FixedAnchors(anchors))).scheme == "fixed"
        assert run_scenario(small_scenario(movement=RmUsc(50.0))).scheme == "rm-usc"
        assert run_scenario(small_scenario(movement=RsUsc(50.0))).scheme == "rs-usc"

    def test_row_summary_fields(self):
        r = run_scenario(small_scenario(trials=60, seed=4), axis_name="single", axis_value=2.0)
        assert (r.axis_name, r.axis_value) == ("single", 2.0)
        assert r.n_anchors == 8 and r.trials == 60 and r.seed == 4
        assert r.k == 0.85
        assert r.diverged == 0
        # rmse of a converged run sits near the bound level sqrt(trace)
        assert 0.3 * math.sqrt(r.trace_crlb_m2) < r.rmse_m < 3.0 * math.sqrt(r.trace_crlb_m2)

    def test_optimizes_k_when_unset(self):
        r = run_scenario(small_scenario(deployment=Usc(scale_k=None, n=8)))
        assert 1.3 < r.k < 1.5  # constant-noise optimum for this depth

    def test_per_trial_random_redraw_differs_from_frozen(self):
        frozen = run_scenario(small_scenario(deployment=Random(seed=7)))
        redrawn = run_scenario(small_scenario(deployment=Random(seed=None)))
        assert frozen.rmse_m != redrawn.rmse_m

    def test_singular_layout_fails_fast(self):
        coplanar = tuple(Position(x, 50.0, 0.0) for x in (0.0, 40.0, 80.0, 120.0))
        with pytest.raises(SingularFim):
            run_scenario(small_scenario(deployment=FixedAnchors(coplanar)))


class TestMovementModels:
    def test_rm_equals_rs_at_zero_delta(self):
        rm = run_scenario(small_scenario(trials=80, movement=RmUsc(0.0)))
        rs = run_scenario(small_scenario(trials=80, movement=RsUsc(0.0)))
        assert rm.rmse_m == rs.rmse_m
        assert rm.trace_crlb_m2 == rs.trace_crlb_m2

    def test_rebuilt_circle_beats_frozen_anchors_at_large_delta(self):
        rm = run_scenario(small_scenario(trials=120, movement=RmUsc(500.0)))
        rs = run_scenario(small_scenario(trials=120, movement=RsUsc(500.0)))
        assert rs.rmse_m < rm.rmse_m


class TestSweep:
    def small_spec(self, trials=25):
        base = small_scenario(trials=trials)
        schemes = {
            "usc": Variant(deployment=Usc(scale_k=0.85, n=8)),
            "cube": Variant(deployment=Cube()),
        }
        return SweepSpec(axis=Axis.ANCHOR_COUNT, values=(4.0, 6.0, 8.0), base=base, schemes=schemes)

    def test_worker_count_does_not_change_rows(self):
        # NaN k columns defeat Row equality, so compare the rendered CSV
        spec = self.small_spec()
        assert csv_text(sweep(spec, workers=1)) == csv_text(sweep(spec, workers=4))

    def test_row_order_is_scheme_major(self):
        table = sweep(self.small_spec())
        labels = [(r.scheme, r.axis_value) for r in table.rows]
        assert labels == [
            ("usc", 4.0), ("usc", 6.0), ("usc", 8.0),
            ("cube", 4.0), ("cube", 6.0), ("cube", 8.0),
        ]

    def test_radius_scale_rows_are_analytic(self):
        table = sweep(fig3_spec())
        assert len(table.rows) == 105
        for r in table.rows:
            assert r.trials == 0 and math.isnan(r.rmse_m)
        r = table.rows[0]
        assert r.scheme == "usc-n4" and r.axis_value == 0.5
        assert r.trace_crlb_m2 == k_objective(0.5, AUV.z, 4, SSP, NoiseModel.distance_dependent())

    def test_failed_cell_becomes_annotated_row(self):
        coplanar = tuple(Position(x, 50.0, 0.0) for x in (0.0, 40.0, 80.0, 120.0))
        base = small_scenario(trials=10)
        schemes = {
            "usc": Variant(deployment=Usc(scale_k=0.85, n=8)),
            "bad": Variant(deployment=FixedAnchors(coplanar)),
        }
        spec = SweepSpec(axis=Axis.SIGMA_MS, values=(1.0, 2.0), base=base, schemes=schemes)
        table = sweep(spec)
        bad = [r for r in table.rows if r.scheme == "bad"]
        assert len(bad) == 2
        for r in bad:
            assert r.note.startswith("SingularFim")
            assert math.isnan(r.rmse_m)
        good = [r for r in table.rows if r.scheme == "usc"]
        assert all(not r.note and math.isfinite(r.rmse_m) for r in good)


ROWS = (
    Row("sigma_ms", 1.0, "usc", 8, 0.85, 1.5437, 2.2871, 0, 100, 7),
    Row("sigma_ms", 2.0, "usc", 8, 0.85, 1.0 / 3.0, 0.1 + 0.2, 3, 100, 7),
)


class TestCsv:
    def test_header_and_round_trip(self, tmp_path):
        path = str(tmp_path / "t.csv")
        export_csv(ResultTable(rows=ROWS), path, comments=("run A", "seed 7"))
        text = open(path).read()
        lines = text.splitlines()
        assert lines[0] == "# run A" and lines[1] == "# seed 7"
        assert lines[2] == CSV_HEADER
        loaded = load_csv(path)
        assert loaded.rows == ROWS

    def test_round_trip_preserves_every_digit(self, tmp_path):
        path1 = str(tmp_path / "a.csv")
        path2 = str(tmp_path / "b.csv")
        export_csv(ResultTable(rows=ROWS), path1)
        export_csv(load_csv(path1), path2)
        assert open(path1, "rb").read() == open(path2, "rb").read()

    def test_rejects_foreign_header(self, tmp_path):
        path = str(tmp_path / "alien.csv")
        with open(path, "w") as f:
            f.write("x,y\n1,2\n")
        with pytest.raises(ValueError):
            load_csv(path)

    def test_divergence_warning_comment(self):
        noisy = Row("sigma_ms", 1.0, "usc", 8, 0.85, 9.9, 90.0, 17, 100, 0)
        text = csv_text(ResultTable(rows=(noisy,)))
        assert "# WARNING: usc@1.0 diverged on 17/100 trials" in text
        quiet = Row("sigma_ms", 1.0, "usc", 8, 0.85, 9.9, 90.0, 4, 100, 0)
        assert "WARNING" not in csv_text(ResultTable(rows=(quiet,)))

    def test_note_comment_precedes_row(self):
        bad = Row("sigma_ms", 2.0, "bad", 4, float("nan"), float("nan"),
                  float("nan"), 0, 10, 0, note="SingularFim: boom")
        lines = csv_text(ResultTable(rows=(bad,))).splitlines()
        assert lines[1] == "# note: bad@2.0 SingularFim: boom"

    def test_write_error_names_path(self, tmp_path):
        target = str(tmp_path / "no-such-dir" / "x.csv")
        with pytest.raises(OSError, match="no-such-dir"):
            export_csv(ResultTable(rows=ROWS), target)
        with pytest.raises(OSError, match="missing.csv"):
            load_csv(str(tmp_path / "missing.csv"))


class TestPlot:
    def test_empty_table_raises(self, tmp_path):
        spec = SweepSpec(axis=Axis.SIGMA_MS, values=(1.0,), base=small_scenario())
        with pytest.raises(EmptyTable):
            emit_plot(ResultTable(rows=()), spec, str(tmp_path / "x.svg"))
        all_nan = Row("sigma_ms", 1.0, "usc", 8, 0.85, float("nan"), float("nan"), 0, 10, 0)
        with pytest.raises(EmptyTable):
            emit_plot(ResultTable(rows=(all_nan,)), spec, str(tmp_path / "y.svg"))

    def test_svg_contains_series_and_labels(self, tmp_path):
        spec = SweepSpec(axis=Axis.SIGMA_MS, values=(1.0, 2.0), base=small_scenario())
        path = str(tmp_path / "p.svg")
        emit_plot(ResultTable(rows=ROWS), spec, path)
        svg = open(path).read()
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
        assert "usc" in svg
        assert "timing noise sigma [ms]" in svg
        assert "RMSE [m]" in svg

    def test_single_point_table_plots(self, tmp_path):
        spec = SweepSpec(axis=Axis.SIGMA_MS, values=(1.0,), base=small_scenario())
        one = Row("sigma_ms", 1.0, "usc", 8, 0.85, 2.5, 6.0, 0, 10, 0)
        path = str(tmp_path / "one.svg")
        emit_plot(ResultTable(rows=(one,)), spec, path)
        assert "<svg" in open(path).read()

    def test_trace_plotted_when_no_rmse(self, tmp_path):
        rows = tuple(
            Row("scale_k", v, "usc-n4", 4, v, float("nan"), 5.0 + v, 0, 0, 0)
            for v in (0.5, 1.0)
        )
        spec = SweepSpec(axis=Axis.SCALE_K, values=(0.5, 1.0), base=small_scenario())
        path = str(tmp_path / "t.svg")
        emit_plot(ResultTable(rows=rows), spec, path)
        assert "tr(CRLB) [m^2]" in open(path).read()

    def test_wide_span_switches_to_log_axis(self, tmp_path):
        near = tuple(Row("sigma_ms", v, "usc", 8, 0.85, 1.0 + v, 1.0, 0, 10, 0) for v in (1.0, 2.0))
        wide = tuple(Row("sigma_ms", v, "usc", 8, 0.85, 10.0 ** v, 1.0, 0, 10, 0) for v in (0.0, 3.0))
        spec = SweepSpec(axis=Axis.SIGMA_MS, values=(1.0, 2.0), base=small_scenario())
        p1, p2 = str(tmp_path / "lin.svg"), str(tmp_path / "log.svg")
        emit_plot(ResultTable(rows=near), spec, p1)
        emit_plot(ResultTable(rows=wide), spec, p2)
        assert ">100<" not in open(p1).read()
        assert ">100<" in open(p2).read()


class TestFigurePresets:
    def test_registry_names(self):
        assert set(FIGURE_SPECS) == {"3", "4a", "4b", "5", "6"}

    def test_fig3_shape(self):
        spec = fig3_spec()
        assert spec.axis is Axis.SCALE_K
        assert len(spec.values) == 21
        assert spec.values[0] == 0.5 and spec.values[-1] == 1.5
        assert set(spec.schemes) == {f"usc-n{n}" for n in range(4, 9)}

    def test_fig4a_shape(self):
        spec = fig4a_spec(trials=10)
        assert spec.axis is Axis.ANCHOR_COUNT
        assert spec.values == (4.0, 5.0, 6.0, 7.0, 8.0)
        assert set(spec.schemes) == {"usc", "cube", "random"}
        assert spec.base.noise.kind == "distance_dependent"
        assert spec.schemes["random"].deployment.seed is None

    def test_fig5_layouts_share_mean_range(self):
        spec = fig5_spec(trials=10)
        a0 = spec.base.auv_truth.as_array()
        means = []
        for variant in spec.schemes.values():
            pts = np.array([p.as_array() for p in variant.deployment.anchors])
            means.append(np.linalg.norm(pts - a0, axis=1).mean())
        assert np.ptp(means) < 1e-9
        assert spec.base.noise.kind == "constant_variance"

    def test_fig6_shape(self):
        spec = fig6_spec(trials=10)
        assert spec.axis is Axis.DELTA_METERS
        assert spec.values[0] == 0.0 and spec.values[-1] == 500.0
        assert set(spec.schemes) == {"rm-usc", "rs-usc"}
        assert isinstance(spec.schemes["rm-usc"].movement, RmUsc)
        assert isinstance(spec.schemes["rs-usc"].movement, RsUsc)
