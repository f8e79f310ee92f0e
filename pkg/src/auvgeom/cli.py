"""Command-line front end: CRLB evaluation, radius-scale optimization,
and Monte-Carlo simulation driven by a JSON configuration document.

A run is defined by one nested config (defaults below), optionally read
from --config, then overridden by repeated --set dotted.path=value and
by the dedicated flags (--seed, --workers).  Every output CSV embeds the
tool version and the fully resolved config as '#' comment lines, so a
result file is a complete experiment record.

Exit codes: 0 success, 2 configuration or validation failure, 3 singular
or degenerate geometry, 4 optimizer non-convergence.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .deployment import (
    OptimizerConfig,
    grid_search_k,
    k_objective,
    optimize_k,
)
from .errors import AuvgeomError, NonPositiveK, TooFewAnchors, UnsupportedCount
from .fisher import NoiseModel, diagonal_lower_bound, fim
from .geometry import Position, SoundSpeedProfile
from .harness import (
    Axis,
    Cube,
    FIGURE_SPECS,
    FixedAnchors,
    Random,
    ResultTable,
    RmUsc,
    RsUsc,
    Scenario,
    Static,
    SweepSpec,
    Usc,
    _fixed_layout,
    emit_plot,
    export_csv,
    run_scenario,
    sweep,
)

DEFAULT_CONFIG = {
    "auv": [50.0, 50.0, 50.0],
    "ssp": {"surface_speed_b": 1480.0, "steepness_a": 0.1},
    "noise": {
        "kind": "distance_dependent",
        "sigma_ms": 1.0,
        "ke_db": -10.0,
        "beta": 2.0,
        "l0": 1000.0,
        "l_f_db_per_km": 1.0,
        "use_arc_length": False,
    },
    "deployment": {
        "kind": "usc",
        "n": 8,
        "scale_k": None,
        "side": None,
        "center": None,
        "box": None,
        "seed": None,
        "anchors": None,
    },
    "movement": {"kind": "static", "delta_meters": 0.0, "seed": 0},
    "optimizer": {
        "initial_k": 1.0,
        "step_size_t": 0.1,
        "precision_eps": 1e-6,
        "max_iterations_Nmax": 200,
        "fd_step_h": 1e-5,
    },
    "sweep": {"axis": None, "values": None},
    "trials": 2000,
    "master_seed": 0,
    "workers": 1,
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, override: dict, path: str = "") -> None:
    """Recursive in-place merge; keys absent from the defaults are typos."""
    for key, value in override.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"config key {where!r} expects an object")
            _merge(base[key], value, where + ".")
        else:
            base[key] = value


def _apply_set(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set needs dotted.path=value, got {assignment!r}")
    dotted, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = value
    for part in reversed(dotted.split(".")):
        node = {part: node}
    _merge(cfg, node)


def _resolve_config(args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as f:
                document = json.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config file {args.config!r}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {args.config!r} is not valid JSON: {e}") from e
        if not isinstance(document, dict):
            raise ConfigError(f"config file {args.config!r} must hold a JSON object")
        _merge(cfg, document)
    for assignment in args.set or ():
        _apply_set(cfg, assignment)
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    if args.workers is not None:
        cfg["workers"] = args.workers
    return cfg


def _build_noise(cfg: dict) -> NoiseModel:
    section = cfg["noise"]
    if section["kind"] == "constant_variance":
        return NoiseModel.constant_variance(section["sigma_ms"] * 1e-3)
    if section["kind"] == "distance_dependent":
        return NoiseModel.distance_dependent(
            ke_db=section["ke_db"],
            beta=section["beta"],
            l0=section["l0"],
            l_f_db_per_km=section["l_f_db_per_km"],
            use_arc_length=section["use_arc_length"],
        )
    raise ConfigError(f"unknown noise kind {section['kind']!r}")


def _build_deployment(cfg: dict):
    section = cfg["deployment"]
    kind = section["kind"]
    if kind == "usc":
        return Usc(scale_k=section["scale_k"], n=section["n"])
    if kind == "cube":
        center = section["center"]
        return Cube(
            side=section["side"],
            center=None if center is None else Position(*center),
            n=section["n"],
        )
    if kind == "random":
        box = section["box"]
        return Random(
            box=None if box is None else tuple(tuple(pair) for pair in box),
            seed=section["seed"],
            n=section["n"],
        )
    if kind == "fixed":
        anchors = section["anchors"]
        if not anchors:
            raise ConfigError("fixed deployment needs deployment.anchors")
        return FixedAnchors(tuple(Position(*p) for p in anchors))
    raise ConfigError(f"unknown deployment kind {kind!r}")


def _build_movement(cfg: dict):
    section = cfg["movement"]
    kind = section["kind"]
    if kind == "static":
        return Static()
    if kind == "rm-usc":
        return RmUsc(delta_meters=section["delta_meters"], seed=section["seed"])
    if kind == "rs-usc":
        return RsUsc(delta_meters=section["delta_meters"], seed=section["seed"])
    raise ConfigError(f"unknown movement kind {kind!r}")


def _build_scenario(cfg: dict) -> Scenario:
    return Scenario(
        auv_truth=Position(*cfg["auv"]),
        deployment=_build_deployment(cfg),
        ssp=SoundSpeedProfile(**cfg["ssp"]),
        noise=_build_noise(cfg),
        trials=cfg["trials"],
        master_seed=cfg["master_seed"],
        movement=_build_movement(cfg),
    )


def _metadata(cfg: dict) -> tuple[str, ...]:
    resolved = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return (f"auvgeom {__version__}", f"config {resolved}")


def _out_dir(args: argparse.Namespace) -> str | None:
    return args.out if args.out is not None else os.environ.get("AUVGEOM_OUT")


def cmd_crlb(args: argparse.Namespace, cfg: dict) -> int:
    scenario = _build_scenario(cfg)
    anchors, _, _ = _fixed_layout(scenario)
    if anchors is None:
        raise ConfigError("crlb needs a deterministic layout: give the random deployment a seed")
    result = fim(scenario.auv_truth, anchors, scenario.ssp, scenario.noise)
    condition = float(np.linalg.cond(result.fim))
    lines = [
        f"trace_crlb_m2 {result.trace_crlb!r}",
        f"diagonal_lower_bound_m2 {diagonal_lower_bound(result)!r}",
        f"offdiag_residual {result.offdiag_residual!r}",
        f"condition_number {condition!r}",
    ]
    print("\n".join(lines))
    out = _out_dir(args)
    if out is not None:
        path = os.path.join(out, "crlb.csv")
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                for comment in _metadata(cfg):
                    f.write(f"# {comment}\n")
                f.write("metric,value\n")
                for line in lines:
                    name, value = line.split(" ", 1)
                    f.write(f"{name},{value}\n")
        except OSError as e:
            raise OSError(f"cannot write CSV to {path!r}: {e}") from e
        print(f"wrote {path}")
    return 0


def cmd_optimize_k(args: argparse.Namespace, cfg: dict) -> int:
    scenario = _build_scenario(cfg)
    if not isinstance(scenario.deployment, Usc):
        raise ConfigError("optimize-k applies to the usc deployment")
    z = scenario.auv_truth.z
    n = scenario.deployment.n
    opt_cfg = OptimizerConfig(**cfg["optimizer"])
    result = optimize_k(z, n, scenario.ssp, scenario.noise, opt_cfg)
    print(f"k_star {result.k_star!r}")
    print(f"objective_m2 {result.objective!r}")
    print(f"iterations {result.iterations}")
    if args.grid:
        k_grid = grid_search_k(z, n, scenario.ssp, scenario.noise)
        print(f"grid_k_star {k_grid!r}")
        print(f"grid_objective_m2 {k_objective(k_grid, z, n, scenario.ssp, scenario.noise)!r}")
        print(f"grid_agreement {abs(result.k_star - k_grid)!r}")
    if not result.converged:
        print("optimizer did not converge within the iteration budget", file=sys.stderr)
        return 4
    out = _out_dir(args)
    if out is not None:
        base = Scenario(
            auv_truth=scenario.auv_truth,
            deployment=Usc(scale_k=1.0, n=n),
            ssp=scenario.ssp,
            noise=scenario.noise,
            trials=1,
            master_seed=scenario.master_seed,
        )
        values = tuple(round(0.5 + 0.05 * i, 2) for i in range(21))
        spec = SweepSpec(axis=Axis.SCALE_K, values=values, base=base)
        table = sweep(spec)
        path = os.path.join(out, "ksweep.csv")
        export_csv(table, path, comments=_metadata(cfg))
        print(f"wrote {path}")
        if args.plot:
            svg_path = os.path.join(out, "ksweep.svg")
            emit_plot(table, spec, svg_path)
            print(f"wrote {svg_path}")
    return 0


def cmd_simulate(args: argparse.Namespace, cfg: dict) -> int:
    out = _out_dir(args) or "."
    spec = None
    if args.figure is not None:
        maker = FIGURE_SPECS[args.figure]
        if args.figure == "3":
            spec = maker(master_seed=cfg["master_seed"])
        else:
            spec = maker(master_seed=cfg["master_seed"], trials=cfg["trials"])
        stem = f"fig{args.figure}"
        table = sweep(spec, workers=cfg["workers"])
    else:
        scenario = _build_scenario(cfg)
        axis = cfg["sweep"]["axis"]
        stem = "simulate"
        if axis is not None:
            values = cfg["sweep"]["values"]
            if not values:
                raise ConfigError("sweep.values must list the axis points")
            spec = SweepSpec(
                axis=Axis(axis), values=tuple(float(v) for v in values), base=scenario
            )
            table = sweep(spec, workers=cfg["workers"])
        else:
            table = ResultTable(rows=(run_scenario(scenario),))
    path = os.path.join(out, f"{stem}.csv")
    export_csv(table, path, comments=_metadata(cfg))
    print(f"wrote {path}")
    if args.plot:
        svg_path = os.path.join(out, f"{stem}.svg")
        emit_plot(table, spec, svg_path)
        print(f"wrote {svg_path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="auvgeom",
        description="CRLB evaluation, radius-scale optimization, and Monte-Carlo "
        "simulation for circle-of-anchors deployments.",
    )
    parser.add_argument("--version", action="version", version=f"auvgeom {__version__}")
    parser.add_argument("--config", metavar="PATH", help="JSON configuration document")
    parser.add_argument("--seed", type=int, metavar="INT", help="override master_seed")
    parser.add_argument("--workers", type=int, metavar="INT", help="parallel sweep workers")
    parser.add_argument(
        "--out",
        metavar="DIR",
        help="output directory (default: $AUVGEOM_OUT, else current directory)",
    )
    parser.add_argument("--plot", action="store_true", help="also write an SVG chart")
    parser.add_argument(
        "--figure",
        choices=sorted(FIGURE_SPECS),
        help="run a preset experiment instead of the configured scenario",
    )
    parser.add_argument(
        "--set",
        action="append",
        metavar="PATH=VALUE",
        help="override one config entry, e.g. --set noise.sigma_ms=5",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("crlb", help="print the bound for the configured layout")
    p_opt = sub.add_parser("optimize-k", help="optimize the circle radius scale")
    p_opt.add_argument("--grid", action="store_true", help="cross-check against a grid search")
    sub.add_parser("simulate", help="run the Monte-Carlo scenario or sweep")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.figure is not None and args.command != "simulate":
        print("--figure applies to the simulate command", file=sys.stderr)
        return 2
    try:
        cfg = _resolve_config(args)
        if args.command == "crlb":
            return cmd_crlb(args, cfg)
        if args.command == "optimize-k":
            return cmd_optimize_k(args, cfg)
        return cmd_simulate(args, cfg)
    except (ConfigError, ValueError, TooFewAnchors, UnsupportedCount) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NonPositiveK as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except AuvgeomError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
