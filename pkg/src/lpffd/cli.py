"""Command-line interface: solve, bench, warp, transfer, metrics, serve.

Solver failures exit nonzero with a machine-readable error JSON on stdout;
missing input files exit with code 2. The LPFFD_LOG environment variable sets
the log level.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import sceneio
from .baselines import dgp_inverse_pipeline, hsu_solve
from .errors import LpffdError
from .ffd import apply_grid, forward_ffd
from .geometry import HandleSet, LatticeGrid, OutsidePolicy
from .metrics import distortion_report
from .raster import read_image, warp_image, write_image
from .solver import SolveSession, SolverConfig

logger = logging.getLogger(__name__)

EXIT_ERROR = 1
EXIT_MISSING_INPUT = 2


def _config_from_args(args, base: dict) -> SolverConfig:
    cfg = SolverConfig()
    merged = dict(base)
    for arg_name, key in (
        ("lam_ml", "lambda_ml"),
        ("lam_mp", "lambda_mp"),
        ("lam_gp", "lambda_gp"),
        ("lam_gr", "lambda_gr"),
        ("iterations", "iterations"),
        ("laplacian", "laplacian"),
    ):
        val = getattr(args, arg_name, None)
        if val is not None:
            merged[key] = val
    kw = {}
    for key, attr in (
        ("lambda_ml", "lam_ml"),
        ("lambda_mp", "lam_mp"),
        ("lambda_gp", "lam_gp"),
        ("lambda_gr", "lam_gr"),
        ("iterations", "max_iterations"),
        ("rel_tolerance", "rel_tolerance"),
        ("laplacian", "laplacian_mode"),
    ):
        if key in merged:
            kw[attr] = type(getattr(cfg, attr))(merged[key])
    return cfg.replace(**kw) if kw else cfg


def _parse_dims(text: str) -> tuple:
    dims = tuple(int(d) for d in text.lower().split("x"))
    if len(dims) not in (2, 3):
        raise argparse.ArgumentTypeError("dims must look like MxN or MxNxK")
    return dims


def _fail(code: str, message: str, exit_code: int) -> int:
    print(sceneio.dumps({"error": {"code": code, "message": message}}))
    return exit_code


def cmd_solve(args) -> int:
    scenario = sceneio.load_scenario(args.scenario)
    mesh = sceneio.load_scene(scenario.scene)
    dims = args.dims or scenario.dims
    config = _config_from_args(args, scenario.config)
    grid = LatticeGrid.from_mesh(mesh, dims)
    session = SolveSession(mesh, grid, config)
    handles = HandleSet()
    default_solver = args.solver or scenario.solver
    state = {"solver": default_solver, "P": grid.rest, "V": mesh.vertices, "energies": [], "rotations": None}
    for step in scenario.steps:
        sceneio.apply_step(handles, step)
        solver = step.solver or default_solver
        if solver == "lpffd":
            step_config = (
                config.replace(max_iterations=int(step.iterations))
                if step.iterations is not None
                else None
            )
            res = session.solve(handles, step_config)
            state.update(
                solver=solver,
                P=res.handle_positions,
                V=res.vertex_positions,
                energies=res.energies,
                rotations=res.rotations,
            )
        elif solver == "hsu":
            P = hsu_solve(session.weights, grid, handles, config)
            state.update(solver=solver, P=P, V=forward_ffd(session.weights, P), energies=[], rotations=None)
        else:
            res = dgp_inverse_pipeline(mesh, grid, session.weights, session.laplacian, handles, config)
            state.update(solver=solver, P=res.handle_positions, V=res.vertices, energies=[], rotations=None)
        if step.expect.get("grid"):
            reference = sceneio.load_grid(step.expect["grid"])
            tolerance = float(step.expect.get("tolerance", 1e-9))
            gap = float(np.abs(reference.current - state["P"]).max())
            if gap > tolerance:
                raise sceneio.ExpectationFailed(
                    f"step grid differs from {step.expect['grid']} by {gap:.3e} (> {tolerance:.1e})"
                )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    deformed = grid.with_current(state["P"])
    sceneio.write_json(out / "grid.json", sceneio.grid_to_dict(deformed))
    sceneio.write_json(out / "scene.json", sceneio.scene_to_dict(mesh, state["V"]))
    sceneio.write_json(out / "distortion.json", distortion_report(mesh, state["V"]).to_dict())
    sceneio.write_energy_trace(out / "energy_trace.csv", state["energies"])
    sceneio.write_json(
        out / "result.json",
        {
            "solver": state["solver"],
            "dims": list(dims),
            "config": {
                "lambda_ml": config.lam_ml,
                "lambda_mp": config.lam_mp,
                "lambda_gp": config.lam_gp,
                "lambda_gr": config.lam_gr,
                "iterations": config.max_iterations,
                "rel_tolerance": config.rel_tolerance,
                "laplacian": config.laplacian_mode,
            },
            "handles": {
                "vertex": {str(k): v.tolist() for k, v in sorted(handles.vertex.items())},
                "grid": {str(k): v.tolist() for k, v in sorted(handles.grid.items())},
            },
            "energies": [list(e.as_tuple()) for e in state["energies"]],
            "rotations": state["rotations"].tolist() if state["rotations"] is not None else None,
        },
    )
    logger.info("solve outputs written to %s", out)
    return 0


def cmd_bench(args) -> int:
    scenes = []
    for spec in args.scene or ["fixture:gingerbread"]:
        if spec.startswith("random:"):
            # Synthetic mesh of the requested vertex count, e.g. random:900.
            from .fixtures import random_scene

            n = int(spec.split(":", 1)[1])
            scenes.append((spec.replace(":", ""), random_scene(args.seed, n)))
        elif spec.startswith("fixture:"):
            scenes.append((spec.split(":", 1)[1], sceneio.load_scene(spec)))
        else:
            scenes.append((Path(spec).stem, sceneio.load_scene(spec)))
    grids = args.dims or [(5, 5), (10, 10), (15, 15)]
    config = _config_from_args(args, {})
    rows = bench_mod.run_bench(scenes, grids, repeats=args.repeats, config=config)
    bench_mod.write_bench_csv(args.out, rows)
    print(bench_mod.BenchRow.HEADER)
    for row in rows:
        print(",".join(str(x) for x in row.as_record()))
    return 0


def cmd_warp(args) -> int:
    grid = sceneio.load_grid(args.grid)
    image = read_image(args.image)
    out = warp_image(grid, image, args.tess)
    write_image(args.out, out)
    return 0


def cmd_transfer(args) -> int:
    grid = sceneio.load_grid(args.grid)
    mesh = sceneio.load_scene(args.scene)
    policy = OutsidePolicy.CLAMP if args.clamp else OutsidePolicy.ERROR
    deformed = apply_grid(grid, mesh, policy)
    sceneio.write_json(args.out, sceneio.scene_to_dict(mesh, deformed))
    return 0


def cmd_metrics(args) -> int:
    mesh = sceneio.load_scene(args.scene)
    deformed = sceneio.load_scene(args.deformed)
    if deformed.n_vertices != mesh.n_vertices:
        raise ValueError("deformed scene has a different vertex count")
    report = distortion_report(mesh, deformed.vertices)
    sceneio.write_json(args.out, report.to_dict())
    print(sceneio.dumps({"angular": report.angular, "area": report.area}))
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    serve(host=args.host, port=args.port, static_dir=args.static)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lpffd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_lambda_flags(p):
        p.add_argument("--lambda-ml", dest="lam_ml", type=float)
        p.add_argument("--lambda-mp", dest="lam_mp", type=float)
        p.add_argument("--lambda-gp", dest="lam_gp", type=float)
        p.add_argument("--lambda-gr", dest="lam_gr", type=float)
        p.add_argument("--iters", dest="iterations", type=int)
        p.add_argument("--laplacian", dest="laplacian", choices=["uniform", "cotangent"])

    p = sub.add_parser("solve", help="run a scenario script and write result artifacts")
    p.add_argument("--scenario", required=True)
    p.add_argument("--dims", type=_parse_dims)
    p.add_argument("--solver", choices=sceneio.SOLVER_NAMES)
    p.add_argument("--out", required=True)
    add_lambda_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="single-threaded timing table")
    p.add_argument("--scene", action="append")
    p.add_argument("--dims", action="append", type=_parse_dims)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    add_lambda_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("warp", help="forward-warp an image through a deformed grid")
    p.add_argument("--grid", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tess", type=int)
    p.set_defaults(func=cmd_warp)

    p = sub.add_parser("transfer", help="deform another scene with an exported grid")
    p.add_argument("--grid", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--clamp", action="store_true", help="clamp tiny out-of-box overshoots")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("metrics", help="distortion report between a rest and a deformed scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--deformed", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("serve", help="run the live session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--static", help="directory of editor assets to serve")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("LPFFD_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        return _fail("not_found", str(exc), EXIT_MISSING_INPUT)
    except LpffdError as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_ERROR)
    except (ValueError, KeyError, IndexError, sceneio.ExpectationFailed) as exc:
        return _fail(type(exc).__name__, str(exc), EXIT_ERROR)


if __name__ == "__main__":
    sys.exit(main())
