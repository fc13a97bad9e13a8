"""Command-line interface.

Subcommands: fit (fit/train a mapping and serialize it), bench (Table-style
two-backend comparison), grid (warped-grid export for plotting), sim (run a
scripted teleoperation simulation or go live), serve (bridge service).

Exit codes: 0 success, 2 usage, 3 validation, 4 numerical/training failure,
5 I/O.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import quat
from .bench import DEFAULT_N_EVAL, DEFAULT_WARMUP, format_table, run_benchmark, save_report
from .diffeo import fit as fit_diffeo
from .errors import NumericalError, ScenarioError, ScenarioFormatError, TelemapError
from .flow import TrainConfig, train as train_flow
from .mapping import load_map
from .scenario import load_scenario
from .sim import ScriptPoint, SimConfig, run_scripted, write_log_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERIC = 4
EXIT_IO = 5

# published single-machine measurements shipped for side-by-side display;
# never asserted (hardware-dependent)
REFERENCE_RESULTS = {
    "hardware": "2.8 GHz quad-core i7-7700HQ, 8 GB RAM",
    "iter": {
        "fit_s": 0.268,
        "forward_ms": 6.71,
        "backward_ms": 20.4,
        "velocity_ms": 43.4,
        "f_p": 8e-18,
        "f_q": 3.8e-6,
    },
    "flow": {
        "fit_s": 4.68e3,
        "forward_ms": 1.83,
        "backward_ms": 1.93,
        "velocity_ms": 1.79,
        "f_p": 1e-4,
        "f_q": 1.6e-2,
    },
}


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"{path}: not valid JSON: {exc}") from exc


def load_script(path):
    doc = _read_json(path)
    if not isinstance(doc, list):
        raise ScenarioFormatError(f"{path}: script must be a JSON list of timed poses")
    points = []
    for entry in doc:
        try:
            points.append(
                ScriptPoint(float(entry["t"]), entry["position"], entry["quaternion"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioFormatError(f"{path}: malformed script entry {entry!r}") from exc
    return points


def cmd_fit(args):
    corr = load_scenario(args.scenario)
    config = _read_json(args.config) if args.config else {}
    if args.backend == "iter":
        t0 = time.perf_counter()
        fitted = fit_diffeo(corr, **config)
        wall = time.perf_counter() - t0
    else:
        if args.seed is not None:
            config["seed"] = args.seed
        cfg = TrainConfig(**config)
        t0 = time.perf_counter()
        fitted = train_flow(corr, cfg)
        wall = time.perf_counter() - t0
    fitted.save(args.out)
    print(f"backend={args.backend} wall_s={wall:.3f} F_p={fitted.f_p:.6e} F_q={fitted.f_q:.6e}")
    print(f"map written to {args.out}")
    return EXIT_OK


def cmd_bench(args):
    corr = load_scenario(args.scenario)
    config = _read_json(args.config) if args.config else {}
    report, _, _ = run_benchmark(
        corr,
        iter_config=config.get("iter"),
        flow_config=config.get("flow"),
        n_eval=config.get("n_eval", DEFAULT_N_EVAL),
        warmup=config.get("warmup", DEFAULT_WARMUP),
        reference=config.get("reference", REFERENCE_RESULTS),
        seed=args.seed or 0,
    )
    if args.out:
        save_report(report, args.out)
    print(format_table(report))
    if not all(report["ordinal_checks"].values()):
        raise NumericalError("ordinal latency structure violated")
    return EXIT_OK


def _grid_axes(args, corr):
    if args.bounds:
        vals = [float(v) for v in args.bounds.split(",")]
        if len(vals) != 6:
            raise ScenarioError("--bounds needs 6 comma-separated numbers x0,x1,y0,y1,z0,z1")
        lo = np.array(vals[0::2])
        hi = np.array(vals[1::2])
    elif corr is not None:
        lo, hi = corr.bounds("local", inflate=args.inflate)
    else:
        raise ScenarioError("grid needs --scenario or --bounds")
    n = [int(v) for v in args.n.split(",")]
    if len(n) == 1:
        n = n * 3
    if corr is not None and not args.bounds:
        extent = corr.local_positions().max(axis=0) - corr.local_positions().min(axis=0)
        n = [1 if extent[k] < 1e-6 else n[k] for k in range(3)]
    axes = [np.linspace(lo[k], hi[k], n[k]) if n[k] > 1 else np.array([0.5 * (lo[k] + hi[k])])
            for k in range(3)]
    return axes


def cmd_grid(args):
    mapping = load_map(args.map)
    corr = load_scenario(args.scenario) if args.scenario else None
    ax, ay, az = _grid_axes(args, corr)
    xs, ys, zs = np.meshgrid(ax, ay, az, indexing="ij")
    pts = np.stack([xs.ravel(), ys.ravel(), zs.ravel()], axis=1)
    images = mapping.forward_pos(pts)
    offsets = quat.quat_log(quat.canonicalize(mapping.orientation_offset(pts)))
    dets = np.linalg.det(mapping.jacobian(pts))
    table = np.column_stack([pts, images, offsets, dets])
    header = "sx,sy,sz,ix,iy,iz,rx,ry,rz,detJ"
    np.savetxt(args.out, table, delimiter=",", header=header, comments="")
    print(f"{len(pts)} grid points written to {args.out} (min detJ {dets.min():.6f})")
    return EXIT_OK


def cmd_sim(args):
    corr = load_scenario(args.scenario)
    mapping = load_map(args.map)
    config = _read_json(args.config) if args.config else {}
    sim_cfg = SimConfig(**config)
    if args.live:
        from .bridge import BridgeServer

        server = BridgeServer(
            addr=args.addr,
            tick_hz=args.tick_hz,
            scenarios={"live": args.scenario},
            maps={("live", args.backend): args.map},
            web_root=args.web,
        )
        _serve_forever(server)
        return EXIT_OK
    if not args.script:
        print("sim needs --script or --live", file=sys.stderr)
        return EXIT_USAGE
    script = load_script(args.script)
    if args.duration is not None:
        sim_cfg.duration = args.duration
    elif script:
        sim_cfg.duration = script[-1].t + 1.0
    sim = run_scripted(mapping, script, sim_cfg)
    write_log_csv(sim, args.out)
    print(f"{len(sim.rows)} steps logged to {args.out}")
    return EXIT_OK


def cmd_serve(args):
    from .bridge import BridgeServer

    scenarios, maps = {}, {}
    root = Path(args.dir) if args.dir else None
    if root is not None:
        for path in sorted(root.glob("*.scenario.json")):
            scenarios[path.name[: -len(".scenario.json")]] = str(path)
        for path in sorted(root.glob("*.map.json")):
            stem = path.name[: -len(".map.json")]
            if "." in stem:
                scenario_id, backend = stem.rsplit(".", 1)
                maps[(scenario_id, backend)] = str(path)
    if args.scenario:
        scenarios["live"] = args.scenario
        if args.map:
            maps[("live", args.backend)] = args.map
    if not scenarios:
        raise ScenarioError("serve needs --dir with *.scenario.json files or --scenario/--map")
    server = BridgeServer(
        addr=args.addr,
        tick_hz=args.tick_hz,
        scenarios=scenarios,
        maps=maps,
        web_root=args.web,
    )
    _serve_forever(server)
    return EXIT_OK


def _serve_forever(server):
    server.start()
    print(f"bridge listening on {server.host}:{server.port}", flush=True)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()


def build_parser():
    parser = argparse.ArgumentParser(
        prog="telemap",
        description="invertible workspace mappings for bilateral teleoperation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit or train a mapping on a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--backend", choices=("iter", "flow"), default="iter")
    p.add_argument("--config", help="JSON file with backend hyperparameters")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bench", help="two-backend benchmark on a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--config", help="JSON: n_eval, warmup, iter{}, flow{}, reference{}")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="write the report JSON here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("grid", help="export a warped grid for plotting")
    p.add_argument("--map", required=True)
    p.add_argument("--scenario")
    p.add_argument("--bounds", help="x0,x1,y0,y1,z0,z1 (overrides --scenario)")
    p.add_argument("--n", default="15", help="points per axis, e.g. 15 or 21,21,1")
    p.add_argument("--inflate", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("sim", help="run a teleoperation simulation")
    p.add_argument("--scenario", required=True)
    p.add_argument("--map", required=True)
    p.add_argument("--backend", choices=("iter", "flow"), default="iter")
    p.add_argument("--script", help="JSON list of timed local target poses")
    p.add_argument("--live", action="store_true", help="serve a live session instead")
    p.add_argument("--config", help="JSON SimConfig overrides")
    p.add_argument("--duration", type=float)
    p.add_argument("--out", default="sim_log.csv")
    p.add_argument("--addr", default="127.0.0.1:8765")
    p.add_argument("--tick-hz", type=float, default=60.0)
    p.add_argument("--web")
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("serve", help="run the streaming bridge service")
    p.add_argument("--dir", help="directory of *.scenario.json and *.map.json artifacts")
    p.add_argument("--scenario")
    p.add_argument("--map")
    p.add_argument("--backend", choices=("iter", "flow"), default="iter")
    p.add_argument("--addr", default="127.0.0.1:8765")
    p.add_argument("--tick-hz", type=float, default=60.0)
    p.add_argument("--web")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TelemapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
