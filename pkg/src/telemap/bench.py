"""Fit-time, residual, and evaluation-latency benchmarking for both backends.

Latencies are medians of single-point evaluations after a warmup, measured
with perf_counter on one thread.  Absolute milliseconds are hardware facts;
the comparison that is expected to hold everywhere is ordinal: the iterative
backend's Newton inversion makes backward slower than forward and velocity
slower still, while the network backend evaluates forward and backward at
near parity and faster than the iterative forward pass.
"""

import json
import time
from pathlib import Path

import numpy as np

from . import quat
from .diffeo import fit
from .flow import TrainConfig, train
from .scenario import orientation_error, position_error

DEFAULT_N_EVAL = 10_000
DEFAULT_WARMUP = 1_000


def measure_latency_ms(fn, points, n_eval=DEFAULT_N_EVAL, warmup=DEFAULT_WARMUP):
    """Median single-call latency in ms of fn(point) over cycled sample points."""
    m = len(points)
    for i in range(warmup):
        fn(points[i % m])
    times = np.empty(n_eval)
    for i in range(n_eval):
        p = points[i % m]
        t0 = time.perf_counter()
        fn(p)
        times[i] = time.perf_counter() - t0
    return float(np.median(times) * 1e3)


def _latency_block(backend, corr, n_eval, warmup, seed=0):
    rng = np.random.default_rng(seed)
    lo, hi = corr.bounds("local", inflate=1.5)
    pts = rng.uniform(lo, hi, size=(64, 3))
    fwd_pts = [p for p in pts]
    bwd_pts = [backend.forward_pos(p) for p in pts]
    q = quat.from_axis_angle([0, 0, 1], 0.4)
    v = np.array([0.1, -0.05, 0.02])
    w = np.array([0.0, 0.0, 0.3])
    return {
        "forward_ms": measure_latency_ms(backend.forward_pos, fwd_pts, n_eval, warmup),
        "backward_ms": measure_latency_ms(backend.backward_pos, bwd_pts, n_eval, warmup),
        "velocity_ms": measure_latency_ms(
            lambda p: backend.map_velocity(p, q, v, w, "forward"), fwd_pts, n_eval, warmup
        ),
    }


def residuals(backend, corr):
    f_p = position_error(backend.forward_pos(corr.local_positions()), corr.remote_positions())
    f_q = orientation_error(
        backend.forward_ori(corr.local_positions(), corr.local_quaternions()),
        corr.remote_quaternions(),
    )
    return f_p, f_q


def run_benchmark(corr, iter_config=None, flow_config=None, n_eval=DEFAULT_N_EVAL,
                  warmup=DEFAULT_WARMUP, reference=None, seed=0):
    """Fit/train both backends on a correspondence and measure everything."""
    iter_config = iter_config or {}
    t0 = time.perf_counter()
    diffeo = fit(corr, **iter_config)
    iter_fit_s = time.perf_counter() - t0

    flow_cfg = flow_config if isinstance(flow_config, TrainConfig) else TrainConfig(
        **(flow_config or {})
    )
    t0 = time.perf_counter()
    flow = train(corr, flow_cfg)
    flow_fit_s = time.perf_counter() - t0

    report = {"n_eval": n_eval, "warmup": warmup}
    for name, backend, fit_s in (("iter", diffeo, iter_fit_s), ("flow", flow, flow_fit_s)):
        f_p, f_q = residuals(backend, corr)
        block = {"fit_s": fit_s, "f_p": f_p, "f_q": f_q}
        block.update(_latency_block(backend, corr, n_eval, warmup, seed=seed))
        report[name] = block
    report["ordinal_checks"] = ordinal_checks(report)
    if reference:
        report["reference"] = reference
    return report, diffeo, flow


def ordinal_checks(report):
    """The latency-structure relations that should hold on any hardware."""
    it, fl = report["iter"], report["flow"]
    return {
        "iter_backward_gt_forward": it["backward_ms"] > it["forward_ms"],
        "flow_backward_le_2x_forward": fl["backward_ms"] <= 2.0 * fl["forward_ms"],
        "flow_forward_lt_iter_forward": fl["forward_ms"] < it["forward_ms"],
        "iter_velocity_gt_forward": it["velocity_ms"] > it["forward_ms"],
    }


def format_table(report):
    """Aligned human-readable benchmark table."""
    ref = report.get("reference", {})
    rows = [
        ("fit/train time (s)", "fit_s", 1.0),
        ("forward eval (ms)", "forward_ms", 1.0),
        ("backward eval (ms)", "backward_ms", 1.0),
        ("velocity eval (ms)", "velocity_ms", 1.0),
        ("position error", "f_p", 1.0),
        ("orientation error (rad)", "f_q", 1.0),
    ]
    headers = ["quantity", "iterative", "network"]
    have_ref = bool(ref)
    if have_ref:
        headers += ["ref iterative", "ref network"]
    lines = []
    for label, key, _ in rows:
        line = [label, _fmt(report["iter"].get(key)), _fmt(report["flow"].get(key))]
        if have_ref:
            line += [_fmt(ref.get("iter", {}).get(key)), _fmt(ref.get("flow", {}).get(key))]
        lines.append(line)
    widths = [max(len(h), max(len(l[i]) for l in lines)) for i, h in enumerate(headers)]
    out = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    out.append("  ".join("-" * w for w in widths))
    for line in lines:
        out.append("  ".join(v.ljust(w) for v, w in zip(line, widths)))
    out.append("")
    for name, ok in report["ordinal_checks"].items():
        out.append(f"[{'pass' if ok else 'FAIL'}] {name}")
    if have_ref and ref.get("hardware"):
        out.append(f"reference values measured on: {ref['hardware']}")
    return "\n".join(out)


def _fmt(value):
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def save_report(report, path):
    Path(path).write_text(json.dumps(report, indent=2))
