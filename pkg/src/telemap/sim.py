"""Desk-scale bilateral teleoperation simulator.

Two task-space point robots are coupled through a mapping backend: the
remote robot's desired pose is the forward map of the local robot's actual
pose, the local robot's desired pose the backward map of the remote's, with
the local gains scaled down so the coupling acts as gentle haptic guidance.
Both robots run a Cartesian impedance law on point-mass dynamics integrated
with semi-implicit Euler; mapping references refresh at a fraction of the
control rate (default 1 kHz control, 100 Hz references).
"""

import io
from dataclasses import dataclass, field

import numpy as np

from . import quat
from .errors import NumericalError

LOG_COLUMNS = (
    ["t"]
    + [f"l_{c}" for c in ("x", "y", "z", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz")]
    + [f"r_{c}" for c in ("x", "y", "z", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz")]
    + [f"ld_{c}" for c in ("x", "y", "z", "qw", "qx", "qy", "qz")]
    + [f"rd_{c}" for c in ("x", "y", "z", "qw", "qx", "qy", "qz")]
    + ["force_proxy"]
)


@dataclass
class RobotState:
    x: np.ndarray
    q: np.ndarray
    v: np.ndarray = None
    omega: np.ndarray = None
    m_eff: float = 1.0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(3)
        self.q = quat.normalize(np.asarray(self.q, dtype=float).reshape(4))
        self.v = np.zeros(3) if self.v is None else np.asarray(self.v, dtype=float).reshape(3)
        self.omega = (
            np.zeros(3) if self.omega is None else np.asarray(self.omega, dtype=float).reshape(3)
        )
        if self.m_eff <= 0:
            raise ValueError("effective mass must be positive")


@dataclass
class ImpedanceGains:
    kp: float = 600.0
    kv: float = 20.0
    kpr: float = 30.0
    kvr: float = 2.0

    def __post_init__(self):
        if min(self.kp, self.kv, self.kpr, self.kvr) <= 0:
            raise ValueError("impedance gains must be positive")

    def scaled(self, factor):
        return ImpedanceGains(
            self.kp * factor, self.kv * factor, self.kpr * factor, self.kvr * factor
        )


@dataclass
class PoseTarget:
    x: np.ndarray
    q: np.ndarray
    v: np.ndarray = None
    omega: np.ndarray = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(3)
        self.q = quat.normalize(np.asarray(self.q, dtype=float).reshape(4))
        self.v = np.zeros(3) if self.v is None else np.asarray(self.v, dtype=float).reshape(3)
        self.omega = (
            np.zeros(3) if self.omega is None else np.asarray(self.omega, dtype=float).reshape(3)
        )


def impedance_force(state, desired, gains):
    """Spring-damper force and torque toward a desired pose.

    force  = Kp (x_d - x) + Kv (v_d - v)
    torque = Kpr log(q_d * conj(q)) + Kvr (w_d - w)
    """
    force = gains.kp * (desired.x - state.x) + gains.kv * (desired.v - state.v)
    err = quat.quat_log(quat.quat_mul(desired.q, quat.conj(state.q)))
    torque = gains.kpr * err + gains.kvr * (desired.omega - state.omega)
    return force, torque


@dataclass
class SimConfig:
    dt: float = 1e-3
    duration: float = 1.0
    gains_local: ImpedanceGains = field(default_factory=ImpedanceGains)
    gains_remote: ImpedanceGains = field(default_factory=ImpedanceGains)
    gains_operator: ImpedanceGains = None  # defaults to gains_local
    local_scale: float = 0.1
    ref_every: int = 10  # mapping reference updates every N steps (100 Hz at 1 kHz)
    m_eff: float = 1.0
    local_coupling: bool = True  # False: local robot feels pure damping instead

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0.0 < self.local_scale <= 1.0:
            raise ValueError("local_scale must be in (0, 1]")
        if self.gains_operator is None:
            self.gains_operator = self.gains_local


class TeleopSim:
    """One bilateral teleoperation session (single-threaded)."""

    def __init__(self, backend, config=None, local_start=None, remote_start=None):
        self.backend = backend
        self.config = config or SimConfig()
        if local_start is None:
            local_start = RobotState(np.zeros(3), quat.identity(), m_eff=self.config.m_eff)
        if remote_start is None:
            remote_start = RobotState(
                backend.forward_pos(local_start.x),
                backend.forward_ori(local_start.x, local_start.q),
                m_eff=self.config.m_eff,
            )
        self.local = local_start
        self.remote = remote_start
        self.t = 0.0
        self.step_count = 0
        self.rows = []
        self._local_desired = None
        self._remote_desired = None
        self._last_force_proxy = 0.0
        self._update_references()

    def _update_references(self):
        """Recompute mapped desired poses from the other robot's actual state."""
        b = self.backend
        x_l, q_l = self.local.x, self.local.q
        rx = b.forward_pos(x_l)
        rq = b.forward_ori(x_l, q_l)
        rv, rw = b.map_velocity(x_l, q_l, self.local.v, self.local.omega, "forward")
        self._remote_desired = PoseTarget(rx, rq, rv, rw)
        lx = b.backward_pos(self.remote.x)
        lq = b.backward_ori(lx, self.remote.q)
        lv, lw = b.map_velocity(lx, self.remote.q, self.remote.v, self.remote.omega, "backward")
        self._local_desired = PoseTarget(lx, lq, lv, lw)

    def step(self, operator_force=None, operator_torque=None):
        """Advance one control step; operator force/torque act on the local robot."""
        cfg = self.config
        if self.step_count % cfg.ref_every == 0:
            self._update_references()
        op_f = np.zeros(3) if operator_force is None else np.asarray(operator_force, dtype=float)
        op_t = np.zeros(3) if operator_torque is None else np.asarray(operator_torque, dtype=float)

        if cfg.local_coupling:
            scaled = cfg.gains_local.scaled(cfg.local_scale)
            f_l, t_l = impedance_force(self.local, self._local_desired, scaled)
        else:
            f_l = -cfg.local_scale * cfg.gains_local.kv * self.local.v
            t_l = -cfg.local_scale * cfg.gains_local.kvr * self.local.omega
        f_r, t_r = impedance_force(self.remote, self._remote_desired, cfg.gains_remote)
        self._last_force_proxy = float(np.linalg.norm(f_l))

        self._integrate(self.local, f_l + op_f, t_l + op_t)
        self._integrate(self.remote, f_r, t_r)
        self.t += cfg.dt
        self.step_count += 1
        if not (np.isfinite(self.local.x).all() and np.isfinite(self.remote.x).all()):
            raise NumericalError(
                f"simulation state became non-finite at step {self.step_count}; "
                f"last valid log index {len(self.rows) - 1}"
            )
        self.rows.append(self._log_row())

    def _integrate(self, state, force, torque):
        dt = self.config.dt
        state.v = state.v + force / state.m_eff * dt
        state.x = state.x + state.v * dt
        state.omega = state.omega + torque / state.m_eff * dt
        state.q = quat.normalize(quat.quat_mul(quat.quat_exp(state.omega * dt / 2.0), state.q))

    def _log_row(self):
        l, r = self.local, self.remote
        ld, rd = self._local_desired, self._remote_desired
        return np.concatenate(
            [
                [self.t],
                l.x, l.q, l.v, l.omega,
                r.x, r.q, r.v, r.omega,
                ld.x, ld.q,
                rd.x, rd.q,
                [self._last_force_proxy],
            ]
        )

    def log_array(self):
        return np.array(self.rows) if self.rows else np.empty((0, len(LOG_COLUMNS)))

    def advance_toward(self, target, steps=1):
        """Drive the local robot toward a target pose with the operator-hand spring."""
        for _ in range(steps):
            f, tq = impedance_force(self.local, target, self.config.gains_operator)
            self.step(operator_force=f, operator_torque=tq)


@dataclass
class ScriptPoint:
    t: float
    x: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(3)
        self.q = quat.normalize(np.asarray(self.q, dtype=float).reshape(4))


def script_pose(script, t):
    """Piecewise interpolation of a timed pose script (lerp + short-arc slerp)."""
    if not script:
        raise ValueError("empty script")
    if t <= script[0].t:
        return script[0].x.copy(), script[0].q.copy()
    if t >= script[-1].t:
        return script[-1].x.copy(), script[-1].q.copy()
    for a, b in zip(script[:-1], script[1:]):
        if a.t <= t <= b.t:
            w = (t - a.t) / max(b.t - a.t, 1e-12)
            x = (1 - w) * a.x + w * b.x
            rel = quat.quat_mul(b.q, quat.conj(a.q))
            q = quat.quat_mul(quat.quat_pow(rel, w), a.q)
            return x, q
    raise ValueError("script timestamps are not increasing")


def run_scripted(backend, script, config=None, local_start=None):
    """Run a full simulation driving the local robot through a timed script.

    The operator's hand is emulated by an impedance spring toward the
    interpolated script pose.  Returns the TeleopSim with its log filled.
    """
    config = config or SimConfig()
    times = [p.t for p in script]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("script timestamps must be strictly increasing")
    if local_start is None and script:
        local_start = RobotState(script[0].x, script[0].q, m_eff=config.m_eff)
    sim = TeleopSim(backend, config, local_start=local_start)
    n_steps = int(round(config.duration / config.dt))
    for k in range(n_steps):
        if script:
            x, q = script_pose(script, k * config.dt)
            target = PoseTarget(x, q)
            f, tq = impedance_force(sim.local, target, config.gains_operator)
            sim.step(operator_force=f, operator_torque=tq)
        else:
            sim.step()
    return sim


def write_log_csv(sim, path_or_stream):
    """Columnar CSV export: header row then one row per control step."""
    data = sim.log_array()
    header = ",".join(LOG_COLUMNS)
    if hasattr(path_or_stream, "write"):
        np.savetxt(path_or_stream, data, delimiter=",", header=header, comments="")
    else:
        with io.open(path_or_stream, "w") as handle:
            np.savetxt(handle, data, delimiter=",", header=header, comments="")
