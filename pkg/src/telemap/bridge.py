"""Streaming bridge: live mapping (and optional simulation) over WebSocket.

One session per connection.  The client binds to a scenario/backend pair,
streams operator poses, and receives mapped poses (plus simulator state in
live mode) at a fixed tick rate.  Only the freshest pending pose is mapped
each tick; stale or flooded input is dropped, never queued.

Frame schema (all positions [x, y, z] m, quaternions [w, x, y, z]):
  client -> server:
    {"type": "bind", "scenario": id, "backend": id}
    {"type": "pose", "seq": int, "t": float,
     "pose": {"position": [...], "quaternion": [...]}}
    {"type": "mode", "live": bool}
  server -> client:
    {"type": "snapshot", "objects_local": [...], "objects_remote": [...],
     "bounds": {"local": [[lo], [hi]], "remote": [[lo], [hi]]}}
    {"type": "mapped", "seq": int, "pose": {...}, "detJ": float}
    {"type": "sim", "t": float, "local": {...}, "remote": {...},
     "force_proxy": float}
    {"type": "error", "code": str, "msg": str}

The same HTTP port serves static files (the browser sandbox bundle) for
non-upgrade GET requests.
"""

import json
import socket
import threading
import time
from pathlib import Path

import numpy as np

from . import quat, wsproto
from .mapping import load_map
from .scenario import load_scenario
from .sim import PoseTarget, RobotState, SimConfig, TeleopSim, impedance_force

CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


def _pose_dict(x, q):
    return {"position": list(map(float, x)), "quaternion": list(map(float, q))}


class Session:
    """Per-connection state machine; owns its simulator exclusively."""

    def __init__(self, server, conn):
        self.server = server
        self.conn = conn
        self.rfile = conn.makefile("rb")
        self.send_lock = threading.Lock()
        self.bound = False
        self.mapping = None
        self.corr = None
        self.live = False
        self.sim = None
        self.sim_accumulator = 0.0
        self.last_seq = -1
        self.pending = None  # freshest unprocessed pose frame
        self.pending_lock = threading.Lock()
        self.closed = threading.Event()

    # -- outgoing ----------------------------------------------------------

    def send(self, obj):
        data = wsproto.encode_frame(json.dumps(obj), wsproto.OP_TEXT)
        try:
            with self.send_lock:
                self.conn.sendall(data)
        except OSError:
            self.closed.set()

    def error(self, code, msg):
        self.send({"type": "error", "code": code, "msg": msg})

    # -- incoming ----------------------------------------------------------

    def handle(self, obj):
        kind = obj.get("type")
        if kind == "bind":
            self.handle_bind(obj)
        elif kind == "pose":
            self.handle_pose(obj)
        elif kind == "mode":
            self.handle_mode(obj)
        else:
            self.error("unknown_type", f"unhandled frame type {kind!r}")

    def handle_bind(self, obj):
        if self.bound:
            self.error("already_bound", "session is already bound")
            return
        scenario_id = obj.get("scenario")
        backend_id = obj.get("backend")
        try:
            corr, mapping = self.server.artifacts(scenario_id, backend_id)
        except KeyError:
            self.error("not_found", f"unknown scenario/backend {scenario_id!r}/{backend_id!r}")
            return
        self.corr = corr
        self.mapping = mapping
        self.bound = True
        lo_l, hi_l = corr.bounds("local", inflate=1.25)
        lo_r, hi_r = corr.bounds("remote", inflate=1.25)
        self.send(
            {
                "type": "snapshot",
                "objects_local": [
                    {"id": o.id, **_pose_dict(o.position, o.quaternion)} for o in corr.local
                ],
                "objects_remote": [
                    {"id": o.id, **_pose_dict(o.position, o.quaternion)} for o in corr.remote
                ],
                "bounds": {
                    "local": [list(map(float, lo_l)), list(map(float, hi_l))],
                    "remote": [list(map(float, lo_r)), list(map(float, hi_r))],
                },
            }
        )

    def handle_pose(self, obj):
        if not self.bound:
            self.error("not_bound", "bind before streaming poses")
            return
        try:
            seq = int(obj["seq"])
            pose = obj["pose"]
            x = np.asarray(pose["position"], dtype=float).reshape(3)
            q = np.asarray(pose["quaternion"], dtype=float).reshape(4)
        except (KeyError, TypeError, ValueError):
            self.error("invalid_pose", "pose frame is malformed")
            return
        if not (np.isfinite(x).all() and np.isfinite(q).all()):
            self.error("invalid_pose", "pose contains non-finite values")
            return
        with self.pending_lock:
            if seq <= self.last_seq:
                return  # stale frame: freshest wins
            self.last_seq = seq
            self.pending = (seq, x, quat.normalize(q))

    def handle_mode(self, obj):
        if not self.bound:
            self.error("not_bound", "bind before switching modes")
            return
        live = bool(obj.get("live"))
        if live and self.sim is None:
            start = RobotState(self.corr.local_positions().mean(axis=0), quat.identity())
            self.sim = TeleopSim(self.mapping, SimConfig(), local_start=start)
            self.sim_accumulator = 0.0
        self.live = live

    # -- tick loop ---------------------------------------------------------

    def tick(self, dt):
        with self.pending_lock:
            pending, self.pending = self.pending, None
        target = None
        if pending is not None:
            seq, x, q = pending
            mapped_x = self.mapping.forward_pos(x)
            mapped_q = self.mapping.forward_ori(x, q)
            det = float(np.linalg.det(self.mapping.jacobian(x)))
            self.send(
                {"type": "mapped", "seq": seq, "pose": _pose_dict(mapped_x, mapped_q), "detJ": det}
            )
            target = PoseTarget(x, q)
        if self.live and self.sim is not None:
            self.sim_accumulator += dt
            steps = int(self.sim_accumulator / self.sim.config.dt)
            self.sim_accumulator -= steps * self.sim.config.dt
            self._advance_sim(min(steps, 1000), target)
            self.send(
                {
                    "type": "sim",
                    "t": self.sim.t,
                    "local": _pose_dict(self.sim.local.x, self.sim.local.q),
                    "remote": _pose_dict(self.sim.remote.x, self.sim.remote.q),
                    "force_proxy": self.sim._last_force_proxy,
                }
            )

    def _advance_sim(self, steps, target):
        self._operator_target = getattr(self, "_operator_target", None)
        if target is not None:
            self._operator_target = target
        for _ in range(steps):
            if self._operator_target is not None:
                f, tq = impedance_force(
                    self.sim.local, self._operator_target, self.sim.config.gains_operator
                )
                self.sim.step(operator_force=f, operator_torque=tq)
            else:
                self.sim.step()
        # keep memory bounded during long live sessions
        if len(self.sim.rows) > 200_000:
            del self.sim.rows[:100_000]

    def run(self):
        ticker = threading.Thread(target=self._tick_loop, daemon=True)
        ticker.start()
        try:
            while not self.closed.is_set():
                opcode, payload = wsproto.read_frame(self.rfile)
                if opcode == wsproto.OP_CLOSE:
                    break
                if opcode == wsproto.OP_PING:
                    with self.send_lock:
                        self.conn.sendall(wsproto.encode_frame(payload, wsproto.OP_PONG))
                    continue
                if opcode != wsproto.OP_TEXT:
                    continue
                try:
                    obj = json.loads(payload.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError):
                    self.error("bad_frame", "frame is not valid JSON")
                    continue
                self.handle(obj)
        except (wsproto.SocketClosed, OSError):
            pass
        finally:
            self.closed.set()

    def _tick_loop(self):
        period = 1.0 / self.server.tick_hz
        next_tick = time.perf_counter()
        while not self.closed.is_set():
            now = time.perf_counter()
            if now < next_tick:
                time.sleep(min(next_tick - now, period))
                continue
            next_tick += period
            if now - next_tick > 1.0:  # fell far behind; resync
                next_tick = now + period
            try:
                self.tick(period)
            except Exception as exc:  # keep the loop alive; report once
                self.error("tick_error", str(exc))


class BridgeServer:
    """Threaded WebSocket + static file server over one listening socket."""

    def __init__(self, addr="127.0.0.1:0", tick_hz=60.0, scenarios=None, maps=None,
                 web_root=None):
        host, _, port = addr.partition(":")
        self.host = host or "127.0.0.1"
        self.port = int(port or 0)
        self.tick_hz = float(tick_hz)
        self.scenario_paths = dict(scenarios or {})
        self.map_paths = dict(maps or {})
        self.web_root = Path(web_root) if web_root else None
        self._cache = {}
        self._cache_lock = threading.Lock()
        self._listener = None
        self._accept_thread = None
        self._stop = threading.Event()

    def artifacts(self, scenario_id, backend_id):
        """Load (and cache) the scenario and fitted map for a bind request."""
        with self._cache_lock:
            key = (scenario_id, backend_id)
            if key not in self._cache:
                scenario_path = self.scenario_paths[scenario_id]  # KeyError -> not_found
                map_path = self.map_paths[key]
                self._cache[key] = (load_scenario(scenario_path), load_map(map_path))
            return self._cache[key]

    def start(self):
        self._listener = socket.create_server((self.host, self.port))
        self.port = self._listener.getsockname()[1]
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def stop(self):
        self._stop.set()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass

    def _accept_loop(self):
        while not self._stop.is_set():
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            threading.Thread(target=self._handle_conn, args=(conn,), daemon=True).start()

    def _handle_conn(self, conn):
        try:
            rfile = conn.makefile("rb")
            request, headers = wsproto.read_http_head(rfile)
            if wsproto.is_upgrade(headers):
                conn.sendall(wsproto.handshake_response(headers))
                session = Session(self, conn)
                session.rfile = rfile
                session.run()
            else:
                self._serve_static(conn, request)
        except (wsproto.SocketClosed, OSError):
            pass
        finally:
            try:
                conn.close()
            except OSError:
                pass

    def _serve_static(self, conn, request):
        parts = request.split()
        path = parts[1] if len(parts) > 1 else "/"
        path = path.split("?")[0]
        if path.endswith("/"):
            path += "index.html"
        body, status, ctype = b"not found", "404 Not Found", "text/plain"
        if self.web_root is not None:
            candidate = (self.web_root / path.lstrip("/")).resolve()
            try:
                candidate.relative_to(self.web_root.resolve())
                if candidate.is_file():
                    body = candidate.read_bytes()
                    status = "200 OK"
                    ctype = CONTENT_TYPES.get(candidate.suffix, "application/octet-stream")
            except (ValueError, OSError):
                pass
        head = (
            f"HTTP/1.1 {status}\r\nContent-Type: {ctype}\r\n"
            f"Content-Length: {len(body)}\r\nConnection: close\r\n\r\n"
        ).encode("ascii")
        conn.sendall(head + body)
