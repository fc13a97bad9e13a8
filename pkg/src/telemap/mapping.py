"""Backend-independent mapping helpers.

Both backends expose the same evaluation surface (forward_pos, backward_pos,
jacobian, orientation_offset, forward_ori, backward_ori, map_velocity); this
module holds the pieces they share: the velocity pushforward built from a
position Jacobian and the orientation offset's spatial derivative, a trivial
identity backend, the MappedState convenience bundle, and file loading that
dispatches on the serialized "kind" tag.
"""

import json
from pathlib import Path

import numpy as np

from . import quat
from .errors import NumericalError
from .scenario import MappedState


def push_velocity(jac, g, dg, q, v, omega, direction):
    """Map velocities given J, the offset g(x), and dg = d g / d x (4 x 3).

    forward: (q, v, omega) belong to the local side; returns (v', omega').
    backward: q is the remote orientation and (v, omega) remote velocities,
    with jac, g, dg evaluated at the local-frame preimage; returns (v, omega).
    """
    q = np.asarray(q, dtype=float).reshape(4)
    v = np.asarray(v, dtype=float).reshape(3)
    omega = np.asarray(omega, dtype=float).reshape(3)
    if direction == "forward":
        v_out = jac @ v
        q_prime = quat.quat_mul(g, q)
        qdot = quat.qdot_from_angular_velocity(q, omega)
        qdot_prime = quat.hamilton(dg @ v, q) + quat.hamilton(g, qdot)
        return v_out, quat.angular_velocity(q_prime, qdot_prime)
    if direction == "backward":
        try:
            v_out = np.linalg.solve(jac, v)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular position Jacobian: {exc}") from exc
        q_local = quat.quat_mul(quat.conj(g), q)
        qdot_prime = quat.qdot_from_angular_velocity(q, omega)
        dg_bar = quat.conj(dg.T).T
        qdot = quat.hamilton(dg_bar @ v_out, q) + quat.hamilton(quat.conj(g), qdot_prime)
        return v_out, quat.angular_velocity(q_local, qdot)
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")


class IdentityMap:
    """Pass-through backend; handy as a baseline and in simulator tests."""

    f_p = 0.0
    f_q = 0.0

    def forward_pos(self, x):
        return np.asarray(x, dtype=float).copy()

    def backward_pos(self, x_prime):
        return np.asarray(x_prime, dtype=float).copy()

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return np.eye(3)
        return np.broadcast_to(np.eye(3), (len(x), 3, 3)).copy()

    def orientation_offset(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return quat.identity()
        return np.tile(quat.identity(), (len(x), 1))

    def forward_ori(self, x, q):
        return np.asarray(q, dtype=float).copy()

    def backward_ori(self, x, q_prime):
        return np.asarray(q_prime, dtype=float).copy()

    def map_velocity(self, x, q, v, omega, direction="forward"):
        if direction not in ("forward", "backward"):
            raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
        return np.asarray(v, dtype=float).copy(), np.asarray(omega, dtype=float).copy()


def map_state(backend, x, q, v=None, omega=None, direction="forward"):
    """Evaluate the full MappedState bundle at one pose (optionally velocities)."""
    x = np.asarray(x, dtype=float).reshape(3)
    if direction == "forward":
        x_out = backend.forward_pos(x)
        q_out = backend.forward_ori(x, q)
        jac = backend.jacobian(x)
    else:
        x_out = backend.backward_pos(x)
        q_out = backend.backward_ori(x_out, q)
        jac = backend.jacobian(x_out)
    v_out = omega_out = None
    if v is not None or omega is not None:
        v = np.zeros(3) if v is None else v
        omega = np.zeros(3) if omega is None else omega
        where = x if direction == "forward" else x_out
        v_out, omega_out = backend.map_velocity(where, q, v, omega, direction)
    return MappedState(x=x_out, q=q_out, jacobian=jac, v=v_out, omega=omega_out)


def load_map(path):
    """Load a serialized mapping, dispatching on its "kind" tag."""
    doc = json.loads(Path(path).read_text())
    kind = doc.get("kind")
    if kind == "diffeo":
        from .diffeo import DiffeoMap

        return DiffeoMap.from_dict(doc)
    if kind == "flow":
        from .flow import FlowMap

        return FlowMap.from_dict(doc)
    raise NumericalError(f"unknown map kind {kind!r}")
