"""Quaternion and pose algebra on the unit sphere.

Conventions
-----------
- Quaternions are float64 numpy arrays ``[w, x, y, z]`` (scalar part first).
- Rotation vectors are the half-angle image under the quaternion log: a
  rotation by angle ``theta`` about unit axis ``u`` maps to ``r = theta/2 * u``.
- Every function accepts a single element ``(4,)`` / ``(3,)`` or a batch
  ``(..., 4)`` / ``(..., 3)`` and broadcasts over leading axes.
- All functions are pure; inputs are never mutated.

``quat_mul`` renormalizes its output and is meant for composing unit
quaternions.  ``hamilton`` is the raw product on R^4 and is what velocity
formulas use, where tangent (non-unit) 4-vectors appear.
"""

from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-9

_EPS = 1e-300  # guards 0/0 without branching


def identity():
    return np.array([1.0, 0.0, 0.0, 0.0])


def normalize(q):
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    return q / n


def canonicalize(q):
    """Flip sign so the scalar part is >= 0 (picks one sheet of the double cover)."""
    q = np.asarray(q, dtype=float)
    sign = np.where(q[..., :1] < 0.0, -1.0, 1.0)
    return q * sign


def conj(q):
    q = np.asarray(q, dtype=float)
    out = q.copy()
    out[..., 1:] = -out[..., 1:]
    return out


def hamilton(a, b):
    """Raw Hamilton product on R^4 (no renormalization)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, av = a[..., :1], a[..., 1:]
    bw, bv = b[..., :1], b[..., 1:]
    w = aw * bw - np.sum(av * bv, axis=-1, keepdims=True)
    v = aw * bv + bw * av + np.cross(av, bv)
    return np.concatenate([w, v], axis=-1)


def quat_mul(a, b):
    """Product of two unit quaternions, renormalized."""
    return normalize(hamilton(a, b))


def _arccos_star(w):
    """arccos shifted to (-pi/2, pi/2]: antipodal quaternions get the same log."""
    a = np.arccos(np.clip(w, -1.0, 1.0))
    return np.where(w < 0.0, a - np.pi, a)


def quat_log(q):
    """Map a unit quaternion to its rotation vector (zero for the identity)."""
    q = np.asarray(q, dtype=float)
    w, v = q[..., 0], q[..., 1:]
    n = np.linalg.norm(v, axis=-1)
    scale = _arccos_star(w) / (n + _EPS)
    scale = np.where(n == 0.0, 0.0, scale)
    return scale[..., None] * v


def quat_exp(r):
    """Map a rotation vector back to a unit quaternion (inverse of quat_log)."""
    r = np.asarray(r, dtype=float)
    n = np.linalg.norm(r, axis=-1)
    w = np.cos(n)
    s = np.where(n == 0.0, 0.0, np.sin(n) / (n + _EPS))
    return np.concatenate([w[..., None], s[..., None] * r], axis=-1)


def quat_pow(q, k):
    """Spherical interpolation from the identity: exp(k * log(q)).

    ``q`` is canonicalized first so the short arc is taken.  ``k`` may be a
    scalar or a batch broadcast against ``q``.
    """
    r = quat_log(canonicalize(q))
    k = np.asarray(k, dtype=float)
    return quat_exp(k[..., None] * r)


def quat_distance(a, b):
    """arccos(|a . b|), in [0, pi/2]; invariant to sign flips of either side.

    Evaluated through the chord length 2 asin(min(|a-b|, |a+b|) / 2), which is
    the same function but stays exact near zero where arccos loses digits.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    chord = np.minimum(
        np.linalg.norm(a - b, axis=-1), np.linalg.norm(a + b, axis=-1)
    )
    return 2.0 * np.arcsin(np.clip(0.5 * chord, 0.0, 1.0))


_TANGENT_TOL = 1e-6


def angular_velocity(q, qdot):
    """World-frame angular velocity 2 * qdot * conj(q).

    ``qdot`` is projected onto the tangent space at ``q`` when numerical
    drift makes it lose tangency (|q . qdot| > 1e-6 * ||qdot||).
    """
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    dot = np.sum(q * qdot, axis=-1, keepdims=True)
    drift = np.abs(dot) > _TANGENT_TOL * np.linalg.norm(qdot, axis=-1, keepdims=True)
    qdot = np.where(drift, qdot - dot * q, qdot)
    return 2.0 * hamilton(qdot, conj(q))[..., 1:]


def qdot_from_angular_velocity(q, omega):
    """Quaternion time derivative for world-frame angular velocity omega."""
    omega = np.asarray(omega, dtype=float)
    pure = np.concatenate([np.zeros_like(omega[..., :1]), omega], axis=-1)
    return 0.5 * hamilton(pure, q)


def quat_exp_jacobian(r):
    """d quat_exp / dr, shape (..., 4, 3); series fallback near r = 0."""
    r = np.asarray(r, dtype=float)
    n = np.linalg.norm(r, axis=-1)
    small = n < 1e-8
    ns = np.where(small, 1.0, n)
    sn = np.sin(ns) / ns
    cs = (np.cos(ns) - sn) / ns**2
    sn = np.where(small, 1.0, sn)
    cs = np.where(small, -1.0 / 3.0, cs)
    eye = np.broadcast_to(np.eye(3), r.shape + (3,))
    outer = r[..., :, None] * r[..., None, :]
    dv = sn[..., None, None] * eye + cs[..., None, None] * outer
    dw_scale = np.where(small, -1.0, -np.sin(ns) / ns)
    dw = dw_scale[..., None, None] * r[..., None, :]
    return np.concatenate([dw, dv], axis=-2)


def from_axis_angle(axis, angle):
    """Unit quaternion for a rotation by ``angle`` radians about ``axis``."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return quat_exp(axis * (angle / 2.0))


def assert_unit(q, tol=UNIT_TOL):
    n = np.linalg.norm(np.asarray(q, dtype=float), axis=-1)
    if not np.all(np.abs(n - 1.0) <= tol):
        raise ValueError(f"quaternion not unit-norm: |q| = {n}")


@dataclass(frozen=True)
class Pose:
    """Position in meters plus unit-quaternion orientation [w, x, y, z]."""

    x: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(3))
        q = np.asarray(self.q, dtype=float).reshape(4)
        assert_unit(q, tol=1e-6)
        object.__setattr__(self, "q", normalize(q))
