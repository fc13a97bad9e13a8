"""Iterative diffeomorphic mapping backend.

The position map is a stack of K locally weighted translations
``phi(x) = x + exp(-rho1^2 ||x - c1||^2) v1`` and the orientation map a stack
of K locally weighted rotations ``q -> v2^k2(x) * q`` whose RBF kernels are
evaluated at the position image after the matching translation stage.  Layers
are fitted greedily: each iteration picks the worst-matched object pair,
aims a translation (rotation) at it, and line-searches the kernel width that
minimizes the mean residual over all pairs.

Each translation keeps ``rho1`` strictly below ``exp(1/2) / (sqrt(2)||v1||)``,
which makes every layer (hence the composition) globally invertible with
positive-determinant Jacobian.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import quat
from .errors import NumericalError
from .mapping import push_velocity
from .scenario import orientation_error, position_error

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo, hi, tol=1e-6):
    """Golden-section search for the minimizer of f on (lo, hi).

    Only interior points are evaluated, so open bounds are respected.
    Returns the best probed point (absolute tolerance ``tol`` on the argument).
    """
    a, b = float(lo), float(hi)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        # ties go left: cost plateaus exactly where kernels underflow, and the
        # useful minimizers of the fitting objectives sit at the small end
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return c if fc <= fd else d


def rho_max(v):
    """Largest invertibility-safe kernel inverse-width for translation v."""
    n = np.linalg.norm(v)
    if n == 0.0:
        return np.inf
    return math.exp(0.5) / (math.sqrt(2.0) * n)


@dataclass
class TranslationLayer:
    c1: np.ndarray
    v1: np.ndarray
    rho1: float

    def __post_init__(self):
        self.c1 = np.asarray(self.c1, dtype=float).reshape(3)
        self.v1 = np.asarray(self.v1, dtype=float).reshape(3)
        self.rho1 = float(self.rho1)
        if not 0.0 < self.rho1 < rho_max(self.v1):
            raise NumericalError(
                f"translation width rho1={self.rho1} outside (0, {rho_max(self.v1)})"
            )


@dataclass
class RotationLayer:
    c2: np.ndarray
    v2: np.ndarray
    rho2: float

    def __post_init__(self):
        self.c2 = np.asarray(self.c2, dtype=float).reshape(3)
        self.v2 = quat.canonicalize(quat.normalize(np.asarray(self.v2, dtype=float).reshape(4)))
        self.rho2 = float(self.rho2)
        if not self.rho2 > 0.0:
            raise NumericalError(f"rotation width rho2={self.rho2} must be positive")


@dataclass
class DiffeoMap:
    """Fitted stack of locally weighted translation/rotation layers."""

    translations: list
    rotations: list
    hyper: dict
    f_p: float = None
    f_q: float = None
    _arrays: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.translations) != len(self.rotations):
            raise NumericalError("translation and rotation stacks differ in length")

    @property
    def n_layers(self):
        return len(self.translations)

    def _compiled(self):
        """Layer parameters stacked into arrays for the evaluation hot paths."""
        if self._arrays is None:
            c1 = np.array([t.c1 for t in self.translations]).reshape(-1, 3)
            v1 = np.array([t.v1 for t in self.translations]).reshape(-1, 3)
            r1 = np.array([t.rho1 for t in self.translations])
            c2 = np.array([r.c2 for r in self.rotations]).reshape(-1, 3)
            lv2 = quat.quat_log(np.array([r.v2 for r in self.rotations]).reshape(-1, 4))
            r2 = np.array([r.rho2 for r in self.rotations])
            self._arrays = (c1, v1, r1 * r1, c2, lv2, r2 * r2)
        return self._arrays

    # -- position ---------------------------------------------------------

    def _stages(self, x):
        """Positions after each translation stage: (K+1, B, 3)."""
        c1, v1, r1sq, _, _, _ = self._compiled()
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty((len(c1) + 1,) + x.shape)
        out[0] = x
        for j in range(len(c1)):
            d = out[j] - c1[j]
            k = np.exp(-r1sq[j] * np.einsum("ij,ij->i", d, d))
            out[j + 1] = out[j] + k[:, None] * v1[j]
        return out

    def forward_pos(self, x):
        """Image of local position(s) x under the position mapping."""
        single = np.ndim(x) == 1
        y = self._stages(x)[-1]
        return y[0] if single else y

    def backward_pos(self, x_prime, tol=1e-12, max_iter=50):
        """Preimage of remote position(s), inverting layers in reverse order.

        Each layer is a near-identity perturbation, so a damped Newton per
        layer (initialized at the target) converges in a few steps.
        """
        c1, v1, r1sq, _, _, _ = self._compiled()
        single = np.ndim(x_prime) == 1
        y = np.atleast_2d(np.asarray(x_prime, dtype=float)).copy()
        for j in range(len(c1) - 1, -1, -1):
            if not np.any(v1[j]):
                continue
            y = _invert_layer(y, c1[j], v1[j], r1sq[j], tol, max_iter)
        return y[0] if single else y

    def _jacobian_from_stages(self, stages):
        c1, v1, r1sq, _, _, _ = self._compiled()
        b = stages.shape[1]
        jac = np.broadcast_to(np.eye(3), (b, 3, 3)).copy()
        for j in range(len(c1)):
            d = stages[j] - c1[j]
            k = np.exp(-r1sq[j] * np.einsum("ij,ij->i", d, d))
            grad_k = (-2.0 * r1sq[j]) * k[:, None] * d
            layer = np.eye(3) + v1[j][None, :, None] * grad_k[:, None, :]
            jac = layer @ jac
        return jac

    def jacobian(self, x):
        """Analytic position Jacobian, chain product over layers: (.., 3, 3)."""
        single = np.ndim(x) == 1
        jac = self._jacobian_from_stages(self._stages(x))
        return jac[0] if single else jac

    # -- orientation ------------------------------------------------------

    def _offset_from_stages(self, stages):
        """Accumulated rotation offset g(x) for precomputed position stages."""
        _, _, _, c2, lv2, r2sq = self._compiled()
        b = stages.shape[1]
        g = np.zeros((b, 4))
        g[:, 0] = 1.0
        for j in range(len(c2)):
            d = stages[j + 1] - c2[j]
            k = np.exp(-r2sq[j] * np.einsum("ij,ij->i", d, d))
            g = quat.hamilton(quat.quat_exp(k[:, None] * lv2[j]), g)
        return quat.normalize(g)

    def orientation_offset(self, x):
        """g(x): the unit-quaternion orientation offset at local position x."""
        single = np.ndim(x) == 1
        g = self._offset_from_stages(self._stages(x))
        return g[0] if single else g

    def forward_ori(self, x, q):
        """Image of orientation q at local position x: g(x) * q."""
        return quat.quat_mul(self.orientation_offset(x), q)

    def backward_ori(self, x, q_prime):
        """Local orientation conj(g(x)) * q'; x is the local-frame preimage."""
        return quat.quat_mul(quat.conj(self.orientation_offset(x)), q_prime)

    # -- velocities -------------------------------------------------------

    def offset_gradient(self, x, h=1e-6):
        """d g / d x by central differences, shape (4, 3)."""
        x = np.asarray(x, dtype=float).reshape(3)
        pts = np.repeat(x[None, :], 6, axis=0)
        for k in range(3):
            pts[2 * k, k] += h
            pts[2 * k + 1, k] -= h
        g = self.orientation_offset(pts)
        return np.stack([(g[2 * k] - g[2 * k + 1]) / (2.0 * h) for k in range(3)], axis=1)

    def map_velocity(self, x, q, v, omega, direction="forward", h=1e-6):
        """Push velocities through the mapping.

        forward: (x, q, v, omega) is the local state; returns (v', omega').
        backward: x is the local-frame preimage, q the remote orientation,
        (v, omega) the remote velocities; returns local (v, omega).
        """
        x = np.asarray(x, dtype=float).reshape(3)
        v = np.asarray(v, dtype=float).reshape(3)
        omega = np.asarray(omega, dtype=float).reshape(3)
        # one batched pass over the layer stack covers the point itself and
        # all six central-difference probes for d g / d x
        pts = np.repeat(x[None, :], 7, axis=0)
        for k in range(3):
            pts[1 + 2 * k, k] += h
            pts[2 + 2 * k, k] -= h
        stages = self._stages(pts)
        jac = self._jacobian_from_stages(stages[:, :1])[0]
        g_all = self._offset_from_stages(stages)
        g = g_all[0]
        dg = np.stack(
            [(g_all[1 + 2 * k] - g_all[2 + 2 * k]) / (2.0 * h) for k in range(3)], axis=1
        )
        return push_velocity(jac, g, dg, q, v, omega, direction)

    def lipschitz_bound(self):
        """Product upper bound on the position map's Lipschitz constant."""
        bound = 1.0
        for t in self.translations:
            bound *= 1.0 + np.linalg.norm(t.v1) * t.rho1 * math.sqrt(2.0) * math.exp(-0.5)
        return bound

    # -- serialization ----------------------------------------------------

    def to_dict(self):
        return {
            "kind": "diffeo",
            "hyper": self.hyper,
            "f_p": self.f_p,
            "f_q": self.f_q,
            "layers": [
                {
                    "c1": t.c1.tolist(),
                    "v1": t.v1.tolist(),
                    "rho1": t.rho1,
                    "c2": r.c2.tolist(),
                    "v2": r.v2.tolist(),
                    "rho2": r.rho2,
                }
                for t, r in zip(self.translations, self.rotations)
            ],
        }

    @classmethod
    def from_dict(cls, doc):
        translations, rotations = [], []
        for layer in doc["layers"]:
            translations.append(TranslationLayer(layer["c1"], layer["v1"], layer["rho1"]))
            rotations.append(RotationLayer(layer["c2"], layer["v2"], layer["rho2"]))
        return cls(
            translations=translations,
            rotations=rotations,
            hyper=doc["hyper"],
            f_p=doc.get("f_p"),
            f_q=doc.get("f_q"),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def _identity_translation(c1):
    # rho_max(0) is infinite, so any positive width passes the layer check
    return TranslationLayer(c1, np.zeros(3), 1.0)



def _invert_layer(y, c1, v1, r1sq, tol, max_iter):
    """Batched damped Newton for phi(x) = x + k(x) v1 = y, started at x = y."""
    x = y.copy()

    def residual(pts):
        d = pts - c1
        k = np.exp(-r1sq * np.einsum("ij,ij->i", d, d))
        return pts + k[:, None] * v1 - y

    for _ in range(max_iter):
        f = residual(x)
        rnorm = np.linalg.norm(f, axis=1)
        active = rnorm > tol
        if not active.any():
            return x
        d = x - c1
        k = np.exp(-r1sq * np.einsum("ij,ij->i", d, d))
        grad_k = (-2.0 * r1sq) * k[:, None] * d
        jac = np.eye(3) + v1[None, :, None] * grad_k[:, None, :]
        try:
            step = np.linalg.solve(jac, f[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular layer Jacobian during inversion: {exc}") from exc
        alpha = np.ones(len(x))
        for _ in range(30):
            xn = x - alpha[:, None] * step
            rn = np.linalg.norm(residual(xn), axis=1)
            worse = active & (rn > rnorm)
            if not worse.any():
                break
            alpha = np.where(worse, 0.5 * alpha, alpha)
        x = np.where(active[:, None], xn, x)
    rnorm = np.linalg.norm(residual(x), axis=1)
    if np.any(rnorm > tol):
        raise NumericalError(
            f"layer inversion did not converge: max residual {rnorm.max():.3e}"
        )
    return x


def fit(corr, n_layers=100, mu=0.3, beta1=0.5, beta2=1.0):
    """Fit a DiffeoMap to a correspondence by greedy layer stacking.

    One iteration appends one translation and one rotation layer: select the
    worst-matched pair, translate it ``beta1`` of the way to its target with
    the width minimizing the mean position error, update all points, then do
    the analogous rotation step (width search over the mean orientation
    error).  Kernel centers for rotations use post-translation positions.
    """
    if n_layers < 1:
        raise ValueError("n_layers must be >= 1")
    if not 0.0 < mu < 1.0:
        raise ValueError("mu must be in (0, 1)")
    if not (0.0 < beta1 <= 1.0 and 0.0 < beta2 <= 1.0):
        raise ValueError("beta1 and beta2 must be in (0, 1]")

    zx = corr.local_positions().copy()
    zq = corr.local_quaternions().copy()
    bx = corr.remote_positions()
    bq = corr.remote_quaternions()

    translations, rotations = [], []
    for _ in range(n_layers):
        # translation step
        m = int(np.argmax(np.linalg.norm(zx - bx, axis=1)))
        c1 = zx[m].copy()
        v1 = beta1 * (bx[m] - c1)
        if np.linalg.norm(v1) < 1e-15:
            translations.append(_identity_translation(c1))
        else:
            hi = mu * rho_max(v1)
            dist_sq = np.einsum("ij,ij->i", zx - c1, zx - c1)

            def pos_cost(rho):
                k = np.exp(-(rho * rho) * dist_sq)
                return np.mean(np.linalg.norm(zx + k[:, None] * v1 - bx, axis=1))

            rho1 = golden_section(pos_cost, 0.0, hi)
            translations.append(TranslationLayer(c1, v1, rho1))
            zx = zx + np.exp(-(rho1 * rho1) * dist_sq)[:, None] * v1

        # rotation step (kernel centered at the post-translation position)
        ori_dist = quat.quat_distance(zq, bq)
        n = int(np.argmax(ori_dist))
        c2 = zx[n].copy()
        if ori_dist[n] < 1e-15:
            rotations.append(RotationLayer(c2, quat.identity(), 1.0))
        else:
            v2 = quat.quat_pow(quat.quat_mul(bq[n], quat.conj(zq[n])), beta2)
            log_v2 = quat.quat_log(quat.canonicalize(v2))
            dist_sq = np.einsum("ij,ij->i", zx - c2, zx - c2)
            pairwise = np.linalg.norm(zx[:, None, :] - zx[None, :, :], axis=-1)
            d_min = pairwise[~np.eye(len(zx), dtype=bool)].min()
            hi = 10.0 / max(d_min, 1e-9)

            def ori_cost(rho):
                k = np.exp(-(rho * rho) * dist_sq)
                moved = quat.hamilton(quat.quat_exp(k[:, None] * log_v2), zq)
                return np.mean(quat.quat_distance(quat.normalize(moved), bq))

            rho2 = golden_section(ori_cost, 0.0, hi)
            rotations.append(RotationLayer(c2, v2, rho2))
            k = np.exp(-(rho2 * rho2) * dist_sq)
            zq = quat.normalize(quat.hamilton(quat.quat_exp(k[:, None] * log_v2), zq))

    fitted = DiffeoMap(
        translations=translations,
        rotations=rotations,
        hyper={"K": n_layers, "mu": mu, "beta1": beta1, "beta2": beta2},
    )
    fitted.f_p = position_error(fitted.forward_pos(corr.local_positions()), bx)
    fitted.f_q = orientation_error(
        fitted.forward_ori(corr.local_positions(), corr.local_quaternions()), bq
    )
    return fitted
