"""Learned invertible mapping backend.

Positions go through a stack of affine coupling layers: part of the
coordinates passes through unchanged and conditions scale/shift networks for
the rest, so the inverse is closed-form and the Jacobian triangular with
positive diagonal.  A small dense network predicts the orientation offset as
a rotation vector, turned into a unit quaternion by the exponential map.

Both networks train jointly with Adam against a combined cost: mean position
error plus a penalty pulling the Jacobian toward alpha * I at sampled points,
and (weighted) the orientation terms: log-space data error, an identity pull
on samples, and L2 weight decay.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from . import quat
from .errors import NumericalError, TrainingError
from .mapping import push_velocity
from .scenario import orientation_error, position_error

# pass-through / transformed coordinate cycles; every coordinate is
# transformed twice per full pass and all splits alternate d = 1, 2
DEFAULT_SPLITS = (
    ((0,), (1, 2)),
    ((1, 2), (0,)),
    ((1,), (2, 0)),
    ((2, 0), (1,)),
    ((2,), (0, 1)),
    ((0, 1), (2,)),
)


@dataclass
class FlowArch:
    n_layers: int = 6
    hidden: tuple = (32, 32)
    ori_hidden: tuple = (24, 24, 24, 24)
    init_scale: float = 0.05

    def splits(self):
        return tuple(DEFAULT_SPLITS[i % len(DEFAULT_SPLITS)] for i in range(self.n_layers))


@dataclass
class TrainConfig:
    lambdas: tuple = (0.02, 3.0, 0.1, 9.0)
    alpha: float = 1.0
    n_samples: int = 200
    loops: int = 50_000
    learning_rate: float = 3e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    # step size drops by lr_drop_factor for the last (1 - lr_drop_at)
    # fraction of the loops: the distance terms have constant slopes, so
    # plain Adam orbits the optimum at an amplitude proportional to the rate
    lr_drop_at: float = 0.8
    lr_drop_factor: float = 0.1
    # quadratic-smoothing radii for the distance terms (position data,
    # orientation data, identity pull); plain distances noise-lock Adam
    huber_pos: float = 1e-4
    huber_ori: float = 1e-3
    huber_pull: float = 5e-2

    def __post_init__(self):
        self.lambdas = tuple(float(v) for v in self.lambdas)
        if len(self.lambdas) != 4 or any(v <= 0 for v in self.lambdas):
            raise ValueError("lambdas must be four positive weights")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.n_samples < 1 or self.loops < 1:
            raise ValueError("n_samples and loops must be >= 1")


class DenseNet:
    """Fully connected network; tanh on hidden layers, linear output.

    Two init styles: "coupling" (hidden uniform +-init_scale, final layer
    zero, so the layer starts as the exact identity) and "glorot" (variance
    preserving everywhere, final layer shrunk by final_scale; a deep tanh net
    with near-zero weights starves its own gradient signal and dies under
    weight decay before it couples).
    """

    def __init__(self, sizes, rng=None, init_scale=0.05, style="coupling", final_scale=0.25):
        self.sizes = tuple(int(s) for s in sizes)
        self.weights = []
        self.biases = []
        for i, (n_in, n_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            last = i == len(self.sizes) - 2
            if rng is None:
                w = np.zeros((n_in, n_out))
            elif style == "glorot":
                lim = np.sqrt(6.0 / (n_in + n_out)) * (final_scale if last else 1.0)
                w = rng.uniform(-lim, lim, size=(n_in, n_out))
            else:
                w = np.zeros((n_in, n_out)) if last else rng.uniform(
                    -init_scale, init_scale, size=(n_in, n_out)
                )
            b = np.zeros(n_out)
            self.weights.append(ad.param(w))
            self.biases.append(ad.param(b))

    def parameters(self):
        return self.weights + self.biases

    def forward_np(self, x):
        h = np.atleast_2d(np.asarray(x, dtype=float))
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.data + b.data
            if i < last:
                h = np.tanh(h)
        return h

    def input_jacobian_np(self, x):
        """d output / d input, shape (B, out, in)."""
        h = np.atleast_2d(np.asarray(x, dtype=float))
        last = len(self.weights) - 1
        jac = None
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            pre = h @ w.data + b.data
            wt = w.data.T
            jac = wt if jac is None else wt @ jac
            if i < last:
                h = np.tanh(pre)
                jac = (1.0 - h**2)[:, :, None] * jac
        return jac

    def forward_graph(self, x):
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = ad.matmul(h, w) + b
            if i < last:
                h = ad.tanh(h)
        return h

    def jacobian_graph(self, x):
        """Forward pass plus input Jacobian, both as graph tensors."""
        h = x
        jac = None
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            pre = ad.matmul(h, w) + b
            wt = ad.transpose(w)
            jac = wt if jac is None else ad.matmul(wt, jac)
            if i < last:
                h = ad.tanh(pre)
                d = 1.0 + ad.neg(ad.mul(h, h))
                jac = ad.mul(ad.unsqueeze(d, 2), jac)
            else:
                h = pre
        return h, jac

    def to_dict(self):
        return {
            "sizes": list(self.sizes),
            "weights": [w.data.tolist() for w in self.weights],
            "biases": [b.data.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, doc):
        net = cls(doc["sizes"])
        for w, data in zip(net.weights, doc["weights"]):
            w.data = np.asarray(data, dtype=float)
        for b, data in zip(net.biases, doc["biases"]):
            b.data = np.asarray(data, dtype=float)
        return net


class CouplingLayer:
    """Affine coupling: pass-through block conditions scale/shift of the rest."""

    def __init__(self, pass_idx, trans_idx, s_net, t_net):
        self.pass_idx = tuple(pass_idx)
        self.trans_idx = tuple(trans_idx)
        self.s_net = s_net
        self.t_net = t_net

    def parameters(self):
        return self.s_net.parameters() + self.t_net.parameters()

    def forward_np(self, x):
        xa = x[:, self.pass_idx]
        s = self.s_net.forward_np(xa)
        t = self.t_net.forward_np(xa)
        out = np.empty_like(x)
        out[:, self.pass_idx] = xa
        out[:, self.trans_idx] = x[:, self.trans_idx] * np.exp(s) + t
        return out

    def inverse_np(self, y):
        ya = y[:, self.pass_idx]
        s = self.s_net.forward_np(ya)
        t = self.t_net.forward_np(ya)
        out = np.empty_like(y)
        out[:, self.pass_idx] = ya
        out[:, self.trans_idx] = (y[:, self.trans_idx] - t) * np.exp(-s)
        return out

    def jacobian_np(self, x):
        b = len(x)
        xa = x[:, self.pass_idx]
        s = self.s_net.forward_np(xa)
        es = np.exp(s)
        js = self.s_net.input_jacobian_np(xa)
        jt = self.t_net.input_jacobian_np(xa)
        jac = np.zeros((b, 3, 3))
        for j in self.pass_idx:
            jac[:, j, j] = 1.0
        coef = x[:, self.trans_idx] * es
        for k, row in enumerate(self.trans_idx):
            jac[:, row, row] = es[:, k]
            jac[:, row, self.pass_idx] = coef[:, k, None] * js[:, k, :] + jt[:, k, :]
        return jac

    def forward_graph(self, x):
        xa = ad.getcols(x, self.pass_idx)
        xb = ad.getcols(x, self.trans_idx)
        s = self.s_net.forward_graph(xa)
        t = self.t_net.forward_graph(xa)
        yb = ad.mul(xb, ad.exp(s)) + t
        return ad.putcols([(self.pass_idx, xa), (self.trans_idx, yb)], 3)


def _coupling_jacobian_graph(layer, x, batch):
    """Graph version of CouplingLayer.jacobian_np: returns (y, J) tensors."""
    xa = ad.getcols(x, layer.pass_idx)
    xb = ad.getcols(x, layer.trans_idx)
    s, js = layer.s_net.jacobian_graph(xa)
    t, jt = layer.t_net.jacobian_graph(xa)
    es = ad.exp(s)
    yb = ad.mul(xb, es) + t
    y = ad.putcols([(layer.pass_idx, xa), (layer.trans_idx, yb)], 3)
    coef = ad.mul(xb, es)
    rows = [None] * 3
    eye = np.eye(3)
    for j in layer.pass_idx:
        rows[j] = ad.const(np.broadcast_to(eye[j], (batch, 3)))
    for k, row in enumerate(layer.trans_idx):
        dpass = ad.mul(ad.unsqueeze(ad.take(coef, k, 1), 1), ad.take(js, k, 1)) + ad.take(jt, k, 1)
        diag = ad.unsqueeze(ad.take(es, k, 1), 1)
        rows[row] = ad.putcols([(layer.pass_idx, dpass), ((row,), diag)], 3)
    return y, ad.stack(rows, axis=1)


class FlowMap:
    """Trained (or initialized) invertible network mapping."""

    def __init__(self, layers, ori_net, arch, seed=None):
        self.layers = layers
        self.ori_net = ori_net
        self.arch = arch
        self.seed = seed
        self.trained = False
        self.training_log = []
        self.f_p = None
        self.f_q = None

    def parameters(self):
        params = []
        for layer in self.layers:
            params.extend(layer.parameters())
        params.extend(self.ori_net.parameters())
        return params

    # -- position ---------------------------------------------------------

    def forward_pos(self, x):
        single = np.ndim(x) == 1
        h = np.atleast_2d(np.asarray(x, dtype=float))
        for layer in self.layers:
            h = layer.forward_np(h)
        return h[0] if single else h

    def backward_pos(self, x_prime):
        single = np.ndim(x_prime) == 1
        h = np.atleast_2d(np.asarray(x_prime, dtype=float))
        for layer in reversed(self.layers):
            h = layer.inverse_np(h)
        return h[0] if single else h

    def jacobian(self, x):
        single = np.ndim(x) == 1
        h = np.atleast_2d(np.asarray(x, dtype=float))
        jac = np.broadcast_to(np.eye(3), (len(h), 3, 3)).copy()
        for layer in self.layers:
            jac = layer.jacobian_np(h) @ jac
            h = layer.forward_np(h)
        return jac[0] if single else jac

    # -- orientation ------------------------------------------------------

    def rotation_vector(self, x):
        """Raw network output r(x); the offset is exp(r)."""
        single = np.ndim(x) == 1
        r = self.ori_net.forward_np(np.atleast_2d(np.asarray(x, dtype=float)))
        return r[0] if single else r

    def orientation_offset(self, x):
        return quat.quat_exp(self.rotation_vector(x))

    def forward_ori(self, x, q):
        return quat.quat_mul(self.orientation_offset(x), q)

    def backward_ori(self, x, q_prime):
        return quat.quat_mul(quat.conj(self.orientation_offset(x)), q_prime)

    def offset_gradient(self, x):
        """Analytic d g / d x (4 x 3): chain of exp-map and network Jacobians."""
        x = np.asarray(x, dtype=float).reshape(3)
        r = self.rotation_vector(x)
        dr_dx = self.ori_net.input_jacobian_np(x[None, :])[0]
        return quat.quat_exp_jacobian(r) @ dr_dx

    def map_velocity(self, x, q, v, omega, direction="forward"):
        """Same contract as DiffeoMap.map_velocity."""
        x = np.asarray(x, dtype=float).reshape(3)
        jac = self.jacobian(x)
        g = self.orientation_offset(x)
        dg = self.offset_gradient(x)
        return push_velocity(jac, g, dg, q, np.asarray(v, dtype=float), omega, direction)

    # -- serialization ----------------------------------------------------

    def to_dict(self):
        return {
            "kind": "flow",
            "arch": {
                "n_layers": self.arch.n_layers,
                "hidden": list(self.arch.hidden),
                "ori_hidden": list(self.arch.ori_hidden),
                "init_scale": self.arch.init_scale,
            },
            "seed": self.seed,
            "trained": self.trained,
            "f_p": self.f_p,
            "f_q": self.f_q,
            "layers": [
                {
                    "pass": list(layer.pass_idx),
                    "trans": list(layer.trans_idx),
                    "s": layer.s_net.to_dict(),
                    "t": layer.t_net.to_dict(),
                }
                for layer in self.layers
            ],
            "ori": self.ori_net.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc):
        arch = FlowArch(
            n_layers=doc["arch"]["n_layers"],
            hidden=tuple(doc["arch"]["hidden"]),
            ori_hidden=tuple(doc["arch"]["ori_hidden"]),
            init_scale=doc["arch"]["init_scale"],
        )
        layers = [
            CouplingLayer(
                entry["pass"],
                entry["trans"],
                DenseNet.from_dict(entry["s"]),
                DenseNet.from_dict(entry["t"]),
            )
            for entry in doc["layers"]
        ]
        flow = cls(layers, DenseNet.from_dict(doc["ori"]), arch, seed=doc.get("seed"))
        flow.trained = doc.get("trained", False)
        flow.f_p = doc.get("f_p")
        flow.f_q = doc.get("f_q")
        return flow

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_flow(arch=None, seed=0, rng=None):
    """Fresh FlowMap: coupling layers start at the exact identity; the
    orientation net starts near (not at) the identity offset."""
    arch = arch or FlowArch()
    rng = rng if rng is not None else np.random.default_rng(seed)
    layers = []
    for pass_idx, trans_idx in arch.splits():
        d = len(pass_idx)
        sizes = (d, *arch.hidden, 3 - d)
        layers.append(
            CouplingLayer(
                pass_idx,
                trans_idx,
                DenseNet(sizes, rng=rng, init_scale=arch.init_scale),
                DenseNet(sizes, rng=rng, init_scale=arch.init_scale),
            )
        )
    ori_net = DenseNet((3, *arch.ori_hidden, 3), rng=rng, style="glorot")
    return FlowMap(layers, ori_net, arch, seed=seed)


def sample_training_points(corr, cfg, rng=None):
    """Fixed evaluation samples ~ N(mu_a, 3 Sigma_a) from the local positions.

    Sigma_a is regularized (trace-scaled ridge) and its small eigenvalues are
    floored so planar scenarios still give full-rank sampling.
    """
    pos = corr.local_positions()
    mu = pos.mean(axis=0)
    sigma = np.cov(pos, rowvar=False)
    trace = float(np.trace(sigma))
    sigma = sigma + 1e-6 * trace * np.eye(3)
    evals, evecs = np.linalg.eigh(sigma)
    evals = np.maximum(evals, 1e-4 * trace)
    sigma = (evecs * evals) @ evecs.T
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    chol = np.linalg.cholesky(3.0 * sigma)
    return mu + rng.standard_normal((cfg.n_samples, 3)) @ chol.T


def flow_jacobian_graph(flow, x, batch):
    """Whole-stack (y, J) graph tensors at constant input points."""
    h = x
    jac = None
    for layer in flow.layers:
        h, layer_jac = _coupling_jacobian_graph(layer, h, batch)
        jac = layer_jac if jac is None else ad.matmul(layer_jac, jac)
    return h, jac


def training_cost(flow, local_pos, remote_pos, ori_targets, samples, cfg):
    """Build the combined training cost as a graph tensor.

    Returns (Q, Q1, Q2) where Q is the scalar Tensor to differentiate and
    Q1/Q2 are the float values of the position and orientation parts.
    """
    lam1, lam2, lam3, lam4 = cfg.lambdas
    n = len(local_pos)
    x_all = ad.const(np.concatenate([local_pos, samples], axis=0))
    y_all, jac_all = flow_jacobian_graph(flow, x_all, n + len(samples))

    mapped = ad.take(y_all, range(n), 0)
    f_p = ad.tmean(ad.huber_norm(mapped + ad.const(-remote_pos), cfg.huber_pos))

    jac_s = ad.take(jac_all, range(n, n + len(samples)), 0)
    target = cfg.alpha * np.eye(3)
    penalty = ad.tmean(ad.tsum(ad.absolute(jac_s + ad.const(-target)), axis=(1, 2)))
    q1 = f_p + lam1 * penalty

    r_all = flow.ori_net.forward_graph(x_all)
    r_data = ad.take(r_all, range(n), 0)
    ori_data = ad.tmean(ad.huber_norm(r_data + ad.const(-ori_targets), cfg.huber_ori))
    pull = ad.tmean(ad.huber_norm(ad.take(r_all, range(n, n + len(samples)), 0), cfg.huber_pull))
    # L2 term normalized per weight entry: at unit workspace scale the raw
    # sum exceeds any attainable data-term reduction and the zero network
    # becomes the global optimum
    n_weights = sum(w.data.size for w in flow.ori_net.weights)
    decay = None
    for w in flow.ori_net.weights:
        term = ad.tsum(ad.mul(w, w))
        decay = term if decay is None else decay + term
    q2 = ori_data + lam2 * pull + (lam3 / n_weights) * decay

    q = q1 + lam4 * q2
    return q, float(q1.data), float(q2.data)


def train(corr, cfg=None, arch=None):
    """Train a FlowMap on a correspondence; deterministic for a given seed."""
    cfg = cfg or TrainConfig()
    rng = np.random.default_rng(cfg.seed)
    flow = build_flow(arch=arch, seed=cfg.seed, rng=rng)
    samples = sample_training_points(corr, cfg, rng=rng)
    local_pos = corr.local_positions()
    remote_pos = corr.remote_positions()
    ori_targets = corr.relative_rotvecs()
    opt = ad.Adam(
        flow.parameters(),
        learning_rate=cfg.learning_rate,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        eps=cfg.eps,
    )
    flow.training_log = []
    drop_epoch = int(cfg.loops * cfg.lr_drop_at)
    for epoch in range(cfg.loops):
        if epoch == drop_epoch:
            opt.learning_rate = cfg.learning_rate * cfg.lr_drop_factor
        opt.zero_grad()
        q, q1, q2 = training_cost(flow, local_pos, remote_pos, ori_targets, samples, cfg)
        q_val = float(q.data)
        if not np.isfinite(q_val):
            raise TrainingError(f"training cost diverged at epoch {epoch}", epoch=epoch)
        q.backward()
        opt.step()
        flow.training_log.append((q_val, q1, q2))
    flow.trained = True
    flow.f_p = position_error(flow.forward_pos(local_pos), remote_pos)
    flow.f_q = orientation_error(
        flow.forward_ori(local_pos, corr.local_quaternions()), corr.remote_quaternions()
    )
    return flow
