"""Probabilistic surrogate regressors: a deep ensemble and an evidential (NIG) network.

Both are small feed-forward ReLU networks written directly in numpy. Ensemble
members are stored stacked along a leading axis so all of them train in the
same matrix products.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.special import digamma, gammaln

from .embed import DimensionMismatch

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
ALPHA_FLOOR = 1.0 + 1e-6
_EPS = 1e-6


class DegenerateTargets(UserWarning):
    pass


class ConstantTargets(ValueError):
    pass


@dataclass(frozen=True)
class SurrogateConfig:
    kind: Literal["deep_ensemble", "evidential"] = "deep_ensemble"
    hidden_sizes: tuple[int, ...] = (32,)
    ensemble_size: int = 5
    epochs: int = 150
    learning_rate: float = 1e-2
    validation_fraction: float = 0.2
    seed: int = 0
    batch_size: int | None = None
    evidential_reg: float = 0.01
    linear_skip: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.kind not in ("deep_ensemble", "evidential"):
            raise ValueError(f"unknown surrogate kind {self.kind!r}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in (0, 1)")
        if self.kind == "deep_ensemble" and self.ensemble_size < 2:
            raise ValueError("deep_ensemble needs ensemble_size >= 2")
        if self.epochs < 1 or self.learning_rate <= 0:
            raise ValueError("epochs must be >= 1 and learning_rate > 0")
        if any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden sizes must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")


@dataclass(frozen=True)
class PosteriorPrediction:
    mean: float
    std: float


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def nig_parameters(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Map raw head outputs (..., 4) to (gamma, nu, alpha, beta)."""
    gamma = raw[..., 0]
    nu = softplus(raw[..., 1]) + _EPS
    alpha = softplus(raw[..., 2]) + ALPHA_FLOOR
    beta = softplus(raw[..., 3]) + _EPS
    return gamma, nu, alpha, beta


def nig_std(nu, alpha, beta) -> np.ndarray:
    """Predictive spread sqrt(beta (1 + nu) / (nu (alpha - 1))) of a NIG head."""
    alpha = np.maximum(alpha, ALPHA_FLOOR)
    return np.sqrt(beta * (1.0 + nu) / (nu * (alpha - 1.0)))


def evidential_loss(raw: np.ndarray, y: np.ndarray, reg: float) -> tuple[float, np.ndarray]:
    """Mean NIG negative log-likelihood plus ``reg * |y - gamma| * (2 nu + alpha)``.

    Returns the loss and its gradient with respect to `raw`.
    """
    gamma, nu, alpha, beta = nig_parameters(raw)
    r = y - gamma
    omega = 2.0 * beta * (1.0 + nu)
    q = nu * r * r + omega
    nll = (
        0.5 * np.log(np.pi / nu)
        - alpha * np.log(omega)
        + (alpha + 0.5) * np.log(q)
        + gammaln(alpha)
        - gammaln(alpha + 0.5)
    )
    evidence = 2.0 * nu + alpha
    loss = nll + reg * np.abs(r) * evidence
    n = loss.size

    d_gamma = -(alpha + 0.5) * 2.0 * nu * r / q - reg * np.sign(r) * evidence
    d_nu = (
        -0.5 / nu
        - alpha * 2.0 * beta / omega
        + (alpha + 0.5) * (r * r + 2.0 * beta) / q
        + reg * 2.0 * np.abs(r)
    )
    d_alpha = -np.log(omega) + np.log(q) + digamma(alpha) - digamma(alpha + 0.5) + reg * np.abs(r)
    d_beta = -alpha * 2.0 * (1.0 + nu) / omega + (alpha + 0.5) * 2.0 * (1.0 + nu) / q

    grad = np.empty_like(raw)
    grad[..., 0] = d_gamma
    grad[..., 1] = d_nu * sigmoid(raw[..., 1])
    grad[..., 2] = d_alpha * sigmoid(raw[..., 2])
    grad[..., 3] = d_beta * sigmoid(raw[..., 3])
    return float(loss.mean()), grad / n


def _forward(x, weights, biases, skip):
    acts = [x]
    a = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = np.matmul(a, w) + b
        a = z if i == last else np.maximum(z, 0.0)
        acts.append(a)
    if skip is not None:
        a = a + np.matmul(x, skip)
    return a, acts


class _StackedMLP:
    """`members` independent ReLU networks evaluated together.

    The optional skip matrix adds a linear input-to-output path.
    """

    def __init__(self, sizes: Sequence[int], members: int, rng: np.random.Generator, linear_skip: bool) -> None:
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = math.sqrt(6.0 / fan_in)  # He-uniform for ReLU
            self.weights.append(rng.uniform(-bound, bound, size=(members, fan_in, fan_out)))
            self.biases.append(np.zeros((members, 1, fan_out)))
        self.skip = np.zeros((members, sizes[0], sizes[-1])) if linear_skip else None

    @property
    def params(self) -> list[np.ndarray]:
        extra = [] if self.skip is None else [self.skip]
        return self.weights + self.biases + extra

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        return _forward(x, self.weights, self.biases, self.skip)

    def backward(self, grad_out: np.ndarray, acts: list[np.ndarray]) -> list[np.ndarray]:
        gw: list[np.ndarray] = [None] * len(self.weights)  # type: ignore[list-item]
        gb: list[np.ndarray] = [None] * len(self.weights)  # type: ignore[list-item]
        g = grad_out
        for i in range(len(self.weights) - 1, -1, -1):
            gw[i] = np.matmul(acts[i].transpose(0, 2, 1), g)
            gb[i] = g.sum(axis=1, keepdims=True)
            if i:
                g = np.matmul(g, self.weights[i].transpose(0, 2, 1)) * (acts[i] > 0.0)
        extra = [] if self.skip is None else [np.matmul(acts[0].transpose(0, 2, 1), grad_out)]
        return gw + gb + extra


class _Adam:
    def __init__(self, params: list[np.ndarray], lr: float, b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class SurrogateModel:
    """A fitted surrogate. Inputs and targets are standardized internally."""

    kind: str
    input_dim: int
    train_size: int
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float
    y_scale: float
    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)
    skip: np.ndarray | None = None
    validation_r2: float = float("nan")
    degenerate: bool = False
    loss_history: list[float] = field(default_factory=list)

    @classmethod
    def constant(cls, value: float, input_dim: int, train_size: int = 0) -> SurrogateModel:
        return cls(
            kind="constant",
            input_dim=input_dim,
            train_size=train_size,
            x_mean=np.zeros(input_dim),
            x_scale=np.ones(input_dim),
            y_mean=float(value),
            y_scale=0.0,
            degenerate=True,
        )

    def _check(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[None, :]
        if Z.shape[-1] != self.input_dim:
            raise DimensionMismatch(f"surrogate expects {self.input_dim} inputs, got {Z.shape[-1]}")
        return Z

    def member_outputs(self, Z: np.ndarray) -> np.ndarray:
        """Raw (standardized-scale) outputs, shape (members, n, out)."""
        Z = self._check(Z)
        x = ((Z - self.x_mean) / self.x_scale)[None, :, :]
        return _forward(x, self.weights, self.biases, self.skip)[0]

    def predict_batch(self, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Predictive means and standard deviations for each row of `Z`."""
        Z = self._check(Z)
        n = Z.shape[0]
        if self.kind == "constant":
            return np.full(n, self.y_mean), np.zeros(n)
        out = self.member_outputs(Z)
        if self.kind == "deep_ensemble":
            members = out[..., 0]
            mu = members.mean(axis=0)
            sd = members.std(axis=0)
        else:
            gamma, nu, alpha, beta = nig_parameters(out[0])
            mu, sd = gamma, nig_std(nu, alpha, beta)
        return mu * self.y_scale + self.y_mean, sd * self.y_scale

    def to_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "input_dim": self.input_dim,
            "train_size": self.train_size,
            "x_mean": self.x_mean.tolist(),
            "x_scale": self.x_scale.tolist(),
            "y_mean": self.y_mean,
            "y_scale": self.y_scale,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "skip": None if self.skip is None else self.skip.tolist(),
            "validation_r2": None if math.isnan(self.validation_r2) else self.validation_r2,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SurrogateModel:
        if d.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported surrogate format {d.get('format_version')!r}")
        r2 = d.get("validation_r2")
        return cls(
            kind=d["kind"],
            input_dim=d["input_dim"],
            train_size=d["train_size"],
            x_mean=np.asarray(d["x_mean"], dtype=float),
            x_scale=np.asarray(d["x_scale"], dtype=float),
            y_mean=float(d["y_mean"]),
            y_scale=float(d["y_scale"]),
            weights=[np.asarray(w, dtype=float) for w in d["weights"]],
            biases=[np.asarray(b, dtype=float) for b in d["biases"]],
            skip=None if d.get("skip") is None else np.asarray(d["skip"], dtype=float),
            validation_r2=float("nan") if r2 is None else float(r2),
            degenerate=bool(d["degenerate"]),
        )


def predict(model: SurrogateModel, z: np.ndarray) -> PosteriorPrediction:
    mu, sd = model.predict_batch(np.asarray(z, dtype=float).reshape(1, -1))
    return PosteriorPrediction(float(mu[0]), float(sd[0]))


def r2_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    y_true = np.asarray(y_true, dtype=float)
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if y_true.size < 2 or ss_tot == 0.0:
        raise ConstantTargets("R^2 needs at least two distinct targets")
    ss_res = float(np.sum((y_true - np.asarray(y_pred, dtype=float)) ** 2))
    return 1.0 - ss_res / ss_tot


def validation_r2(model: SurrogateModel, Z: np.ndarray, y: np.ndarray) -> float:
    """Coefficient of determination of the predictive means on a holdout set."""
    mu, _ = model.predict_batch(Z)
    return r2_score(y, mu)


def _split(n: int, fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n_val = int(round(fraction * n))
    if n_val < 2 or n - n_val < 2:
        return np.arange(n), np.arange(0)
    perm = rng.permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def fit_surrogate(
    Z: np.ndarray,
    y: np.ndarray,
    config: SurrogateConfig = SurrogateConfig(),
    rng: np.random.Generator | None = None,
) -> SurrogateModel:
    """Train a surrogate on embeddings `Z` (n, d) and scores `y` (n,).

    A random `validation_fraction` of rows is held out to compute
    `validation_r2` (NaN when the holdout would have fewer than two rows or
    constant targets). Identical targets produce a flagged constant model.
    """
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if Z.ndim != 2 or Z.shape[0] != y.shape[0]:
        raise ValueError("Z must be (n, d) with one target per row")
    n, d = Z.shape
    if n < 4:
        raise ValueError(f"need at least 4 training points, got {n}")
    if rng is None:
        rng = np.random.default_rng(config.seed)

    y_scale = float(y.std())
    if y_scale <= 1e-12 * max(1.0, abs(float(y.mean()))):
        warnings.warn("all training targets are identical; using a constant predictor", DegenerateTargets, stacklevel=2)
        return SurrogateModel.constant(float(y.mean()), d, n)

    train_idx, val_idx = _split(n, config.validation_fraction, rng)
    Zt, yt = Z[train_idx], y[train_idx]
    x_mean = Zt.mean(axis=0)
    x_scale = Zt.std(axis=0)
    x_scale[x_scale < 1e-12] = 1.0
    y_mean = float(yt.mean())
    y_scale = float(yt.std()) or float(y.std())
    Xs = (Zt - x_mean) / x_scale
    ys = (yt - y_mean) / y_scale
    nt = Xs.shape[0]

    if config.kind == "deep_ensemble":
        members, out_dim = config.ensemble_size, 1
        boot = rng.integers(0, nt, size=(members, nt))
    else:
        members, out_dim = 1, 4
        boot = np.arange(nt)[None, :]
    net = _StackedMLP((d, *config.hidden_sizes, out_dim), members, rng, config.linear_skip)
    if config.kind == "evidential":
        # start with moderate evidence: nu ~ 1, alpha ~ 2, beta ~ 1
        net.biases[-1][..., 1:] = np.log(np.expm1(1.0))
    opt = _Adam(net.params, config.learning_rate)

    bs = nt if config.batch_size is None else min(config.batch_size, nt)
    member_axis = np.arange(members)[:, None]
    history: list[float] = []
    for _ in range(config.epochs):
        order = rng.permuted(np.broadcast_to(np.arange(nt), (members, nt)), axis=1)
        epoch_loss = 0.0
        for start in range(0, nt, bs):
            cols = order[:, start : start + bs]
            rows = boot[member_axis, cols]
            xb = Xs[rows]
            yb = ys[rows]
            out, acts = net.forward(xb)
            if config.kind == "deep_ensemble":
                resid = out[..., 0] - yb
                loss = float(np.mean(resid * resid))
                g = (2.0 / resid.size) * resid[..., None]
            else:
                loss, g = evidential_loss(out, yb, config.evidential_reg)
            opt.step(net.backward(g, acts))
            epoch_loss += loss * cols.shape[1]
        history.append(epoch_loss / nt)

    model = SurrogateModel(
        kind=config.kind,
        input_dim=d,
        train_size=int(nt),
        x_mean=x_mean,
        x_scale=x_scale,
        y_mean=y_mean,
        y_scale=y_scale,
        weights=net.weights,
        biases=net.biases,
        skip=net.skip,
        loss_history=history,
    )
    if val_idx.size >= 2 and np.ptp(y[val_idx]) > 0:
        model.validation_r2 = validation_r2(model, Z[val_idx], y[val_idx])
    return model


def config_dict(config: SurrogateConfig) -> dict:
    d = asdict(config)
    d["hidden_sizes"] = list(config.hidden_sizes)
    return d
