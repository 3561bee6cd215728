"""Fully-connected network trained with Adam, for the node and link tasks.

Hidden layers use ReLU. The node head is a softmax over classes trained
with cross-entropy; the link head is a single logistic unit trained with
binary cross-entropy. The L2 term is ``(l2 / 2) * sum ||W||^2`` over
weight matrices (biases are not penalized).
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConfigError, DataError, TrainingError

SOFTMAX = "softmax"
LOGISTIC = "logistic"
_MAGIC = "classcontrast-mlp"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 500
    l2: float = 1e-5
    batch_size: int | None = None  # None = full batch
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    hidden: tuple = (700,)
    standardize: bool = True
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.l2 < 0:
            raise ConfigError("l2 must be non-negative")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))

    @classmethod
    def node_defaults(cls, **kw):
        return cls(**kw)

    @classmethod
    def link_defaults(cls, **kw):
        base = dict(epochs=100, batch_size=128, hidden=(16, 16), standardize=False)
        base.update(kw)
        return cls(**base)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class MlpModel:
    """Weights ``W[i]`` have shape ``(widths[i], widths[i+1])``.

    An optional input standardization (``shift``/``scale``) is part of the
    model so it is applied identically at train and predict time.
    """

    def __init__(self, widths, output=SOFTMAX, seed=0, weights=None, biases=None,
                 shift=None, scale=None):
        if output not in (SOFTMAX, LOGISTIC):
            raise ConfigError(f"unknown output {output!r}")
        self.widths = tuple(int(w) for w in widths)
        if len(self.widths) < 2 or min(self.widths) < 1:
            raise ConfigError(f"bad layer widths {self.widths}")
        if output == LOGISTIC and self.widths[-1] != 1:
            raise ConfigError("a logistic head has exactly one output")
        self.output = output
        self.seed = seed
        if weights is None:
            rng = np.random.default_rng(seed)
            weights, biases = [], []
            for a, b in zip(self.widths[:-1], self.widths[1:]):
                limit = np.sqrt(6.0 / (a + b))
                weights.append(rng.uniform(-limit, limit, (a, b)))
                biases.append(np.zeros(b))
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.widths[i], self.widths[i + 1]) or b.shape != (self.widths[i + 1],):
                raise ConfigError(f"layer {i}: parameter shapes do not match widths")
        d = self.widths[0]
        self.shift = np.zeros(d) if shift is None else np.asarray(shift, dtype=np.float64)
        self.scale = np.ones(d) if scale is None else np.asarray(scale, dtype=np.float64)

    @property
    def params(self):
        return self.weights + self.biases

    @property
    def param_count(self):
        return sum(p.size for p in self.params)

    def copy(self):
        return MlpModel(self.widths, self.output, self.seed,
                        [w.copy() for w in self.weights], [b.copy() for b in self.biases],
                        self.shift.copy(), self.scale.copy())

    # -- forward / backward ---------------------------------------------------

    def _prepare(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.widths[0]:
            raise DataError(f"expected inputs of width {self.widths[0]}, got shape {x.shape}")
        return (x - self.shift) / self.scale

    def _forward(self, x):
        acts = [self._prepare(x)]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w + b
            acts.append(z if i == len(self.weights) - 1 else np.maximum(z, 0.0))
        return acts

    def logits(self, x):
        return self._forward(x)[-1]

    def predict_proba(self, x):
        """Softmax rows (node head) or scores in (0, 1) (link head)."""
        z = self.logits(x)
        return _softmax(z) if self.output == SOFTMAX else _sigmoid(z[:, 0])

    def data_loss(self, x, y):
        z = self.logits(x)
        return _loss(self.output, z, np.asarray(y))

    def loss(self, x, y, l2=0.0):
        return self.data_loss(x, y) + 0.5 * l2 * sum(float((w * w).sum()) for w in self.weights)

    def gradients(self, x, y, l2=0.0):
        """Mean-loss gradients as ``(loss, [dW...] + [db...])``."""
        acts = self._forward(x)
        y = np.asarray(y)
        z = acts[-1]
        m = z.shape[0]
        loss = _loss(self.output, z, y)
        if self.output == SOFTMAX:
            delta = _softmax(z)
            delta[np.arange(m), y] -= 1.0
        else:
            delta = (_sigmoid(z[:, 0]) - y)[:, None]
        delta /= m
        dws, dbs = [], []
        for i in range(len(self.weights) - 1, -1, -1):
            dws.append(acts[i].T @ delta + l2 * self.weights[i])
            dbs.append(delta.sum(axis=0))
            if i:
                delta = (delta @ self.weights[i].T) * (acts[i] > 0)
        loss += 0.5 * l2 * sum(float((w * w).sum()) for w in self.weights)
        return loss, dws[::-1] + dbs[::-1]

    # -- (de)serialization ----------------------------------------------------

    def flat_parameters(self):
        return np.concatenate([p.ravel() for p in self.params + [self.shift, self.scale]])

    def save(self, path, config=None):
        """Write a checkpoint: 8-byte little-endian header length, JSON header,
        then every parameter as little-endian float64."""
        header = {
            "format": _MAGIC,
            "version": 1,
            "widths": list(self.widths),
            "output": self.output,
            "seed": self.seed,
            "shapes": [list(p.shape) for p in self.params + [self.shift, self.scale]],
            "config": None if config is None else asdict(config),
        }
        blob = json.dumps(header, sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(struct.pack("<Q", len(blob)))
            fh.write(blob)
            fh.write(self.flat_parameters().astype("<f8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) < 8:
            raise DataError(f"{path}: truncated checkpoint")
        (n,) = struct.unpack("<Q", raw[:8])
        try:
            header = json.loads(raw[8:8 + n])
        except ValueError as exc:
            raise DataError(f"{path}: unreadable checkpoint header") from exc
        if header.get("format") != _MAGIC:
            raise DataError(f"{path}: not a model checkpoint")
        flat = np.frombuffer(raw[8 + n:], dtype="<f8").astype(np.float64)
        sizes = [int(np.prod(s)) for s in header["shapes"]]
        if flat.size != sum(sizes):
            raise DataError(f"{path}: expected {sum(sizes)} parameters, found {flat.size}")
        parts = np.split(flat, np.cumsum(sizes)[:-1])
        arrays = [p.reshape(s) for p, s in zip(parts, header["shapes"])]
        k = len(header["widths"]) - 1
        return cls(header["widths"], header["output"], header["seed"],
                   arrays[:k], arrays[k:2 * k], arrays[-2], arrays[-1])


def _loss(output, z, y):
    m = z.shape[0]
    if output == SOFTMAX:
        zs = z - z.max(axis=1, keepdims=True)
        logp = zs - np.log(np.exp(zs).sum(axis=1, keepdims=True))
        return float(-logp[np.arange(m), y].mean())
    z = z[:, 0]
    # log(1 + e^z) - y z, stable for large |z|
    return float((np.logaddexp(0.0, z) - y * z).mean())


class Adam:
    """Adam over a list of arrays, updated in place."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _check_finite(model, loss, epoch):
    if np.isfinite(loss) and all(np.isfinite(p).all() for p in model.params):
        return
    norms = ", ".join(f"W{i}={np.linalg.norm(w):.3g}" for i, w in enumerate(model.weights))
    raise TrainingError(f"non-finite loss {loss} at epoch {epoch} (layer norms: {norms})")


def _fit_scaling(x):
    shift = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    return shift, scale


@dataclass
class History:
    train_loss: list = field(default_factory=list)
    val_metric: list = field(default_factory=list)
    best_epoch: int = -1


def _train(model, x, y, cfg, val_fn, rng):
    opt = Adam(model.params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    hist = History()
    best, best_model = -np.inf, None
    m = x.shape[0]
    bs = m if cfg.batch_size is None else cfg.batch_size
    for epoch in range(cfg.epochs):
        with np.errstate(over="ignore", invalid="ignore"):
            total = _run_epoch(model, opt, x, y, cfg, bs, rng, epoch)
        _check_finite(model, total, epoch)
        hist.train_loss.append(total / m)
        score = val_fn(model)
        hist.val_metric.append(score)
        if score is None:
            continue
        if score > best:
            best, best_model, hist.best_epoch = score, model.copy(), epoch
    if best_model is None:
        hist.best_epoch = cfg.epochs - 1
        best_model = model
    return best_model, hist


def _run_epoch(model, opt, x, y, cfg, bs, rng, epoch):
    m = x.shape[0]
    order = np.arange(m) if bs >= m else rng.permutation(m)
    total = 0.0
    for start in range(0, m, bs):
        idx = order[start:start + bs]
        loss, grads = model.gradients(x[idx], y[idx], cfg.l2)
        _check_finite(model, loss, epoch)
        opt.step(grads)
        total += loss * idx.size
    return total


def train_node_classifier(embeddings, labels, split, cfg: TrainConfig = TrainConfig(),
                          class_count=None):
    """Fit a softmax MLP on the training rows of ``split``.

    Only training labels enter the loss; validation accuracy picks the
    returned snapshot (the last epoch is kept when there are no validation
    rows). Returns ``(model, history)``.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    if x.shape[0] != labels.shape[0]:
        raise DataError(f"{x.shape[0]} embedding rows for {labels.shape[0]} labels")
    if not np.isfinite(x).all():
        raise DataError("embeddings contain non-finite values")
    train, val = split.train, split.val
    if train.size == 0:
        raise DataError("no training rows")
    n_cls = int(labels[train].max()) + 1 if class_count is None else class_count
    model = MlpModel((x.shape[1],) + cfg.hidden + (n_cls,), SOFTMAX, cfg.seed)
    if cfg.standardize:
        model.shift, model.scale = _fit_scaling(x[train])
    yv = labels[val]

    def val_acc(mod):
        if val.size == 0:
            return None
        return float(np.mean(predict_classes(mod, x[val])[0] == yv))

    return _train(model, x[train], labels[train], cfg, val_acc, np.random.default_rng([cfg.seed, 1]))


def predict_classes(model: MlpModel, embeddings):
    """Argmax class (lowest index on ties) and probability rows."""
    proba = model.predict_proba(embeddings)
    return np.argmax(proba, axis=1), proba


# -- link task ------------------------------------------------------------------

def normalize_rows(embeddings):
    x = np.asarray(embeddings, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def pair_features(normalized, pairs):
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return normalized[pairs[:, 0]] * normalized[pairs[:, 1]]


def link_scores(model, embeddings, pairs, normalized=False):
    e = np.asarray(embeddings, dtype=np.float64) if normalized else normalize_rows(embeddings)
    return model.predict_proba(pair_features(e, pairs))


def train_link_predictor(embeddings, link_split, cfg: TrainConfig | None = None):
    """Fit the pair scorer on ``link_split`` training positives/negatives.

    Each embedding is L2-normalized; a pair's input is the element-wise
    product of its endpoints. Validation AUC picks the snapshot.
    Returns ``(model, history)``.
    """
    cfg = TrainConfig.link_defaults() if cfg is None else cfg
    e = normalize_rows(embeddings)
    pos, neg = np.asarray(link_split.train_pos), np.asarray(link_split.train_neg)
    x = np.vstack([pair_features(e, pos), pair_features(e, neg)])
    y = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    model = MlpModel((e.shape[1],) + cfg.hidden + (1,), LOGISTIC, cfg.seed)
    if cfg.standardize:
        model.shift, model.scale = _fit_scaling(x)
    vx = np.vstack([pair_features(e, link_split.val_pos), pair_features(e, link_split.val_neg)])
    vy = np.concatenate([np.ones(len(link_split.val_pos)), np.zeros(len(link_split.val_neg))])

    def val_auc(mod):
        if vy.size == 0 or vy.min() == vy.max():
            return None
        return auc(mod.predict_proba(vx), vy)

    return _train(model, x, y, cfg, val_auc, np.random.default_rng([cfg.seed, 1]))


# -- metrics and checks ---------------------------------------------------------

def auc(scores, labels) -> float:
    """Area under the ROC curve via the rank-sum statistic, ties counted half."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined unless both classes are present")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(s.size)
    sorted_s = s[order]
    # average 1-based ranks over tied groups
    starts = np.flatnonzero(np.r_[True, sorted_s[1:] != sorted_s[:-1]])
    ends = np.r_[starts[1:], s.size]
    ranks[order] = np.repeat((starts + ends + 1) / 2.0, ends - starts)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def gradient_check(model: MlpModel, x, y, l2=0.0, step=1e-5, floor=1e-8) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    Relative error is ``|a - n| / max(|a|, |n|, floor)``. The floor is raised
    to ``1e4 * eps * max(1, |loss|) / step`` so that entries too small for the
    difference quotient to resolve are judged on absolute error instead.
    """
    if model.param_count > 10_000:
        raise ConfigError("gradient_check is meant for models with at most 1e4 parameters")
    loss, grads = model.gradients(x, y, l2)
    floor = max(floor, 1e4 * np.finfo(np.float64).eps * max(1.0, abs(loss)) / step)
    worst = 0.0
    for p, g in zip(model.params, grads):
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = model.loss(x, y, l2)
            flat[i] = orig - step
            down = model.loss(x, y, l2)
            flat[i] = orig
            num = (up - down) / (2 * step)
            rel = abs(num - gflat[i]) / max(abs(num), abs(gflat[i]), floor)
            worst = max(worst, rel)
    return worst


@dataclass
class EvalReport:
    """Per-seed results; ``iterations`` maps e.g. ``"P0"`` to per-seed test values."""

    metric: str
    seeds: list
    per_seed: list
    iterations: dict = field(default_factory=dict)
    val_iterations: dict = field(default_factory=dict)
    headline: str | None = None

    @property
    def mean(self):
        return float(np.mean(self.per_seed))

    @property
    def std(self):
        return float(np.std(self.per_seed))

    def summary(self, name):
        vals = self.iterations.get(name, [])
        return {"mean": float(np.mean(vals)), "std": float(np.std(vals)),
                "per_seed": [float(v) for v in vals]}

    def to_dict(self):
        out = {"metric": self.metric, "seeds": list(self.seeds), "headline": self.headline,
               "mean": self.mean, "std": self.std, "per_seed": [float(v) for v in self.per_seed]}
        if self.iterations:
            out["iterations"] = {k: self.summary(k) for k in self.iterations}
            out["val_iterations"] = {k: {"mean": float(np.mean(v)), "per_seed": [float(a) for a in v]}
                                     for k, v in self.val_iterations.items()}
        return out


def with_seed(cfg: TrainConfig, seed: int) -> TrainConfig:
    return replace(cfg, seed=int(seed))
