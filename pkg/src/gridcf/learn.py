"""Feasibility classifiers: a small feedforward network and a depth-limited
decision tree, both written directly against numpy.

Both models share the same interface: class probability for "feasible"
and an unscaled logit for the counterfactual search.  Features are
min-max scaled per bus with statistics fit on the training split only;
the scaler and the per-feature median absolute deviations travel with
the model so downstream distance computations see one normalization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datagen import Dataset

__all__ = [
    "FeatureScaler",
    "FfnnModel",
    "TreeModel",
    "Metrics",
    "DegenerateDataError",
    "train_ffnn",
    "train_tree",
    "predict_proba",
    "logit",
    "evaluate",
    "save_model",
    "load_model",
]

MODEL_SCHEMA = "gridcf-model-v1"
HIDDEN_WIDTH = 20
HIDDEN_LAYERS = 4
PROB_CLIP = 1e-6
RANGE_FLOOR = 1e-12


class DegenerateDataError(ValueError):
    """Training data does not contain both classes."""


class DimensionMismatchError(ValueError):
    """Profile length does not match the model's feature dimension."""


@dataclass(frozen=True)
class FeatureScaler:
    """Per-feature min-max normalization to [0, 1] fit on training data."""

    mins: np.ndarray
    maxs: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "FeatureScaler":
        return cls(mins=X.min(axis=0), maxs=X.max(axis=0))

    @property
    def ranges(self) -> np.ndarray:
        return np.maximum(self.maxs - self.mins, RANGE_FLOOR)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mins) / self.ranges

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return Z * self.ranges + self.mins


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    confusion: np.ndarray        # rows true (infeasible, feasible), cols predicted
    false_feasible_rate: float   # infeasible samples predicted feasible

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "confusion": self.confusion.astype(int).tolist(),
            "false_feasible_rate": self.false_feasible_rate,
        }


def _check_dim(X: np.ndarray, expected: int) -> None:
    if X.shape[-1] != expected:
        raise DimensionMismatchError(f"profile has {X.shape[-1]} features, model expects {expected}")


# ── feedforward network ──────────────────────────────────────────────────────

@dataclass
class FfnnModel:
    weights: list[np.ndarray]    # per layer, (fan_in, fan_out)
    biases: list[np.ndarray]
    scaler: FeatureScaler
    mads: np.ndarray             # per-feature MAD of normalized training data
    config: dict = field(default_factory=dict)
    metrics: dict | None = None

    kind = "ffnn"

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    def _forward(self, Z: np.ndarray) -> np.ndarray:
        """Pre-softmax outputs for already-normalized inputs, shape (n, 2)."""
        h = Z
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ W + b, 0.0)
        return h @ self.weights[-1] + self.biases[-1]

    def logits(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        _check_dim(X, self.n_features)
        out = self._forward(self.scaler.transform(X))
        return out[:, 1] - out[:, 0]

    def proba(self, X: np.ndarray) -> np.ndarray:
        """P(feasible) per row; softmax of the output pair."""
        return 1.0 / (1.0 + np.exp(-np.clip(self.logits(X), -500, 500)))


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    counts: np.ndarray | None = None     # raw class counts at leaf
    prob_feasible: float = 0.5           # weighted share at leaf

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class TreeModel:
    root: _TreeNode
    max_depth: int
    scaler: FeatureScaler
    mads: np.ndarray
    n_features_: int
    config: dict = field(default_factory=dict)
    metrics: dict | None = None

    kind = "tree"

    @property
    def n_features(self) -> int:
        return self.n_features_

    def proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        _check_dim(X, self.n_features)
        Z = self.scaler.transform(X)
        out = np.empty(Z.shape[0])
        self._fill(self.root, Z, np.arange(Z.shape[0]), out)
        # clipped so that sigmoid(logit) reproduces the probability exactly
        return np.clip(out, PROB_CLIP, 1.0 - PROB_CLIP)

    def _fill(self, node: _TreeNode, Z: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
        if node.is_leaf:
            out[idx] = node.prob_feasible
            return
        go_left = Z[idx, node.feature] <= node.threshold
        self._fill(node.left, Z, idx[go_left], out)
        self._fill(node.right, Z, idx[~go_left], out)

    def logits(self, X: np.ndarray) -> np.ndarray:
        p = np.clip(self.proba(X), PROB_CLIP, 1.0 - PROB_CLIP)
        return np.log(p / (1.0 - p))

    def depth(self) -> int:
        def walk(node, d):
            if node.is_leaf:
                return d
            return max(walk(node.left, d + 1), walk(node.right, d + 1))
        return walk(self.root, 0)


# ── training ─────────────────────────────────────────────────────────────────

def _prepare(train: Dataset) -> tuple[np.ndarray, np.ndarray, FeatureScaler, np.ndarray]:
    X, y = train.profiles, train.labels
    if len(np.unique(y)) < 2:
        raise DegenerateDataError("training data must contain both classes")
    scaler = FeatureScaler.fit(X)
    Z = scaler.transform(X)
    med = np.median(Z, axis=0)
    mads = np.median(np.abs(Z - med), axis=0)
    return Z, y, scaler, mads


def train_ffnn(train: Dataset, epochs: int = 300, lr: float = 1e-3,
               class_weights: tuple[float, float] = (2.0, 1.0),
               batch_size: int = 32, seed: int = 0) -> FfnnModel:
    """Adam-trained 4x20 ReLU network with weighted cross-entropy.

    ``class_weights`` is (infeasible, feasible); the default doubles the
    penalty on misclassified infeasible samples.
    """
    Z, y, scaler, mads = _prepare(train)
    n, d = Z.shape
    rng = np.random.default_rng(seed)

    sizes = [d] + [HIDDEN_WIDTH] * HIDDEN_LAYERS + [2]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(1.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))

    mw = [np.zeros_like(w) for w in weights]
    vw = [np.zeros_like(w) for w in weights]
    mb = [np.zeros_like(b) for b in biases]
    vb = [np.zeros_like(b) for b in biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    sample_w = np.where(y == 0, class_weights[0], class_weights[1]).astype(float)
    t = 0

    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            sel = order[start:start + batch_size]
            xb, yb, wb = Z[sel], y[sel], sample_w[sel]

            acts = [xb]
            h = xb
            for W, b in zip(weights[:-1], biases[:-1]):
                h = np.maximum(h @ W + b, 0.0)
                acts.append(h)
            out = h @ weights[-1] + biases[-1]

            shifted = out - out.max(axis=1, keepdims=True)
            expv = np.exp(shifted)
            probs = expv / expv.sum(axis=1, keepdims=True)

            grad_out = probs.copy()
            grad_out[np.arange(len(sel)), yb] -= 1.0
            grad_out *= (wb / len(sel))[:, None]

            grads_w, grads_b = [None] * len(weights), [None] * len(weights)
            delta = grad_out
            for li in range(len(weights) - 1, -1, -1):
                grads_w[li] = acts[li].T @ delta
                grads_b[li] = delta.sum(axis=0)
                if li > 0:
                    delta = (delta @ weights[li].T) * (acts[li] > 0)

            t += 1
            corr1 = 1.0 - beta1 ** t
            corr2 = 1.0 - beta2 ** t
            for li in range(len(weights)):
                mw[li] = beta1 * mw[li] + (1 - beta1) * grads_w[li]
                vw[li] = beta2 * vw[li] + (1 - beta2) * grads_w[li] ** 2
                weights[li] -= lr * (mw[li] / corr1) / (np.sqrt(vw[li] / corr2) + eps)
                mb[li] = beta1 * mb[li] + (1 - beta1) * grads_b[li]
                vb[li] = beta2 * vb[li] + (1 - beta2) * grads_b[li] ** 2
                biases[li] -= lr * (mb[li] / corr1) / (np.sqrt(vb[li] / corr2) + eps)

    config = {"epochs": epochs, "lr": lr, "class_weights": list(class_weights),
              "batch_size": batch_size, "seed": seed}
    return FfnnModel(weights=weights, biases=biases, scaler=scaler, mads=mads, config=config)


def _weighted_gini(counts: np.ndarray, weights: np.ndarray) -> float:
    w = counts * weights
    tot = w.sum()
    if tot <= 0:
        return 0.0
    p = w / tot
    return float(1.0 - (p ** 2).sum())


def train_tree(train: Dataset, max_depth: int = 4,
               class_weights: tuple[float, float] = (2.0, 1.0)) -> TreeModel:
    """Greedy CART on weighted Gini impurity with axis-aligned threshold splits."""
    Z, y, scaler, mads = _prepare(train)
    cw = np.asarray(class_weights, dtype=float)

    def best_split(idx: np.ndarray) -> tuple[int, float, float]:
        """(feature, threshold, impurity decrease) or (-1, 0, 0) if no split."""
        yi = y[idx]
        counts = np.bincount(yi, minlength=2).astype(float)
        parent = _weighted_gini(counts, cw)
        parent_w = (counts * cw).sum()
        best = (-1, 0.0, 0.0)
        for f in range(Z.shape[1]):
            col = Z[idx, f]
            order = np.argsort(col, kind="stable")
            sv, sy = col[order], yi[order]
            change = np.nonzero(sv[:-1] < sv[1:])[0]
            if change.size == 0:
                continue
            ones = np.cumsum(sy == 1).astype(float)
            zeros = np.cumsum(sy == 0).astype(float)
            left_counts = np.stack([zeros[change], ones[change]], axis=1)
            right_counts = counts - left_counts
            wl = left_counts @ cw
            wr = right_counts @ cw
            pl = left_counts * cw / wl[:, None]
            pr = right_counts * cw / wr[:, None]
            gl = 1.0 - (pl ** 2).sum(axis=1)
            gr = 1.0 - (pr ** 2).sum(axis=1)
            child = (wl * gl + wr * gr) / parent_w
            gains = parent - child
            k = int(np.argmax(gains))
            if gains[k] > best[2] + 1e-12:
                thr = 0.5 * (sv[change[k]] + sv[change[k] + 1])
                best = (f, float(thr), float(gains[k]))
        return best

    def build(idx: np.ndarray, depth: int) -> _TreeNode:
        yi = y[idx]
        counts = np.bincount(yi, minlength=2).astype(float)
        wsum = counts * cw
        prob = float(wsum[1] / wsum.sum()) if wsum.sum() > 0 else 0.5
        node = _TreeNode(counts=counts, prob_feasible=prob)
        if depth >= max_depth or counts.min() == 0 or idx.size < 2:
            return node
        f, thr, gain = best_split(idx)
        if f < 0 or gain <= 0:
            return node
        go_left = Z[idx, f] <= thr
        node.feature = f
        node.threshold = thr
        node.left = build(idx[go_left], depth + 1)
        node.right = build(idx[~go_left], depth + 1)
        return node

    root = build(np.arange(len(y)), 0)
    config = {"max_depth": max_depth, "class_weights": list(class_weights)}
    return TreeModel(root=root, max_depth=max_depth, scaler=scaler, mads=mads,
                     n_features_=Z.shape[1], config=config)


# ── shared inference and evaluation ──────────────────────────────────────────

def predict_proba(model, profile) -> float:
    """Probability of class Feasible for a single load profile."""
    return float(model.proba(np.asarray(profile, dtype=float).reshape(1, -1))[0])


def logit(model, profile) -> float:
    """Unscaled model output: pre-softmax difference (FFNN) or log-odds (tree)."""
    return float(model.logits(np.asarray(profile, dtype=float).reshape(1, -1))[0])


def evaluate(model, test: Dataset) -> Metrics:
    if len(test) == 0:
        raise ValueError("test set is empty")
    p = model.proba(test.profiles)
    pred = (p > 0.5).astype(int)
    y = test.labels
    confusion = np.zeros((2, 2), dtype=int)
    for true_cls in (0, 1):
        for pred_cls in (0, 1):
            confusion[true_cls, pred_cls] = int(np.sum((y == true_cls) & (pred == pred_cls)))
    n_infeas = confusion[0].sum()
    ffr = float(confusion[0, 1] / n_infeas) if n_infeas else 0.0
    return Metrics(
        accuracy=float((pred == y).mean()),
        confusion=confusion,
        false_feasible_rate=ffr,
    )


# ── persistence ──────────────────────────────────────────────────────────────

def _node_to_dict(node: _TreeNode) -> dict:
    if node.is_leaf:
        return {"counts": node.counts.tolist(), "prob_feasible": node.prob_feasible}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "counts": node.counts.tolist(),
        "prob_feasible": node.prob_feasible,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(doc: dict) -> _TreeNode:
    node = _TreeNode(
        counts=np.array(doc["counts"], dtype=float),
        prob_feasible=float(doc["prob_feasible"]),
    )
    if "feature" in doc:
        node.feature = int(doc["feature"])
        node.threshold = float(doc["threshold"])
        node.left = _node_from_dict(doc["left"])
        node.right = _node_from_dict(doc["right"])
    return node


def save_model(model, path) -> None:
    doc = {
        "schema": MODEL_SCHEMA,
        "kind": model.kind,
        "scaler": {"mins": model.scaler.mins.tolist(), "maxs": model.scaler.maxs.tolist()},
        "mads": model.mads.tolist(),
        "config": model.config,
        "metrics": model.metrics,
    }
    if model.kind == "ffnn":
        doc["weights"] = [w.tolist() for w in model.weights]
        doc["biases"] = [b.tolist() for b in model.biases]
    else:
        doc["max_depth"] = model.max_depth
        doc["n_features"] = model.n_features
        doc["tree"] = _node_to_dict(model.root)
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or doc.get("schema") != MODEL_SCHEMA:
        raise ValueError(f"not a {MODEL_SCHEMA} document: {path}")
    scaler = FeatureScaler(
        mins=np.array(doc["scaler"]["mins"], dtype=float),
        maxs=np.array(doc["scaler"]["maxs"], dtype=float),
    )
    mads = np.array(doc["mads"], dtype=float)
    if doc["kind"] == "ffnn":
        return FfnnModel(
            weights=[np.array(w) for w in doc["weights"]],
            biases=[np.array(b) for b in doc["biases"]],
            scaler=scaler, mads=mads,
            config=doc.get("config", {}), metrics=doc.get("metrics"),
        )
    if doc["kind"] == "tree":
        return TreeModel(
            root=_node_from_dict(doc["tree"]),
            max_depth=int(doc["max_depth"]),
            scaler=scaler, mads=mads,
            n_features_=int(doc["n_features"]),
            config=doc.get("config", {}), metrics=doc.get("metrics"),
        )
    raise ValueError(f"unknown model kind {doc['kind']!r}")
