"""Newton-boosted decision trees for binary classification.

Trees are grown greedily on first- and second-order derivatives of the
weighted logistic loss. Split candidates come from per-feature quantile
histograms (exact midpoints when a feature has few distinct values), leaf
values solve the L1/L2-regularized Newton step in closed form, and each
split learns which way rows with missing values (NaN) should go.

Training is fully deterministic: there is no row or column subsampling,
and all tie-breaks are by lower feature index, then lower threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .dataset import TabularDataset

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class GbdtParams:
    learning_rate: float = 0.3
    n_estimators: int = 100
    max_depth: int = 4
    lambda_l2: float = 1.0
    alpha_l1: float = 0.0
    positive_class_weight: float = 1.0
    n_bins: int = 256
    min_child_weight: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.n_estimators < 0:
            raise ValueError("n_estimators cannot be negative")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.lambda_l2 < 0 or self.alpha_l1 < 0:
            raise ValueError("regularization terms cannot be negative")
        if self.positive_class_weight <= 0:
            raise ValueError("positive_class_weight must be positive")
        if self.n_bins < 2:
            raise ValueError("n_bins must be at least 2")
        if self.min_child_weight < 0:
            raise ValueError("min_child_weight cannot be negative")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "lambda_l2": self.lambda_l2,
            "alpha_l1": self.alpha_l1,
            "positive_class_weight": self.positive_class_weight,
            "n_bins": self.n_bins,
            "min_child_weight": self.min_child_weight,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbdtParams":
        return cls(**d)


@dataclass(frozen=True)
class TreeNode:
    """Either an internal split or a leaf; leaves carry the Newton weight."""

    weight: float | None = None
    feature_index: int | None = None
    threshold: float | None = None
    missing_goes_left: bool | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @classmethod
    def leaf(cls, weight: float) -> "TreeNode":
        return cls(weight=weight)

    @classmethod
    def split(
        cls,
        feature_index: int,
        threshold: float,
        missing_goes_left: bool,
        left: "TreeNode",
        right: "TreeNode",
    ) -> "TreeNode":
        return cls(
            feature_index=feature_index,
            threshold=threshold,
            missing_goes_left=missing_goes_left,
            left=left,
            right=right,
        )

    @property
    def is_leaf(self) -> bool:
        return self.weight is not None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"weight": self.weight}
        return {
            "feature": self.feature_index,
            "threshold": self.threshold,
            "missing_left": self.missing_goes_left,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "weight" in d:
            return cls.leaf(float(d["weight"]))
        return cls.split(
            feature_index=int(d["feature"]),
            threshold=float(d["threshold"]),
            missing_goes_left=bool(d["missing_left"]),
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
        )


@dataclass(frozen=True)
class GbdtModel:
    trees: tuple[TreeNode, ...]
    base_score: float
    params: GbdtParams
    feature_count: int
    train_loss: tuple[float, ...] = ()

    def __post_init__(self):
        for t, root in enumerate(self.trees):
            for node in _walk(root):
                if not node.is_leaf and node.feature_index >= self.feature_count:
                    raise ValueError(
                        f"tree {t} splits on feature {node.feature_index}, "
                        f"model has only {self.feature_count}"
                    )

    def to_json(self) -> str:
        doc = {
            "format_version": MODEL_FORMAT_VERSION,
            "params": self.params.to_dict(),
            "base_score": self.base_score,
            "feature_count": self.feature_count,
            "train_loss": list(self.train_loss),
            "trees": [t.to_dict() for t in self.trees],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GbdtModel":
        doc = json.loads(text)
        version = doc.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version!r}")
        return cls(
            trees=tuple(TreeNode.from_dict(t) for t in doc["trees"]),
            base_score=float(doc["base_score"]),
            params=GbdtParams.from_dict(doc["params"]),
            feature_count=int(doc["feature_count"]),
            train_loss=tuple(doc.get("train_loss", ())),
        )


def _walk(node: TreeNode):
    yield node
    if not node.is_leaf:
        yield from _walk(node.left)
        yield from _walk(node.right)


def soft_threshold(g: float, alpha: float):
    """L1 shrinkage: sign(g) * max(|g| - alpha, 0). Works elementwise."""
    return np.sign(g) * np.maximum(np.abs(g) - alpha, 0.0)


def leaf_weight(g_sum: float, h_sum: float, lambda_l2: float, alpha_l1: float) -> float:
    """Closed-form Newton leaf value -S(G) / (H + lambda)."""
    denom = h_sum + lambda_l2
    if denom <= 0:
        return 0.0
    return float(-soft_threshold(g_sum, alpha_l1) / denom)


def _sigmoid(m: np.ndarray) -> np.ndarray:
    out = np.empty_like(m, dtype=np.float64)
    pos = m >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-m[pos]))
    e = np.exp(m[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def weighted_log_loss(labels: np.ndarray, margins: np.ndarray, weights: np.ndarray) -> float:
    """Weighted mean logistic loss of raw margins, numerically stable."""
    z = np.where(labels == 1, -margins, margins)
    losses = np.logaddexp(0.0, z)
    return float((weights * losses).sum() / weights.sum())


def candidate_thresholds(values: np.ndarray, n_bins: int) -> np.ndarray:
    """Split candidates for one feature column (NaN ignored).

    Features with at most n_bins distinct values get exact midpoints
    between consecutive distinct values; denser features get n_bins - 1
    interior quantiles, deduplicated.
    """
    finite = values[~np.isnan(values)]
    distinct = np.unique(finite)
    if distinct.size <= 1:
        return np.empty(0, dtype=np.float64)
    if distinct.size <= n_bins:
        return (distinct[:-1] + distinct[1:]) / 2.0
    qs = np.arange(1, n_bins) / n_bins
    return np.unique(np.quantile(finite, qs))


def _bin_features(X: np.ndarray, thresholds: list[np.ndarray]) -> np.ndarray:
    """Bin index per cell, feature-major: count of thresholds <= value;
    -1 marks missing.

    A row goes left at threshold t exactly when its value < t, i.e. when
    its bin index is <= the threshold's position.
    """
    n, n_feat = X.shape
    binned = np.empty((n_feat, n), dtype=np.int32)
    for f in range(n_feat):
        col = X[:, f]
        missing = np.isnan(col)
        binned[f] = np.searchsorted(thresholds[f], col, side="right")
        binned[f, missing] = -1
    return binned


def _score(G: np.ndarray, H: np.ndarray, lam: float, alpha: float) -> np.ndarray:
    s = soft_threshold(G, alpha)
    denom = H + lam
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(denom > 0, s * s / denom, 0.0)
    return out


@dataclass(frozen=True)
class _Split:
    feature: int
    position: int
    threshold: float
    missing_goes_left: bool
    gain: float


def _find_best_split(
    binned: np.ndarray,
    idx: np.ndarray,
    feature_has_missing: np.ndarray,
    thresholds: list[np.ndarray],
    g_node: np.ndarray,
    h_node: np.ndarray,
    g_total: float,
    h_total: float,
    params: GbdtParams,
) -> _Split | None:
    """Best (feature, threshold, missing direction) by Newton gain.

    Gain ties break toward the lower feature index, then the lower
    threshold; missing-direction ties break left. Returns None when no
    candidate has positive gain and min_child_weight-feasible children.
    """
    lam, alpha, mcw = params.lambda_l2, params.alpha_l1, params.min_child_weight
    parent_score = _score(np.array(g_total), np.array(h_total), lam, alpha)
    best: _Split | None = None
    for f in range(binned.shape[0]):
        cand = thresholds[f]
        if cand.size == 0:
            continue
        bins = binned[f, idx]
        n_bins_f = cand.size + 1
        if feature_has_missing[f]:
            present = bins >= 0
            g_hist = np.bincount(bins[present], weights=g_node[present], minlength=n_bins_f)
            h_hist = np.bincount(bins[present], weights=h_node[present], minlength=n_bins_f)
            g_missing = g_total - g_hist.sum()
            h_missing = h_total - h_hist.sum()
        else:
            g_hist = np.bincount(bins, weights=g_node, minlength=n_bins_f)
            h_hist = np.bincount(bins, weights=h_node, minlength=n_bins_f)
            g_missing = 0.0
            h_missing = 0.0
        g_left = np.cumsum(g_hist)[:-1]
        h_left = np.cumsum(h_hist)[:-1]

        def gains_for(gl, hl):
            gr = g_total - gl
            hr = h_total - hl
            gains = 0.5 * (_score(gl, hl, lam, alpha) + _score(gr, hr, lam, alpha) - parent_score)
            feasible = (hl >= mcw) & (hr >= mcw)
            return np.where(feasible, gains, -np.inf)

        if g_missing == 0.0 and h_missing == 0.0:
            # No missing mass here: both directions score identically and
            # the tie resolves left.
            gains = gains_for(g_left, h_left)
            pos = int(np.argmax(gains))
            gain = float(gains[pos])
            go_left_pos = True
        else:
            gains_ml = gains_for(g_left + g_missing, h_left + h_missing)
            gains_mr = gains_for(g_left, h_left)
            go_left = gains_ml >= gains_mr
            gains = np.where(go_left, gains_ml, gains_mr)
            pos = int(np.argmax(gains))
            gain = float(gains[pos])
            go_left_pos = bool(go_left[pos])
        if gain > 0 and (best is None or gain > best.gain):
            best = _Split(
                feature=f,
                position=pos,
                threshold=float(cand[pos]),
                missing_goes_left=go_left_pos,
                gain=gain,
            )
    return best


def _grow_tree(
    binned: np.ndarray,
    feature_has_missing: np.ndarray,
    thresholds: list[np.ndarray],
    g: np.ndarray,
    h: np.ndarray,
    params: GbdtParams,
) -> tuple[TreeNode, np.ndarray]:
    """Grow one tree; returns the root and each row's raw leaf value."""
    leaf_values = np.empty(g.size, dtype=np.float64)

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        g_node = g[idx]
        h_node = h[idx]
        g_total = float(g_node.sum())
        h_total = float(h_node.sum())
        if depth < params.max_depth:
            split = _find_best_split(
                binned, idx, feature_has_missing, thresholds,
                g_node, h_node, g_total, h_total, params,
            )
            if split is not None:
                bins = binned[split.feature, idx]
                if feature_has_missing[split.feature]:
                    left = ((bins >= 0) & (bins <= split.position)) | (
                        (bins < 0) & split.missing_goes_left
                    )
                else:
                    left = bins <= split.position
                return TreeNode.split(
                    feature_index=split.feature,
                    threshold=split.threshold,
                    missing_goes_left=split.missing_goes_left,
                    left=build(idx[left], depth + 1),
                    right=build(idx[~left], depth + 1),
                )
        w = leaf_weight(g_total, h_total, params.lambda_l2, params.alpha_l1)
        leaf_values[idx] = w
        return TreeNode.leaf(w)

    root = build(np.arange(g.size), 0)
    return root, leaf_values


def train(train_data: TabularDataset, params: GbdtParams) -> GbdtModel:
    """Fit a boosted ensemble on the weighted logistic loss.

    Per round the margin m gives p = sigmoid(m), per-row gradient
    w * (p - y), and hessian w * p * (1 - p), where w is
    positive_class_weight for positive rows and 1 otherwise. The base
    score is the log-odds of the weighted positive rate, so even an empty
    ensemble is calibrated to the class balance. train_loss records the
    weighted log loss after each round, starting from the bare base score.
    """
    X = train_data.features
    y = train_data.labels.astype(np.float64)
    if X.shape[1] == 0:
        raise ValueError("training data has no feature columns")
    if np.isinf(X).any():
        raise ValueError("infinite feature values are not allowed; use NaN for missing")
    n_pos = int((y == 1).sum())
    if n_pos == 0 or n_pos == y.size:
        raise ValueError("training data must contain both classes")

    w = np.where(y == 1, params.positive_class_weight, 1.0)
    p_bar = float((w * y).sum() / w.sum())
    base_score = math.log(p_bar / (1.0 - p_bar))

    thresholds = [candidate_thresholds(X[:, f], params.n_bins) for f in range(X.shape[1])]
    binned = _bin_features(X, thresholds)
    feature_has_missing = np.isnan(X).any(axis=0)

    margins = np.full(y.size, base_score, dtype=np.float64)
    losses = [weighted_log_loss(y, margins, w)]
    trees: list[TreeNode] = []
    for _ in range(params.n_estimators):
        p = _sigmoid(margins)
        g = w * (p - y)
        h = w * p * (1.0 - p)
        root, leaf_values = _grow_tree(binned, feature_has_missing, thresholds, g, h, params)
        trees.append(root)
        margins = margins + params.learning_rate * leaf_values
        losses.append(weighted_log_loss(y, margins, w))

    return GbdtModel(
        trees=tuple(trees),
        base_score=base_score,
        params=params,
        feature_count=X.shape[1],
        train_loss=tuple(losses),
    )


def apply_tree(root: TreeNode, X: np.ndarray) -> np.ndarray:
    """Raw leaf value per row; NaN cells follow the stored direction."""
    out = np.empty(X.shape[0], dtype=np.float64)
    stack: list[tuple[TreeNode, np.ndarray]] = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.is_leaf:
            out[idx] = node.weight
            continue
        col = X[idx, node.feature_index]
        missing = np.isnan(col)
        left = np.where(missing, node.missing_goes_left, col < node.threshold)
        stack.append((node.left, idx[left]))
        stack.append((node.right, idx[~left]))
    return out


def _check_rows(model: GbdtModel, rows) -> np.ndarray:
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("rows must be a 2-D feature matrix")
    if X.shape[1] != model.feature_count:
        raise ValueError(
            f"model expects {model.feature_count} features, rows have {X.shape[1]}"
        )
    return X


def predict_margin(model: GbdtModel, rows) -> np.ndarray:
    """Raw additive margin: base score plus scaled leaf values."""
    X = _check_rows(model, rows)
    margins = np.full(X.shape[0], model.base_score, dtype=np.float64)
    for root in model.trees:
        margins += model.params.learning_rate * apply_tree(root, X)
    return margins


def predict_proba(model: GbdtModel, rows) -> np.ndarray:
    """Positive-class probability per row."""
    return _sigmoid(predict_margin(model, rows))


def predict(model: GbdtModel, rows, threshold: float = 0.5) -> np.ndarray:
    """Hard labels: probability >= threshold maps to class 1."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie strictly between 0 and 1")
    return (predict_proba(model, rows) >= threshold).astype(np.int64)
