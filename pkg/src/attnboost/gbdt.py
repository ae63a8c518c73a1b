"""Histogram-based second-order boosted trees with a binary logistic objective.

Features are quantized once into per-feature bins (midpoint thresholds);
split search scans bin boundaries maximizing the regularized second-order
gain and trees are grown depth-first. Leaf weights use the L1/L2 closed form
and are stored unscaled; the shrinkage factor is applied at prediction time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attention import sigmoid
from .errors import DataError
from .tabular import FeatureMatrix

HESSIAN_FLOOR = 1e-16

# Relative window inside which two split gains are considered tied, so the
# lexicographic tie-break cannot be overridden by summation-order noise.
GAIN_TIE_REL = 1e-10


@dataclass
class BoostConfig:
    n_estimators: int = 3000
    learning_rate: float = 0.1
    max_depth: int = 10
    min_child_weight: float = 10.0
    gamma: float = 0.8
    subsample: float = 0.8
    colsample_bytree: float = 0.8
    reg_alpha: float = 0.1
    reg_lambda: float = 1.0
    max_bins: int = 256
    seed: int = 42
    base_score: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if not 0.0 < self.subsample <= 1.0 or not 0.0 < self.colsample_bytree <= 1.0:
            raise ValueError("subsample fractions must be in (0, 1]")
        if self.gamma < 0 or self.reg_lambda < 0 or self.reg_alpha < 0:
            raise ValueError("gamma, reg_lambda, and reg_alpha must be non-negative")
        if self.max_bins < 2:
            raise ValueError("max_bins must be >= 2")
        if not 0.0 < self.base_score < 1.0:
            raise ValueError("base_score must be a probability in (0, 1)")


@dataclass
class BinnedMatrix:
    bins: np.ndarray  # (n, d) int32 bin indices
    thresholds: list[np.ndarray]  # per feature, ascending bin upper edges

    def n_bins(self, feature: int) -> int:
        return len(self.thresholds[feature]) + 1


@dataclass
class TreeNode:
    """Internal node (feature >= 0) or leaf (feature == -1, weight set)."""

    feature: int = -1
    threshold: float = 0.0
    bin_idx: int = -1
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    weight: float = 0.0
    gain: float = 0.0
    default_left: bool = True  # reserved; inputs are dense

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass
class Ensemble:
    trees: list[TreeNode]
    base_raw: float
    learning_rate: float
    feature_names: list[str]
    eval_history: list[tuple[int, float, float]] = field(default_factory=list, repr=False)


@dataclass
class SplitDecision:
    feature: int
    bin_idx: int
    threshold: float
    gain: float


def logistic_grad_hess(raw: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row gradient p - y and floored hessian p(1-p) of the logistic loss."""
    raw = np.asarray(raw, dtype=np.float64)
    y = np.asarray(y)
    if raw.shape[0] != y.shape[0]:
        raise ValueError("raw scores and targets have different lengths")
    p = sigmoid(raw)
    return p - y, np.maximum(p * (1.0 - p), HESSIAN_FLOOR)


def bin_features(X, max_bins: int) -> BinnedMatrix:
    """Quantize each feature into at most max_bins bins with midpoint edges."""
    values = X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=np.float64)
    if values.size and not np.isfinite(values).all():
        raise ValueError("cannot bin non-finite values")
    n, d = values.shape
    bins = np.zeros((n, d), dtype=np.int32)
    thresholds: list[np.ndarray] = []
    for j in range(d):
        col = values[:, j]
        distinct = np.unique(col)
        if distinct.size <= max_bins:
            cuts = (distinct[:-1] + distinct[1:]) / 2.0
        else:
            ordered = np.sort(col)
            candidates = []
            for i in range(1, max_bins):
                r = (n * i) // max_bins
                lo, hi = ordered[r - 1], ordered[r]
                if hi > lo:
                    candidates.append(0.5 * (lo + hi))
            cuts = np.unique(candidates)
        thresholds.append(cuts)
        bins[:, j] = np.searchsorted(cuts, col, side="left")
    return BinnedMatrix(bins=bins, thresholds=thresholds)


def leaf_weight(G: float, H: float, reg_lambda: float, reg_alpha: float) -> float:
    """Closed-form optimum of the L1/L2-regularized second-order leaf objective."""
    if G > reg_alpha:
        num = G - reg_alpha
    elif G < -reg_alpha:
        num = G + reg_alpha
    else:
        return 0.0
    return -num / (H + reg_lambda)


def find_best_split(
    rows: np.ndarray,
    binned: BinnedMatrix,
    g: np.ndarray,
    h: np.ndarray,
    features: np.ndarray,
    config: BoostConfig,
) -> SplitDecision | None:
    """Best (feature, bin boundary) by second-order gain, or None.

    Gain must exceed zero after subtracting gamma and both children must carry
    hessian mass >= min_child_weight. Ties keep the lowest feature index, then
    the lowest threshold (features and boundaries are scanned in that order);
    gains within GAIN_TIE_REL of each other count as tied.
    """
    if rows.size < 2:
        return None
    features = np.asarray(features)
    widths = np.array([binned.n_bins(f) for f in features])
    if int(widths.sum()) == features.size:  # every candidate feature is constant
        return None
    offsets = np.concatenate([[0], np.cumsum(widths[:-1])])
    sub = binned.bins[np.ix_(rows, features)]
    flat = (sub + offsets[None, :]).ravel()
    total = int(widths.sum())
    g_hist = np.bincount(flat, weights=np.repeat(g[rows], features.size), minlength=total)
    h_hist = np.bincount(flat, weights=np.repeat(h[rows], features.size), minlength=total)

    lam = config.reg_lambda
    best: SplitDecision | None = None
    for pos, f in enumerate(features):
        lo, hi = offsets[pos], offsets[pos] + widths[pos]
        if hi - lo < 2:
            continue
        gf, hf = g_hist[lo:hi], h_hist[lo:hi]
        G, H = gf.sum(), hf.sum()
        GL = np.cumsum(gf)[:-1]
        HL = np.cumsum(hf)[:-1]
        GR, HR = G - GL, H - HL
        gains = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - G * G / (H + lam))
        gains -= config.gamma
        ok = (HL >= config.min_child_weight) & (HR >= config.min_child_weight)
        gains = np.where(ok, gains, -np.inf)
        top = float(gains.max())
        if not top > 0.0:
            continue
        window = GAIN_TIE_REL * max(1.0, abs(top))
        tied = (gains >= top - window) & (gains > 0.0)
        b = int(np.argmax(tied))  # lowest tied threshold
        gain = float(gains[b])
        if best is None or gain > best.gain + GAIN_TIE_REL * max(1.0, abs(best.gain)):
            best = SplitDecision(
                feature=int(f),
                bin_idx=b,
                threshold=float(binned.thresholds[f][b]),
                gain=gain,
            )
    return best


def _grow_tree(
    rows: np.ndarray,
    binned: BinnedMatrix,
    g: np.ndarray,
    h: np.ndarray,
    features: np.ndarray,
    config: BoostConfig,
    depth: int,
) -> TreeNode:
    decision = None
    if depth < config.max_depth and rows.size >= 2:
        decision = find_best_split(rows, binned, g, h, features, config)
    if decision is None:
        G, H = float(g[rows].sum()), float(h[rows].sum())
        return TreeNode(weight=leaf_weight(G, H, config.reg_lambda, config.reg_alpha))
    mask = binned.bins[rows, decision.feature] <= decision.bin_idx
    return TreeNode(
        feature=decision.feature,
        threshold=decision.threshold,
        bin_idx=decision.bin_idx,
        gain=decision.gain,
        left=_grow_tree(rows[mask], binned, g, h, features, config, depth + 1),
        right=_grow_tree(rows[~mask], binned, g, h, features, config, depth + 1),
    )


def _apply_tree_binned(root: TreeNode, bins: np.ndarray) -> np.ndarray:
    out = np.empty(bins.shape[0], dtype=np.float64)

    def descend(node: TreeNode, idx: np.ndarray) -> None:
        if node.is_leaf:
            out[idx] = node.weight
            return
        mask = bins[idx, node.feature] <= node.bin_idx
        descend(node.left, idx[mask])
        descend(node.right, idx[~mask])

    descend(root, np.arange(bins.shape[0]))
    return out


def _apply_tree_values(root: TreeNode, values: np.ndarray) -> np.ndarray:
    out = np.empty(values.shape[0], dtype=np.float64)

    def descend(node: TreeNode, idx: np.ndarray) -> None:
        if node.is_leaf:
            out[idx] = node.weight
            return
        mask = values[idx, node.feature] <= node.threshold
        descend(node.left, idx[mask])
        descend(node.right, idx[~mask])

    descend(root, np.arange(values.shape[0]))
    return out


def train_boosting(
    X: FeatureMatrix,
    y: np.ndarray,
    config: BoostConfig,
    eval_set: tuple[FeatureMatrix, np.ndarray] | None = None,
    eval_every: int = 0,
) -> Ensemble:
    """Fit the boosted ensemble; fully deterministic given config.seed.

    Row and feature subsampling for round t draw from a generator seeded by
    (seed, t), so each round's sample is independent of execution history.
    When eval_set and eval_every are given, (round, train AUC, eval AUC) rows
    are recorded in the returned ensemble's eval_history; nothing acts on them.
    """
    y = np.asarray(y)
    n, d = X.values.shape
    if n == 0:
        raise DataError("cannot train on an empty matrix")
    if y.shape[0] != n:
        raise ValueError("feature matrix and target lengths differ")
    if np.unique(y).size < 2:
        raise DataError("boosting requires both classes in the target")

    binned = bin_features(X, config.max_bins)
    base_raw = float(np.log(config.base_score / (1.0 - config.base_score)))
    raw = np.full(n, base_raw)
    eval_raw = None
    if eval_set is not None:
        eval_raw = np.full(eval_set[0].n_rows, base_raw)

    trees: list[TreeNode] = []
    history: list[tuple[int, float, float]] = []
    all_rows = np.arange(n)
    all_feats = np.arange(d)
    for t in range(config.n_estimators):
        rng = np.random.default_rng([config.seed, t])
        g, h = logistic_grad_hess(raw, y)
        if config.subsample < 1.0:
            m = max(1, int(config.subsample * n))
            rows = np.sort(rng.choice(n, size=m, replace=False))
        else:
            rows = all_rows
        if config.colsample_bytree < 1.0:
            k = max(1, int(config.colsample_bytree * d))
            feats = np.sort(rng.choice(d, size=k, replace=False))
        else:
            feats = all_feats
        root = _grow_tree(rows, binned, g, h, feats, config, depth=0)
        trees.append(root)
        raw += config.learning_rate * _apply_tree_binned(root, binned.bins)
        if eval_raw is not None:
            eval_raw += config.learning_rate * _apply_tree_values(root, eval_set[0].values)
        if eval_every and (t + 1) % eval_every == 0:
            from .metrics import auc

            history.append((t + 1, auc(sigmoid(raw), y), auc(sigmoid(eval_raw), eval_set[1])))

    return Ensemble(
        trees=trees,
        base_raw=base_raw,
        learning_rate=config.learning_rate,
        feature_names=list(X.feature_names),
        eval_history=history,
    )


def predict_raw(model: Ensemble, X: FeatureMatrix) -> np.ndarray:
    """Raw scores base + eta * sum of tree outputs."""
    if X.d != len(model.feature_names):
        raise ValueError(
            f"matrix width {X.d} does not match model width {len(model.feature_names)}"
        )
    raw = np.full(X.n_rows, model.base_raw)
    for root in model.trees:
        raw += model.learning_rate * _apply_tree_values(root, X.values)
    return raw


def predict_proba(model: Ensemble, X: FeatureMatrix) -> np.ndarray:
    """Sigmoid of the raw scores, elementwise."""
    return sigmoid(predict_raw(model, X))
