"""Base predictive models: gradient-boosted regression trees and a linear/logistic baseline.

Fitted state is plain lists and floats so models serialise to JSON and load back
bit-identically.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import expit

from .dataset import CLASSIFICATION, REGRESSION, TASK_KINDS
from .errors import ConfigError, DataError

GBDT = "gbdt"
LINEAR = "linear"
LEARNER_KINDS = (GBDT, LINEAR)

_P_CLIP = 1e-12


@dataclass(frozen=True)
class LearnerSpec:
    kind: str = GBDT
    task: str = REGRESSION
    n_trees: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    min_samples_leaf: int = 5
    l2: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise ConfigError(f"unknown learner kind {self.kind!r}; expected one of {LEARNER_KINDS}")
        if self.task not in TASK_KINDS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.n_trees < 1 or self.max_depth < 1 or self.min_samples_leaf < 1:
            raise ConfigError("n_trees, max_depth and min_samples_leaf must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("learning_rate must lie in (0, 1]")
        if self.l2 < 0:
            raise ConfigError("l2 must be >= 0")


@dataclass(frozen=True, eq=False)
class FittedLearner:
    spec: LearnerSpec
    n_features: int
    n_rows: int
    state: dict
    degenerate: bool = False
    loss_trace: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {"spec": asdict(self.spec), "n_features": self.n_features, "n_rows": self.n_rows,
                "degenerate": self.degenerate, "state": self.state}

    @classmethod
    def from_dict(cls, data: dict) -> "FittedLearner":
        return cls(spec=LearnerSpec(**data["spec"]), n_features=int(data["n_features"]),
                   n_rows=int(data["n_rows"]), state=data["state"], degenerate=bool(data["degenerate"]))


def fit(spec: LearnerSpec, design, target) -> FittedLearner:
    X = np.asarray(design, dtype=float)
    y = np.asarray(target, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError(f"design {X.shape} does not match target {y.shape}")
    m, n = X.shape
    if m < 2 or n < 1:
        raise DataError(f"need >= 2 rows and >= 1 feature, got {X.shape}")
    if spec.task == CLASSIFICATION and not np.isin(y, (0.0, 1.0)).all():
        raise DataError("classification targets must be 0 or 1")
    if np.all(y == y[0]):
        return FittedLearner(spec, n, m, {"constant": float(y[0])}, degenerate=True)
    if spec.kind == GBDT:
        state, trace = _fit_gbdt(spec, X, y)
        return FittedLearner(spec, n, m, state, loss_trace=tuple(trace))
    return FittedLearner(spec, n, m, _fit_linear(spec, X, y))


def predict(model: FittedLearner, design) -> np.ndarray:
    X = np.asarray(design, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DataError(f"model expects {model.n_features} columns, got shape {X.shape}")
    if "constant" in model.state:
        return np.full(X.shape[0], model.state["constant"])
    if model.spec.kind == GBDT:
        raw = _raw_gbdt(model.state, X)
    else:
        raw = _raw_linear(model.state, X)
    return expit(raw) if model.spec.task == CLASSIFICATION else raw


def with_seed(spec: LearnerSpec, seed: int) -> LearnerSpec:
    return replace(spec, seed=int(seed))


# ---------------------------------------------------------------- gradient boosting

def _loss(task, y, raw):
    if task == REGRESSION:
        r = y - raw
        return 0.5 * float(r @ r) / y.shape[0]
    # mean negative log-likelihood, written stably
    return float(np.mean(np.logaddexp(0.0, raw) - y * raw))


def _fit_gbdt(spec: LearnerSpec, X, y):
    m = X.shape[0]
    if spec.task == REGRESSION:
        base = float(y.mean())
    else:
        p = float(np.clip(y.mean(), _P_CLIP, 1 - _P_CLIP))
        base = float(np.log(p / (1 - p)))
    raw = np.full(m, base)
    order = np.argsort(X, axis=0, kind="stable")
    trees = []
    trace = [_loss(spec.task, y, raw)]
    for _ in range(spec.n_trees):
        if spec.task == REGRESSION:
            grad = y - raw
            hess = None
        else:
            p = expit(raw)
            grad = y - p
            hess = p * (1 - p)
        tree = _grow_tree(X, order, grad, hess, spec)
        raw = raw + _apply_tree(tree, X)
        trees.append(tree)
        trace.append(_loss(spec.task, y, raw))
    return {"base": base, "trees": trees}, trace


def _grow_tree(X, order, grad, hess, spec):
    """Greedy depth-limited regression tree on the negative gradient.

    Splits maximise the reduction in squared error of the gradient.  Leaf values
    are the mean gradient (squared loss) or one Newton step (logistic loss), and
    are stored already multiplied by the learning rate.
    """
    feature, threshold, left, right, value = [], [], [], [], []
    min_leaf = spec.min_samples_leaf

    def new_node():
        for lst, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (value, 0.0)):
            lst.append(v)
        return len(feature) - 1

    def leaf_value(idx):
        g = grad[idx]
        if hess is None:
            v = g.mean()
        else:
            v = g.sum() / max(hess[idx].sum(), _P_CLIP)
        return float(spec.learning_rate * v)

    m = X.shape[0]
    root = new_node()
    stack = [(root, np.ones(m, dtype=bool), 0)]
    while stack:
        node, mask, depth = stack.pop()
        idx = np.flatnonzero(mask)
        best = None
        if depth < spec.max_depth and idx.shape[0] >= 2 * min_leaf:
            best = _best_split(X, order, grad, mask, idx.shape[0], min_leaf)
        if best is None:
            value[node] = leaf_value(idx)
            continue
        f, thr = best
        goes_left = mask & (X[:, f] <= thr)
        l_node, r_node = new_node(), new_node()
        feature[node], threshold[node], left[node], right[node] = f, thr, l_node, r_node
        stack.append((r_node, mask & ~goes_left, depth + 1))
        stack.append((l_node, goes_left, depth + 1))
    return {"feature": feature, "threshold": threshold, "left": left, "right": right, "value": value}


def _best_split(X, order, grad, mask, count, min_leaf):
    best_gain, best = 1e-12, None
    total = grad[mask].sum()
    base = total * total / count
    for f in range(X.shape[1]):
        rows = order[:, f][mask[order[:, f]]]
        xs = X[rows, f]
        cs = np.cumsum(grad[rows])
        n_left = np.arange(1, count)
        s_left = cs[:-1]
        s_right = total - s_left
        gain = s_left ** 2 / n_left + s_right ** 2 / (count - n_left) - base
        valid = (n_left >= min_leaf) & (count - n_left >= min_leaf) & (xs[:-1] < xs[1:])
        if not valid.any():
            continue
        gain = np.where(valid, gain, -np.inf)
        p = int(np.argmax(gain))
        if gain[p] > best_gain:
            lo, hi = xs[p], xs[p + 1]
            thr = 0.5 * (lo + hi)
            if not lo <= thr < hi:
                thr = lo
            best_gain, best = float(gain[p]), (f, float(thr))
    return best


def _apply_tree(tree, X):
    feature = np.asarray(tree["feature"])
    threshold = np.asarray(tree["threshold"])
    left = np.asarray(tree["left"])
    right = np.asarray(tree["right"])
    node = np.zeros(X.shape[0], dtype=int)
    rows = np.arange(X.shape[0])
    while True:
        f = feature[node]
        internal = f >= 0
        if not internal.any():
            break
        r = rows[internal]
        nd = node[internal]
        go_left = X[r, f[internal]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
    return np.asarray(tree["value"])[node]


def _raw_gbdt(state, X):
    raw = np.full(X.shape[0], state["base"])
    for tree in state["trees"]:
        raw = raw + _apply_tree(tree, X)
    return raw


# ---------------------------------------------------------------- linear / logistic

def _fit_linear(spec: LearnerSpec, X, y):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    Z = (X - mean) / scale
    n = Z.shape[1]
    if spec.task == REGRESSION:
        y_mean = y.mean()
        coef = np.linalg.solve(Z.T @ Z + spec.l2 * np.eye(n), Z.T @ (y - y_mean))
        intercept = float(y_mean)
    else:
        coef, intercept = _irls(Z, y, spec.l2)
    return {"mean": mean.tolist(), "scale": scale.tolist(), "coef": np.asarray(coef).tolist(),
            "intercept": intercept}


def _irls(Z, y, l2, max_iter=100, tol=1e-10):
    """Newton iterations for L2-penalised logistic regression (intercept unpenalised)."""
    m, n = Z.shape
    A = np.column_stack([np.ones(m), Z])
    penalty = np.diag(np.r_[0.0, np.full(n, max(l2, 1e-8))])
    beta = np.zeros(n + 1)
    for _ in range(max_iter):
        p = expit(A @ beta)
        grad = A.T @ (y - p) - penalty @ beta
        H = (A * (p * (1 - p))[:, None]).T @ A + penalty
        step = np.linalg.solve(H, grad)
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            break
    return beta[1:], float(beta[0])


def _raw_linear(state, X):
    Z = (X - np.asarray(state["mean"])) / np.asarray(state["scale"])
    return Z @ np.asarray(state["coef"]) + state["intercept"]
