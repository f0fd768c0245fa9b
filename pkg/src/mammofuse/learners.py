"""Seven classifiers and their soft-voting combination.

Every model is trained on z-scored features and predicts the probability
of the positive class. Training is fully deterministic: stochastic members
(LASSO fold shuffling, bootstrapped stage-wise selection, random forest)
draw from generators derived from the run seed, so the same seed and data
reproduce bit-identical models.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evaluation import auc
from .logistic import fit_logistic_irls, fit_scalar_logistic, sigmoid
from .seeding import derive_rng, derive_seedseq
from .trees import RandomForestModel

STD_FLOOR = 1e-8
NB_VARIANCE_FLOOR = 1e-9

# Guards downstream arithmetic (squared distances, quadratic forms) against
# absurd feature magnitudes while leaving ordinary data untouched.
_SCALE_CLIP = 1e6

MEMBER_KINDS = ("knn", "svm", "lasso", "bswims", "lda", "nb", "rf")


class SingleClassError(ValueError):
    """Training data must contain both classes."""


def _check_two_classes(y: np.ndarray) -> None:
    if y.size == 0 or int(y.min()) == int(y.max()):
        raise SingleClassError("training data must contain both classes")


def _clamp_prob(p: float) -> float:
    return min(max(p, 1e-6), 1.0 - 1e-6)


@dataclass
class Scaler:
    """Per-feature z-scoring with a floored standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        with np.errstate(over="ignore"):  # the clip absorbs any overflow
            return np.clip((X - self.mean) / self.std, -_SCALE_CLIP, _SCALE_CLIP)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.asarray(d["mean"]), np.asarray(d["std"]))


def fit_scaler(X: np.ndarray) -> Scaler:
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0:
        raise ValueError("cannot fit a scaler on an empty training set")
    std = X.std(axis=0)
    return Scaler(mean=X.mean(axis=0), std=np.maximum(std, STD_FLOOR))


def soft_threshold(x, t):
    """Proximal operator of the L1 norm: sign(x) * max(|x| - t, 0)."""
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


class KnnModel:
    kind = "knn"

    def __init__(self, k: int = 5):
        self.k = k
        self.train_X: np.ndarray | None = None
        self.train_y: np.ndarray | None = None

    def fit(self, Xs: np.ndarray, y: np.ndarray) -> "KnnModel":
        if self.k > Xs.shape[0]:
            raise ValueError(f"k={self.k} exceeds training size {Xs.shape[0]}")
        self.train_X = Xs.copy()
        self.train_y = y.astype(np.float64)
        return self

    def predict_proba(self, Xs: np.ndarray) -> np.ndarray:
        # Squared distances; ties resolved toward the lower training row
        # index by the stable sort.
        d2 = (
            np.sum(Xs**2, axis=1)[:, None]
            - 2.0 * Xs @ self.train_X.T
            + np.sum(self.train_X**2, axis=1)[None, :]
        )
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        return self.train_y[nearest].mean(axis=1)

    def to_dict(self) -> dict:
        return {"k": self.k, "train_X": self.train_X.tolist(), "train_y": self.train_y.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "KnnModel":
        model = cls(k=d["k"])
        model.train_X = np.asarray(d["train_X"], dtype=np.float64)
        model.train_y = np.asarray(d["train_y"], dtype=np.float64)
        return model


class SvmModel:
    """Linear SVM: hinge loss with L2 penalty, full-batch subgradient
    descent with 1/(lambda*t) steps, margins mapped to probabilities by a
    logistic fit on the training margins."""

    kind = "svm"

    def __init__(self, lam: float = 1e-3, epochs: int = 200):
        self.lam = lam
        self.epochs = epochs
        self.w: np.ndarray | None = None  # last entry is the bias weight
        self.platt_a = 1.0
        self.platt_b = 0.0

    def _margins(self, Xs: np.ndarray) -> np.ndarray:
        return Xs @ self.w[:-1] + self.w[-1]

    def fit(self, Xs: np.ndarray, y: np.ndarray) -> "SvmModel":
        _check_two_classes(y)
        n, p = Xs.shape
        Xa = np.hstack([Xs, np.ones((n, 1))])
        sign = 2.0 * y - 1.0
        w = np.zeros(p + 1)
        for t in range(1, self.epochs + 1):
            margins = Xa @ w
            violating = sign * margins < 1.0
            grad = self.lam * w - (sign[violating] @ Xa[violating]) / n
            w = w - grad / (self.lam * t)
        self.w = w
        a, b, _ = fit_scalar_logistic(Xa @ w, y.astype(np.float64), strict=False)
        self.platt_a, self.platt_b = a, b
        return self

    def decision_value(self, Xs: np.ndarray) -> np.ndarray:
        return self._margins(np.atleast_2d(Xs))

    def predict_proba(self, Xs: np.ndarray) -> np.ndarray:
        return sigmoid(self.platt_a * self._margins(Xs) + self.platt_b)

    def to_dict(self) -> dict:
        return {
            "lam": self.lam,
            "epochs": self.epochs,
            "w": self.w.tolist(),
            "platt_a": self.platt_a,
            "platt_b": self.platt_b,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        model = cls(lam=d["lam"], epochs=d["epochs"])
        model.w = np.asarray(d["w"], dtype=np.float64)
        model.platt_a = d["platt_a"]
        model.platt_b = d["platt_b"]
        return model


def fit_l1_logistic(
    Xs: np.ndarray,
    y: np.ndarray,
    lam: float,
    max_iter: int = 2000,
    tol: float = 1e-10,
) -> tuple[np.ndarray, float]:
    """L1-penalized logistic regression by proximal gradient descent.

    The intercept is unpenalized. Returns (weights, intercept).
    """
    n, p = Xs.shape
    Xa = np.hstack([Xs, np.ones((n, 1))])
    lipschitz = np.linalg.norm(Xa, 2) ** 2 / (4.0 * n) + 1e-12
    theta = np.zeros(p + 1)
    for _ in range(max_iter):
        grad = Xa.T @ (sigmoid(Xa @ theta) - y) / n
        new = theta - grad / lipschitz
        new[:p] = soft_threshold(new[:p], lam / lipschitz)
        if np.max(np.abs(new - theta)) < tol:
            theta = new
            break
        theta = new
    return theta[:p], float(theta[p])


def _stratified_folds(y: np.ndarray, k: int, rng: np.random.Generator):
    pos = rng.permutation(np.flatnonzero(y == 1))
    neg = rng.permutation(np.flatnonzero(y == 0))
    folds = [[] for _ in range(k)]
    for i, idx in enumerate(pos):
        folds[i % k].append(idx)
    for i, idx in enumerate(neg):
        folds[i % k].append(idx)
    all_idx = np.arange(y.size)
    for fold in folds:
        val = np.sort(np.asarray(fold, dtype=np.int64))
        train = np.setdiff1d(all_idx, val)
        yield train, val


class LassoModel:
    """L1 logistic regression with the penalty chosen from a log-spaced
    grid by inner stratified 3-fold AUC."""

    kind = "lasso"

    def __init__(
        self,
        grid_lo: float = 1e-4,
        grid_hi: float = 1e-1,
        grid_size: int = 10,
        inner_folds: int = 3,
    ):
        self.grid_lo = grid_lo
        self.grid_hi = grid_hi
        self.grid_size = grid_size
        self.inner_folds = inner_folds
        self.w: np.ndarray | None = None
        self.b = 0.0
        self.lam = 0.0

    def fit(self, Xs: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> "LassoModel":
        _check_two_classes(y)
        yf = y.astype(np.float64)
        grid = np.geomspace(self.grid_lo, self.grid_hi, self.grid_size)
        folds = list(_stratified_folds(y, self.inner_folds, rng))

        mean_auc = np.full(grid.size, -np.inf)
        for gi, lam in enumerate(grid):
            scores = []
            for train, val in folds:
                if y[val].min() == y[val].max() or y[train].min() == y[train].max():
                    continue
                w, b = fit_l1_logistic(Xs[train], yf[train], lam, max_iter=500, tol=1e-7)
                scores.append(auc(Xs[val] @ w + b, y[val]))
            if scores:
                mean_auc[gi] = float(np.mean(scores))

        if np.all(~np.isfinite(mean_auc)):
            best = grid.size // 2  # no usable inner fold; fall back to mid-grid
        else:
            best = int(np.flatnonzero(mean_auc == mean_auc.max())[-1])  # tie -> larger lambda
        self.lam = float(grid[best])
        self.w, self.b = fit_l1_logistic(Xs, yf, self.lam)
        return self

    def predict_proba(self, Xs: np.ndarray) -> np.ndarray:
        return sigmoid(Xs @ self.w + self.b)

    def to_dict(self) -> dict:
        return {"w": self.w.tolist(), "b": self.b, "lam": self.lam}

    @classmethod
    def from_dict(cls, d: dict) -> "LassoModel":
        model = cls()
        model.w = np.asarray(d["w"], dtype=np.float64)
        model.b = d["b"]
        model.lam = d["lam"]
        return model


class BswimsModel:
    """Bootstrapped stage-wise model selection.

    For each bootstrap resample, forward-select the feature whose Wald
    z-score in the grown logistic model is largest, while that z-score
    stays above the threshold and the model stays small; the bag of
    selected models votes by averaging probabilities.
    """

    kind = "bswims"

    def __init__(self, bootstraps: int = 20, z_threshold: float = 1.96, max_size: int = 10):
        self.bootstraps = bootstraps
        self.z_threshold = z_threshold
        self.max_size = max_size
        self.models: list[tuple[tuple[int, ...], np.ndarray]] = []

    def _forward_select(self, Xb: np.ndarray, yb: np.ndarray) -> tuple[tuple[int, ...], np.ndarray]:
        n, p = Xb.shape
        ones = np.ones((n, 1))
        selected: list[int] = []
        beta = np.array([_safe_logit(float(yb.mean()))])
        while len(selected) < self.max_size:
            best_z, best_j, best_beta = -np.inf, -1, None
            for j in range(p):
                if j in selected:
                    continue
                design = np.hstack([ones, Xb[:, selected + [j]]])
                cand, cov, ok = fit_logistic_irls(design, yb, max_iter=12)
                if not ok:
                    continue
                se2 = cov[-1, -1]
                if not np.isfinite(se2) or se2 <= 0:
                    continue
                z = abs(cand[-1]) / np.sqrt(se2)
                if z > best_z:
                    best_z, best_j, best_beta = z, j, cand
            if best_j < 0 or best_z < self.z_threshold:
                break
            selected.append(best_j)
            beta = best_beta
        return tuple(selected), beta

    def fit(self, Xs: np.ndarray, y: np.ndarray, rng: np.random.Generator) -> "BswimsModel":
        _check_two_classes(y)
        n = Xs.shape[0]
        yf = y.astype(np.float64)
        self.models = []
        for _ in range(self.bootstraps):
            rows = rng.integers(0, n, size=n)
            yb = yf[rows]
            if yb.min() == yb.max():
                self.models.append(((), np.array([_safe_logit(float(yb.mean()))])))
                continue
            self.models.append(self._forward_select(Xs[rows], yb))
        return self

    def predict_proba(self, Xs: np.ndarray) -> np.ndarray:
        acc = np.zeros(Xs.shape[0])
        for selected, beta in self.models:
            z = np.full(Xs.shape[0], beta[0])
            if selected:
                z = z + Xs[:, list(selected)] @ beta[1:]
            acc += sigmoid(z)
        return acc / len(self.models)

    def selected_sizes(self) -> list[int]:
        return [len(sel) for sel, _ in self.models]

    def to_dict(self) -> dict:
        return {
            "bootstraps": self.bootstraps,
            "z_threshold": self.z_threshold,
            "max_size": self.max_size,
            "models": [[list(sel), beta.tolist()] for sel, beta in self.models],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BswimsModel":
        model = cls(d["bootstraps"], d["z_threshold"], d["max_size"])
        model.models = [(tuple(sel), np.asarray(beta)) for sel, beta in d["models"]]
        return model


def _safe_logit(p: float) -> float:
    p = _clamp_prob(p)
    return float(np.log(p / (1.0 - p)))


class LdaModel:
    """Pooled-covariance Gaussian LDA with ridge shrinkage; the posterior
    reduces to a logistic function of a linear score."""

    kind = "lda"

    def __init__(self, ridge: float = 1e-3):
        self.ridge = ridge
        self.w: np.ndarray | None = None
        self.intercept = 0.0

    def fit(self, Xs: np.ndarray, y: np.ndarray) -> "LdaModel":
        _check_two_classes(y)
        p = Xs.shape[1]
        X0, X1 = Xs[y == 0], Xs[y == 1]
        mu0, mu1 = X0.mean(axis=0), X1.mean(axis=0)
        centered = np.vstack([X0 - mu0, X1 - mu1])
        cov = centered.T @ centered / Xs.shape[0]
        cov = cov + (self.ridge * np.trace(cov) / p) * np.eye(p)
        self.w = np.linalg.solve(cov, mu1 - mu0)
        prior = np.log(X1.shape[0] / X0.shape[0])
        self.intercept = float(prior - 0.5 * (mu1 + mu0) @ self.w)
        return self

    def predict_proba(self, Xs: np.ndarray) -> np.ndarray:
        return sigmoid(Xs @ self.w + self.intercept)

    def to_dict(self) -> dict:
        return {"ridge": self.ridge, "w": self.w.tolist(), "intercept": self.intercept}

    @classmethod
    def from_dict(cls, d: dict) -> "LdaModel":
        model = cls(ridge=d["ridge"])
        model.w = np.asarray(d["w"], dtype=np.float64)
        model.intercept = d["intercept"]
        return model


class NbModel:
    """Gaussian naive Bayes with floored per-feature variances and
    log-domain accumulation."""

    kind = "nb"

    def __init__(self):
        self.mu: np.ndarray | None = None  # (2, p)
        self.var: np.ndarray | None = None
        self.log_prior: np.ndarray | None = None

    def fit(self, Xs: np.ndarray, y: np.ndarray) -> "NbModel":
        _check_two_classes(y)
        groups = [Xs[y == 0], Xs[y == 1]]
        self.mu = np.stack([g.mean(axis=0) for g in groups])
        self.var = np.maximum(np.stack([g.var(axis=0) for g in groups]), NB_VARIANCE_FLOOR)
        self.log_prior = np.log(np.array([g.shape[0] for g in groups]) / Xs.shape[0])
        return self

    def predict_proba(self, Xs: np.ndarray) -> np.ndarray:
        ll = np.empty((Xs.shape[0], 2))
        for c in range(2):
            z2 = (Xs - self.mu[c]) ** 2 / self.var[c]
            ll[:, c] = self.log_prior[c] - 0.5 * np.sum(np.log(2.0 * np.pi * self.var[c]) + z2, axis=1)
        return sigmoid(ll[:, 1] - ll[:, 0])

    def to_dict(self) -> dict:
        return {
            "mu": self.mu.tolist(),
            "var": self.var.tolist(),
            "log_prior": self.log_prior.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NbModel":
        model = cls()
        model.mu = np.asarray(d["mu"], dtype=np.float64)
        model.var = np.asarray(d["var"], dtype=np.float64)
        model.log_prior = np.asarray(d["log_prior"], dtype=np.float64)
        return model


@dataclass(frozen=True)
class LearnerParams:
    """Hyperparameters for the seven members, all surfaced in the config."""

    knn_k: int = 5
    svm_lambda: float = 1e-3
    svm_epochs: int = 200
    lasso_grid_lo: float = 1e-4
    lasso_grid_hi: float = 1e-1
    lasso_grid_size: int = 10
    lasso_inner_folds: int = 3
    bswims_bootstraps: int = 20
    bswims_z_threshold: float = 1.96
    bswims_max_size: int = 10
    rf_trees: int = 200
    rf_max_depth: int = 12
    rf_min_leaf: int = 5


_MODEL_CLASSES = {
    "knn": KnnModel,
    "svm": SvmModel,
    "lasso": LassoModel,
    "bswims": BswimsModel,
    "lda": LdaModel,
    "nb": NbModel,
    "rf": RandomForestModel,
}


class SubEnsemble:
    """The seven members trained on one shared scaled split; the vote is
    the unweighted mean of their probabilities."""

    def __init__(self, scaler: Scaler, members: dict, seed: int, params: LearnerParams):
        self.scaler = scaler
        self.members = members
        self.seed = seed
        self.params = params

    @classmethod
    def train(
        cls,
        X: np.ndarray,
        y: np.ndarray,
        seed: int,
        params: LearnerParams = LearnerParams(),
    ) -> "SubEnsemble":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        _check_two_classes(y)
        scaler = fit_scaler(X)
        Xs = scaler.transform(X)

        members = {
            "knn": KnnModel(k=params.knn_k).fit(Xs, y),
            "svm": SvmModel(lam=params.svm_lambda, epochs=params.svm_epochs).fit(Xs, y),
            "lasso": LassoModel(
                params.lasso_grid_lo,
                params.lasso_grid_hi,
                params.lasso_grid_size,
                params.lasso_inner_folds,
            ).fit(Xs, y, derive_rng(seed, "lasso")),
            "bswims": BswimsModel(
                params.bswims_bootstraps, params.bswims_z_threshold, params.bswims_max_size
            ).fit(Xs, y, derive_rng(seed, "bswims")),
            "lda": LdaModel().fit(Xs, y),
            "nb": NbModel().fit(Xs, y),
            "rf": RandomForestModel(params.rf_trees, params.rf_max_depth, params.rf_min_leaf).fit(
                Xs, y, derive_seedseq(seed, "rf")
            ),
        }
        return cls(scaler=scaler, members=members, seed=seed, params=params)

    def member_probas(self, X: np.ndarray) -> dict[str, np.ndarray]:
        Xs = self.scaler.transform(X)
        return {kind: self.members[kind].predict_proba(Xs) for kind in MEMBER_KINDS}

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        probas = self.member_probas(X)
        return np.mean([probas[kind] for kind in MEMBER_KINDS], axis=0)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "params": self.params.__dict__,
            "scaler": self.scaler.to_dict(),
            "members": {kind: self.members[kind].to_dict() for kind in MEMBER_KINDS},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SubEnsemble":
        members = {kind: _MODEL_CLASSES[kind].from_dict(d["members"][kind]) for kind in MEMBER_KINDS}
        return cls(
            scaler=Scaler.from_dict(d["scaler"]),
            members=members,
            seed=d["seed"],
            params=LearnerParams(**d["params"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "SubEnsemble":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
