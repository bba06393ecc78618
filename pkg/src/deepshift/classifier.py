"""Small MLP classifier on encoded features, with hold-out and k-fold evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["MLPClassifier", "HoldOut", "KFold", "SplitSpec", "InvalidSplitError",
           "ClassificationResult", "train_classifier", "split_indices"]


class InvalidSplitError(ValueError):
    pass


@dataclass(frozen=True)
class HoldOut:
    """``train_fraction`` of the data for fitting (the validation share is
    carved out of it), the rest for testing."""

    train_fraction: float = 0.6
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise InvalidSplitError("train_fraction must lie in (0, 1)")
        if not 0 <= self.validation_fraction < self.train_fraction:
            raise InvalidSplitError("validation_fraction must lie in [0, train_fraction)")


@dataclass(frozen=True)
class KFold:
    """Each fold is the test set once; ``validation_fraction`` of all
    samples is taken from the remaining folds for early stopping."""

    k: int = 10
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise InvalidSplitError("k must be at least 2")
        if not 0 <= self.validation_fraction < 1:
            raise InvalidSplitError("validation_fraction must lie in [0, 1)")


SplitSpec = HoldOut | KFold


def split_indices(n: int, split: SplitSpec):
    """Yield ``(train, validation, test)`` index arrays, one triple per fold."""
    perm = np.random.default_rng(split.seed).permutation(n)
    n_val = int(round(split.validation_fraction * n))
    if isinstance(split, HoldOut):
        n_fit = int(round(split.train_fraction * n))
        folds = [(perm[:n_fit], perm[n_fit:])]
    else:
        if split.k > n:
            raise InvalidSplitError(f"cannot cut {n} samples into {split.k} folds")
        chunks = np.array_split(perm, split.k)
        folds = [(np.concatenate(chunks[:i] + chunks[i + 1:]), chunks[i])
                 for i in range(split.k)]
    for fit, test in folds:
        val, train = fit[:n_val], fit[n_val:]
        if train.size == 0 or test.size == 0:
            raise InvalidSplitError("split leaves an empty training or test set")
        yield train, val, test


@dataclass
class MLPClassifier:
    """tanh hidden layer, softmax output, trained by full-batch gradient
    descent on mean cross-entropy with optional early stopping."""

    n_classes: int
    hidden: int = 30
    learning_rate: float = 0.5
    max_epochs: int = 500
    patience: int = 10
    seed: int = 0
    params: dict = field(default_factory=dict, repr=False)

    def _init(self, n_features: int) -> None:
        rng = np.random.default_rng(self.seed)
        s1, s2 = 1 / np.sqrt(n_features), 1 / np.sqrt(self.hidden)
        self.params = {
            "w1": rng.uniform(-s1, s1, (n_features, self.hidden)),
            "b1": np.zeros(self.hidden),
            "w2": rng.uniform(-s2, s2, (self.hidden, self.n_classes)),
            "b2": np.zeros(self.n_classes),
        }

    def _standardize(self, x):
        return (x - self.params["mu"]) / self.params["sigma"]

    def _forward(self, z, p):
        hid = np.tanh(z @ p["w1"] + p["b1"])
        logits = hid @ p["w2"] + p["b2"]
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        return hid, probs

    def predict(self, x) -> np.ndarray:
        _, probs = self._forward(self._standardize(np.asarray(x, float)), self.params)
        return probs.argmax(axis=1)

    def error(self, x, y) -> float:
        return float(np.mean(self.predict(x) != np.asarray(y)))

    def fit(self, x, y, x_val=None, y_val=None) -> "MLPClassifier":
        x, y = np.asarray(x, float), np.asarray(y)
        self._init(x.shape[1])
        mu, sigma = x.mean(axis=0), x.std(axis=0)
        sigma[sigma == 0] = 1.0
        self.params.update(mu=mu, sigma=sigma)
        z = self._standardize(x)
        onehot = np.eye(self.n_classes)[y]
        p = self.params
        early = x_val is not None and len(x_val) > 0
        best, best_params, stale = np.inf, dict(p), 0
        for _ in range(self.max_epochs):
            hid, probs = self._forward(z, p)
            d_logits = (probs - onehot) / len(z)
            d_hid = (d_logits @ p["w2"].T) * (1 - hid ** 2)
            p["w2"] = p["w2"] - self.learning_rate * hid.T @ d_logits
            p["b2"] = p["b2"] - self.learning_rate * d_logits.sum(axis=0)
            p["w1"] = p["w1"] - self.learning_rate * z.T @ d_hid
            p["b1"] = p["b1"] - self.learning_rate * d_hid.sum(axis=0)
            if early:
                val_loss = self._cross_entropy(x_val, y_val)
                if val_loss < best:
                    best, best_params, stale = val_loss, dict(p), 0
                else:
                    stale += 1
                    if stale >= self.patience:
                        break
        if early:
            self.params = best_params
        return self

    def _cross_entropy(self, x, y) -> float:
        _, probs = self._forward(self._standardize(np.asarray(x, float)), self.params)
        return float(-np.mean(np.log(probs[np.arange(len(y)), y] + 1e-300)))


@dataclass
class ClassificationResult:
    error: float                 # mean test error over folds
    fold_errors: list[float]


def train_classifier(features, labels, split: SplitSpec, n_classes: int | None = None,
                     hidden: int = 30, seed: int = 0, **mlp_options) -> ClassificationResult:
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    if len(np.unique(labels)) < 2:
        raise InvalidSplitError("need at least two classes")
    errors = []
    for train, val, test in split_indices(len(labels), split):
        clf = MLPClassifier(n_classes, hidden=hidden, seed=seed, **mlp_options)
        clf.fit(features[train], labels[train], features[val], labels[val])
        errors.append(clf.error(features[test], labels[test]))
    return ClassificationResult(float(np.mean(errors)), errors)
