"""Local training objectives and non-iid data sharding for the D-SGD engine."""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np


class LocalObjective(ABC):
    """Per-node loss family.

    Implementations expose ``num_nodes`` and ``dim`` attributes. Gradients
    are stochastic per node; ``full_loss`` evaluates a node's objective
    exactly. ``known_optimum``/``test_metric`` are optional capabilities.
    """

    num_nodes: int
    dim: int

    @abstractmethod
    def stochastic_gradient(
        self, node: int, x: np.ndarray, batch_size: int, rng: np.random.Generator
    ) -> np.ndarray:
        """Mini-batch gradient of node's local loss at model x."""

    @abstractmethod
    def full_loss(self, node: int, x: np.ndarray) -> float:
        """Node's exact local loss at model x."""

    def known_optimum(self):
        """Analytic minimizer of the collaborative objective, if available."""
        return None

    def test_metric(self, state: np.ndarray):
        """Held-out metric of the node-averaged model, if available."""
        return None


class QuadraticObjective(LocalObjective):
    """Each node pulls toward its own target point.

    The collaborative optimum is the mean of the targets, which makes this
    the exactness anchor for convergence tests. Gradients are deterministic
    (full batch): grad = x - c_i.
    """

    def __init__(self, centers):
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        self.centers = centers
        self.num_nodes = centers.shape[0]
        self.dim = centers.shape[1]

    def stochastic_gradient(self, node, x, batch_size, rng):
        return x - self.centers[node]

    def full_loss(self, node, x):
        diff = x - self.centers[node]
        return float(0.5 * diff @ diff)

    def known_optimum(self):
        return self.centers.mean(axis=0)

    def test_metric(self, state):
        """Distance of the node-averaged model from the analytic optimum."""
        return float(np.linalg.norm(state.mean(axis=0) - self.known_optimum()))


def make_blobs(
    n_samples: int,
    n_classes: int,
    n_features: int,
    rng: np.random.Generator,
    center_spread: float = 3.0,
    noise: float = 1.0,
):
    """Synthetic Gaussian-blob classification data, deterministic given rng.

    Labels are balanced (round-robin) before any sharding reorders them.
    """
    means = rng.normal(0.0, center_spread, size=(n_classes, n_features))
    labels = np.arange(n_samples) % n_classes
    features = means[labels] + rng.normal(0.0, noise, size=(n_samples, n_features))
    return features, labels


def shard_data(
    num_samples: int, labels, n_nodes: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Label-sorted shard assignment: the standard non-iid stressor.

    Samples are stably sorted by label, cut into 2 * n_nodes contiguous
    shards, and each node receives two shards chosen by a seeded
    permutation, with no shard reused.
    """
    labels = np.asarray(labels)
    if labels.shape != (num_samples,):
        raise ValueError(f"expected {num_samples} labels, got {labels.shape}")
    if num_samples < 2 * n_nodes:
        raise ValueError(
            f"need at least {2 * n_nodes} samples for {n_nodes} nodes, got {num_samples}"
        )
    order = np.argsort(labels, kind="stable")
    shards = np.array_split(order, 2 * n_nodes)
    perm = rng.permutation(2 * n_nodes)
    return [
        np.concatenate([shards[perm[2 * i]], shards[perm[2 * i + 1]]])
        for i in range(n_nodes)
    ]


class LogisticObjective(LocalObjective):
    """Multinomial logistic regression over sharded data.

    The model vector is a flattened (n_features + 1) x n_classes weight
    matrix whose last row is the bias. Mini-batches are drawn with
    replacement from the node's shard.
    """

    def __init__(self, features, labels, shards, n_classes, test_features=None, test_labels=None):
        features = np.asarray(features, dtype=float)
        labels = np.asarray(labels, dtype=int)
        self._x_aug = np.hstack([features, np.ones((features.shape[0], 1))])
        self._labels = labels
        self.shards = [np.asarray(s, dtype=int) for s in shards]
        self.n_classes = int(n_classes)
        self.n_features = features.shape[1]
        self.num_nodes = len(self.shards)
        self.dim = (self.n_features + 1) * self.n_classes
        if test_features is not None:
            test_features = np.asarray(test_features, dtype=float)
            self._test_aug = np.hstack(
                [test_features, np.ones((test_features.shape[0], 1))]
            )
            self._test_labels = np.asarray(test_labels, dtype=int)
        else:
            self._test_aug = None
            self._test_labels = None

    def _softmax(self, x, rows):
        logits = rows @ x.reshape(self.n_features + 1, self.n_classes)
        logits = logits - logits.max(axis=1, keepdims=True)
        expv = np.exp(logits)
        return expv / expv.sum(axis=1, keepdims=True)

    def _loss(self, x, rows, targets):
        probs = self._softmax(x, rows)
        picked = probs[np.arange(len(targets)), targets]
        return float(-np.log(np.maximum(picked, 1e-300)).mean())

    def _grad(self, x, rows, targets):
        probs = self._softmax(x, rows)
        probs[np.arange(len(targets)), targets] -= 1.0
        return (rows.T @ probs / len(targets)).ravel()

    def stochastic_gradient(self, node, x, batch_size, rng):
        shard = self.shards[node]
        idx = shard[rng.integers(0, len(shard), size=batch_size)]
        return self._grad(x, self._x_aug[idx], self._labels[idx])

    def full_loss(self, node, x):
        shard = self.shards[node]
        return self._loss(x, self._x_aug[shard], self._labels[shard])

    def test_metric(self, state):
        """Accuracy of the node-averaged model on the held-out set."""
        if self._test_aug is None:
            return None
        mean_model = state.mean(axis=0)
        probs = self._softmax(mean_model, self._test_aug)
        return float((probs.argmax(axis=1) == self._test_labels).mean())
