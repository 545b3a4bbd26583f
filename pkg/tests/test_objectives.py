import numpy as np
import pytest

from bass import LogisticObjective, QuadraticObjective, make_blobs, shard_data


class TestQuadratic:
    def test_gradient_is_analytic(self):
        obj = QuadraticObjective([[0.0, 0.0], [3.0, 1.0]])
        x = np.array([1.0, 2.0])
        rng = np.random.default_rng(0)
        assert np.array_equal(obj.stochastic_gradient(0, x, 4, rng), x)
        assert np.array_equal(obj.stochastic_gradient(1, x, 4, rng), x - [3.0, 1.0])

    def test_loss(self):
        obj = QuadraticObjective([[1.0]])
        assert obj.full_loss(0, np.array([3.0])) == pytest.approx(2.0)

    def test_known_optimum_is_stationary(self):
        rng = np.random.default_rng(1)
        centers = rng.normal(size=(5, 3))
        obj = QuadraticObjective(centers)
        opt = obj.known_optimum()
        mean_grad = np.mean(
            [obj.stochastic_gradient(i, opt, 1, rng) for i in range(5)], axis=0
        )
        assert np.abs(mean_grad).max() < 1e-8


class TestShardData:
    def test_eight_samples_two_nodes(self):
        rng = np.random.default_rng(2)
        labels = np.array([1, 0, 1, 0, 1, 0, 1, 0])
        shards = shard_data(8, labels, 2, rng)
        assert len(shards) == 2
        assert all(len(s) == 4 for s in shards)
        covered = sorted(np.concatenate(shards).tolist())
        assert covered == list(range(8))

    def test_identical_labels_still_partition(self):
        rng = np.random.default_rng(3)
        shards = shard_data(10, np.zeros(10, dtype=int), 5, rng)
        covered = sorted(np.concatenate(shards).tolist())
        assert covered == list(range(10))

    def test_deterministic_given_seed(self):
        labels = np.arange(20) % 4
        a = shard_data(20, labels, 5, np.random.default_rng(7))
        b = shard_data(20, labels, 5, np.random.default_rng(7))
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            shard_data(5, np.zeros(5, dtype=int), 3, np.random.default_rng(0))

    def test_label_sorted_contiguity(self):
        # with balanced labels each shard spans few label values
        rng = np.random.default_rng(11)
        labels = np.arange(40) % 4
        shards = shard_data(40, labels, 10, rng)
        for s in shards:
            assert len(np.unique(labels[s])) <= 2  # two shards per node


class TestMakeBlobs:
    def test_shapes_and_determinism(self):
        x1, y1 = make_blobs(30, 3, 4, np.random.default_rng(5))
        x2, y2 = make_blobs(30, 3, 4, np.random.default_rng(5))
        assert x1.shape == (30, 4)
        assert np.array_equal(x1, x2)
        assert np.array_equal(y1, y2)
        assert sorted(np.unique(y1)) == [0, 1, 2]


class TestLogistic:
    def build(self, n=60, n_test=30, classes=3, features=4, nodes=3, seed=13):
        rng = np.random.default_rng(seed)
        x, y = make_blobs(n + n_test, classes, features, rng)
        shards = shard_data(n, y[:n], nodes, rng)
        return LogisticObjective(x[:n], y[:n], shards, classes, x[n:], y[n:])

    def test_dimensions(self):
        obj = self.build()
        assert obj.num_nodes == 3
        assert obj.dim == 5 * 3  # (features + bias) * classes

    def test_gradient_matches_finite_differences(self):
        obj = self.build()
        rng = np.random.default_rng(17)
        x = rng.normal(0, 0.3, obj.dim)
        shard = obj.shards[1]
        # full-shard gradient via a batch the size of the shard is stochastic;
        # check the exact full_loss gradient instead with central differences
        grad = obj._grad(x, obj._x_aug[shard], obj._labels[shard])
        h = 1e-6
        for k in range(0, obj.dim, 5):
            bump = np.zeros(obj.dim)
            bump[k] = h
            numeric = (obj.full_loss(1, x + bump) - obj.full_loss(1, x - bump)) / (2 * h)
            assert grad[k] == pytest.approx(numeric, abs=1e-5)

    def test_stochastic_gradient_unbiased_direction(self):
        obj = self.build()
        rng = np.random.default_rng(19)
        x = np.zeros(obj.dim)
        shard = obj.shards[0]
        exact = obj._grad(x, obj._x_aug[shard], obj._labels[shard])
        draws = np.mean(
            [obj.stochastic_gradient(0, x, 64, rng) for _ in range(200)], axis=0
        )
        assert np.abs(draws - exact).max() < 0.1

    def test_zero_model_loss_is_log_classes(self):
        obj = self.build()
        assert obj.full_loss(0, np.zeros(obj.dim)) == pytest.approx(np.log(3), abs=1e-12)

    def test_test_metric_improves_with_training(self):
        obj = self.build()
        x = np.zeros(obj.dim)
        state = np.tile(x, (3, 1))
        base_acc = obj.test_metric(state)
        rng = np.random.default_rng(23)
        # a few centralized full-gradient steps on pooled data
        pooled = np.concatenate(obj.shards)
        for _ in range(150):
            x = x - 0.5 * obj._grad(x, obj._x_aug[pooled], obj._labels[pooled])
        trained_acc = obj.test_metric(np.tile(x, (3, 1)))
        assert trained_acc > max(base_acc, 0.7)

    def test_no_test_set_returns_none(self):
        rng = np.random.default_rng(29)
        x, y = make_blobs(30, 3, 4, rng)
        shards = shard_data(30, y, 3, rng)
        obj = LogisticObjective(x, y, shards, 3)
        assert obj.test_metric(np.zeros((3, obj.dim))) is None
