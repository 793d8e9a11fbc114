import numpy as np
import pytest

from gstab.drift import build_drift_series, canonical_drift_metric, drift_score
from gstab.errors import RowCountMismatchError, SingleClassError, UnknownMetricError
from gstab.numerics import random_orthogonal, spearman
from gstab.rng import RandomStream
from gstab.steering import (
    DEFAULT_ALPHAS,
    random_direction_drops,
    shuffled_label_control,
    steering_direction,
    steering_sweep,
    train_linear_probe,
)
from gstab.synthetic import MixedSpec, gen_class_gaussians, gen_mixed


def gen(seed=0):
    return RandomStream(seed).substream(0)


class TestDriftScore:
    def test_zero_for_identical_snapshots(self):
        x = gen(1).standard_normal((40, 8))
        for metric in ("rdm_spearman", "cka", "procrustes", "rdm_pearson"):
            assert abs(drift_score(x, x, metric)) <= 1e-10

    def test_rotation_leaves_invariant_metrics_at_zero(self):
        g = gen(2)
        x = g.standard_normal((30, 10))
        q = random_orthogonal(10, g)
        assert drift_score(x, x @ q, "procrustes") == pytest.approx(0.0, abs=1e-8)
        assert drift_score(x, x @ q, "cka") == pytest.approx(0.0, abs=1e-8)

    def test_alias_and_unknown_metric(self):
        assert canonical_drift_metric("stability") == "rdm_spearman"
        with pytest.raises(UnknownMetricError):
            canonical_drift_metric("nope")

    def test_row_mismatch(self):
        g = gen(3)
        with pytest.raises(RowCountMismatchError):
            drift_score(g.standard_normal((10, 4)), g.standard_normal((12, 4)))

    def test_distance_metrics_nonnegative(self):
        g = gen(4)
        x = g.standard_normal((30, 5))
        y = g.standard_normal((30, 5))
        assert drift_score(x, y, "wasserstein") >= 0.0


class TestBuildDriftSeries:
    def test_zero_level_drift_zero(self):
        x = gen(5).standard_normal((40, 12))
        series = build_drift_series(x, [0.0, 0.1], ["rdm_spearman", "cka"], RandomStream(6))
        assert series.metric("rdm_spearman")[0] == pytest.approx(0.0, abs=1e-10)
        assert series.metric("cka")[0] == pytest.approx(0.0, abs=1e-10)

    def test_monotone_over_levels(self):
        x = gen_mixed(MixedSpec(n=150, d=96, alpha=0.9, seed=7))
        levels = [0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9, 1.2]
        series = build_drift_series(x, levels, ["rdm_spearman"], RandomStream(8))
        assert spearman(series.metric("rdm_spearman"), levels) >= 0.99

    def test_deterministic_across_reruns(self):
        x = gen(9).standard_normal((30, 8))
        a = build_drift_series(x, [0.0, 0.2, 0.4], ["rdm_spearman"], RandomStream(10))
        b = build_drift_series(x, [0.0, 0.2, 0.4], ["rdm_spearman"], RandomStream(10))
        assert a.metrics == b.metrics

    def test_accuracy_fn_recorded(self):
        x = gen(11).standard_normal((30, 6))
        series = build_drift_series(
            x, [0.0, 0.5], ["cka"], RandomStream(12), accuracy_fn=lambda m: float(m.std())
        )
        assert series.accuracy is not None and len(series.accuracy) == 2


def separable_binary(n=120, d=8, seed=13, margin=1.0, side_noise=0.3):
    # hard-margin toy: the first coordinate separates with a gap of 2*margin
    g = gen(seed)
    first = np.concatenate([-margin - g.random(n // 2), margin + g.random(n // 2)])
    rest = side_noise * g.standard_normal((n, d - 1))
    x = np.column_stack([first, rest])
    y = np.repeat([0, 1], n // 2)
    order = g.permutation(n)
    return x[order], y[order]


class TestProbe:
    def test_separable_training_accuracy_one(self):
        x, y = separable_binary()
        probe = train_linear_probe(x, y)
        assert probe.accuracy(x, y) == 1.0
        assert probe.converged

    def test_gradient_near_zero_at_optimum(self):
        from gstab.steering import _binary_loss_grad

        x, y = separable_binary(seed=14)
        probe = train_linear_probe(x, y)
        theta = np.concatenate([probe.weights, probe.bias])
        _, grad = _binary_loss_grad(theta, x, y.astype(float), 1.0)
        assert np.linalg.norm(grad) <= 1e-5

    def test_labels_independent_of_features_gives_majority_rate(self):
        g = gen(15)
        x = g.standard_normal((400, 6))
        y = (g.random(400) < 0.7).astype(int)
        probe = train_linear_probe(x, y)
        majority = max(y.mean(), 1 - y.mean())
        assert probe.accuracy(x, y) == pytest.approx(majority, abs=0.05)

    def test_deterministic(self):
        x, y = separable_binary(seed=16)
        a = train_linear_probe(x, y)
        b = train_linear_probe(x, y)
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.bias, b.bias)

    def test_multiclass_fits(self):
        x, y = gen_class_gaussians(40, 16, 3, separation=2.0, noise=0.1, seed=17)
        probe = train_linear_probe(x, y)
        assert probe.accuracy(x, y) > 0.95
        assert probe.weights.shape == (3, 16)

    def test_single_class_rejected(self):
        x = gen(18).standard_normal((20, 4))
        with pytest.raises((SingleClassError, ValueError)):
            train_linear_probe(x, np.zeros(20, dtype=int))


class TestSteeringDirection:
    def test_binary_axis_aligned(self):
        x, y = separable_binary(seed=19, side_noise=0.1)
        probe = train_linear_probe(x, y)
        direction = steering_direction(probe)
        assert abs(direction[0]) >= 0.99
        assert np.linalg.norm(direction) == pytest.approx(1.0)

    def test_scale_invariance_of_direction(self):
        x, y = separable_binary(seed=20, side_noise=0.1)
        d1 = steering_direction(train_linear_probe(x, y))
        d2 = steering_direction(train_linear_probe(3.0 * x, y))
        # the separating axis is unchanged by isotropic scaling
        assert abs(d1 @ d2) >= 0.99

    def test_multiclass_direction_in_mean_difference_span(self):
        g = gen(21)
        centers = np.eye(3) * 4.0
        y = np.repeat(np.arange(3), 60)
        x = np.hstack([centers[y], np.zeros((180, 5))]) + 0.05 * g.standard_normal((180, 8))
        probe = train_linear_probe(x, y)
        direction = steering_direction(probe)
        # class structure lives in the first three coordinates
        assert np.linalg.norm(direction[:3]) >= 0.99


class TestSteeringSweep:
    def test_alpha_zero_only_gives_zero_drop(self):
        x, y = separable_binary(seed=22)
        probe = train_linear_probe(x, y)
        result = steering_sweep(probe, x, y, steering_direction(probe), alphas=[0.0])
        assert result.max_drop == 0.0

    def test_orthogonal_direction_changes_nothing(self):
        x, y = separable_binary(seed=23)
        probe = train_linear_probe(x, y)
        w = probe.weights / np.linalg.norm(probe.weights)
        u = gen(24).standard_normal(x.shape[1])
        u -= (u @ w) * w
        u /= np.linalg.norm(u)
        result = steering_sweep(probe, x, y, u)
        assert result.max_drop == pytest.approx(0.0, abs=1e-12)
        assert result.accuracies == tuple([result.baseline_accuracy] * len(DEFAULT_ALPHAS))

    def test_true_direction_beats_random(self):
        x, y = gen_class_gaussians(80, 48, 2, separation=1.0, noise=0.15, seed=25)
        half = x.shape[0] // 2
        probe = train_linear_probe(x[:half], y[:half])
        direction = steering_direction(probe)
        sweep = steering_sweep(probe, x[half:], y[half:], direction)
        rand = random_direction_drops(probe, x[half:], y[half:], 20, RandomStream(26))
        assert sweep.max_drop > 2.0 * rand

    def test_max_drop_definition(self):
        x, y = separable_binary(seed=27)
        probe = train_linear_probe(x, y)
        result = steering_sweep(probe, x, y, steering_direction(probe))
        assert result.max_drop == pytest.approx(
            result.baseline_accuracy - min(result.accuracies)
        )


class TestShuffledControl:
    def test_histogram_preserved(self):
        x, y = gen_class_gaussians(30, 8, 3, separation=1.0, noise=0.3, seed=28)
        seen = {}

        def capture(xx, yy):
            seen["labels"] = yy
            return 0.0

        shuffled_label_control(x, y, capture, RandomStream(29))
        assert np.array_equal(np.bincount(seen["labels"]), np.bincount(y))
        assert not np.array_equal(seen["labels"], y)

    def test_supervised_alignment_collapses(self):
        from gstab.stability import supervised_rdm_alignment

        x, y = gen_class_gaussians(100, 16, 4, separation=2.0, noise=0.2, seed=30)
        structured = supervised_rdm_alignment(x, y)
        shuffled = shuffled_label_control(x, y, supervised_rdm_alignment, RandomStream(31))
        assert structured > 0.3
        assert abs(shuffled) <= 0.05

    def test_variance_ratio_drops_under_shuffle(self):
        from gstab.stability import variance_ratio

        x, y = gen_class_gaussians(100, 16, 4, separation=2.0, noise=0.2, seed=32)
        assert shuffled_label_control(x, y, variance_ratio, RandomStream(33)) <= variance_ratio(x, y)
