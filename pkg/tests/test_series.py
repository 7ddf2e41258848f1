import itertools
import math

import numpy as np
import pytest

from emodrift.ingest import Platform, SliceKey
from emodrift.series import (
    PatternClass,
    SimilaritySeries,
    classify_pattern,
    cohesiveness,
    linear_trend,
    neighbor_overlap,
    similarity_series,
)
from emodrift.trainer import EmbeddingModel


def make_model(vectors, month=1, tokens=None):
    vectors = np.asarray(vectors, dtype=np.float64)
    return EmbeddingModel(
        slice=SliceKey(2017, month, Platform.OTHER),
        dim=vectors.shape[1],
        tokens=tokens or [f"t{i}" for i in range(vectors.shape[0])],
        vectors=vectors,
    )


def series_from_values(values, months=None):
    months = months if months is not None else range(1, len(values) + 1)
    return SimilaritySeries(
        pair=("a", "b"),
        points=[(SliceKey(2017, m, Platform.OTHER), v) for m, v in zip(months, values)],
    )


def oracle_cos(u, v):
    dot = math.fsum(x * y for x, y in zip(u, v))
    return dot / math.sqrt(math.fsum(x * x for x in u)) / math.sqrt(math.fsum(y * y for y in v))


class TestSimilaritySeries:
    def test_single_model_series_of_one(self):
        m = make_model(np.eye(3))
        s = similarity_series([m], "t0", "t1")
        assert len(s.points) == 1

    def test_same_token_constant_one(self):
        models = [make_model(np.random.default_rng(i).normal(size=(4, 3)), month=i + 1) for i in range(3)]
        s = similarity_series(models, "t2", "t2")
        assert [v for _, v in s.points] == [1.0, 1.0, 1.0]

    def test_three_hand_set_models(self):
        vecs = [
            [[1.0, 0.0], [1.0, 0.0]],
            [[1.0, 0.0], [1.0, 1.0]],
            [[1.0, 0.0], [0.0, 1.0]],
        ]
        models = [make_model(v, month=i + 1) for i, v in enumerate(vecs)]
        s = similarity_series(models, "t0", "t1")
        expected = [oracle_cos(v[0], v[1]) for v in vecs]
        for (_, got), want in zip(s.points, expected):
            assert abs(got - want) <= 1e-12

    def test_points_ordered_by_period_and_gaps_kept(self):
        models = [make_model(np.eye(2), month=m) for m in (5, 1, 9)]
        s = similarity_series(models, "t0", "t1")
        assert [k.month for k, _ in s.points] == [1, 5, 9]
        assert s.month_indices().tolist() == [0.0, 4.0, 8.0]

    def test_unknown_token_errors(self):
        with pytest.raises(KeyError, match="zzz"):
            similarity_series([make_model(np.eye(2))], "zzz", "t0")


class TestLinearTrend:
    def test_constant_series_slope_exactly_zero(self):
        fit = linear_trend(series_from_values([0.3, 0.3, 0.3, 0.3]))
        assert fit.slope == 0.0
        assert fit.r_squared == 0.0

    def test_exact_line(self):
        fit = linear_trend(series_from_values([2 * t + 1 for t in range(6)]))
        assert abs(fit.slope - 2.0) <= 1e-9
        assert abs(fit.intercept - 1.0) <= 1e-9
        assert abs(fit.r_squared - 1.0) <= 1e-12

    def test_matches_normal_equation_oracle(self):
        rng = np.random.default_rng(5)
        y = rng.normal(size=10)
        fit = linear_trend(series_from_values(y.tolist()))
        t = np.arange(10, dtype=np.float64)
        design = np.vstack([t, np.ones(10)]).T
        coef = np.linalg.solve(design.T @ design, design.T @ y)
        assert abs(fit.slope - coef[0]) <= 1e-9
        assert abs(fit.intercept - coef[1]) <= 1e-9

    def test_gap_aware_time_encoding(self):
        fit = linear_trend(series_from_values([0.0, 4.0], months=[1, 5]))
        assert abs(fit.slope - 1.0) <= 1e-12  # 4 similarity over 4 months

    def test_too_short_series_rejected(self):
        with pytest.raises(ValueError):
            linear_trend(series_from_values([1.0]))

    def test_identical_timestamps_rejected(self):
        s = SimilaritySeries(
            pair=("a", "b"),
            points=[(SliceKey(2017, 1, Platform.IOS), 0.1), (SliceKey(2017, 1, Platform.WEB), 0.2)],
        )
        with pytest.raises(ValueError, match="time"):
            linear_trend(s)


class TestCohesiveness:
    def test_k_one_pairwise_absent(self):
        res = cohesiveness(make_model(np.random.default_rng(0).normal(size=(5, 3))), "t0", k=1)
        assert res["knn_pairwise_mean_dist"] is None

    def test_identical_neighbors_zero_pairwise(self):
        vecs = [[1.0, 0.0], [0.9, 0.1], [0.9, 0.1], [0.9, 0.1], [-1.0, 5.0]]
        res = cohesiveness(make_model(vecs), "t0", k=3)
        assert res["knn_pairwise_mean_dist"] <= 1e-12

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(6)
        vecs = rng.normal(size=(5, 4))
        model = make_model(vecs)
        k = 3
        res = cohesiveness(model, "t2", k=k)

        dists = {i: 1.0 - oracle_cos(vecs[2], vecs[i]) for i in range(5) if i != 2}
        knn = sorted(dists, key=lambda i: (dists[i], i))[:k]
        knn_mean = math.fsum(dists[i] for i in knn) / k
        pair_mean = math.fsum(
            1.0 - oracle_cos(vecs[i], vecs[j]) for i, j in itertools.combinations(knn, 2)
        ) / (k * (k - 1) / 2)
        assert abs(res["knn_mean_dist"] - knn_mean) <= 1e-12
        assert abs(res["knn_pairwise_mean_dist"] - pair_mean) <= 1e-12

        centroid = vecs[knn].mean(axis=0)
        assert abs(res["centroid_dist"] - (1.0 - oracle_cos(vecs[2], centroid))) <= 1e-12

    def test_invariant_under_orthogonal_transform(self):
        rng = np.random.default_rng(7)
        vecs = rng.normal(size=(8, 6))
        q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
        a = cohesiveness(make_model(vecs), "t1", k=4)
        b = cohesiveness(make_model(vecs @ q), "t1", k=4)
        for key in ("centroid_dist", "knn_mean_dist", "knn_pairwise_mean_dist"):
            assert abs(a[key] - b[key]) <= 1e-9

    def test_bad_k_rejected(self):
        model = make_model(np.random.default_rng(8).normal(size=(4, 3)))
        with pytest.raises(ValueError):
            cohesiveness(model, "t0", k=0)
        with pytest.raises(ValueError):
            cohesiveness(model, "t0", k=4)


class TestNeighborOverlap:
    def test_identical_models_full_overlap(self):
        m = make_model(np.random.default_rng(9).normal(size=(8, 4)))
        assert neighbor_overlap(m, m, "t3", k=4) == 1.0

    def test_disjoint_neighborhoods_zero(self):
        # t0's neighbors flip between two orthogonal groups
        group_a = np.array([[1.0, 0.0, 0.0]] * 3)
        group_b = np.array([[0.0, 1.0, 0.0]] * 3)
        probe = np.array([[1.0, 0.0, 0.0]])
        far = np.array([[0.0, 0.0, 1.0]])
        mi = make_model(np.vstack([probe, group_a, group_b * 0 + far.repeat(3, 0)]))
        mi.vectors[1:4] = group_a
        mi.vectors[4:7] = far.repeat(3, 0)
        mj = make_model(mi.vectors.copy())
        mj.vectors[1:4] = far.repeat(3, 0)
        mj.vectors[4:7] = group_a
        assert neighbor_overlap(mi, mj, "t0", k=3) == 0.0

    def test_symmetric(self):
        mi = make_model(np.random.default_rng(10).normal(size=(9, 5)))
        mj = make_model(np.random.default_rng(11).normal(size=(9, 5)))
        assert neighbor_overlap(mi, mj, "t4", k=3) == neighbor_overlap(mj, mi, "t4", k=3)

    def test_matches_brute_force_sets(self):
        rng = np.random.default_rng(12)
        vi, vj = rng.normal(size=(6, 4)), rng.normal(size=(6, 4))
        mi, mj = make_model(vi), make_model(vj)
        k = 2

        def brute_knn(vecs, t):
            d = {i: 1.0 - oracle_cos(vecs[t], vecs[i]) for i in range(6) if i != t}
            return set(sorted(d, key=lambda i: (d[i], i))[:k])

        expected = len(brute_knn(vi, 1) & brute_knn(vj, 1)) / k
        assert neighbor_overlap(mi, mj, "t1", k=k) == expected


class TestClassifyPattern:
    def test_constant_series_stable(self):
        s = series_from_values([0.5] * 6)
        assert classify_pattern(s, linear_trend(s)) is PatternClass.STABLE

    def test_rising_line_monotone(self):
        s = series_from_values([0.1 * t for t in range(6)])
        assert classify_pattern(s, linear_trend(s)) is PatternClass.MONOTONE_DRIFT

    def test_tent_shape_reverting(self):
        s = series_from_values([0.8, 0.6, 0.4, 0.6, 0.79])
        assert classify_pattern(s, linear_trend(s)) is PatternClass.REVERTING_DRIFT

    def test_noise_without_trend_scattered(self):
        # alternates wildly, never returns to the start, no direction
        s = series_from_values([0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.1, 0.9, 0.54])
        fit = linear_trend(s)
        assert abs(fit.slope) <= 0.01
        assert classify_pattern(s, fit) is PatternClass.SCATTERED

    def test_short_series_rejected(self):
        s = series_from_values([0.1, 0.2, 0.3])
        with pytest.raises(ValueError):
            classify_pattern(s, linear_trend(s))

    def test_deterministic_given_thresholds(self):
        s = series_from_values([0.5, 0.52, 0.48, 0.51, 0.5])
        fit = linear_trend(s)
        assert classify_pattern(s, fit) == classify_pattern(s, fit)
