import copy
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emodrift.drift import (
    Attribution,
    DriftIndicator,
    attribute_shift,
    baseline_shift,
    compare_models,
    drift_indicator,
    drifted_tokens,
    normality_check,
    pairwise_distances,
)
from emodrift.shapiro import shapiro_wilk
from emodrift.trainer import EmbeddingModel


def make_model(vectors, slice=None):
    vectors = np.asarray(vectors, dtype=np.float64)
    return EmbeddingModel(
        slice=slice, dim=vectors.shape[1],
        tokens=[f"t{i}" for i in range(vectors.shape[0])], vectors=vectors,
    )


def random_model(n, dim, seed):
    return make_model(np.random.default_rng(seed).normal(size=(n, dim)))


# -- scalar brute-force oracles, kept independent of the numpy code paths ----

def oracle_cosine_distance(u, v):
    dot = math.fsum(a * b for a, b in zip(u, v))
    nu = math.sqrt(math.fsum(a * a for a in u))
    nv = math.sqrt(math.fsum(b * b for b in v))
    return 1.0 - dot / (nu * nv)


def oracle_distance_matrix(vectors):
    n = len(vectors)
    out = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            out[i][j] = 0.0 if i == j else oracle_cosine_distance(vectors[i], vectors[j])
    return out


def oracle_shift_stats(di, dj):
    n = len(di)
    shifts = [[abs(di[i][j] - dj[i][j]) for j in range(n)] for i in range(n)]
    upper = [shifts[i][j] for i in range(n) for j in range(i + 1, n)]
    mu = math.fsum(upper) / len(upper)
    sigma = math.sqrt(math.fsum((x - mu) ** 2 for x in upper) / len(upper))
    return shifts, mu, sigma


def oracle_delta(shifts, mu, sigma, beta):
    n = len(shifts)
    return [
        [1 if i != j and abs(shifts[i][j] - mu) > beta * sigma else 0 for j in range(n)]
        for i in range(n)
    ]


def oracle_drifted(delta):
    n = len(delta)
    rows = [sum(delta[i]) for i in range(n)]
    evidence = {}
    for i in range(n):
        for j in range(i + 1, n):
            if not delta[i][j]:
                continue
            if rows[i] > rows[j]:
                winners = [i]
            elif rows[i] < rows[j]:
                winners = [j]
            else:
                winners = [i, j]
            for w in winners:
                evidence[w] = evidence.get(w, 0) + 1
    return evidence


# ---------------------------------------------------------------------------


class TestPairwiseDistances:
    def test_identical_vectors_distance_zero(self):
        m = make_model([[1.0, 2.0], [1.0, 2.0]])
        assert abs(pairwise_distances(m).values[0, 1]) <= 1e-15

    def test_orthogonal_vectors_distance_one(self):
        m = make_model([[1.0, 0.0], [0.0, 1.0]])
        assert abs(pairwise_distances(m).values[0, 1] - 1.0) < 1e-15

    def test_opposite_vectors_distance_two(self):
        m = make_model([[1.0, 0.0], [-1.0, 0.0]])
        assert abs(pairwise_distances(m).values[0, 1] - 2.0) < 1e-15

    def test_three_vector_matrix_matches_hand_computation(self):
        vecs = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]
        d = pairwise_distances(make_model(vecs)).values
        oracle = oracle_distance_matrix(vecs)
        for i in range(3):
            for j in range(3):
                assert abs(d[i, j] - oracle[i][j]) <= 1e-12

    def test_zero_vector_names_token(self):
        m = make_model([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ValueError, match="t1"):
            pairwise_distances(m)

    def test_invariants_symmetric_zero_diag_bounded(self):
        d = pairwise_distances(random_model(12, 6, 0)).values
        assert np.array_equal(d, d.T)
        assert np.all(np.diag(d) == 0.0)
        assert d.min() >= 0.0 and d.max() <= 2.0

    def test_unknown_metric_rejected(self):
        with pytest.raises(ValueError):
            pairwise_distances(random_model(3, 3, 0), metric="manhattan")


class TestBaselineShift:
    def test_identical_matrices_zero_stats(self):
        di = pairwise_distances(random_model(6, 4, 1))
        s = baseline_shift(di, copy.deepcopy(di))
        assert np.all(s.values == 0.0) and s.mu == 0.0 and s.sigma == 0.0

    def test_hand_computed_three_by_three(self):
        di = pairwise_distances(random_model(3, 4, 2))
        dj = copy.deepcopy(di)
        dj.values = dj.values.copy()
        for (i, j), delta in zip([(0, 1), (0, 2), (1, 2)], [0.1, -0.2, 0.3]):
            dj.values[i, j] += delta
            dj.values[j, i] += delta
        s = baseline_shift(di, dj)
        assert abs(s.mu - 0.2) < 1e-12
        assert abs(s.sigma - math.sqrt(0.02 / 3)) < 1e-12

    def test_single_pair_sigma_zero(self):
        di = pairwise_distances(random_model(2, 3, 3))
        dj = copy.deepcopy(di)
        dj.values = dj.values.copy()
        dj.values[0, 1] += 0.4
        dj.values[1, 0] += 0.4
        s = baseline_shift(di, dj)
        assert abs(s.mu - 0.4) < 1e-12 and s.sigma == 0.0

    def test_symmetric_in_arguments(self):
        di = pairwise_distances(random_model(8, 4, 4))
        dj = pairwise_distances(random_model(8, 4, 5))
        s_ij = baseline_shift(di, dj)
        s_ji = baseline_shift(dj, di)
        assert np.array_equal(s_ij.values, s_ji.values)
        assert s_ij.mu == s_ji.mu and s_ij.sigma == s_ji.sigma

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shapes"):
            baseline_shift(
                pairwise_distances(random_model(3, 4, 6)),
                pairwise_distances(random_model(4, 4, 7)),
            )


class TestDriftIndicator:
    def test_identical_models_all_zero_with_warning(self):
        di = pairwise_distances(random_model(5, 4, 8))
        s = baseline_shift(di, copy.deepcopy(di))
        with pytest.warns(UserWarning, match="degenerate"):
            delta = drift_indicator(s, 2.0)
        assert delta.degenerate_sigma
        assert not delta.values.any()

    def test_tight_three_by_three_nothing_fires_at_beta_two(self):
        di = pairwise_distances(random_model(3, 4, 9))
        dj = copy.deepcopy(di)
        dj.values = dj.values.copy()
        for (i, j), d in zip([(0, 1), (0, 2), (1, 2)], [0.1, 0.2, 0.3]):
            dj.values[i, j] = di.values[i, j] + d
            dj.values[j, i] = dj.values[i, j]
        delta = drift_indicator(baseline_shift(di, dj), 2.0)
        assert not delta.values.any()  # |0.3 - 0.2| < 2 * 0.0816

    def test_planted_outlier_is_exactly_flagged(self):
        rng = np.random.default_rng(10)
        n = 10
        base = pairwise_distances(random_model(n, 6, 11))
        other = copy.deepcopy(base)
        other.values = base.values + 0.0
        noise = rng.normal(0, 0.001, size=(n, n))
        noise = (noise + noise.T) / 2
        np.fill_diagonal(noise, 0.0)
        other.values = base.values + noise
        s = baseline_shift(base, other)
        other.values[2, 7] = base.values[2, 7] + s.sigma * 30
        other.values[7, 2] = other.values[2, 7]
        s = baseline_shift(base, other)
        delta = drift_indicator(s, 2.0)
        flagged = {(i, j) for i, j in zip(*np.nonzero(np.triu(delta.values, 1)))}
        assert flagged == {(2, 7)}

    def test_beta_below_two_rejected_unless_overridden(self):
        di = pairwise_distances(random_model(4, 3, 12))
        dj = pairwise_distances(random_model(4, 3, 13))
        s = baseline_shift(di, dj)
        with pytest.raises(ValueError, match="beta"):
            drift_indicator(s, 1.5)
        delta = drift_indicator(s, 1.5, allow_nonconforming=True)
        assert not delta.conforming

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_threshold_monotonicity(self, seed):
        rng = np.random.default_rng(seed)
        di = pairwise_distances(make_model(rng.normal(size=(8, 5))))
        dj = pairwise_distances(make_model(rng.normal(size=(8, 5))))
        s = baseline_shift(di, dj)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            d2 = drift_indicator(s, 2.0).values
            d3 = drift_indicator(s, 3.0).values
        assert np.all(d3 <= d2)

    def test_distance_and_similarity_conventions_agree(self):
        mi, mj = random_model(10, 5, 14), random_model(10, 5, 15)
        c_dist = compare_models(mi, mj, metric="cosine")
        c_sim = compare_models(mi, mj, metric="similarity")
        assert {(i, j) for i, j, _ in c_dist.flagged} == {(i, j) for i, j, _ in c_sim.flagged}
        assert abs(c_dist.mu - c_sim.mu) < 1e-12
        assert abs(c_dist.sigma - c_sim.sigma) < 1e-12


class TestAttribution:
    def _delta(self, pairs, n=4):
        values = np.zeros((n, n), dtype=np.uint8)
        for i, j in pairs:
            values[i, j] = values[j, i] = 1
        return DriftIndicator(beta=2.0, values=values)

    def test_row_sums_pick_k(self):
        delta = self._delta([(0, 1), (0, 2), (0, 3), (1, 2)])
        assert attribute_shift(0, 1, delta) == Attribution.K

    def test_row_sums_pick_l(self):
        delta = self._delta([(0, 1), (1, 2), (1, 3)])
        assert attribute_shift(0, 1, delta) == Attribution.L

    def test_tie_reports_both(self):
        delta = self._delta([(0, 1)])
        assert attribute_shift(0, 1, delta) == Attribution.BOTH

    def test_unflagged_pair_is_an_error(self):
        delta = self._delta([(0, 1)])
        with pytest.raises(ValueError):
            attribute_shift(2, 3, delta)

    def test_single_pair_tie_gives_both_tokens_evidence_one(self):
        ev = drifted_tokens(self._delta([(0, 1)]))
        assert {k: v.evidence for k, v in ev.items()} == {0: 1, 1: 1}
        assert ev[0].label == "tied"

    def test_all_zero_delta_empty_set(self):
        assert drifted_tokens(self._delta([])) == {}

    def test_five_by_five_matches_brute_force(self):
        rng = np.random.default_rng(16)
        for _ in range(20):
            n = 5
            mask = rng.integers(0, 2, size=(n, n))
            mask = np.triu(mask, 1)
            delta = DriftIndicator(beta=2.0, values=(mask + mask.T).astype(np.uint8))
            ours = {k: v.evidence for k, v in drifted_tokens(delta).items()}
            assert ours == oracle_drifted(delta.values.tolist())

    def test_enumeration_order_does_not_matter(self):
        delta = self._delta([(0, 1), (0, 2), (1, 3), (2, 3)])
        ev = drifted_tokens(delta)
        flipped = DriftIndicator(beta=2.0, values=delta.values[::-1, ::-1].copy())
        ev_flipped = drifted_tokens(flipped)
        relabel = {i: delta.values.shape[0] - 1 - i for i in range(delta.values.shape[0])}
        assert {relabel[k]: v.evidence for k, v in ev_flipped.items()} == {
            k: v.evidence for k, v in ev.items()
        }


class TestNormalityCheck:
    def _shift(self, n, seed, scale=0.01):
        di = pairwise_distances(random_model(n, 6, seed))
        dj = copy.deepcopy(di)
        rng = np.random.default_rng(seed + 1)
        noise = rng.normal(0, scale, size=di.values.shape)
        noise = (noise + noise.T) / 2
        np.fill_diagonal(noise, 0.0)
        dj.values = di.values + noise
        return baseline_shift(di, dj)

    def test_reports_w_p_and_sample_size(self):
        res = normality_check(self._shift(20, 1))
        assert 0 < res["W"] <= 1.0
        assert res["sample_n"] == 20 * 19 // 2

    def test_subsample_capped_and_seeded(self):
        s = self._shift(40, 2)
        r1 = normality_check(s, max_n=100, seed=5)
        r2 = normality_check(s, max_n=100, seed=5)
        r3 = normality_check(s, max_n=100, seed=6)
        assert r1 == r2
        assert r1["sample_n"] == 100
        assert r1["W"] != r3["W"]

    def test_constant_shift_degenerate(self):
        di = pairwise_distances(random_model(6, 4, 3))
        s = baseline_shift(di, copy.deepcopy(di))
        with pytest.raises(Exception, match="degenerate"):
            normality_check(s)

    def test_matches_direct_statistic(self):
        s = self._shift(15, 4)
        res = normality_check(s, max_n=10**6)
        iu = np.triu_indices(s.values.shape[0], 1)
        w, p = shapiro_wilk(s.values[iu])
        assert res["W"] == w and res["p"] == p


class TestCompareModels:
    def test_rotation_leaves_delta_unchanged(self):
        mi, mj = random_model(30, 8, 20), random_model(30, 8, 21)
        base = compare_models(mi, mj)
        q, _ = np.linalg.qr(np.random.default_rng(22).normal(size=(8, 8)))
        rotated = make_model(mj.vectors @ q)
        rot = compare_models(mi, rotated)
        assert {(i, j) for i, j, _ in base.flagged} == {(i, j) for i, j, _ in rot.flagged}
        d_before = pairwise_distances(mj).values
        d_after = pairwise_distances(rotated).values
        assert np.max(np.abs(d_before - d_after)) < 1e-9

    def test_blocked_path_equals_dense_path(self):
        mi, mj = random_model(200, 10, 23), random_model(200, 10, 24)
        dense = compare_models(mi, mj, dense_limit=10_000)
        blocked = compare_models(mi, mj, dense_limit=10)
        assert abs(dense.mu - blocked.mu) < 1e-12
        assert abs(dense.sigma - blocked.sigma) < 1e-12
        assert {(i, j) for i, j, _ in dense.flagged} == {(i, j) for i, j, _ in blocked.flagged}
        assert {k: v.evidence for k, v in dense.evidence.items()} == {
            k: v.evidence for k, v in blocked.evidence.items()
        }
        assert dense.shapiro == blocked.shapiro

    def test_blocked_degenerate_matches_dense(self):
        m = random_model(40, 6, 25)
        dense = compare_models(m, m, dense_limit=10_000)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            blocked = compare_models(m, m, dense_limit=10)
        assert dense.degenerate_sigma and blocked.degenerate_sigma
        assert dense.flagged == blocked.flagged == []

    def test_vocabulary_mismatch_rejected(self):
        mi = random_model(5, 4, 26)
        mj = random_model(5, 4, 27)
        mj.tokens = [f"u{i}" for i in range(5)]
        with pytest.raises(ValueError, match="vocabulary"):
            compare_models(mi, mj)

    def test_report_shape(self):
        rep = compare_models(random_model(12, 5, 28), random_model(12, 5, 29)).report()
        for key in ("from_slice", "to_slice", "beta", "mu", "sigma", "shapiro",
                    "flagged_pairs", "drifted_tokens", "warnings"):
            assert key in rep
        for pair in rep["flagged_pairs"]:
            assert set(pair) == {"a", "b", "shift"}
        for tok in rep["drifted_tokens"]:
            assert set(tok) == {"token", "evidence", "attribution"}


class TestBruteForceEquivalence:
    def test_full_pipeline_matches_oracles_at_small_vocab(self):
        rng = np.random.default_rng(31)
        for trial in range(5):
            n = int(rng.integers(4, 11))
            vi = rng.normal(size=(n, 5))
            vj = vi + rng.normal(0, 0.05, size=(n, 5))
            mi, mj = make_model(vi), make_model(vj)

            di = pairwise_distances(mi).values
            dj = pairwise_distances(mj).values
            oi = oracle_distance_matrix(vi.tolist())
            oj = oracle_distance_matrix(vj.tolist())
            for a in range(n):
                for b in range(n):
                    assert abs(di[a, b] - oi[a][b]) <= 1e-12
                    assert abs(dj[a, b] - oj[a][b]) <= 1e-12

            s = baseline_shift(pairwise_distances(mi), pairwise_distances(mj))
            shifts, mu, sigma = oracle_shift_stats(oi, oj)
            assert abs(s.mu - mu) <= 1e-12
            assert abs(s.sigma - sigma) <= 1e-12

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                delta = drift_indicator(s, 2.0)
            assert delta.values.tolist() == oracle_delta(shifts, mu, sigma, 2.0)

            ours = {k: v.evidence for k, v in drifted_tokens(delta).items()}
            assert ours == oracle_drifted(delta.values.tolist())
