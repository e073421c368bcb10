import numpy as np
import pytest

from mediarank.errors import (
    ArgumentError,
    DimensionError,
    EmptyRepositoryError,
    ZeroVectorError,
)
from mediarank.ranking import (
    RankMethod,
    par_rerank,
    rank_cosine,
    rank_euclidean,
)
from mediarank.vectors import FeatureVector

from oracles import full_sort_cosine_oracle, full_sort_euclidean_oracle, par_oracle


def fv(*coords):
    return FeatureVector(list(coords))


FOUR_ITEM_REPO = [
    ("a", fv(1, 0)),
    ("b", fv(0.9, 0.1)),
    ("c", fv(-1, 0)),
    ("d", fv(0, 1)),
]


def random_repo(rng, count, dim, allow_zero=False):
    repo = []
    for i in range(count):
        v = rng.uniform(-3, 3, dim)
        if not allow_zero and np.linalg.norm(v) == 0:
            v = v + 0.1
        repo.append((f"item-{i:04d}", FeatureVector(v)))
    return repo


class TestRankEuclidean:
    def test_four_item_example(self):
        result = rank_euclidean(fv(1, 0), FOUR_ITEM_REPO, 3)
        assert result.ids() == ("a", "b", "d")
        assert result.entries[0].distance == 0.0
        assert result.entries[1].distance == pytest.approx(0.1414213562, abs=1e-9)
        assert result.entries[2].distance == pytest.approx(1.4142135624, abs=1e-9)
        assert result.method is RankMethod.EUCLIDEAN
        assert result.delta_t is None

    def test_k_exceeds_repo(self):
        result = rank_euclidean(fv(1, 0), FOUR_ITEM_REPO, 99)
        assert result.ids() == ("a", "b", "d", "c")
        assert len(result) == 4

    def test_empty_repo(self):
        with pytest.raises(EmptyRepositoryError):
            rank_euclidean(fv(1, 0), [], 3)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            rank_euclidean(fv(1, 0, 0), FOUR_ITEM_REPO, 2)

    def test_bad_k(self):
        with pytest.raises(ArgumentError):
            rank_euclidean(fv(1, 0), FOUR_ITEM_REPO, 0)

    def test_matches_full_sort_oracle_200(self, rng):
        repo = random_repo(rng, 200, 6)
        raw = {item_id: vec.values.tolist() for item_id, vec in repo}
        query = FeatureVector(rng.uniform(-3, 3, 6))
        result = rank_euclidean(query, repo, 10)
        expected = full_sort_euclidean_oracle(query.values.tolist(), raw.items(), 10)
        assert list(result.ids()) == [item_id for item_id, _ in expected]
        for entry, (_, dist) in zip(result.entries, expected):
            assert entry.distance == pytest.approx(dist, abs=1e-9)

    def test_tie_break_by_id(self):
        repo = [("z", fv(1, 0)), ("a", fv(1, 0)), ("m", fv(1, 0)), ("far", fv(9, 9))]
        result = rank_euclidean(fv(1, 0), repo, 3)
        assert result.ids() == ("a", "m", "z")

    def test_entries_carry_cosine(self):
        result = rank_euclidean(fv(1, 0), FOUR_ITEM_REPO, 4)
        by_id = {e.item_id: e.cosine for e in result.entries}
        assert by_id["a"] == pytest.approx(1.0)
        assert by_id["d"] == pytest.approx(0.0)
        assert by_id["c"] == pytest.approx(-1.0)

    def test_zero_norm_query_raises(self):
        with pytest.raises(ZeroVectorError):
            rank_euclidean(fv(0, 0), FOUR_ITEM_REPO, 2)

    def test_zero_norm_repo_vector_scores_cosine_zero(self):
        repo = FOUR_ITEM_REPO + [("zero", fv(0, 0))]
        result = rank_euclidean(fv(1, 0), repo, 5)
        entry = next(e for e in result.entries if e.item_id == "zero")
        assert entry.cosine == 0.0


class TestRankCosine:
    def test_axis_aligned(self):
        result = rank_cosine(fv(1, 0), [("a", fv(2, 0)), ("b", fv(0, 1))], 2)
        assert result.ids() == ("a", "b")
        assert result.entries[0].cosine == pytest.approx(1.0)
        assert result.entries[1].cosine == pytest.approx(0.0)

    def test_scale_invariant_ordering(self, rng):
        repo = random_repo(rng, 50, 4)
        q = rng.uniform(-3, 3, 4) + 0.1
        r1 = rank_cosine(FeatureVector(q), repo, 10)
        r2 = rank_cosine(FeatureVector(q * 10.0), repo, 10)
        assert r1.ids() == r2.ids()

    def test_matches_full_sort_oracle_200(self, rng):
        repo = random_repo(rng, 200, 6)
        raw = {item_id: vec.values.tolist() for item_id, vec in repo}
        query = FeatureVector(rng.uniform(-3, 3, 6) + 0.05)
        result = rank_cosine(query, repo, 10)
        expected = full_sort_cosine_oracle(query.values.tolist(), raw.items(), 10)
        assert list(result.ids()) == [item_id for item_id, _ in expected]

    def test_descending_order(self, rng):
        repo = random_repo(rng, 40, 5)
        result = rank_cosine(FeatureVector(rng.uniform(-3, 3, 5) + 0.05), repo, 15)
        cosines = [e.cosine for e in result.entries]
        assert cosines == sorted(cosines, reverse=True)


class TestParRerank:
    def test_four_item_example(self):
        result = par_rerank(fv(1, 0), FOUR_ITEM_REPO, 3, 0.5)
        assert result.ids() == ("a", "b")
        assert result.entries[0].cosine == pytest.approx(1.0)
        assert result.entries[1].cosine == pytest.approx(0.99388373, abs=1e-7)
        assert result.method is RankMethod.PAR
        assert result.delta_t == 0.5

    def test_threshold_bottom_equals_euclidean(self, rng):
        repo = random_repo(rng, 60, 5)
        query = FeatureVector(rng.uniform(-3, 3, 5) + 0.05)
        par = par_rerank(query, repo, 10, -1.0)
        eu = rank_euclidean(query, repo, 10)
        # no exactly antiparallel vectors in this corpus
        assert par.ids() == eu.ids()

    def test_threshold_top_is_empty(self):
        result = par_rerank(fv(1, 0), FOUR_ITEM_REPO, 3, 1.0)
        assert result.ids() == ()
        assert result.k_requested == 3

    def test_exact_antiparallel_dropped_even_at_bottom(self):
        repo = [("anti", fv(-2, 0)), ("near", fv(1, 0.01))]
        result = par_rerank(fv(1, 0), repo, 2, -1.0)
        assert "anti" not in result.ids()
        assert "near" in result.ids()

    def test_delta_out_of_range(self):
        with pytest.raises(ArgumentError):
            par_rerank(fv(1, 0), FOUR_ITEM_REPO, 2, 1.5)

    def test_matches_oracle(self, rng):
        for _ in range(50):
            dim = int(rng.integers(2, 6))
            repo = random_repo(rng, int(rng.integers(5, 40)), dim)
            raw = {item_id: vec.values.tolist() for item_id, vec in repo}
            query = FeatureVector(rng.uniform(-3, 3, dim) + 0.05)
            k = int(rng.integers(1, 12))
            delta = float(rng.uniform(-1, 1))
            result = par_rerank(query, repo, k, delta)
            expected = par_oracle(query.values.tolist(), raw.items(), k, delta)
            assert list(result.ids()) == [item_id for item_id, _ in expected]


class TestAlgebraicProperties:
    def test_subset_monotonic_order_preserving(self, rng):
        for _ in range(100):
            dim = int(rng.integers(2, 6))
            repo = random_repo(rng, int(rng.integers(3, 50)), dim)
            query = FeatureVector(rng.uniform(-3, 3, dim) + 0.05)
            k = int(rng.integers(1, 15))
            d1, d2 = sorted(rng.uniform(-1, 1, 2).tolist())
            eu = rank_euclidean(query, repo, k)
            p1 = par_rerank(query, repo, k, d1)
            p2 = par_rerank(query, repo, k, d2)
            # subset of the euclidean shortlist
            assert set(p1.ids()) <= set(eu.ids())
            # delta-monotonicity
            assert set(p2.ids()) <= set(p1.ids())
            # order preservation: par order is the euclidean order restricted
            survivors = [i for i in eu.ids() if i in set(p1.ids())]
            assert list(p1.ids()) == survivors

    def test_k_monotonicity(self, rng):
        repo = random_repo(rng, 80, 4)
        query = FeatureVector(rng.uniform(-3, 3, 4) + 0.05)
        previous: set = set()
        for k in range(1, 30):
            ids = set(rank_euclidean(query, repo, k).ids())
            assert previous <= ids
            previous = ids

    def test_determinism_across_runs(self, rng):
        repo = random_repo(rng, 50, 4)
        # duplicated vectors force tie-breaking to matter
        repo += [(f"dup-{item_id}", vec) for item_id, vec in repo[:10]]
        query = FeatureVector(rng.uniform(-3, 3, 4) + 0.05)
        first = par_rerank(query, repo, 20, 0.1)
        for _ in range(5):
            assert par_rerank(query, repo, 20, 0.1) == first

    def test_par_entries_all_above_threshold(self, rng):
        repo = random_repo(rng, 60, 5)
        query = FeatureVector(rng.uniform(-3, 3, 5) + 0.05)
        for delta in (-0.5, 0.0, 0.7):
            result = par_rerank(query, repo, 25, delta)
            assert all(e.cosine > delta for e in result.entries)
