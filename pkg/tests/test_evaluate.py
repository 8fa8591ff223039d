import math

import numpy as np
import pytest
import scipy.stats

from rgrams.embed import VectorSet
from rgrams.errors import DomainError
from rgrams.evaluate import (
    AnalogyQuery,
    analogy,
    analogy_suite,
    average_ranks,
    cosine,
    nearest_neighbors,
    read_analogies,
    read_similarity,
    similarity_suite,
    spearman,
)


def vecs(pairs):
    tokens = [t for t, _ in pairs]
    return VectorSet(tokens, np.array([v for _, v in pairs], dtype=np.float64))


class TestCosine:
    def test_parallel(self):
        assert cosine(np.array([1.0, 2.0]), np.array([2.0, 4.0])) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 3.0])) == pytest.approx(0.0)

    def test_forty_five_degrees(self):
        got = cosine(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
        assert got == pytest.approx(math.sqrt(0.5), abs=1e-12)

    def test_opposite(self):
        assert cosine(np.array([1.0, 1.0]), np.array([-1.0, -1.0])) == pytest.approx(-1.0)

    def test_clipped_to_unit_range(self):
        u = np.full(50, 1e-160)
        assert -1.0 <= cosine(u, u) <= 1.0

    def test_zero_vector_rejected(self):
        with pytest.raises(DomainError):
            cosine(np.zeros(3), np.ones(3))


class TestNearestNeighbors:
    VS = vecs(
        [
            ("north", [1.0, 0.0]),
            ("south", [-1.0, 0.0]),
            ("east", [0.0, 1.0]),
            ("northish", [0.9, 0.1]),
        ]
    )

    def test_basic_ranking(self):
        got = nearest_neighbors(self.VS, "north", k=3)
        assert [t for t, _ in got] == ["northish", "east", "south"]

    def test_query_excluded(self):
        got = nearest_neighbors(self.VS, "north", k=10)
        assert "north" not in [t for t, _ in got]

    def test_oov_returns_none(self):
        assert nearest_neighbors(self.VS, "west") is None

    def test_tie_break_alphabetical(self):
        vs = vecs([("q", [1.0, 0.0]), ("bb", [0.0, 1.0]), ("aa", [0.0, 1.0])])
        got = nearest_neighbors(vs, "q", k=2)
        assert [t for t, _ in got] == ["aa", "bb"]

    def test_zero_query_rejected(self):
        vs = vecs([("z", [0.0, 0.0]), ("a", [1.0, 0.0])])
        with pytest.raises(DomainError):
            nearest_neighbors(vs, "z")

    def test_zero_candidates_rank_last(self):
        vs = vecs([("a", [1.0, 0.0]), ("z", [0.0, 0.0]), ("b", [0.5, 0.5])])
        got = nearest_neighbors(vs, "a", k=3)
        assert got[-1][0] == "z"

    def test_matches_brute_force(self):
        rng = np.random.default_rng(5)
        tokens = [f"tok{i:03d}" for i in range(60)]
        m = rng.normal(size=(60, 12))
        vs = VectorSet(tokens, m)
        for qi in (0, 13, 59):
            got = nearest_neighbors(vs, tokens[qi], k=7)
            want = sorted(
                (
                    (cosine(m[i], m[qi]), tokens[i])
                    for i in range(60)
                    if i != qi
                ),
                key=lambda p: (-p[0], p[1]),
            )[:7]
            assert [t for t, _ in got] == [t for _, t in want]
            for (t, s), (ws, wt) in zip(got, want):
                assert s == pytest.approx(ws, abs=1e-12)


class TestAnalogy:
    VS = vecs(
        [
            ("man", [1.0, 0.0, 0.0]),
            ("woman", [1.0, 1.0, 0.0]),
            ("king", [1.0, 0.0, 1.0]),
            ("queen", [1.0, 1.0, 1.0]),
            ("pawn", [-1.0, 0.0, 0.3]),
        ]
    )

    def test_parallelogram(self):
        got = analogy(self.VS, AnalogyQuery(a="man", b="woman", c="king", gold="queen"))
        assert got[0][0] == "queen"

    def test_query_terms_excluded(self):
        got = analogy(self.VS, AnalogyQuery(a="man", b="woman", c="king", gold="queen"), k=10)
        names = [t for t, _ in got]
        assert not {"man", "woman", "king"} & set(names)

    def test_oov_returns_none(self):
        assert analogy(self.VS, AnalogyQuery("man", "woman", "rook", "queen")) is None

    def test_zero_query_vector_rejected(self):
        vs = vecs([("a", [0.0, 0.0]), ("b", [1.0, 0.0]), ("c", [0.0, 1.0]), ("d", [1.0, 1.0])])
        with pytest.raises(DomainError):
            analogy(vs, AnalogyQuery("a", "b", "c", "d"))

    def test_near_cancelling_target_is_well_formed(self):
        # b - a + c cancels to rounding noise; the ranking must still be a
        # clean list with similarities inside [-1, 1]
        s = math.sqrt(3) / 2
        vs = vecs(
            [
                ("a", [0.5, s]),
                ("b", [1.0, 0.0]),
                ("c", [-0.5, s]),
                ("d", [0.0, 1.0]),
            ]
        )
        got = analogy(vs, AnalogyQuery(a="a", b="b", c="c", gold="d"))
        assert got is not None
        for tok, sim in got:
            assert -1.0 <= sim <= 1.0


class TestAnalogySuite:
    VS = TestAnalogy.VS

    def test_score_and_coverage(self):
        qs = [
            AnalogyQuery("man", "woman", "king", "queen"),  # correct
            AnalogyQuery("woman", "man", "queen", "king"),  # correct
            AnalogyQuery("man", "woman", "rook", "queen"),  # c OOV: skipped
            AnalogyQuery("man", "woman", "king", "bishop"),  # gold OOV: skipped
        ]
        r = analogy_suite(self.VS, qs)
        assert r.total == 4 and r.attempted == 2 and r.correct == 2
        assert r.score == pytest.approx(1.0)
        assert r.coverage == pytest.approx(0.5)

    def test_near_miss_recorded(self):
        vs = vecs(
            [
                ("a", [1.0, 0.0]),
                ("b", [0.0, 1.0]),
                ("c", [1.0, 1.0]),
                ("york", [0.4, 0.9]),
                ("new_york", [0.0, 1.1]),
            ]
        )
        q = AnalogyQuery(a="a", b="b", c="c", gold="york")
        r = analogy_suite(vs, [q])
        assert r.correct == 0
        assert r.near_misses and r.near_misses[0][0] == q
        assert r.near_misses[0][1] == "new_york"

    def test_nothing_attempted_scores_zero(self):
        r = analogy_suite(self.VS, [AnalogyQuery("x", "y", "z", "w")])
        assert r.score == 0.0 and r.coverage == 0.0

    def test_empty_suite_rejected(self):
        with pytest.raises(DomainError):
            analogy_suite(self.VS, [])


class TestSpearman:
    def test_perfect_and_reversed(self):
        assert spearman([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
        assert spearman([1, 2, 3, 4], [40, 30, 20, 10]) == pytest.approx(-1.0)

    def test_monotone_transform_invariance(self):
        x = [0.3, 1.7, 2.2, 5.0, 9.1]
        y = [2.0, 4.0, 4.5, 6.0, 8.0]
        assert spearman(x, y) == pytest.approx(spearman(x, [v**3 for v in y]), abs=1e-12)

    def test_matches_scipy(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            n = int(rng.integers(5, 40))
            x = rng.normal(size=n)
            y = rng.normal(size=n) + 0.5 * x
            want = scipy.stats.spearmanr(x, y).statistic
            assert spearman(x, y) == pytest.approx(want, abs=1e-12)

    def test_matches_scipy_with_ties(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            n = int(rng.integers(5, 40))
            x = rng.integers(0, 4, size=n).astype(float)
            y = rng.integers(0, 4, size=n).astype(float)
            if len(set(x)) < 2 or len(set(y)) < 2:
                continue
            want = scipy.stats.spearmanr(x, y).statistic
            assert spearman(x, y) == pytest.approx(want, abs=1e-12)

    def test_constant_input_rejected(self):
        with pytest.raises(DomainError):
            spearman([1, 1, 1], [1, 2, 3])

    def test_too_few_points_rejected(self):
        with pytest.raises(DomainError):
            spearman([1], [2])

    def test_average_ranks(self):
        got = average_ranks(np.array([10.0, 20.0, 20.0, 30.0]))
        assert got.tolist() == [1.0, 2.5, 2.5, 4.0]


class TestSimilaritySuite:
    VS = vecs(
        [
            ("cat", [1.0, 0.0]),
            ("feline", [0.95, 0.05]),
            ("dog", [0.6, 0.4]),
            ("car", [0.0, 1.0]),
        ]
    )

    def test_correlation_and_coverage(self):
        pairs = [
            ("cat", "feline", 9.5),
            ("cat", "dog", 6.0),
            ("cat", "car", 1.0),
            ("cat", "ghost", 2.0),  # OOV: skipped
        ]
        rho, coverage = similarity_suite(self.VS, pairs)
        assert rho == pytest.approx(1.0)
        assert coverage == pytest.approx(3 / 4)

    def test_fewer_than_two_scored_rejected(self):
        with pytest.raises(DomainError):
            similarity_suite(self.VS, [("cat", "dog", 5.0), ("cat", "ghost", 1.0)])


class TestReaders:
    def test_analogies_with_sections(self, tmp_path):
        p = tmp_path / "a.txt"
        p.write_text(
            ": capital-common\nathens greece oslo norway\n"
            ": family\nboy girl king queen\nnew_york york old_york york\n",
            encoding="utf-8",
        )
        qs, sections = read_analogies(str(p))
        assert sections == ["capital-common", "family"]
        assert len(qs) == 3
        assert qs[0] == AnalogyQuery("athens", "greece", "oslo", "norway")
        assert qs[2].a == "new york"  # escaped tokens are unescaped on read

    def test_analogies_malformed_line(self, tmp_path):
        p = tmp_path / "a.txt"
        p.write_text("one two three\n", encoding="utf-8")
        with pytest.raises(DomainError):
            read_analogies(str(p))

    def test_similarity_tsv(self, tmp_path):
        p = tmp_path / "s.tsv"
        p.write_text("cat\tfeline\t9.5\nnew_york\tcity\t7.25\n", encoding="utf-8")
        rows = read_similarity(str(p))
        assert rows[0] == ("cat", "feline", 9.5)
        assert rows[1][0] == "new york"

    def test_similarity_bad_score(self, tmp_path):
        p = tmp_path / "s.tsv"
        p.write_text("a\tb\thigh\n", encoding="utf-8")
        with pytest.raises(DomainError):
            read_similarity(str(p))

    def test_similarity_wrong_field_count(self, tmp_path):
        p = tmp_path / "s.tsv"
        p.write_text("a\tb\n", encoding="utf-8")
        with pytest.raises(DomainError):
            read_similarity(str(p))
