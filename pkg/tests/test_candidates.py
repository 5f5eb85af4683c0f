"""Candidate extraction and the teacher-forcing loss function."""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from zosd import (
    DEFAULT_STOPLIST,
    DecoderOutput,
    PositionTopK,
    ScoringConfig,
    StopList,
    best_logprobs,
    extract_candidates,
    position_topk,
    seen_label,
    teacher_forcing_loss,
)
from zosd.errors import (
    IndexOutOfRangeError,
    KTooLargeError,
    NonFiniteError,
    ShapeMismatchError,
)


def config(k, stopwords=True, dedup=True):
    return ScoringConfig(k=k, filter_stopwords=stopwords, dedup_against_seen=dedup)


def output(positions, stored_k):
    return DecoderOutput("img", tuple(position_topk(p) for p in positions), stored_k)


def brute_force_candidates(positions, k, stoplist=(), seen=()):
    """Independent oracle: union-then-filter over the literal scan order."""
    seen_lower = {s.lower() for s in seen}
    stop_lower = {s.lower() for s in stoplist}
    result, taken = [], set()
    for pos in positions:
        ranked = sorted(pos, key=lambda e: (-e[1], e[0]))[:k]
        for word, _ in ranked:
            lower = word.lower()
            if lower in taken:
                continue
            taken.add(lower)
            if lower in stop_lower or lower in seen_lower:
                continue
            result.append(word)
    return result


class TestExtractCandidates:
    def test_single_position_k1(self):
        d = output([[("boat", -0.1), ("ship", -0.5)]], stored_k=2)
        got = extract_candidates(d, config(k=1, stopwords=False, dedup=False))
        assert got.names == ("boat",)

    def test_two_by_two_grid_with_stoplist(self):
        positions = [
            [("the", -0.1), ("dog", -0.2)],
            [("dog", -0.3), ("cat", -0.4)],
        ]
        d = output(positions, stored_k=2)
        got = extract_candidates(d, config(k=2), StopList(frozenset({"the"})))
        assert got.names == ("dog", "cat")
        assert got.names == tuple(brute_force_candidates(positions, 2, stoplist={"the"}))

    def test_full_overlap_with_seen_is_empty(self):
        d = output([[("cat", -0.1)]], stored_k=1)
        got = extract_candidates(d, config(k=1), StopList(frozenset()), [seen_label("cat")])
        assert len(got) == 0
        assert not got

    def test_dedup_is_case_insensitive_first_occurrence_wins(self):
        d = output([[("Dog", -0.1), ("cat", -0.2)], [("dog", -0.1), ("Cat", -0.2)]], stored_k=2)
        got = extract_candidates(d, config(k=2, stopwords=False, dedup=False))
        assert got.names == ("Dog", "cat")

    def test_k_too_large(self):
        d = output([[("a", -0.1)]], stored_k=1)
        with pytest.raises(KTooLargeError):
            extract_candidates(d, config(k=2))

    def test_seen_must_have_seen_kind(self):
        from zosd import generated_label

        d = output([[("a", -0.1)]], stored_k=1)
        with pytest.raises(ValueError):
            extract_candidates(d, config(k=1), seen=[generated_label("a")])

    def test_matches_brute_force_on_random_grids(self):
        rng = np.random.default_rng(21)
        vocab = [f"w{i}" for i in range(30)] + ["the", "of", "a"]
        seen_names = ["w3", "w7"]
        for _ in range(100):
            t = int(rng.integers(1, 5))
            stored_k = int(rng.integers(1, 8))
            positions = []
            for _ in range(t):
                words = rng.choice(vocab, size=stored_k, replace=False)
                pairs = [(str(w), float(np.round(rng.uniform(-3, 0), 1))) for w in words]
                positions.append(pairs)
            k = int(rng.integers(1, stored_k + 1))
            d = output(positions, stored_k)
            got = extract_candidates(
                d, config(k=k), DEFAULT_STOPLIST, [seen_label(s) for s in seen_names]
            )
            want = brute_force_candidates(
                positions, k, stoplist=DEFAULT_STOPLIST.words, seen=seen_names
            )
            assert list(got.names) == want

    def test_size_bounded_by_k_times_t(self):
        rng = np.random.default_rng(22)
        vocab = [f"w{i}" for i in range(40)]
        for _ in range(50):
            t = int(rng.integers(1, 6))
            stored_k = int(rng.integers(1, 10))
            positions = [
                [(str(w), float(rng.uniform(-3, 0))) for w in rng.choice(vocab, stored_k, replace=False)]
                for _ in range(t)
            ]
            k = int(rng.integers(1, stored_k + 1))
            got = extract_candidates(output(positions, stored_k), config(k=k, stopwords=False))
            assert len(got) <= k * t

    def test_monotone_in_k(self):
        rng = np.random.default_rng(23)
        vocab = [f"w{i}" for i in range(40)]
        for _ in range(50):
            positions = [
                [(str(w), float(rng.uniform(-3, 0))) for w in rng.choice(vocab, 6, replace=False)]
                for _ in range(3)
            ]
            d = output(positions, 6)
            previous: set[str] = set()
            for k in range(1, 7):
                names = set(extract_candidates(d, config(k=k)).names)
                assert previous <= names
                previous = names

    def test_deterministic_across_threads(self):
        rng = np.random.default_rng(24)
        vocab = [f"w{i}" for i in range(40)]
        positions = [
            [(str(w), float(rng.uniform(-3, 0))) for w in rng.choice(vocab, 8, replace=False)]
            for _ in range(4)
        ]
        d = output(positions, 8)
        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(lambda _: extract_candidates(d, config(k=5)).names, range(32)))
        assert len(set(results)) == 1
        assert results[0] == extract_candidates(d, config(k=5)).names


class TestPositionInvariants:
    def test_rejects_unsorted_entries(self):
        with pytest.raises(ValueError):
            PositionTopK((("a", -0.5), ("b", -0.1)))

    def test_rejects_tie_violating_word_order(self):
        with pytest.raises(ValueError):
            PositionTopK((("b", -0.1), ("a", -0.1)))

    def test_rejects_duplicate_words(self):
        with pytest.raises(ValueError):
            PositionTopK((("a", -0.1), ("a", -0.2)))

    def test_position_topk_sorts_ties_lexicographically(self):
        pos = position_topk([("b", -0.1), ("a", -0.1), ("c", -0.05)])
        assert pos.entries == (("c", -0.05), ("a", -0.1), ("b", -0.1))

    def test_tie_order_uses_lowercase_byte_order(self):
        # "Boat" ties with "apple": lowercase order puts apple first.
        pos = position_topk([("Boat", -0.1), ("apple", -0.1)])
        assert pos.entries == (("apple", -0.1), ("Boat", -0.1))
        with pytest.raises(ValueError):
            PositionTopK((("Boat", -0.1), ("apple", -0.1)))

    def test_stored_k_bound_enforced(self):
        with pytest.raises(ValueError):
            DecoderOutput("x", (position_topk([("a", -0.1), ("b", -0.2)]),), stored_k=1)


class TestBestLogprobs:
    def test_takes_maximum_over_positions(self):
        d = output([[("dog", -0.5), ("cat", -0.9)], [("dog", -0.2), ("owl", -0.4)]], 2)
        ranked = best_logprobs(d, 2)
        assert ranked["dog"] == -0.2
        assert ranked["cat"] == -0.9

    def test_respects_k_window(self):
        d = output([[("dog", -0.1), ("cat", -0.9)]], 2)
        assert "cat" not in best_logprobs(d, 1)


class TestTeacherForcingLoss:
    def test_uniform_rows_give_t_log_v(self):
        loss = teacher_forcing_loss(np.zeros((3, 10)), [0, 5, 9])
        assert loss == pytest.approx(3 * math.log(10), abs=1e-5)

    def test_near_one_hot_is_near_zero(self):
        logits = np.full((4, 6), -1e4)
        targets = [2, 0, 5, 1]
        logits[np.arange(4), targets] = 1e4
        assert teacher_forcing_loss(logits, targets) == pytest.approx(0.0, abs=1e-6)

    def test_single_position_hand_value(self):
        # -ln of the softmax complement e / (e + 1).
        loss = teacher_forcing_loss([[1.0, 0.0]], [1])
        assert loss == pytest.approx(-math.log(0.2689414), abs=1e-6)

    def test_non_negative_and_zero_only_in_limit(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            t, v = int(rng.integers(1, 6)), int(rng.integers(2, 12))
            logits = rng.normal(scale=5, size=(t, v))
            targets = rng.integers(0, v, size=t)
            assert teacher_forcing_loss(logits, targets) > 0.0

    def test_row_shift_invariance(self):
        rng = np.random.default_rng(32)
        for _ in range(100):
            logits = rng.normal(scale=5, size=(4, 9))
            targets = rng.integers(0, 9, size=4)
            shifts = rng.uniform(-30, 30, size=(4, 1))
            base = teacher_forcing_loss(logits, targets)
            shifted = teacher_forcing_loss(logits + shifts, targets)
            assert shifted == pytest.approx(base, abs=1e-9)

    def test_error_paths(self):
        with pytest.raises(ShapeMismatchError):
            teacher_forcing_loss(np.zeros((2, 3)), [0])
        with pytest.raises(IndexOutOfRangeError):
            teacher_forcing_loss(np.zeros((2, 3)), [0, 3])
        with pytest.raises(IndexOutOfRangeError):
            teacher_forcing_loss(np.zeros((2, 3)), [-1, 0])
        with pytest.raises(NonFiniteError):
            teacher_forcing_loss(np.array([[np.nan, 0.0]]), [0])
