import functools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.core.phonemes import PhonemeSeq, parse_xsampa
from src.metrics.alignment import EditOp, edit_distance
from src.metrics.rates import per, ser, wer
from src.metrics.tasks import (
    HomographCase,
    PlrCase,
    PolyphoneCase,
    homograph_accuracy,
    plr_eval,
    polyphone_accuracy,
    project_spans,
)
from src.utils.exceptions import MetricError

tokens = st.lists(st.sampled_from(["a", "b", "c", '"a']), max_size=7)


def brute_force_distance(ref, hyp):
    @functools.lru_cache(maxsize=None)
    def d(i, j):
        if i == 0 or j == 0:
            return i + j
        return min(d(i - 1, j - 1) + (ref[i - 1] != hyp[j - 1]), d(i - 1, j) + 1, d(i, j - 1) + 1)
    return d(len(ref), len(hyp))


def seq(text):
    return parse_xsampa(text)


class TestEditDistance:
    def test_known_distances(self):
        assert edit_distance("kitten", "sitting").distance == 3
        assert edit_distance([], ["a", "b"]).distance == 2
        assert edit_distance(["a"], []).distance == 1

    def test_stress_variants_differ(self):
        assert edit_distance(['"a'], ["a"]).distance == 1

    @given(tokens, tokens)
    def test_matches_brute_force(self, ref, hyp):
        assert edit_distance(ref, hyp).distance == brute_force_distance(tuple(ref), tuple(hyp))

    @given(tokens, tokens)
    def test_symmetric(self, a, b):
        assert edit_distance(a, b).distance == edit_distance(b, a).distance

    @given(tokens, tokens, tokens)
    def test_triangle_inequality(self, a, b, c):
        assert edit_distance(a, c).distance <= edit_distance(a, b).distance + edit_distance(b, c).distance

    @given(tokens, tokens)
    def test_ops_account_for_distance(self, ref, hyp):
        alignment = edit_distance(ref, hyp)
        edits = sum(alignment.count(op) for op in (EditOp.SUBSTITUTE, EditOp.DELETE, EditOp.INSERT))
        assert edits == alignment.distance
        assert sum(1 for a in alignment.ops if a.consumes_ref) == len(ref)
        assert sum(1 for a in alignment.ops if a.op != EditOp.DELETE) == len(hyp)

    def test_tie_prefers_substitution(self):
        ops = [a.op for a in edit_distance(["a"], ["b"]).ops]
        assert ops == [EditOp.SUBSTITUTE]

    @given(tokens, tokens)
    def test_projection_is_monotone(self, ref, hyp):
        proj = edit_distance(ref, hyp).project(len(ref), len(hyp))
        assert proj[0] == 0 and proj[-1] == len(hyp)
        assert all(x <= y for x, y in zip(proj, proj[1:]))


class TestRates:
    def test_per_is_micro_averaged(self):
        pairs = [(seq("a b c d"), seq("a b c x")), (seq("a b"), seq("a b"))]
        assert per(pairs) == pytest.approx(1 / 6)

    def test_boundaries_count(self):
        assert per([(seq("a <wb> b"), seq("a b"))]) == pytest.approx(1 / 3)

    def test_per_can_exceed_one(self):
        assert per([(seq("a"), seq("b c d"))]) == pytest.approx(3.0)

    def test_per_undefined_for_empty_reference(self):
        with pytest.raises(MetricError):
            per([])

    def test_wer_and_ser(self):
        pairs = [(seq("a"), seq("a")), (seq("a b"), seq("a c")), (seq("a"), seq("b")), (seq("c"), seq("c"))]
        assert wer(pairs) == 0.5
        assert ser(pairs) == 0.5
        assert ser([(seq("a <wb> b"), seq("a b"))]) == 1.0
        with pytest.raises(MetricError):
            wer([])

    def test_identity_scores_zero(self):
        pairs = [(seq("a <wb> b"), seq("a <wb> b"))]
        assert (per(pairs), wer(pairs), ser(pairs)) == (0.0, 0.0, 0.0)


class TestTasks:
    def test_homograph_accuracy(self):
        ref = seq("r i d <wb> b U k")
        cases = [
            HomographCase(ref, seq("r i d <wb> b U k"), 0),
            HomographCase(ref, seq("r E d <wb> b U k"), 0),
            HomographCase(ref, seq("r i d b U k"), 0),
        ]
        result = homograph_accuracy(cases)
        assert (result.accuracy, result.evaluated, result.skipped) == (0.5, 2, 1)

    def test_homograph_no_cases(self):
        assert homograph_accuracy([]).accuracy == 0.0

    def test_project_spans_with_insertion(self):
        ref = seq("a b c")
        hyp = seq("a x b c")
        assert project_spans(ref, hyp, {0: (0, 1), 1: (1, 2), 2: (2, 3)}) == {0: (0, 2), 1: (2, 3), 2: (3, 4)}

    def test_polyphone_accuracy(self):
        ref = seq("tS a N <wb> x a N")
        spans = {0: (0, 3), 1: (4, 7)}
        good = PolyphoneCase(ref, ref, spans, [1])
        bad = PolyphoneCase(ref, seq("tS a N <wb> S i N"), spans, [1])
        result = polyphone_accuracy([good, bad])
        assert result.accuracy_all_chars == pytest.approx(3 / 4)
        assert result.accuracy_polyphones == pytest.approx(1 / 2)
        assert (result.evaluated, result.skipped) == (2, 0)

    def test_polyphone_skips_degenerate(self):
        ref = seq("a")
        result = polyphone_accuracy([PolyphoneCase(ref, PhonemeSeq.lenient(["<wb>"]), {0: (0, 1)}, [0])])
        assert (result.evaluated, result.skipped) == (0, 1)

    def test_plr_eval(self):
        ref = seq("l e z <wb> a m i")
        cases = [
            PlrCase(ref, seq("l e z <wb> a m i"), [0]),
            PlrCase(ref, seq("l e <wb> a m i"), [0]),
            PlrCase(ref, seq("l e a m i"), [0]),
        ]
        result = plr_eval(cases)
        assert result.per_affected == pytest.approx(1 / 6)
        assert result.wer_affected == pytest.approx(1 / 2)
        assert (result.evaluated, result.skipped, result.affected_words) == (2, 1, 2)
        assert result.per_whole == pytest.approx(3 / 21)
