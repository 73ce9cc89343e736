import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proverbkit.errors import DataError, ValidationError
from proverbkit.sensitivity import (DEFAULT_METRIC_DIFF_MIN, HypothesisRecord,
                                    SensitivityConfig, cosine, count_by_system,
                                    count_unique_pairs, find_unstable_pairs)

unit_vec = st.lists(st.floats(-1, 1), min_size=3, max_size=3).filter(
    lambda v: any(abs(x) > 1e-6 for x in v))


def record(system="sysA", ref="r1", hyp="hyp", scores=None, embedding=(1.0, 0.0)):
    return HypothesisRecord(system_id=system, reference_id=ref, hypothesis=hyp,
                            metric_scores=scores or {"BLEU": 50.0, "CHRFPP": 50.0,
                                                     "COMET": 50.0},
                            embedding=embedding)


REF_EMB = {"r1": (1.0, 0.0), "r2": (0.0, 1.0)}


class TestCosine:
    def test_orthogonal(self):
        assert cosine((1, 0), (0, 1)) == pytest.approx(0.0)

    def test_parallel(self):
        assert cosine((2, 2), (1, 1)) == pytest.approx(1.0)

    def test_antiparallel(self):
        assert cosine((1, 0), (-1, 0)) == pytest.approx(-1.0)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValidationError):
            cosine((0, 0), (1, 0))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            cosine((1, 0), (1, 0, 0))

    @given(unit_vec, unit_vec)
    @settings(max_examples=80)
    def test_bounded_and_symmetric(self, u, v):
        c = cosine(u, v)
        assert -1.0 - 1e-9 <= c <= 1.0 + 1e-9
        assert c == pytest.approx(cosine(v, u))


class TestDefaults:
    def test_per_metric_thresholds(self):
        assert DEFAULT_METRIC_DIFF_MIN == {"COMET": 10.0, "BLEU": 5.0, "CHRFPP": 10.0}

    def test_config_rejects_non_positive(self):
        with pytest.raises(ValidationError):
            SensitivityConfig(cos_diff_max=0.0)
        with pytest.raises(ValidationError):
            SensitivityConfig(metric_diff_min={"BLEU": -1.0})


class TestFindUnstablePairs:
    def test_flags_close_embeddings_far_scores(self):
        records = [
            record("sysA", scores={"BLEU": 60.0, "CHRFPP": 50.0, "COMET": 50.0},
                   embedding=(1.0, 0.01)),
            record("sysB", scores={"BLEU": 40.0, "CHRFPP": 50.0, "COMET": 50.0},
                   embedding=(1.0, 0.02)),
        ]
        flagged = find_unstable_pairs(records, REF_EMB)
        assert [(h1.system_id, h2.system_id, m) for h1, h2, m in flagged] == [
            ("sysA", "sysB", "BLEU")]

    def test_cosine_gap_must_be_strictly_below_threshold(self):
        # embeddings exactly 0.05 apart in cosine must not be flagged
        theta = math.acos(1.0 - 0.05)
        records = [
            record("sysA", scores={"BLEU": 90.0, "CHRFPP": 50.0, "COMET": 50.0},
                   embedding=(1.0, 0.0)),
            record("sysB", scores={"BLEU": 10.0, "CHRFPP": 50.0, "COMET": 50.0},
                   embedding=(math.cos(theta), math.sin(theta))),
        ]
        assert find_unstable_pairs(records, REF_EMB) == []

    def test_metric_gap_must_strictly_exceed_threshold(self):
        records = [
            record("sysA", scores={"BLEU": 55.0, "CHRFPP": 50.0, "COMET": 50.0}),
            record("sysB", scores={"BLEU": 50.0, "CHRFPP": 50.0, "COMET": 50.0}),
        ]
        assert find_unstable_pairs(records, REF_EMB) == []  # delta == 5.0 exactly

    def test_multiple_metrics_flag_same_pair(self):
        records = [
            record("sysA", scores={"BLEU": 90.0, "CHRFPP": 90.0, "COMET": 50.0}),
            record("sysB", scores={"BLEU": 10.0, "CHRFPP": 10.0, "COMET": 50.0}),
        ]
        flagged = find_unstable_pairs(records, REF_EMB)
        assert [m for _, _, m in flagged] == ["BLEU", "CHRFPP"]
        assert count_unique_pairs(flagged) == 1

    def test_pairs_only_compared_within_reference_group(self):
        records = [
            record("sysA", ref="r1", scores={"BLEU": 90.0, "CHRFPP": 50.0, "COMET": 50.0},
                   embedding=(1.0, 0.0)),
            record("sysB", ref="r2", scores={"BLEU": 10.0, "CHRFPP": 50.0, "COMET": 50.0},
                   embedding=(0.0, 1.0)),
        ]
        assert find_unstable_pairs(records, REF_EMB) == []

    def test_missing_embedding_rejected(self):
        broken = HypothesisRecord("sysA", "r1", "h", {"BLEU": 1, "CHRFPP": 1,
                                                      "COMET": 1}, None)
        with pytest.raises(DataError, match="no embedding"):
            find_unstable_pairs([broken], REF_EMB)

    def test_missing_metric_rejected(self):
        broken = record(scores={"BLEU": 1.0})
        with pytest.raises(DataError, match="missing metric"):
            find_unstable_pairs([broken], REF_EMB)

    def test_missing_reference_embedding_rejected(self):
        with pytest.raises(DataError, match="reference embedding"):
            find_unstable_pairs([record(ref="r9")], REF_EMB)

    def test_output_deterministically_sorted(self):
        records = [
            record("sysB", scores={"BLEU": 10.0, "CHRFPP": 50.0, "COMET": 50.0}),
            record("sysA", scores={"BLEU": 90.0, "CHRFPP": 50.0, "COMET": 50.0}),
            record("sysC", scores={"BLEU": 50.0, "CHRFPP": 50.0, "COMET": 50.0}),
        ]
        flagged = find_unstable_pairs(records, REF_EMB)
        labels = [(h1.system_id, h2.system_id, m) for h1, h2, m in flagged]
        assert labels == sorted(labels)
        assert ("sysA", "sysB", "BLEU") in labels


class TestCounters:
    def make_flagged(self):
        a = record("sysA", scores={"BLEU": 90.0, "CHRFPP": 90.0, "COMET": 50.0})
        b = record("sysB", scores={"BLEU": 10.0, "CHRFPP": 10.0, "COMET": 50.0})
        return find_unstable_pairs([a, b], REF_EMB)

    def test_count_by_system(self):
        assert count_by_system(self.make_flagged()) == {"sysA": 2, "sysB": 2}

    def test_count_unique_pairs_deduplicates_metrics(self):
        flagged = self.make_flagged()
        assert len(flagged) == 2
        assert count_unique_pairs(flagged) == 1

    def test_empty(self):
        assert count_by_system([]) == {}
        assert count_unique_pairs([]) == 0
