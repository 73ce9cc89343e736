import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proverbkit.contamination import (ProbeSample, build_probe_inputs,
                                      contamination_report, gamma, run_probe,
                                      run_probes, split_prefix)
from proverbkit.errors import DataError, ValidationError


def sample(**kwargs):
    defaults = dict(language="de", context="ctx line", tau=0.5,
                    sentence="one two three four five six")
    defaults.update(kwargs)
    return ProbeSample(**defaults)


class TestSplitPrefix:
    def test_even_split(self):
        assert split_prefix("a b c d", 0.5) == ("a b", "c d")

    def test_cut_floors(self):
        assert split_prefix("a b c d e", 0.5) == ("a b", "c d e")

    def test_low_tau_keeps_at_least_one_word(self):
        assert split_prefix("a b c", 0.01) == ("a", "b c")

    def test_high_tau_keeps_suffix_non_empty(self):
        assert split_prefix("a b c", 0.99) == ("a b", "c")

    def test_tau_bounds(self):
        for tau in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(ValidationError):
                split_prefix("a b", tau)

    def test_single_word_rejected(self):
        with pytest.raises(DataError):
            split_prefix("alone", 0.5)

    @given(st.lists(st.sampled_from(["aa", "bb", "cc"]), min_size=2, max_size=12),
           st.floats(0.01, 0.99))
    @settings(max_examples=100)
    def test_partition_invariants(self, words, tau):
        prefix, suffix = split_prefix(" ".join(words), tau)
        assert prefix and suffix
        assert (prefix + " " + suffix).split() == words


class TestProbeInputs:
    def test_context_prepended_on_own_line(self):
        assert build_probe_inputs("before.", "a b") == ("before.\na b", "a b")

    def test_blank_context_collapses(self):
        assert build_probe_inputs("   ", "a b") == ("a b", "a b")


def lcs_oracle(a, b):
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    for r in range(len(short), 0, -1):
        for combo in itertools.combinations(short, r):
            it = iter(long_)
            if all(c in it for c in combo):
                return r
    return 0


class TestGamma:
    def test_full_gain(self):
        s = sample(suffix="c d", completion_with_ctx="c d", completion_no_ctx="x y")
        assert gamma(s) == 1.0

    def test_partial_gain(self):
        s = sample(suffix="c d e f", completion_with_ctx="c d q r",
                   completion_no_ctx="c q r s")
        assert gamma(s) == pytest.approx((2 - 1) / 4)

    def test_clamped_at_zero(self):
        s = sample(suffix="c d", completion_with_ctx="x y", completion_no_ctx="c d")
        assert gamma(s) == 0.0

    def test_character_unit(self):
        s = sample(suffix="cd", completion_with_ctx="cd", completion_no_ctx="zz")
        assert gamma(s, lcs_unit="character") == 1.0

    def test_unknown_unit_rejected(self):
        with pytest.raises(ValidationError):
            gamma(sample(suffix="a"), lcs_unit="byte")

    def test_empty_suffix_rejected(self):
        with pytest.raises(DataError):
            gamma(sample(suffix=""))

    @given(st.lists(st.sampled_from("ab"), min_size=1, max_size=6).map(" ".join),
           st.lists(st.sampled_from("ab"), min_size=0, max_size=6).map(" ".join),
           st.lists(st.sampled_from("ab"), min_size=0, max_size=6).map(" ".join))
    @settings(max_examples=100)
    def test_matches_straight_line_oracle(self, suffix, with_ctx, no_ctx):
        s = sample(suffix=suffix, completion_with_ctx=with_ctx,
                   completion_no_ctx=no_ctx)
        expected = max(0.0, (lcs_oracle(with_ctx.split(), suffix.split())
                             - lcs_oracle(no_ctx.split(), suffix.split()))
                       / len(suffix.split()))
        value = gamma(s)
        assert value == pytest.approx(expected)
        assert 0.0 <= value <= 1.0


class TestRunProbe:
    def test_fills_all_fields(self, mock_client):
        probed = run_probe(sample(), mock_client())
        assert probed.prefix and probed.suffix
        assert probed.completion_with_ctx and probed.completion_no_ctx
        assert 0.0 <= probed.gamma <= 1.0

    def test_two_distinct_completion_calls(self, mock_client, stub_transport):
        from proverbkit.modelclient import ModelClient, ModelClientConfig
        transport = stub_transport([{"text": "x"}])
        client = ModelClient(ModelClientConfig(endpoint="stub:"), transport=transport)
        run_probe(sample(), client)
        prefixes = [r["payload"]["prefix"] for r in transport.requests]
        assert len(prefixes) == 2
        assert prefixes[0].startswith("ctx line\n")
        assert prefixes[1] == prefixes[0].split("\n", 1)[1]

    def test_run_probes_order_and_determinism(self, mock_client):
        samples = [sample(sentence=f"w{i} a b c d e") for i in range(5)]
        first = run_probes(samples, mock_client())
        second = run_probes(samples, mock_client())
        assert first == second
        assert [s.sentence for s in first] == [s.sentence for s in samples]


class TestReport:
    def test_percentage_rounding_and_strict_cutoff(self):
        samples = [sample(language="de", gamma=g)
                   for g in (0.95, 0.91, 0.9, 0.2, 0.0, 1.0)]
        # 0.9 itself is not above the cutoff: 3/6 hits
        assert contamination_report(samples, cutoff=0.9) == {"de": 50.0}

    def test_one_decimal_rounding(self):
        samples = [sample(language="en", gamma=1.0)] + [
            sample(language="en", gamma=0.0)] * 2
        assert contamination_report(samples) == {"en": 33.3}

    def test_groups_by_language_sorted(self):
        samples = [sample(language="zh", gamma=1.0), sample(language="bn", gamma=0.0)]
        assert list(contamination_report(samples)) == ["bn", "zh"]

    def test_unscored_language_omitted_with_warning(self, caplog):
        samples = [sample(language="de", gamma=None), sample(language="en", gamma=1.0)]
        with caplog.at_level("WARNING"):
            report = contamination_report(samples)
        assert report == {"en": 100.0}
        assert "de" in caplog.text
