import pytest

from proverbkit.errors import ValidationError
from proverbkit.judge import (JudgeItem, PositionMap, Verdict, assign_positions,
                              build_judge_prompt, judge_items, judge_pair,
                              tally_winrates, tally_winrates_excluding_ties)
from proverbkit.modelclient import ModelClient, ModelClientConfig


def item(seed=0, **kwargs):
    defaults = dict(source="Satz", reference="sentence", context_before="b",
                    context_after="a", hyp_model_x="from x", hyp_model_y="from y")
    defaults.update(kwargs)
    return JudgeItem(seed=seed, **defaults)


def stub_client(stub_transport, replies):
    return ModelClient(ModelClientConfig(endpoint="stub:"),
                       transport=stub_transport(replies))


class TestPositionMap:
    def test_resolution_table(self):
        x_first = PositionMap(x_is_a=True)
        assert (x_first.resolve("A"), x_first.resolve("B"), x_first.resolve("tie")) == \
            ("X", "Y", "tie")
        y_first = PositionMap(x_is_a=False)
        assert (y_first.resolve("A"), y_first.resolve("B"), y_first.resolve("tie")) == \
            ("Y", "X", "tie")

    def test_verdict_consistency_enforced(self):
        with pytest.raises(ValidationError, match="inconsistent"):
            Verdict(raw="A", resolved="Y", position_map=PositionMap(x_is_a=True))
        with pytest.raises(ValidationError, match="bad raw"):
            Verdict(raw="C", resolved="X", position_map=PositionMap(x_is_a=True))


class TestAssignPositions:
    def test_deterministic_per_seed(self):
        assert assign_positions(item(seed=42)) == assign_positions(item(seed=42))

    def test_varies_across_seeds(self):
        flips = {assign_positions(item(seed=s)).x_is_a for s in range(50)}
        assert flips == {True, False}

    def test_independent_of_content(self):
        a = assign_positions(item(seed=3, source="one thing"))
        b = assign_positions(item(seed=3, source="another"))
        assert a == b


class TestJudgeItem:
    def test_empty_hypotheses_rejected(self):
        with pytest.raises(ValidationError):
            item(hyp_model_x="")


class TestBuildPrompt:
    def test_positions_respected(self):
        it = item()
        swapped = build_judge_prompt(it, PositionMap(x_is_a=False))[1].content
        assert "Candidate A: from y" in swapped
        assert "Candidate B: from x" in swapped

    def test_contains_context_and_reference(self):
        body = build_judge_prompt(item(), PositionMap(x_is_a=True))[1].content
        for needle in ("Context before: b", "Context after: a",
                       "Source: Satz", "Reference translation: sentence"):
            assert needle in body

    def test_blank_context_shows_placeholder(self):
        body = build_judge_prompt(item(context_before="", context_after=""),
                                  PositionMap(x_is_a=True))[1].content
        assert "Context before: (none)" in body


class TestJudgePair:
    def test_verdict_resolved_through_positions(self, stub_transport):
        it = item(seed=1)
        verdict = judge_pair(it, stub_client(stub_transport, [{"text": "A"}]))
        assert verdict.raw == "A"
        assert verdict.resolved == ("X" if assign_positions(it).x_is_a else "Y")

    def test_tie_passthrough(self, stub_transport):
        verdict = judge_pair(item(), stub_client(stub_transport, [{"text": "tie"}]))
        assert verdict.resolved == "tie"

    def test_retry_once_then_success(self, stub_transport):
        client = stub_client(stub_transport, [{"text": "the first one"}, {"text": "B"}])
        assert judge_pair(item(), client).raw == "B"

    def test_two_bad_replies_invalid(self, stub_transport):
        client = stub_client(stub_transport, [{"text": "hmm"}])
        assert judge_pair(item(), client) is None

    def test_judge_items_keeps_order(self, stub_transport):
        items = [item(seed=s, source=f"s{s}") for s in range(6)]
        verdicts = judge_items(items, stub_client(stub_transport, [{"text": "tie"}]))
        assert len(verdicts) == 6
        assert all(v.resolved == "tie" for v in verdicts)


def make_verdicts(resolved_list):
    out = []
    for resolved in resolved_list:
        pm = PositionMap(x_is_a=True)
        raw = {"X": "A", "Y": "B", "tie": "tie"}[resolved]
        out.append(Verdict(raw=raw, resolved=resolved, position_map=pm))
    return out


class TestTallies:
    def test_tie_inclusive_rates(self):
        win_x, win_y, tie = tally_winrates(make_verdicts(["X", "X", "Y", "tie"]))
        assert (win_x, win_y, tie) == (0.5, 0.25, 0.25)

    def test_rates_sum_to_one(self):
        win_x, win_y, tie = tally_winrates(make_verdicts(["X", "Y", "tie", "tie", "Y"]))
        assert win_x + win_y + tie == pytest.approx(1.0, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            tally_winrates([])

    def test_tie_excluded_variant(self):
        ex_x, ex_y = tally_winrates_excluding_ties(make_verdicts(["X", "X", "Y", "tie"]))
        assert (ex_x, ex_y) == (2 / 3, 1 / 3)

    def test_all_ties_excluded_variant(self):
        assert tally_winrates_excluding_ties(make_verdicts(["tie"])) == (0.0, 0.0)
