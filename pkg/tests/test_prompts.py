import pytest

from proverbkit.corpus import ContextWindow, SentencePair
from proverbkit.errors import ValidationError
from proverbkit.prompts import (GOOD_MORNING, MAX_CONTEXT_ROUNDS, ChatTurn,
                                PromptRequest, PromptTemplate, build_prompt)


def make_window(n_prior, n_following=0):
    prior = tuple(SentencePair("d", i, f"quelle {i}", f"source {i}", "de", "en")
                  for i in range(n_prior))
    following = tuple(SentencePair("d", 100 + i, f"nach {i}", f"after {i}", "de", "en")
                      for i in range(n_following))
    return ContextWindow(prior=prior, following=following)


def request(template, **kwargs):
    defaults = dict(source="Übung macht den Meister.", src_lang="de", tgt_lang="en")
    defaults.update(kwargs)
    return PromptRequest(template=template, **defaults)


class TestChatTurn:
    def test_role_validation(self):
        with pytest.raises(ValidationError):
            ChatTurn("tool", "x")

    def test_user_turn_needs_content(self):
        with pytest.raises(ValidationError):
            ChatTurn("user", "")


class TestRequestInvariants:
    def test_explanation_requires_explanation(self):
        with pytest.raises(ValidationError):
            request(PromptTemplate.EXPLANATION)

    def test_context_templates_require_context(self):
        for template in (PromptTemplate.DIALOGUE_CONTEXT, PromptTemplate.CONCAT_CONTEXT):
            with pytest.raises(ValidationError):
                request(template)


class TestBuildPrompt:
    def test_every_template_ends_with_user_source(self):
        requests = [
            request(PromptTemplate.ZERO_SHOT),
            request(PromptTemplate.ONE_SHOT),
            request(PromptTemplate.EXPLANATION, proverb_explanation="practice"),
            request(PromptTemplate.DIALOGUE_CONTEXT, context=make_window(3)),
            request(PromptTemplate.CONCAT_CONTEXT, context=make_window(3)),
        ]
        for req in requests:
            turns = build_prompt(req)
            assert turns[0].role == "system"
            assert turns[-1] == ChatTurn("user", req.source)

    def test_zero_shot_shape(self):
        turns = build_prompt(request(PromptTemplate.ZERO_SHOT))
        assert [t.role for t in turns] == ["system", "user"]
        assert "German" in turns[0].content and "English" in turns[0].content

    def test_one_shot_uses_greeting_round(self):
        turns = build_prompt(request(PromptTemplate.ONE_SHOT))
        assert [t.role for t in turns] == ["system", "user", "assistant", "user"]
        assert turns[1].content == GOOD_MORNING["de"]
        assert turns[2].content == GOOD_MORNING["en"]

    def test_one_shot_custom_greetings(self):
        req = request(PromptTemplate.ONE_SHOT, src_lang="fr", tgt_lang="en",
                      greetings={"fr": "Bonjour", "en": "Good morning"})
        assert build_prompt(req)[1].content == "Bonjour"

    def test_one_shot_unknown_language_raises(self):
        with pytest.raises(ValidationError, match="greeting"):
            build_prompt(request(PromptTemplate.ONE_SHOT, src_lang="fr"))

    def test_explanation_lands_in_system_turn(self):
        req = request(PromptTemplate.EXPLANATION, proverb_explanation="skill from practice")
        turns = build_prompt(req)
        assert [t.role for t in turns] == ["system", "user"]
        assert "skill from practice" in turns[0].content

    def test_dialogue_context_one_round_per_prior_pair(self):
        req = request(PromptTemplate.DIALOGUE_CONTEXT, context=make_window(3, 2))
        turns = build_prompt(req)
        assert [t.role for t in turns] == ["system"] + ["user", "assistant"] * 3 + ["user"]
        assert turns[1].content == "quelle 0"
        assert turns[2].content == "source 0"

    def test_dialogue_context_capped_at_five_rounds(self):
        req = request(PromptTemplate.DIALOGUE_CONTEXT, context=make_window(9))
        turns = build_prompt(req)
        assert len(turns) == 1 + 2 * MAX_CONTEXT_ROUNDS + 1
        # the most recent rounds are kept
        assert turns[1].content == "quelle 4"

    def test_following_context_never_used(self):
        req = request(PromptTemplate.DIALOGUE_CONTEXT, context=make_window(1, 4))
        contents = " ".join(t.content for t in build_prompt(req))
        assert "nach" not in contents and "after" not in contents

    def test_concat_context_single_round(self):
        req = request(PromptTemplate.CONCAT_CONTEXT, context=make_window(3))
        turns = build_prompt(req)
        assert [t.role for t in turns] == ["system", "user", "assistant", "user"]
        assert turns[1].content == "quelle 0\nquelle 1\nquelle 2"
        assert turns[2].content == "source 0\nsource 1\nsource 2"

    def test_concat_context_empty_prior_degrades_to_zero_shot_shape(self):
        req = request(PromptTemplate.CONCAT_CONTEXT, context=make_window(0))
        assert [t.role for t in build_prompt(req)] == ["system", "user"]

    def test_language_names_resolved_from_codes(self):
        turns = build_prompt(request(PromptTemplate.ZERO_SHOT, src_lang="zh", tgt_lang="bn"))
        assert "Chinese" in turns[0].content and "Bengali" in turns[0].content
