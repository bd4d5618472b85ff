"""Questionnaire scoring against an independent layout walker.

The oracle lays out slots by walking groups with a running cursor and
scores by summing factors directly, so any indexing slip in the library
shows up as a mismatch rather than a shared bug.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bronchial_dx.errors import ConfigError, ValidationError
from bronchial_dx.questionnaire import (
    Question,
    QuestionGroup,
    QuestionnaireDefinition,
    compute_score,
    compute_subscores,
    definition_from_dict,
    expand_response_matrix,
    load_core_definition,
    load_professional_definition,
    normalize_responses,
    threshold_classify,
)


def walk_layout(definition):
    """Oracle: slot ranges assigned by a single left-to-right cursor."""
    positions = {}
    cursor = 0
    for group in definition.groups:
        for question in group.questions:
            positions[question.id] = (cursor, cursor + group.priority_factor)
            cursor += group.priority_factor
    return positions, cursor


def oracle_score(definition, yes_ids):
    total = 0
    for group in definition.groups:
        for question in group.questions:
            if question.id in yes_ids:
                total += group.priority_factor
    return total


CORE = load_core_definition()
PROFESSIONAL = load_professional_definition()


def effective_yes(definition, yes_ids):
    """Yes answers that survive parent gating, per the oracle."""
    out = set()
    for question, _ in definition.iter_questions():
        qid = question.id
        if qid not in yes_ids:
            continue
        ok = True
        cursor = question.parent
        while cursor is not None:
            if cursor not in yes_ids:
                ok = False
                break
            cursor = definition.question(cursor).parent
        if ok:
            out.add(qid)
    return out


class TestShippedDefinitions:
    def test_core_capacity_is_100(self):
        assert CORE.capacity == 100

    def test_professional_capacity_is_50(self):
        assert PROFESSIONAL.capacity == 50

    def test_core_shape(self):
        factors = [g.priority_factor for g in CORE.groups]
        sizes = [g.size for g in CORE.groups]
        assert factors == [6, 5, 4, 3, 2, 1]
        assert sizes == [6, 5, 6, 3, 2, 2]
        assert len(CORE.question_ids()) == 24

    def test_core_ids_are_a_through_x(self):
        expected = [chr(ord("A") + i) for i in range(24)]
        assert list(CORE.question_ids()) == expected

    def test_professional_groups_are_singletons(self):
        assert [g.size for g in PROFESSIONAL.groups] == [1] * 11
        factors = [g.priority_factor for g in PROFESSIONAL.groups]
        assert factors == [8, 4, 4, 3, 3, 3, 2, 5, 5, 5, 8]

    def test_follow_ups_gate_on_first_question(self):
        for suffix in "abcdef":
            assert PROFESSIONAL.question(f"prof-1{suffix}").parent == "prof-1"

    def test_positions_match_layout_walker(self):
        for definition in (CORE, PROFESSIONAL):
            oracle, total = walk_layout(definition)
            assert definition.positions() == oracle
            assert definition.capacity == total

    def test_frozen_position_examples(self):
        # Third question of the second core group: offset 36 + 5*2.
        assert CORE.position_of("I") == (46, 51)
        assert CORE.position_of("A") == (0, 6)
        assert CORE.position_of("X") == (99, 100)
        assert PROFESSIONAL.position_of("prof-1") == (0, 8)
        assert PROFESSIONAL.position_of("prof-5") == (42, 50)

    def test_slices_tile_the_vector(self):
        for definition in (CORE, PROFESSIONAL):
            covered = np.zeros(definition.capacity, dtype=int)
            for start, stop in definition.positions().values():
                covered[start:stop] += 1
            assert (covered == 1).all()


class TestScoring:
    def test_empty_is_zero(self):
        assert compute_score(CORE, {}) == 0

    def test_all_yes_hits_capacity(self):
        all_yes = {qid: True for qid in CORE.question_ids()}
        assert compute_score(CORE, all_yes) == 100
        all_yes_prof = {qid: True for qid in PROFESSIONAL.question_ids()}
        assert compute_score(PROFESSIONAL, all_yes_prof) == 50

    def test_first_group_only(self):
        responses = {qid: True for qid in "ABCDEF"}
        assert compute_score(CORE, responses) == 36

    def test_no_values_are_ignored(self):
        assert compute_score(CORE, {"A": True, "B": False}) == 6

    def test_unknown_id_rejected(self):
        with pytest.raises(ValidationError):
            compute_score(CORE, {"ZZ": True})

    def test_non_strict_normalization_drops_unknown(self):
        answers = normalize_responses(CORE, {"A": True, "prof-1": True}, strict=False)
        assert answers["A"] is True
        assert "prof-1" not in answers

    def test_gated_question_needs_parent(self):
        alone = compute_score(PROFESSIONAL, {"prof-1a": True})
        assert alone == 0
        with_parent = compute_score(PROFESSIONAL, {"prof-1": True, "prof-1a": True})
        assert with_parent == 12

    @given(
        st.sets(st.sampled_from(sorted(CORE.question_ids()))),
    )
    def test_score_matches_oracle(self, yes_ids):
        responses = {qid: True for qid in yes_ids}
        assert compute_score(CORE, responses) == oracle_score(CORE, yes_ids)

    @given(
        st.sets(st.sampled_from(sorted(PROFESSIONAL.question_ids()))),
    )
    def test_gating_matches_oracle(self, yes_ids):
        responses = {qid: True for qid in yes_ids}
        survivors = effective_yes(PROFESSIONAL, yes_ids)
        assert compute_score(PROFESSIONAL, responses) == oracle_score(PROFESSIONAL, survivors)

    @given(
        st.sets(st.sampled_from(sorted(CORE.question_ids()))),
        st.sampled_from(sorted(CORE.question_ids())),
    )
    def test_adding_a_yes_never_lowers_the_score(self, yes_ids, extra):
        base = compute_score(CORE, {qid: True for qid in yes_ids})
        bumped = compute_score(CORE, {qid: True for qid in yes_ids | {extra}})
        assert bumped >= base


class TestResponseMatrix:
    @given(st.sets(st.sampled_from(sorted(CORE.question_ids()))))
    def test_vector_sum_equals_score(self, yes_ids):
        responses = {qid: True for qid in yes_ids}
        vec = expand_response_matrix(CORE, responses)
        assert vec.shape == (100,)
        assert vec.sum() == compute_score(CORE, responses)

    @given(st.sets(st.sampled_from(sorted(PROFESSIONAL.question_ids()))))
    def test_professional_vector_sum_equals_score(self, yes_ids):
        responses = {qid: True for qid in yes_ids}
        vec = expand_response_matrix(PROFESSIONAL, responses)
        assert vec.shape == (50,)
        assert vec.sum() == compute_score(PROFESSIONAL, responses)

    def test_runs_are_contiguous_and_question_sized(self):
        vec = expand_response_matrix(CORE, {"I": True})
        assert vec[46:51].tolist() == [1.0] * 5
        assert vec.sum() == 5

    @given(st.sets(st.sampled_from(sorted(CORE.question_ids()))))
    def test_each_slice_is_constant(self, yes_ids):
        vec = expand_response_matrix(CORE, {qid: True for qid in yes_ids})
        for qid, (start, stop) in CORE.positions().items():
            run = set(vec[start:stop].tolist())
            assert run == ({1.0} if qid in yes_ids else {0.0})


class TestThresholdClassify:
    def test_boundary_is_positive(self):
        assert threshold_classify(50, 0.5, 100) is True
        assert threshold_classify(49, 0.5, 100) is False

    def test_extremes(self):
        assert threshold_classify(0, 0.0, 100) is True
        assert threshold_classify(99, 1.0, 100) is False
        assert threshold_classify(100, 1.0, 100) is True

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValidationError):
            threshold_classify(10, 1.5, 100)
        with pytest.raises(ValidationError):
            threshold_classify(10, 0.5, 0)


class TestSubscores:
    def test_shipped_table_maxima(self):
        subs = compute_subscores([CORE, PROFESSIONAL], {})
        maxima = {name: s.maximum for name, s in subs.items()}
        assert maxima == {
            "bronchial_obstruction": 20,
            "pollutant_effect": 10,
            "nocturnal": 13,
            "exertional": 10,
        }

    def test_values_track_members(self):
        responses = {"E": True, "K": True, "prof-3": True}
        subs = compute_subscores([CORE, PROFESSIONAL], responses)
        assert subs["bronchial_obstruction"].value == 6 + 5 + 5
        assert subs["pollutant_effect"].value == 0

    def test_fraction_never_exceeds_one(self):
        responses = {qid: True for qid in CORE.question_ids()}
        responses.update({qid: True for qid in PROFESSIONAL.question_ids()})
        subs = compute_subscores([CORE, PROFESSIONAL], responses)
        for sub in subs.values():
            assert sub.value == sub.maximum
            assert sub.fraction == 1.0

    def test_gating_applies_inside_subscores(self):
        # prof-1e only counts when prof-1 is yes.
        subs = compute_subscores([CORE, PROFESSIONAL], {"prof-1e": True})
        assert subs["nocturnal"].value == 0
        subs = compute_subscores([CORE, PROFESSIONAL], {"prof-1": True, "prof-1e": True})
        assert subs["nocturnal"].value == 3

    def test_unknown_member_rejected(self):
        with pytest.raises(ConfigError):
            compute_subscores([CORE], {}, {"broken": ["A", "nope"]})

    def test_unknown_response_rejected(self):
        with pytest.raises(ValidationError):
            compute_subscores([CORE, PROFESSIONAL], {"mystery": True})


class TestDefinitionValidation:
    def make_payload(self):
        return {
            "name": "tiny",
            "version": 1,
            "groups": [
                {
                    "priority_factor": 2,
                    "questions": [
                        {"id": "a", "text": "first?"},
                        {"id": "b", "text": "second?", "parent": "a"},
                    ],
                }
            ],
        }

    def test_round_trip(self):
        definition = definition_from_dict(self.make_payload())
        assert definition.capacity == 4
        assert definition.position_of("b") == (2, 4)

    def test_duplicate_id_rejected(self):
        payload = self.make_payload()
        payload["groups"][0]["questions"][1]["id"] = "a"
        with pytest.raises(ConfigError):
            definition_from_dict(payload)

    def test_zero_factor_rejected(self):
        payload = self.make_payload()
        payload["groups"][0]["priority_factor"] = 0
        with pytest.raises(ConfigError):
            definition_from_dict(payload)

    def test_unknown_parent_rejected(self):
        payload = self.make_payload()
        payload["groups"][0]["questions"][1]["parent"] = "ghost"
        with pytest.raises(ConfigError):
            definition_from_dict(payload)

    def test_gating_cycle_rejected(self):
        payload = self.make_payload()
        payload["groups"][0]["questions"][0]["parent"] = "b"
        with pytest.raises(ConfigError):
            definition_from_dict(payload)

    def test_empty_group_rejected(self):
        payload = self.make_payload()
        payload["groups"][0]["questions"] = []
        with pytest.raises(ConfigError):
            definition_from_dict(payload)

    def test_missing_key_rejected(self):
        payload = self.make_payload()
        del payload["name"]
        with pytest.raises(ConfigError):
            definition_from_dict(payload)
