from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppanalyze.extraction.prompts import TASK_SHAPES, TaskKind
from ppanalyze.extraction.repair import ParseError, repair_and_parse

DATA = TASK_SHAPES[TaskKind.DATA_RECOGNITION]
PARTY = TASK_SHAPES[TaskKind.PARTY_RECOGNITION]
ACTION = TASK_SHAPES[TaskKind.ACTION_RECOGNITION]
CLASSIFY = TASK_SHAPES[TaskKind.DATA_CLASSIFICATION]
RELATION = TASK_SHAPES[TaskKind.RELATION_RECOGNITION]


class TestProseStrip:
    def test_leading_prose_stripped(self):
        items, trace = repair_and_parse('Here are the entities: ["email address"]', DATA)
        assert items == [{"text": "email address"}]
        assert "prose_strip" in trace.stages

    def test_code_fence_stripped(self):
        raw = '```json\n{"entities": [{"text": "ip address"}]}\n```'
        items, trace = repair_and_parse(raw, DATA)
        assert items == [{"text": "ip address"}]
        assert "prose_strip" in trace.stages

    def test_trailing_prose_stripped(self):
        raw = '{"entities": [{"text": "name"}]} Hope that helps!'
        items, trace = repair_and_parse(raw, DATA)
        assert items == [{"text": "name"}]


class TestStructuralRepair:
    def test_single_quotes_trailing_comma_and_synonym_key(self):
        # worked stage-by-stage: extract {...}; repair quotes and the
        # trailing comma; map data_entities -> entities; unwrap
        items, trace = repair_and_parse("{'data_entities': ['email',]}", DATA)
        assert items == [{"text": "email"}]
        assert "structural_repair" in trace.stages
        assert "key_normalization" in trace.stages

    def test_unclosed_bracket(self):
        items, _ = repair_and_parse('{"entities": [{"text": "email"', DATA)
        assert items == [{"text": "email"}]

    def test_bare_keys_and_values(self):
        items, _ = repair_and_parse("{entities: [{text: email address}]}", DATA)
        assert items == [{"text": "email address"}]

    def test_python_literals(self):
        items, _ = repair_and_parse("{'entities': None}", DATA)
        assert items == []


class TestKeyNormalization:
    def test_case_insensitive_keys(self):
        items, _ = repair_and_parse('{"Entities": [{"Text": "email"}]}', DATA)
        assert items == [{"text": "email"}]

    def test_enum_synonyms(self):
        items, _ = repair_and_parse(
            '{"actions": [{"text": "collect", "type": "Collection-Use"}]}', ACTION)
        assert items == [{"text": "collect", "subtype": "collection_use"}]

    def test_mapping_answer_for_classification(self):
        items, _ = repair_and_parse('{"email address": "EmailAddress"}', CLASSIFY)
        assert items == [{"entity_text": "email address", "term": "EmailAddress"}]

    def test_positional_tuples_for_relations(self):
        items, _ = repair_and_parse('[["a0", "e0", "has data"]]', RELATION)
        assert items == [{"id1": "a0", "id2": "e0", "type": "HAS_DATA"}]

    def test_missing_required_field_drops_item(self):
        items, trace = repair_and_parse('{"actions": [{"text": "collect"}]}', ACTION)
        assert items == []
        assert trace.dropped_items

    def test_unknown_required_enum_drops_item(self):
        items, trace = repair_and_parse(
            '{"actions": [{"text": "collect", "subtype": "martian"}]}', ACTION)
        assert items == []
        assert "martian" in trace.dropped_items[0][1]

    def test_unknown_optional_enum_keeps_item_without_field(self):
        items, _ = repair_and_parse(
            '{"parties": [{"text": "we", "subtype": "martian"}]}', PARTY)
        assert items == [{"text": "we"}]

    def test_party_without_subtype_is_kept(self):
        items, _ = repair_and_parse('{"parties": [{"text": "we"}]}', PARTY)
        assert items == [{"text": "we"}]

    def test_single_object_wrapped_into_list(self):
        items, _ = repair_and_parse('{"text": "email"}', DATA)
        assert items == [{"text": "email"}]


class TestFallbackAndRefusals:
    @pytest.mark.parametrize("raw", [
        "no entities found", "None", "N/A", "none", "  NONE.  ", "", "nothing",
    ])
    def test_refusal_phrases_mean_empty(self, raw):
        items, trace = repair_and_parse(raw, DATA)
        assert items == []
        assert not trace.dropped_items

    def test_plain_lines_become_entries(self):
        items, trace = repair_and_parse("- email address\n* your name\n2. phone", DATA)
        assert items == [{"text": "email address"}, {"text": "your name"}, {"text": "phone"}]
        assert "line_fallback" in trace.stages

    def test_refusal_not_a_one_element_list(self):
        items, _ = repair_and_parse("no entities found", DATA)
        assert items != [{"text": "no entities found"}]

    def test_fallback_rejected_for_structured_shapes(self):
        with pytest.raises(ParseError) as err:
            repair_and_parse("I really cannot answer this question properly.", RELATION)
        assert err.value.raw.startswith("I really cannot")


class TestIdempotence:
    CASES = [
        ('{"entities": [{"text": "email address"}]}', DATA),
        ("{'data_entities': ['email',]}", DATA),
        ('[["a0", "e0", "HAS_DATA"]]', RELATION),
        ('{"parties": [{"text": "we", "subtype": "first party"}]}', PARTY),
    ]

    @pytest.mark.parametrize("raw,shape", CASES)
    def test_reparse_of_own_output_is_fixed_point(self, raw, shape):
        items, _ = repair_and_parse(raw, shape)
        again, trace = repair_and_parse(json.dumps(items), shape)
        assert again == items

    @given(st.lists(st.text(
        alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=25
    ).map(str.strip).filter(bool), max_size=6))
    @settings(max_examples=100)
    def test_clean_payloads_parse_exactly(self, texts):
        payload = json.dumps({"entities": [{"text": t} for t in texts]})
        items, trace = repair_and_parse(payload, DATA)
        assert items == [{"text": t.strip()} for t in texts]
