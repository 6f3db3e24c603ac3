from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppanalyze.corpus import (
    AlignmentError,
    BratParseError,
    CorpusError,
    DanglingReferenceError,
    align_gold,
    load_policy,
    parse_brat,
    read_annotation_conf,
    segment_lines,
    serialize_entity_line,
    validate_gold_labels,
)

from .oracles import scan_lines


class TestSegmentLines:
    def test_two_lines_around_blank(self):
        segments = segment_lines("a\n\nb")
        assert [(s.char_start, s.char_end, s.text) for s in segments] == [
            (0, 1, "a"), (3, 4, "b"),
        ]

    def test_empty_text(self):
        assert segment_lines("") == []

    def test_whitespace_only(self):
        assert segment_lines("  \n\t\n") == []

    def test_offsets_point_at_trimmed_core(self):
        text = "  hello world  \n\tnext\n"
        segments = segment_lines(text)
        for seg in segments:
            assert text[seg.char_start:seg.char_end] == seg.text
            assert seg.text == seg.text.strip()

    def test_matches_independent_line_scanner(self):
        text = "First line.\n\n  indented line\t\n\n\nlast\n   \n"
        segments = segment_lines(text)
        assert [(s.char_start, s.char_end, s.text) for s in segments] == scan_lines(text)

    @given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=200))
    @settings(max_examples=200)
    def test_agrees_with_scanner_on_arbitrary_text(self, text):
        # the scanner treats only '\n' as a line break, like the segmenter
        segments = segment_lines(text)
        assert [(s.char_start, s.char_end, s.text) for s in segments] == scan_lines(text)

    @given(st.text(max_size=120))
    def test_invariants(self, text):
        segments = segment_lines(text)
        previous_end = -1
        for i, seg in enumerate(segments):
            assert seg.index == i
            assert seg.char_start < seg.char_end
            assert seg.char_start > previous_end
            previous_end = seg.char_end
            assert text[seg.char_start:seg.char_end] == seg.text
            assert seg.text.strip() == seg.text and seg.text
        # concatenation reproduces the non-blank trimmed lines
        trimmed = [line.strip() for line in text.split("\n") if line.strip()]
        assert [s.text for s in segments] == trimmed

    @given(st.text(max_size=120))
    def test_idempotent_on_segment_text(self, text):
        for seg in segment_lines(text):
            again = segment_lines(seg.text)
            assert len(again) == 1
            assert again[0].text == seg.text


class TestLoadPolicy:
    def test_counts_segments(self, tmp_path):
        p = tmp_path / "p.txt"
        p.write_text("one\ntwo\nthree\n", encoding="utf-8")
        doc = load_policy(p, "example.org")
        assert doc.service_id == "example.org"
        assert len(doc.segments) == 3

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.txt"
        p.write_text("", encoding="utf-8")
        assert load_policy(p, "x").segments == ()

    def test_blank_lines_keep_offsets_valid(self, tmp_path):
        p = tmp_path / "p.txt"
        text = "para one\n\n\npara two\n"
        p.write_text(text, encoding="utf-8")
        doc = load_policy(p, "x")
        assert [(s.char_start, s.char_end, s.text) for s in doc.segments] == scan_lines(text)
        for seg in doc.segments:
            assert doc.raw_text[seg.char_start:seg.char_end] == seg.text

    def test_crlf_normalized(self, tmp_path):
        p = tmp_path / "p.txt"
        p.write_bytes(b"one\r\ntwo\r\n")
        doc = load_policy(p, "x")
        assert [s.text for s in doc.segments] == ["one", "two"]
        assert "\r" not in doc.raw_text

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorpusError):
            load_policy(tmp_path / "nope.txt", "x")

    def test_binary_rejected(self, tmp_path):
        p = tmp_path / "blob.bin"
        p.write_bytes(b"PK\x00\x01binary")
        with pytest.raises(CorpusError):
            load_policy(p, "x")

    def test_bad_utf8_rejected(self, tmp_path):
        p = tmp_path / "latin.txt"
        p.write_bytes(b"caf\xe9")
        with pytest.raises(CorpusError):
            load_policy(p, "x")


def write_pair(tmp_path, text, ann):
    t = tmp_path / "doc.txt"
    a = tmp_path / "doc.ann"
    t.write_text(text, encoding="utf-8")
    a.write_text(ann, encoding="utf-8")
    return t, a


class TestParseBrat:
    def test_entity_line(self, tmp_path):
        text = "0123456789email addresses tail"
        t, a = write_pair(tmp_path, text, "T1\tdata 10 25\temail addresses\n")
        gold = parse_brat(t, a)
        (ent,) = gold.entities
        assert (ent.type, ent.char_start, ent.char_end) == ("data", 10, 25)
        assert ent.text == "email addresses"

    def test_event_line(self, tmp_path):
        text = "we collect your email"
        ann = (
            "T1\tfirst-party 0 2\twe\n"
            "T2\tdata 11 21\tyour email\n"
            "T3\tcollection-use 3 10\tcollect\n"
            "E1\tcollection-use:T3 data-collector:T1 data:T2\n"
        )
        t, a = write_pair(tmp_path, text, ann)
        gold = parse_brat(t, a)
        (event,) = gold.events
        assert event.trigger_id == "T3"
        assert event.roles == (("data-collector", "T1"), ("data", "T2"))

    def test_dangling_reference(self, tmp_path):
        text = "we collect data"
        ann = "T1\tdata 11 15\tdata\nE1\tcollection-use:T1 data:T99\n"
        t, a = write_pair(tmp_path, text, ann)
        with pytest.raises(DanglingReferenceError) as err:
            parse_brat(t, a)
        assert "T99" in str(err.value)

    def test_malformed_line_reports_position(self, tmp_path):
        t, a = write_pair(tmp_path, "text", "T1\tbroken\n")
        with pytest.raises(BratParseError) as err:
            parse_brat(t, a)
        assert err.value.line_no == 1

    def test_surface_mismatch_rejected(self, tmp_path):
        t, a = write_pair(tmp_path, "hello world", "T1\tdata 0 5\tworld\n")
        with pytest.raises(BratParseError):
            parse_brat(t, a)

    def test_discontinuous_span(self, tmp_path):
        text = "collect and also share data"
        ann = "T1\taction 0 7;17 22\tcollect share\n"
        t, a = write_pair(tmp_path, text, ann)
        gold = parse_brat(t, a)
        (ent,) = gold.entities
        assert ent.discontinuous
        assert ent.fragments == ((0, 7), (17, 22))
        assert (ent.char_start, ent.char_end) == (0, 22)
        assert ent.covering_text == text[0:22]

    def test_grounding_from_attribute_beats_note(self, tmp_path):
        text = "your email"
        ann = (
            "T1\tdata 0 10\tyour email\n"
            "A1\tDPV T1 EmailAddress\n"
            "#1\tAnnotatorNotes T1\tSomethingElse\n"
        )
        t, a = write_pair(tmp_path, text, ann)
        (ent,) = parse_brat(t, a).entities
        assert ent.fine_grained == "EmailAddress"
        assert ent.notes == ("SomethingElse",)

    def test_grounding_from_single_token_note(self, tmp_path):
        text = "your email"
        ann = "T1\tdata 0 10\tyour email\n#1\tAnnotatorNotes T1\tdpv:EmailAddress\n"
        t, a = write_pair(tmp_path, text, ann)
        assert parse_brat(t, a).entities[0].fine_grained == "dpv:EmailAddress"

    def test_prose_note_is_not_a_grounding(self, tmp_path):
        text = "your email"
        ann = "T1\tdata 0 10\tyour email\n#1\tAnnotatorNotes T1\tunsure about this one\n"
        t, a = write_pair(tmp_path, text, ann)
        assert parse_brat(t, a).entities[0].fine_grained is None

    def test_t_line_round_trip(self, tmp_path):
        text = "collect and also share data here"
        ann_lines = [
            "T1\tdata 23 27\tdata",
            "T2\taction 0 7;17 22\tcollect share",
        ]
        t, a = write_pair(tmp_path, text, "\n".join(ann_lines) + "\n")
        gold = parse_brat(t, a)
        assert [serialize_entity_line(e) for e in gold.entities] == ann_lines

    def test_fixture_gold_round_trip(self, gold_dir):
        gold = parse_brat(gold_dir / "acme.txt", gold_dir / "acme.ann")
        ann_lines = (gold_dir / "acme.ann").read_text(encoding="utf-8").split("\n")
        t_lines = [line for line in ann_lines if line.startswith("T")]
        assert [serialize_entity_line(e) for e in gold.entities] == t_lines


class TestAlignGold:
    def test_entity_on_second_segment(self, tmp_path):
        t, a = write_pair(tmp_path, "a\n\nb", "T1\tdata 3 4\tb\n")
        gold = parse_brat(t, a)
        doc = load_policy(t, "x")
        aligned = align_gold(gold, doc)
        assert list(aligned) == [1]
        assert aligned[1].entities[0].entity.id == "T1"

    def test_empty_gold(self, tmp_path):
        t, a = write_pair(tmp_path, "a\nb\n", "")
        assert align_gold(parse_brat(t, a), load_policy(t, "x")) == {}

    def test_two_entities_same_line(self, tmp_path):
        text = "email and phone\n"
        ann = "T1\tdata 0 5\temail\nT2\tdata 10 15\tphone\n"
        t, a = write_pair(tmp_path, text, ann)
        aligned = align_gold(parse_brat(t, a), load_policy(t, "x"))
        assert len(aligned[0].entities) == 2

    def test_boundary_crossing_flagged(self, tmp_path):
        text = "one two\nthree\n"
        ann = "T1\tdata 4 13\ttwo three\n"
        t, a = write_pair(tmp_path, text, ann)
        aligned = align_gold(parse_brat(t, a), load_policy(t, "x"))
        (entity,) = aligned[0].entities
        assert entity.crosses_boundary

    def test_span_on_blank_line_is_error(self, tmp_path):
        # annotate the newline gap between segments
        text = "ab\n  \ncd\n"
        ann = "T1\tdata 3 5\t  \n"
        t = tmp_path / "doc.txt"
        t.write_text(text, encoding="utf-8")
        # surface check would fail for whitespace; craft gold directly
        from ppanalyze.corpus import GoldAnnotationSet, GoldEntity
        gold = GoldAnnotationSet(
            doc_id="doc",
            entities=(GoldEntity("T1", "data", 3, 5, "  ", ((3, 5),), "  "),),
            events=(), relations=(),
        )
        doc = load_policy(t, "x")
        with pytest.raises(AlignmentError) as err:
            align_gold(gold, doc)
        assert "T1" in str(err.value)

    def test_aligned_entities_substring_or_flagged(self, gold_dir):
        gold = parse_brat(gold_dir / "acme.txt", gold_dir / "acme.ann")
        doc = load_policy(gold_dir / "acme.txt", "acme")
        for slice_ in align_gold(gold, doc).values():
            for aligned in slice_.entities:
                seg = doc.segments[aligned.segment_index]
                assert (aligned.entity.covering_text in seg.text
                        or aligned.crosses_boundary)


class TestAnnotationConf:
    def test_fixture_inventory(self, gold_dir):
        conf = read_annotation_conf(gold_dir / "annotation.conf")
        assert "data" in conf["entities"]
        assert "collection-use" in conf["events"]
        assert "related" in conf["relations"]
        assert "DPV" in conf["attributes"]

    def test_fixture_gold_matches_its_schema(self, gold_dir):
        gold = parse_brat(gold_dir / "acme.txt", gold_dir / "acme.ann")
        assert validate_gold_labels(gold, gold_dir / "annotation.conf") == []

    def test_undeclared_label_reported(self, tmp_path, gold_dir):
        t, a = write_pair(tmp_path, "some text", "T1\tmystery 0 4\tsome\n")
        gold = parse_brat(t, a)
        problems = validate_gold_labels(gold, gold_dir / "annotation.conf")
        assert problems and "mystery" in problems[0]
