from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppanalyze.rdfio import (
    RDF_TYPE,
    XSD,
    BNode,
    Graph,
    IRI,
    Literal,
    RdfError,
    parse,
    serialize,
)


def sample_graph() -> Graph:
    g = Graph()
    g.bind("ppa", "urn:pp-analyze:core#")
    g.bind("xsd", XSD)
    practice = IRI("urn:pp-analyze:node#p1")
    g.add(practice, IRI(RDF_TYPE), IRI("urn:pp-analyze:core#DataCollectionUse"))
    g.add(practice, IRI("urn:pp-analyze:core#sourceSegment"),
          Literal('He said "ok",\nthen left.\ttab\\slash'))
    g.add(practice, IRI("urn:pp-analyze:core#segmentIndex"),
          Literal("3", datatype=IRI(XSD + "integer")))
    g.add(BNode("party-1"), IRI(RDF_TYPE), IRI("urn:pp-analyze:core#ThirdParty"))
    g.add(practice, IRI("urn:pp-analyze:core#performedBy"), BNode("party-1"))
    g.add(practice, IRI("http://www.w3.org/2000/01/rdf-schema#label"),
          Literal("bonjour", lang="fr"))
    return g


@pytest.mark.parametrize("fmt", ["turtle", "ntriples"])
class TestRoundTrip:
    def test_round_trip_equals_triple_set(self, fmt):
        g = sample_graph()
        assert parse(serialize(g, fmt), fmt).triples == g.triples

    def test_empty_graph(self, fmt):
        g = Graph()
        data = serialize(g, fmt)
        if fmt == "ntriples":
            assert data == b""
        assert parse(data, fmt).triples == set()

    def test_serialization_is_deterministic(self, fmt):
        a, b = sample_graph(), sample_graph()
        assert serialize(a, fmt) == serialize(b, fmt)

    def test_insertion_order_does_not_matter(self, fmt):
        g1 = sample_graph()
        g2 = Graph(prefixes=dict(g1.prefixes))
        for t in reversed(sorted(g1.triples, key=repr)):
            g2.add(*t)
        assert serialize(g1, fmt) == serialize(g2, fmt)


class TestTurtleSubset:
    def test_prefixed_and_lists(self):
        ttl = """
        @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
        @prefix dpv: <https://w3id.org/dpv#> .
        dpv:Marketing a rdfs:Class, dpv:Concept ;
            rdfs:subClassOf dpv:Purpose ;
            rdfs:label \"\"\"Marketing\"\"\" .
        """
        g = parse(ttl, "turtle")
        assert (IRI("https://w3id.org/dpv#Marketing"),
                IRI("http://www.w3.org/2000/01/rdf-schema#subClassOf"),
                IRI("https://w3id.org/dpv#Purpose")) in g
        assert len(g) == 4

    def test_numeric_and_boolean_literals(self):
        g = parse('<urn:s> <urn:p> 42 . <urn:s> <urn:q> true .', "turtle")
        assert (IRI("urn:s"), IRI("urn:p"), Literal("42", datatype=IRI(XSD + "integer"))) in g
        assert (IRI("urn:s"), IRI("urn:q"), Literal("true", datatype=IRI(XSD + "boolean"))) in g

    def test_comments_ignored(self):
        g = parse("# hello\n<urn:s> <urn:p> <urn:o> . # trailing\n", "turtle")
        assert len(g) == 1

    def test_undeclared_prefix_rejected(self):
        with pytest.raises(RdfError):
            parse("dpv:Marketing a dpv:Thing .", "turtle")

    def test_unterminated_statement_rejected(self):
        with pytest.raises(RdfError):
            parse("<urn:s> <urn:p> <urn:o>", "turtle")

    def test_literal_subject_rejected(self):
        with pytest.raises(RdfError):
            parse('"text" <urn:p> <urn:o> .', "turtle")


_literal_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), max_codepoint=0x2FFF),
    max_size=40,
)


@given(texts=st.lists(_literal_text, min_size=1, max_size=8))
@settings(max_examples=100)
def test_arbitrary_literals_round_trip(texts):
    g = Graph()
    for i, text in enumerate(texts):
        g.add(IRI(f"urn:s{i}"), IRI("urn:p"), Literal(text))
    for fmt in ("turtle", "ntriples"):
        assert parse(serialize(g, fmt), fmt).triples == g.triples
