"""Assemble extraction results into the privacy-practice knowledge graph.

The graph is centred on practice nodes: one per recognized action span,
typed DataCollectionUse or ThirdPartySharingDisclosure for the two
dominant practice types and plain DataPractice (with a subtype
annotation) otherwise.  Every practice carries exactly one source
segment literal, belongs to exactly one PrivacyPolicy node, and that
policy links to exactly one Service node.

Node IRIs are content-derived (digest of policy URI, segment index,
action ordinal) so repeated runs produce identical graphs; parties are
local blank nodes typed first-party / third-party / user.  Ungrounded
data/purpose spans and non-verbatim spans never enter the graph; each
exclusion is accounted for in the build log.
"""
from __future__ import annotations

import hashlib
import urllib.parse
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from . import rdfio
from .extraction.pipeline import EntitySpan, ExtractionResult
from .rdfio import RDF_TYPE, XSD, BNode, Graph, IRI, Literal
from .taxonomy import Taxonomy

PPA = "urn:pp-analyze:core#"
NODE = "urn:pp-analyze:node#"
SERVICE = "urn:pp-analyze:service#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"

# classes
DATA_PRACTICE = IRI(PPA + "DataPractice")
DATA_COLLECTION_USE = IRI(PPA + "DataCollectionUse")
THIRD_PARTY_SHARING = IRI(PPA + "ThirdPartySharingDisclosure")
PRIVACY_POLICY = IRI(PPA + "PrivacyPolicy")
SERVICE_CLASS = IRI(PPA + "Service")
FIRST_PARTY = IRI(PPA + "FirstParty")
THIRD_PARTY = IRI(PPA + "ThirdParty")
USER_PARTY = IRI(PPA + "User")

# predicates
HAS_PRACTICE = IRI(PPA + "hasPractice")
HAS_DATA = IRI(PPA + "hasData")
HAS_PURPOSE = IRI(PPA + "hasPurpose")
PERFORMED_BY = IRI(PPA + "performedBy")
DATA_PROVIDED_BY = IRI(PPA + "dataProvidedBy")
DATA_SHARED_WITH = IRI(PPA + "dataSharedWith")
SOURCE_SEGMENT = IRI(PPA + "sourceSegment")
SEGMENT_INDEX = IRI(PPA + "segmentIndex")
PRACTICE_SUBTYPE = IRI(PPA + "practiceSubtype")
HAS_SERVICE = IRI(PPA + "hasService")
TAXONOMY_VERSION = IRI(PPA + "taxonomyVersion")
LABEL = IRI(RDFS + "label")

PRACTICE_CLASSES = (DATA_PRACTICE, DATA_COLLECTION_USE, THIRD_PARTY_SHARING)

_SUBTYPE_CLASS = {
    "collection_use": DATA_COLLECTION_USE,
    "third_party_sharing_disclosure": THIRD_PARTY_SHARING,
}
_PARTY_CLASS = {
    "first_party": FIRST_PARTY,
    "third_party": THIRD_PARTY,
    "user": USER_PARTY,
}
_ROLE_PREDICATE = {
    "HAS_DATA": HAS_DATA,
    "HAS_PURPOSE": HAS_PURPOSE,
    "PERFORMED_BY": PERFORMED_BY,
    "DATA_PROVIDED_BY": DATA_PROVIDED_BY,
    "DATA_SHARED_WITH": DATA_SHARED_WITH,
}


def _digest(*parts: str) -> str:
    return hashlib.sha256("\x1f".join(parts).encode("utf-8")).hexdigest()[:16]


def bind_standard_prefixes(g: Graph) -> None:
    g.bind("ppa", PPA)
    g.bind("rdfs", RDFS)
    g.bind("xsd", XSD)
    g.bind("dpv", "https://w3id.org/dpv#")
    g.bind("dpvpd", "https://w3id.org/dpv/pd#")


@dataclass
class BuildLog:
    records: list[str] = field(default_factory=list)
    skipped_actions: int = 0
    skipped_ungrounded: int = 0
    skipped_non_verbatim: int = 0
    dropped_tuples: int = 0

    def note(self, message: str) -> None:
        self.records.append(message)

    def to_dict(self) -> dict:
        return {
            "skipped_actions": self.skipped_actions,
            "skipped_ungrounded": self.skipped_ungrounded,
            "skipped_non_verbatim": self.skipped_non_verbatim,
            "dropped_tuples": self.dropped_tuples,
            "records": list(self.records),
        }


@dataclass
class PrPrGraph:
    triples: Graph
    policy_iri: IRI
    service_iri: IRI
    provenance: dict[str, tuple[int, str]]  # practice IRI -> (segment index, text)
    taxonomy_version: str
    build_log: BuildLog = field(default_factory=BuildLog)

    def __len__(self) -> int:
        return len(self.triples)


def service_iri(service_id: str) -> IRI:
    return IRI(SERVICE + urllib.parse.quote(service_id, safe=""))


def build_graph(result: ExtractionResult, service_id: str, policy_uri: str,
                taxonomy_version: str = "unknown",
                include_non_verbatim: bool = False) -> PrPrGraph:
    """Build the practice graph for one document's extraction result.

    Nothing here is fatal: spans that cannot enter the graph (ungrounded
    terms, non-verbatim flags, dangling relation ids) are skipped and
    accounted for in the build log.
    """
    g = Graph()
    bind_standard_prefixes(g)
    log = BuildLog()

    policy = IRI(policy_uri)
    service = service_iri(service_id)
    g.add(policy, IRI(RDF_TYPE), PRIVACY_POLICY)
    g.add(policy, HAS_SERVICE, service)
    g.add(policy, TAXONOMY_VERSION, Literal(taxonomy_version))
    g.add(service, IRI(RDF_TYPE), SERVICE_CLASS)
    g.add(service, LABEL, Literal(service_id))

    provenance: dict[str, tuple[int, str]] = {}

    for seg in result.segments:
        spans = {s.local_id: s for s in seg.spans}
        party_nodes: dict[str, BNode] = {}

        def party_node(span: EntitySpan) -> Optional[BNode]:
            if span.subtype not in _PARTY_CLASS:
                log.note(f"segment {seg.segment_index}: party {span.local_id} "
                         f"has no usable subtype ({span.subtype!r})")
                return None
            if span.local_id not in party_nodes:
                node = BNode("party-" + _digest(policy_uri, str(seg.segment_index), span.local_id))
                party_nodes[span.local_id] = node
                g.add(node, IRI(RDF_TYPE), _PARTY_CLASS[span.subtype])
                g.add(node, LABEL, Literal(span.text))
            return party_nodes[span.local_id]

        actions = [s for s in seg.actions]
        for ordinal, action in enumerate(actions):
            if action.non_verbatim and not include_non_verbatim:
                log.skipped_actions += 1
                log.skipped_non_verbatim += 1
                log.note(f"segment {seg.segment_index}: action {action.local_id} "
                         f"skipped (non-verbatim {action.text!r})")
                continue
            practice = IRI(NODE + "practice-" + _digest(policy_uri, str(seg.segment_index), str(ordinal)))
            practice_class = _SUBTYPE_CLASS.get(action.subtype or "", DATA_PRACTICE)
            g.add(practice, IRI(RDF_TYPE), practice_class)
            if practice_class is DATA_PRACTICE and action.subtype:
                g.add(practice, PRACTICE_SUBTYPE, Literal(action.subtype))
            g.add(practice, SOURCE_SEGMENT, Literal(seg.segment_text))
            g.add(practice, SEGMENT_INDEX, Literal(str(seg.segment_index), datatype=IRI(XSD + "integer")))
            g.add(practice, LABEL, Literal(action.text))
            g.add(policy, HAS_PRACTICE, practice)
            provenance[practice.value] = (seg.segment_index, seg.segment_text)

            for rel in seg.relations:
                if rel.subject_id != action.local_id:
                    continue
                target = spans.get(rel.object_id)
                predicate = _ROLE_PREDICATE.get(rel.event_type)
                if target is None or predicate is None:
                    log.dropped_tuples += 1
                    log.note(f"segment {seg.segment_index}: tuple ({rel.subject_id}, "
                             f"{rel.object_id}, {rel.event_type}) dropped")
                    continue
                if target.non_verbatim and not include_non_verbatim:
                    log.skipped_non_verbatim += 1
                    log.note(f"segment {seg.segment_index}: link to {target.local_id} "
                             f"skipped (non-verbatim {target.text!r})")
                    continue
                if rel.event_type in ("HAS_DATA", "HAS_PURPOSE"):
                    if target.grounded_term is None:
                        log.skipped_ungrounded += 1
                        log.note(f"segment {seg.segment_index}: {rel.event_type} link to "
                                 f"{target.local_id} skipped (ungrounded {target.text!r})")
                        continue
                    g.add(practice, predicate, IRI(target.grounded_term))
                else:
                    node = party_node(target)
                    if node is not None:
                        g.add(practice, predicate, node)

    return PrPrGraph(
        triples=g,
        policy_iri=policy,
        service_iri=service,
        provenance=provenance,
        taxonomy_version=taxonomy_version,
        build_log=log,
    )


def serialize(graph: Union[PrPrGraph, Graph], fmt: str = "turtle") -> bytes:
    g = graph.triples if isinstance(graph, PrPrGraph) else graph
    return rdfio.serialize(g, fmt)


def parse_graph(data: Union[str, bytes], fmt: str = "turtle") -> Graph:
    return rdfio.parse(data, fmt)


# -- invariant checking --

def check_invariants(graph: Union[PrPrGraph, Graph],
                     taxonomy: Optional[Taxonomy] = None) -> list[str]:
    """Return a list of invariant violations (empty list = graph is sound)."""
    g = graph.triples if isinstance(graph, PrPrGraph) else graph
    problems: list[str] = []
    rdf_type = IRI(RDF_TYPE)

    practices: set = set()
    for cls in PRACTICE_CLASSES:
        practices |= g.subjects_of_type(cls)
    policies = g.subjects_of_type(PRIVACY_POLICY)
    policy_practices = {(s, o) for (s, p, o) in g.triples if p == HAS_PRACTICE}

    for practice in sorted(practices, key=rdfio.term_key):
        segments = g.objects(practice, SOURCE_SEGMENT)
        if len(segments) != 1:
            problems.append(f"{practice!r}: {len(segments)} source segment literals (want 1)")
        owners = {s for (s, o) in policy_practices if o == practice}
        if len(owners) != 1:
            problems.append(f"{practice!r}: belongs to {len(owners)} policies (want 1)")
    for policy in sorted(policies, key=rdfio.term_key):
        services = g.objects(policy, HAS_SERVICE)
        if len(services) != 1:
            problems.append(f"{policy!r}: links to {len(services)} services (want 1)")

    if taxonomy is not None:
        for predicate, kind in ((HAS_DATA, "data"), (HAS_PURPOSE, "purpose")):
            for (s, p, o) in g.triples:
                if p == predicate:
                    if not isinstance(o, IRI) or o.value not in taxonomy.nodes:
                        problems.append(f"{s!r}: {kind} object {o!r} not in taxonomy")
                    elif taxonomy.nodes[o.value].kind != kind:
                        problems.append(f"{s!r}: {o!r} is not a {kind} term")
    return problems


# -- corpus statistics --

@dataclass
class GraphStats:
    triple_count: int
    practice_count: int
    practice_type_counts: dict[str, int]
    data_class_mentions: dict[str, int]
    purpose_class_mentions: dict[str, int]

    @property
    def distinct_data_classes(self) -> int:
        return len(self.data_class_mentions)

    @property
    def distinct_purpose_classes(self) -> int:
        return len(self.purpose_class_mentions)

    @property
    def data_mentions(self) -> int:
        return sum(self.data_class_mentions.values())

    @property
    def purpose_mentions(self) -> int:
        return sum(self.purpose_class_mentions.values())

    def top_classes(self, which: str, k: int = 10) -> list[tuple[str, int]]:
        table = self.data_class_mentions if which == "data" else self.purpose_class_mentions
        return sorted(table.items(), key=lambda kv: (-kv[1], kv[0]))[:k]

    def to_dict(self, top_k: int = 10) -> dict:
        return {
            "triple_count": self.triple_count,
            "practice_count": self.practice_count,
            "practice_type_counts": dict(sorted(self.practice_type_counts.items())),
            "data": {
                "distinct_classes": self.distinct_data_classes,
                "mentions": self.data_mentions,
                "top": self.top_classes("data", top_k),
            },
            "purpose": {
                "distinct_classes": self.distinct_purpose_classes,
                "mentions": self.purpose_mentions,
                "top": self.top_classes("purpose", top_k),
            },
        }

    def to_tsv(self, top_k: int = 10) -> str:
        lines = [
            f"triples\t{self.triple_count}",
            f"practices\t{self.practice_count}",
        ]
        for name, count in sorted(self.practice_type_counts.items()):
            lines.append(f"practices[{name}]\t{count}")
        lines.append(f"data_classes\t{self.distinct_data_classes}")
        lines.append(f"data_mentions\t{self.data_mentions}")
        lines.append(f"purpose_classes\t{self.distinct_purpose_classes}")
        lines.append(f"purpose_mentions\t{self.purpose_mentions}")
        for iri, count in self.top_classes("data", top_k):
            lines.append(f"top_data\t{iri}\t{count}")
        for iri, count in self.top_classes("purpose", top_k):
            lines.append(f"top_purpose\t{iri}\t{count}")
        return "\n".join(lines) + "\n"


def stats(graphs: Sequence[Union[PrPrGraph, Graph]]) -> GraphStats:
    """Aggregate statistics over any number of practice graphs."""
    triple_count = 0
    practice_type_counts: dict[str, int] = {}
    practice_count = 0
    data_mentions: dict[str, int] = {}
    purpose_mentions: dict[str, int] = {}

    for graph in graphs:
        g = graph.triples if isinstance(graph, PrPrGraph) else graph
        triple_count += len(g)
        types: dict = {}
        for cls in PRACTICE_CLASSES:
            for subject in g.subjects_of_type(cls):
                types.setdefault(subject, set()).add(cls)
        practice_count += len(types)
        for classes in types.values():
            # most specific class wins when a node carries several
            if DATA_COLLECTION_USE in classes:
                name = "DataCollectionUse"
            elif THIRD_PARTY_SHARING in classes:
                name = "ThirdPartySharingDisclosure"
            else:
                name = "DataPractice"
            practice_type_counts[name] = practice_type_counts.get(name, 0) + 1
        for (s, p, o) in g.triples:
            if p == HAS_DATA and isinstance(o, IRI):
                data_mentions[o.value] = data_mentions.get(o.value, 0) + 1
            elif p == HAS_PURPOSE and isinstance(o, IRI):
                purpose_mentions[o.value] = purpose_mentions.get(o.value, 0) + 1

    return GraphStats(
        triple_count=triple_count,
        practice_count=practice_count,
        practice_type_counts=practice_type_counts,
        data_class_mentions=data_mentions,
        purpose_class_mentions=purpose_mentions,
    )
