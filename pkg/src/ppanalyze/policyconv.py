"""Convert practice graphs into formal policy documents (ODRL, psDToU).

Term mappings live in a profile file, not in code: the practice-type to
ODRL action table, the relation-role to party-function table, and the
psDToU vocabulary IRIs are all profile entries with shipped defaults.

ODRL expansion is cartesian per data target: a practice with several
data links becomes one permission per data class, each carrying all of
the practice's purpose constraints.  Practices without data links, and
practice types without an action mapping, are skipped and reported,
never silently dropped.  Data is identified by its class IRI.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .graph import (
    DATA_COLLECTION_USE,
    DATA_SHARED_WITH,
    HAS_DATA,
    HAS_PRACTICE,
    HAS_PURPOSE,
    NODE,
    PERFORMED_BY,
    PPA,
    PRACTICE_CLASSES,
    PRACTICE_SUBTYPE,
    PRIVACY_POLICY,
    PrPrGraph,
    THIRD_PARTY_SHARING,
)
from .rdfio import RDF_TYPE, BNode, Graph, IRI, Literal

ODRL = "http://www.w3.org/ns/odrl/2/"

ODRL_SET = IRI(ODRL + "Set")
ODRL_PERMISSION_CLASS = IRI(ODRL + "Permission")
ODRL_PERMISSION = IRI(ODRL + "permission")
ODRL_ACTION = IRI(ODRL + "action")
ODRL_TARGET = IRI(ODRL + "target")
ODRL_CONSTRAINT = IRI(ODRL + "constraint")
ODRL_LEFT_OPERAND = IRI(ODRL + "leftOperand")
ODRL_OPERAND_PURPOSE = IRI(ODRL + "purpose")
ODRL_OPERATOR = IRI(ODRL + "operator")
ODRL_IS_A = IRI(ODRL + "isA")
ODRL_RIGHT_OPERAND = IRI(ODRL + "rightOperand")


class ConversionError(Exception):
    pass


@dataclass(frozen=True)
class ConversionProfile:
    """Term mapping tables for formal policy output.

    action_map keys are practice class local names (DataCollectionUse,
    ThirdPartySharingDisclosure) or subtype annotations of plain
    DataPractice nodes (storage_retention_deletion, ...).  The only data
    identifier strategy is the data class IRI.
    """
    action_map: dict[str, str]
    role_map: dict[str, str]
    psdtou: dict[str, str]
    data_identifier: str = "data_class_iri"

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ConversionProfile":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConversionError(f"cannot load conversion profile {path}: {exc}") from exc
        for key in ("action_map", "role_map", "psdtou"):
            if key not in payload:
                raise ConversionError(f"profile {path} is missing {key!r}")
        return cls(
            action_map=dict(payload["action_map"]),
            role_map=dict(payload["role_map"]),
            psdtou=dict(payload["psdtou"]),
            data_identifier=payload.get("data_identifier", "data_class_iri"),
        )

    @classmethod
    def default(cls) -> "ConversionProfile":
        return cls.load(Path(__file__).parent / "data" / "profile_default.json")

    def dtou_iri(self, key: str) -> IRI:
        return IRI(self.psdtou["namespace"] + self.psdtou[key])


@dataclass
class ConversionReport:
    unmapped_types: list[str] = field(default_factory=list)
    skipped_practices: list[str] = field(default_factory=list)
    permissions: int = 0
    input_specs: int = 0
    sharing_entries: int = 0

    def to_dict(self) -> dict:
        return {
            "permissions": self.permissions,
            "input_specs": self.input_specs,
            "sharing_entries": self.sharing_entries,
            "unmapped_types": sorted(set(self.unmapped_types)),
            "skipped_practices": list(self.skipped_practices),
        }


def _digest(*parts: str) -> str:
    return hashlib.sha256("\x1f".join(parts).encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class _Practice:
    node: Union[IRI, BNode]
    type_key: str              # action_map lookup key
    class_name: str
    data: tuple[IRI, ...]
    purposes: tuple[IRI, ...]
    performers: tuple = ()
    recipients: tuple = ()


def _practice_view(g: Graph, policy) -> list[_Practice]:
    typed: dict = {}
    for cls in PRACTICE_CLASSES:
        for s in g.subjects_of_type(cls):
            typed.setdefault(s, set()).add(cls)
    out = []
    for node in sorted(g.objects(policy, HAS_PRACTICE), key=lambda t: str(t)):
        classes = typed.get(node)
        if not classes:
            continue
        if DATA_COLLECTION_USE in classes:
            class_name = type_key = "DataCollectionUse"
        elif THIRD_PARTY_SHARING in classes:
            class_name = type_key = "ThirdPartySharingDisclosure"
        else:
            class_name = "DataPractice"
            subtypes = [o.lexical for o in g.objects(node, PRACTICE_SUBTYPE)
                        if isinstance(o, Literal)]
            type_key = subtypes[0] if subtypes else "DataPractice"
        out.append(_Practice(
            node=node,
            type_key=type_key,
            class_name=class_name,
            data=tuple(o for o in g.objects(node, HAS_DATA) if isinstance(o, IRI)),
            purposes=tuple(o for o in g.objects(node, HAS_PURPOSE) if isinstance(o, IRI)),
            performers=tuple(g.objects(node, PERFORMED_BY)),
            recipients=tuple(g.objects(node, DATA_SHARED_WITH)),
        ))
    return out


def _source(graph: Union[PrPrGraph, Graph]) -> Graph:
    return graph.triples if isinstance(graph, PrPrGraph) else graph


def to_odrl(graph: Union[PrPrGraph, Graph],
            profile: Optional[ConversionProfile] = None) -> tuple[Graph, ConversionReport]:
    """Build one ODRL policy set per PrivacyPolicy node in the graph."""
    profile = profile or ConversionProfile.default()
    g = _source(graph)
    out = Graph()
    out.bind("odrl", ODRL)
    out.bind("ppa", PPA)
    out.bind("dpv", "https://w3id.org/dpv#")
    out.bind("dpvpd", "https://w3id.org/dpv/pd#")
    report = ConversionReport()

    for policy in sorted(g.subjects_of_type(PRIVACY_POLICY), key=lambda t: str(t)):
        policy_set = IRI(NODE + "odrl-" + _digest(str(policy)))
        out.add(policy_set, IRI(RDF_TYPE), ODRL_SET)
        for practice in _practice_view(g, policy):
            action = profile.action_map.get(practice.type_key)
            if action is None:
                report.unmapped_types.append(practice.type_key)
                report.skipped_practices.append(f"{practice.node!r}: unmapped type {practice.type_key}")
                continue
            if not practice.data:
                report.skipped_practices.append(f"{practice.node!r}: no data links")
                continue
            for data_iri in practice.data:
                perm = BNode("perm-" + _digest(str(practice.node), data_iri.value))
                report.permissions += 1
                out.add(policy_set, ODRL_PERMISSION, perm)
                out.add(perm, IRI(RDF_TYPE), ODRL_PERMISSION_CLASS)
                out.add(perm, ODRL_ACTION, IRI(action))
                out.add(perm, ODRL_TARGET, data_iri)
                for purpose in practice.purposes:
                    cnode = BNode("constraint-" + _digest(str(practice.node), data_iri.value, purpose.value))
                    out.add(perm, ODRL_CONSTRAINT, cnode)
                    out.add(cnode, ODRL_LEFT_OPERAND, ODRL_OPERAND_PURPOSE)
                    out.add(cnode, ODRL_OPERATOR, ODRL_IS_A)
                    out.add(cnode, ODRL_RIGHT_OPERAND, purpose)
                performer_role = profile.role_map.get("PERFORMED_BY")
                if performer_role:
                    for party in practice.performers:
                        out.add(perm, IRI(performer_role), party)
                        _copy_party(g, out, party)
                recipient_role = profile.role_map.get("DATA_SHARED_WITH")
                if recipient_role and practice.class_name == "ThirdPartySharingDisclosure":
                    for party in practice.recipients:
                        out.add(perm, IRI(recipient_role), party)
                        _copy_party(g, out, party)
    return out, report


def _copy_party(source: Graph, out: Graph, party) -> None:
    for (s, p, o) in source.triples:
        if s == party:
            out.add(s, p, o)


def to_psdtou(graph: Union[PrPrGraph, Graph],
              profile: Optional[ConversionProfile] = None) -> tuple[Graph, ConversionReport]:
    """Build one psDToU app policy per PrivacyPolicy node.

    The app policy declares one input spec per distinct data class used
    by any practice, attaches the purposes of the practices using each
    class, and one sharing entry (recipient party type plus shared data)
    per sharing practice.
    """
    profile = profile or ConversionProfile.default()
    g = _source(graph)
    out = Graph()
    out.bind("dtou", profile.psdtou["namespace"])
    out.bind("ppa", PPA)
    out.bind("dpv", "https://w3id.org/dpv#")
    out.bind("dpvpd", "https://w3id.org/dpv/pd#")
    report = ConversionReport()

    rdf_type = IRI(RDF_TYPE)
    for policy in sorted(g.subjects_of_type(PRIVACY_POLICY), key=lambda t: str(t)):
        app = IRI(NODE + "dtou-" + _digest(str(policy)))
        out.add(app, rdf_type, profile.dtou_iri("app_policy_class"))

        practices = _practice_view(g, policy)
        by_data: dict[str, list[_Practice]] = {}
        for practice in practices:
            if not practice.data:
                report.skipped_practices.append(f"{practice.node!r}: no data links")
            for data_iri in practice.data:
                by_data.setdefault(data_iri.value, []).append(practice)

        for data_value in sorted(by_data):
            ispec = BNode("input-" + _digest(str(app), data_value))
            report.input_specs += 1
            out.add(app, profile.dtou_iri("has_input"), ispec)
            out.add(ispec, rdf_type, profile.dtou_iri("input_spec_class"))
            out.add(ispec, profile.dtou_iri("data"), IRI(data_value))
            for practice in by_data[data_value]:
                for purpose in practice.purposes:
                    out.add(ispec, profile.dtou_iri("purpose"), purpose)

        for practice in practices:
            if practice.class_name != "ThirdPartySharingDisclosure":
                continue
            snode = BNode("sharing-" + _digest(str(app), str(practice.node)))
            report.sharing_entries += 1
            out.add(app, profile.dtou_iri("has_sharing"), snode)
            out.add(snode, rdf_type, profile.dtou_iri("sharing_class"))
            for party in practice.recipients:
                for party_type in g.objects(party, rdf_type):
                    out.add(snode, profile.dtou_iri("recipient_type"), party_type)
            for data_iri in practice.data:
                out.add(snode, profile.dtou_iri("data"), data_iri)
    return out, report
