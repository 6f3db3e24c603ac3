"""DPV data-category and purpose hierarchies: loading, lookup, leaf tests.

The taxonomy is loaded from a vendored snapshot file (never fetched live)
so that graph grounding stays reproducible.  Two input formats:

  * RDF class hierarchies (Turtle or N-Triples with rdfs:subClassOf),
  * a simplified 3-column tab-separated format: child-IRI, parent-IRI,
    label.  A row with an empty parent column declares a root.

Kinds (data vs purpose) are inferred from the roots: an IRI whose local
name is "Purpose" roots the purpose hierarchy, "PersonalData" (or "Data")
the data hierarchy; override via the root_kinds argument.  The snapshot
version is read from a `#! version=...` directive (TSV) or an
owl:versionInfo literal (RDF) and is attached to every emitted graph.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

from . import rdfio
from .rdfio import IRI, Literal

RDFS_SUBCLASS = "http://www.w3.org/2000/01/rdf-schema#subClassOf"
RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#label"
SKOS_ALT = "http://www.w3.org/2004/02/skos/core#altLabel"
OWL_VERSION = "http://www.w3.org/2002/07/owl#versionInfo"

DPV = "https://w3id.org/dpv#"
DPV_PD = "https://w3id.org/dpv/pd#"

KNOWN_PREFIXES = {
    "dpv": DPV,
    "pd": DPV_PD,
    "dpv-pd": DPV_PD,
    "dpvpd": DPV_PD,
}

DEFAULT_ROOT_KINDS = {
    "purpose": "purpose",
    "personaldata": "data",
    "data": "data",
    "personaldatacategory": "data",
}


class TaxonomyError(Exception):
    pass


class TaxonomyCycleError(TaxonomyError):
    def __init__(self, cycle: list[str]):
        super().__init__("cycle in class hierarchy: " + " -> ".join(cycle))
        self.cycle = cycle


class UnresolvedTermError(TaxonomyError):
    def __init__(self, term: str, kind: str):
        super().__init__(f"cannot resolve {kind} term: {term!r}")
        self.term = term
        self.kind = kind


def normalize_label(text: str) -> str:
    """Case-fold and strip every non-alphanumeric character."""
    return re.sub(r"[^0-9a-z]", "", text.casefold())


def local_name(iri: str) -> str:
    return re.split(r"[#/:]", iri)[-1]


@dataclass(frozen=True)
class TaxonomyNode:
    iri: str
    label: str
    kind: str                      # "data" | "purpose"
    parents: tuple[str, ...]
    children: tuple[str, ...]
    synonyms: tuple[str, ...] = ()
    depth: int = 0                 # shortest distance from a root


class Taxonomy:
    def __init__(self, nodes: dict[str, TaxonomyNode], roots: dict[str, tuple[str, ...]],
                 version: str = "unknown", collisions: Optional[list[str]] = None):
        self.nodes = nodes
        self.roots = roots
        self.version = version
        self.collisions = collisions or []
        self.label_index: dict[tuple[str, str], str] = {}
        self._build_label_index()
        self._ancestor_cache: dict[str, tuple[str, ...]] = {}

    def _build_label_index(self) -> None:
        # label collisions within a kind: prefer the shallower node
        for node in sorted(self.nodes.values(), key=lambda n: (n.depth, n.iri)):
            for name in (node.label, local_name(node.iri), *node.synonyms):
                key = (node.kind, normalize_label(name))
                if not key[1]:
                    continue
                if key in self.label_index and self.label_index[key] != node.iri:
                    self.collisions.append(
                        f"label {name!r} ({node.kind}) kept for {self.label_index[key]}, "
                        f"also names {node.iri}"
                    )
                    continue
                self.label_index[key] = node.iri

    def __contains__(self, iri: str) -> bool:
        return iri in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def node(self, iri: str) -> TaxonomyNode:
        try:
            return self.nodes[iri]
        except KeyError:
            raise TaxonomyError(f"node not in taxonomy: {iri}") from None

    def resolve_term(self, label_or_iri: str, kind: str) -> TaxonomyNode:
        """Resolve a predicted label, CURIE, or IRI to a taxonomy node.

        Resolution order: exact IRI, known-prefix CURIE expansion,
        normalized label of the full input, normalized tail after the
        last ':', '/' or '#'.  No match raises UnresolvedTermError.
        """
        term = label_or_iri.strip()
        if not term:
            raise UnresolvedTermError(label_or_iri, kind)
        if term in self.nodes:
            node = self.nodes[term]
            if node.kind == kind:
                return node
            raise UnresolvedTermError(label_or_iri, kind)
        if ":" in term and not term.startswith(("http://", "https://", "urn:")):
            prefix, _, local = term.partition(":")
            ns = KNOWN_PREFIXES.get(prefix.casefold())
            if ns and (ns + local) in self.nodes:
                node = self.nodes[ns + local]
                if node.kind == kind:
                    return node
        for candidate in (term, re.split(r"[#/:]", term)[-1]):
            iri = self.label_index.get((kind, normalize_label(candidate)))
            if iri is not None:
                return self.nodes[iri]
        raise UnresolvedTermError(label_or_iri, kind)

    def is_leaf(self, node: TaxonomyNode) -> bool:
        self._check_member(node)
        return not node.children

    def ancestors(self, node: TaxonomyNode) -> list[TaxonomyNode]:
        """Root-to-parent path; for multi-parent nodes, the
        lexicographically smallest root path (by IRI sequence)."""
        self._check_member(node)
        return [self.nodes[iri] for iri in self._ancestor_path(node.iri)]

    def _ancestor_path(self, iri: str) -> tuple[str, ...]:
        if iri in self._ancestor_cache:
            return self._ancestor_cache[iri]
        node = self.nodes[iri]
        if not node.parents:
            path: tuple[str, ...] = ()
        else:
            path = min(self._ancestor_path(p) + (p,) for p in node.parents)
        self._ancestor_cache[iri] = path
        return path

    def descendants(self, node: TaxonomyNode) -> set[TaxonomyNode]:
        self._check_member(node)
        seen: set[str] = set()
        stack = list(node.children)
        while stack:
            iri = stack.pop()
            if iri in seen:
                continue
            seen.add(iri)
            stack.extend(self.nodes[iri].children)
        return {self.nodes[iri] for iri in seen}

    def _check_member(self, node: TaxonomyNode) -> None:
        if self.nodes.get(node.iri) is not node and self.nodes.get(node.iri) != node:
            raise TaxonomyError(f"node not in this taxonomy: {node.iri}")


def _detect_cycle(parents: dict[str, set[str]]) -> Optional[list[str]]:
    WHITE, GREY, BLACK = 0, 1, 2
    color = {iri: WHITE for iri in parents}
    for start in sorted(parents):
        if color[start] != WHITE:
            continue
        stack: list[tuple[str, Iterable[str]]] = [(start, iter(sorted(parents[start])))]
        color[start] = GREY
        trail = [start]
        while stack:
            node, it = stack[-1]
            advanced = False
            for parent in it:
                if parent not in parents:
                    continue
                if color[parent] == GREY:
                    idx = trail.index(parent)
                    return trail[idx:] + [parent]
                if color[parent] == WHITE:
                    color[parent] = GREY
                    trail.append(parent)
                    stack.append((parent, iter(sorted(parents[parent]))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                trail.pop()
                stack.pop()
    return None


def _assemble(edges: set[tuple[str, str]], labels: dict[str, str],
              synonyms: dict[str, list[str]], declared_roots: set[str],
              version: str, root_kinds: dict[str, str]) -> Taxonomy:
    parents: dict[str, set[str]] = {}
    children: dict[str, set[str]] = {}
    all_iris: set[str] = set(declared_roots) | set(labels)
    for child, parent in edges:
        all_iris.add(child)
        all_iris.add(parent)
        parents.setdefault(child, set()).add(parent)
        children.setdefault(parent, set()).add(child)
    for iri in all_iris:
        parents.setdefault(iri, set())
        children.setdefault(iri, set())

    cycle = _detect_cycle(parents)
    if cycle:
        raise TaxonomyCycleError(cycle)

    roots = sorted(iri for iri in all_iris if not parents[iri])
    kind_of_root: dict[str, str] = {}
    for root in roots:
        kind = root_kinds.get(normalize_label(local_name(root)))
        if kind is None:
            raise TaxonomyError(
                f"cannot infer kind (data/purpose) for root {root}; "
                "name the root 'Purpose' or 'PersonalData', or pass root_kinds"
            )
        kind_of_root[root] = kind

    # BFS from roots: kind + shortest depth
    kind_map: dict[str, str] = dict(kind_of_root)
    depth: dict[str, int] = {r: 0 for r in roots}
    frontier = list(roots)
    while frontier:
        nxt: list[str] = []
        for iri in frontier:
            for child in sorted(children[iri]):
                if child not in kind_map:
                    kind_map[child] = kind_map[iri]
                    depth[child] = depth[iri] + 1
                    nxt.append(child)
                elif kind_map[child] != kind_map[iri]:
                    raise TaxonomyError(
                        f"node {child} reachable from both data and purpose roots"
                    )
        frontier = nxt

    unreachable = sorted(all_iris - set(kind_map))
    if unreachable:
        raise TaxonomyError(f"nodes unreachable from any root: {', '.join(unreachable[:5])}")

    nodes = {
        iri: TaxonomyNode(
            iri=iri,
            label=labels.get(iri, local_name(iri)),
            kind=kind_map[iri],
            parents=tuple(sorted(parents[iri])),
            children=tuple(sorted(children[iri])),
            synonyms=tuple(synonyms.get(iri, ())),
            depth=depth[iri],
        )
        for iri in sorted(all_iris)
    }
    roots_by_kind: dict[str, tuple[str, ...]] = {}
    for root in roots:
        roots_by_kind.setdefault(kind_of_root[root], ())
        roots_by_kind[kind_of_root[root]] += (root,)
    return Taxonomy(nodes, roots_by_kind, version=version)


def _expand_curie(token: str) -> str:
    if token.startswith(("http://", "https://", "urn:")):
        return token
    prefix, sep, local = token.partition(":")
    if sep and prefix.casefold() in KNOWN_PREFIXES:
        return KNOWN_PREFIXES[prefix.casefold()] + local
    return token


def _load_tabular(path: Path, root_kinds: dict[str, str]) -> Taxonomy:
    edges: set[tuple[str, str]] = set()
    labels: dict[str, str] = {}
    declared_roots: set[str] = set()
    version = "unknown"
    for line_no, line in enumerate(path.read_text(encoding="utf-8").split("\n"), start=1):
        if line.startswith("#!"):
            m = re.search(r"version\s*=\s*(\S+)", line)
            if m:
                version = m.group(1)
            continue
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 3:
            raise TaxonomyError(f"{path}:{line_no}: expected 3 tab-separated columns, got {len(parts)}")
        child, parent, label = (p.strip() for p in parts)
        child = _expand_curie(child)
        if label:
            labels[child] = label
        if parent:
            edges.add((child, _expand_curie(parent)))
        else:
            declared_roots.add(child)
    return _assemble(edges, labels, {}, declared_roots, version, root_kinds)


def _load_rdf(path: Path, root_kinds: dict[str, str]) -> Taxonomy:
    fmt = "ntriples" if path.suffix in (".nt", ".ntriples") else "turtle"
    try:
        g = rdfio.parse(path.read_text(encoding="utf-8"), fmt)
    except rdfio.RdfError as exc:
        raise TaxonomyError(f"cannot parse {path}: {exc}") from exc
    edges: set[tuple[str, str]] = set()
    labels: dict[str, str] = {}
    synonyms: dict[str, list[str]] = {}
    version = "unknown"
    for s, p, o in g.sorted_triples():
        if p.value == RDFS_SUBCLASS and isinstance(s, IRI) and isinstance(o, IRI):
            edges.add((s.value, o.value))
        elif p.value == RDFS_LABEL and isinstance(s, IRI) and isinstance(o, Literal):
            labels.setdefault(s.value, o.lexical)
        elif p.value == SKOS_ALT and isinstance(s, IRI) and isinstance(o, Literal):
            synonyms.setdefault(s.value, []).append(o.lexical)
        elif p.value == OWL_VERSION and isinstance(o, Literal):
            version = o.lexical
    if not edges:
        raise TaxonomyError(f"{path} contains no rdfs:subClassOf statements")
    return _assemble(edges, labels, synonyms, set(), version, root_kinds)


def load_taxonomy(path: Union[str, Path],
                  root_kinds: Optional[dict[str, str]] = None) -> Taxonomy:
    """Load a taxonomy from Turtle/N-Triples or the 3-column TSV format."""
    p = Path(path)
    if not p.exists():
        raise TaxonomyError(f"taxonomy file not found: {p}")
    kinds = dict(DEFAULT_ROOT_KINDS)
    if root_kinds:
        kinds.update({normalize_label(k): v for k, v in root_kinds.items()})
    if p.suffix in (".tsv", ".tab", ".txt"):
        return _load_tabular(p, kinds)
    if p.suffix in (".ttl", ".turtle", ".nt", ".ntriples"):
        return _load_rdf(p, kinds)
    # sniff: tab-separated lines -> tabular, else RDF
    head = p.read_text(encoding="utf-8")[:4096]
    if any("\t" in line for line in head.split("\n") if line and not line.startswith(("#", "@"))):
        return _load_tabular(p, kinds)
    return _load_rdf(p, kinds)


def default_snapshot_path() -> Path:
    return Path(__file__).parent / "data" / "dpv_snapshot.tsv"


def load_default_taxonomy() -> Taxonomy:
    return load_taxonomy(default_snapshot_path())
