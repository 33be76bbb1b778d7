"""In-memory RDF data model: terms, triples, prefix maps, and immutable graphs.

Graphs use set semantics (no duplicate triples) and store every term fully
expanded; CURIEs exist only at parse/serialize time. Graphs are immutable
after construction and safe to share across worker threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
OWL_NS = "http://www.w3.org/2002/07/owl#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"

# Default namespace for FRED-style instance IRIs; overridable via
# default_prefixes(fred_base=...).
FRED_NS = "http://www.ontologydesignpatterns.org/ont/fred/domain.owl#"

BLENDING_NS = "http://www.ontologydesignpatterns.org/ont/blending/blending.owl#"
PERSPECTIVISATION_NS = "http://www.ontologydesignpatterns.org/ont/persp/perspectivisation.owl#"
METANET_NS = "https://w3id.org/framester/metanet/schema/"
EXAMPLE_NS = "http://example.org/"

XSD_BOOLEAN = XSD_NS + "boolean"
XSD_INTEGER = XSD_NS + "integer"
XSD_DECIMAL = XSD_NS + "decimal"
XSD_DOUBLE = XSD_NS + "double"
RDF_TYPE = RDF_NS + "type"
RDFS_LABEL = RDFS_NS + "label"

_ABSOLUTE_IRI = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")


@dataclass(frozen=True)
class Iri:
    value: str

    def __post_init__(self) -> None:
        if any(c.isspace() for c in self.value):
            raise ValueError(f"IRI contains whitespace: {self.value!r}")
        if not _ABSOLUTE_IRI.match(self.value):
            raise ValueError(f"not an absolute IRI: {self.value!r}")


@dataclass(frozen=True)
class BlankNode:
    label: str


@dataclass(frozen=True)
class Literal:
    lexical: str
    datatype: Optional[str] = None
    language: Optional[str] = None

    def __post_init__(self) -> None:
        if self.datatype is not None and self.language is not None:
            raise ValueError("literal cannot carry both a datatype and a language tag")


Term = Union[Iri, BlankNode, Literal]

_KIND_RANK = {Iri: 0, BlankNode: 1, Literal: 2}


def term_sort_key(term: Term) -> tuple:
    """Total order over terms: IRIs, then blanks, then literals."""
    if isinstance(term, Iri):
        return (0, term.value)
    if isinstance(term, BlankNode):
        return (1, term.label)
    return (2, term.lexical, term.datatype or "", term.language or "")


@dataclass(frozen=True)
class Triple:
    s: Term
    p: Term
    o: Term

    def __post_init__(self) -> None:
        if not isinstance(self.p, Iri):
            raise ValueError("triple predicate must be an IRI")
        if isinstance(self.s, Literal):
            raise ValueError("triple subject cannot be a literal")

    def sort_key(self) -> tuple:
        return (term_sort_key(self.s), term_sort_key(self.p), term_sort_key(self.o))


class PrefixMap:
    """Bidirectional prefix <-> namespace table.

    Expansion then compaction of any CURIE whose prefix is bound is the
    identity, provided the map is injective (namespace -> prefix).
    """

    def __init__(self, bindings: Optional[dict[str, str]] = None):
        self._bindings: dict[str, str] = dict(bindings or {})

    def bound(self, prefix: str) -> bool:
        return prefix in self._bindings

    def namespace(self, prefix: str) -> str:
        return self._bindings[prefix]

    def items(self) -> list[tuple[str, str]]:
        return sorted(self._bindings.items())

    def as_dict(self) -> dict[str, str]:
        return dict(self._bindings)

    def with_bindings(self, extra: dict[str, str]) -> "PrefixMap":
        merged = dict(self._bindings)
        merged.update(extra)
        return PrefixMap(merged)

    def expand(self, prefix: str, local: str) -> str:
        if prefix not in self._bindings:
            raise KeyError(prefix)
        return self._bindings[prefix] + local

    def compact(self, iri: str) -> Optional[tuple[str, str]]:
        """Return (prefix, local) for the longest matching namespace, or None.

        Ties on namespace length break on lexicographically smallest prefix so
        compaction is deterministic even for non-injective maps.
        """
        best: Optional[tuple[str, str]] = None
        for prefix, ns in sorted(self._bindings.items()):
            if iri.startswith(ns) and len(ns) < len(iri):
                if best is None or len(ns) > len(self._bindings[best[0]]):
                    best = (prefix, iri[len(ns):])
        return best

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PrefixMap) and self._bindings == other._bindings

    def __repr__(self) -> str:
        return f"PrefixMap({self._bindings!r})"


def default_prefixes(fred_base: str = FRED_NS) -> PrefixMap:
    """Prefix map every pipeline graph starts from."""
    return PrefixMap(
        {
            "bl": BLENDING_NS,
            "cp": PERSPECTIVISATION_NS,
            "metanet": METANET_NS,
            "rdf": RDF_NS,
            "rdfs": RDFS_NS,
            "owl": OWL_NS,
            "xsd": XSD_NS,
            "ex": EXAMPLE_NS,
            "fred": fred_base,
        }
    )


class Graph:
    """Immutable triple set plus the prefix map used for (de)serialization."""

    __slots__ = ("_triples", "prefixes")

    def __init__(self, triples: Iterable[Triple] = (), prefixes: Optional[PrefixMap] = None):
        self._triples: frozenset[Triple] = frozenset(triples)
        self.prefixes: PrefixMap = prefixes if prefixes is not None else default_prefixes()

    @property
    def triples(self) -> frozenset[Triple]:
        return self._triples

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(sorted(self._triples, key=Triple.sort_key))

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._triples

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Graph)
            and self._triples == other._triples
            and self.prefixes == other.prefixes
        )

    def __repr__(self) -> str:
        return f"Graph(<{len(self._triples)} triples>)"

    def match(
        self,
        s: Optional[Term] = None,
        p: Optional[Term] = None,
        o: Optional[Term] = None,
    ) -> list[Triple]:
        """All triples matching the bound positions, in sorted order."""
        out = [
            t
            for t in self._triples
            if (s is None or t.s == s) and (p is None or t.p == p) and (o is None or t.o == o)
        ]
        out.sort(key=Triple.sort_key)
        return out

    def subjects(self, p: Optional[Term] = None, o: Optional[Term] = None) -> list[Term]:
        seen = {t.s for t in self._triples if (p is None or t.p == p) and (o is None or t.o == o)}
        return sorted(seen, key=term_sort_key)

    def objects(self, s: Optional[Term] = None, p: Optional[Term] = None) -> list[Term]:
        seen = {t.o for t in self._triples if (s is None or t.s == s) and (p is None or t.p == p)}
        return sorted(seen, key=term_sort_key)

    def with_triples(self, extra: Iterable[Triple]) -> "Graph":
        return Graph(self._triples | frozenset(extra), self.prefixes)

    def without_triples(self, removed: Iterable[Triple]) -> "Graph":
        return Graph(self._triples - frozenset(removed), self.prefixes)


def match(g: Graph, s: Optional[Term] = None, p: Optional[Term] = None, o: Optional[Term] = None) -> list[Triple]:
    return g.match(s, p, o)


def _blank_labels(triples: Iterable[Triple]) -> set[str]:
    labels: set[str] = set()
    for t in triples:
        for term in (t.s, t.o):
            if isinstance(term, BlankNode):
                labels.add(term.label)
    return labels


def merge(base: Graph, extension: Graph) -> Graph:
    """Union of the two triple sets.

    Blank labels from `extension` that also occur in `base` are renamed with a
    monotonic `bmerge<N>` counter (deterministic: collisions processed in
    sorted label order). Prefix conflicts resolve in favor of `base`;
    a conflicting extension prefix is re-bound to the first free `<prefix><N>`.
    """
    base_blanks = _blank_labels(base.triples)
    ext_blanks = _blank_labels(extension.triples)
    taken = set(base_blanks)
    renames: dict[str, str] = {}
    counter = 1
    for label in sorted(ext_blanks):
        if label in base_blanks:
            while f"bmerge{counter}" in taken or f"bmerge{counter}" in ext_blanks:
                counter += 1
            renames[label] = f"bmerge{counter}"
            taken.add(renames[label])
            counter += 1

    def rename(term: Term) -> Term:
        if isinstance(term, BlankNode) and term.label in renames:
            return BlankNode(renames[term.label])
        return term

    ext_triples = (
        extension.triples
        if not renames
        else {Triple(rename(t.s), t.p, rename(t.o)) for t in extension.triples}
    )

    merged_bindings = base.prefixes.as_dict()
    for prefix, ns in extension.prefixes.items():
        if prefix not in merged_bindings:
            merged_bindings[prefix] = ns
        elif merged_bindings[prefix] != ns:
            n = 2
            while f"{prefix}{n}" in merged_bindings:
                n += 1
            merged_bindings[f"{prefix}{n}"] = ns

    return Graph(base.triples | frozenset(ext_triples), PrefixMap(merged_bindings))
