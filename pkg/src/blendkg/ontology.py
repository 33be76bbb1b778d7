"""Conceptual-blending vocabulary, XKG validation, and blend extraction.

An extended knowledge graph (XKG) is expected to classify a sentence through
a `metanet:isMetaphorical` boolean and, when metaphorical, to describe the
blend: two Blendable input frames mapped through a generic Blending space
into a Blended space, refined by a perspectivisation Lens and Attitude.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .rdf import (
    BLENDING_NS,
    EXAMPLE_NS,
    METANET_NS,
    PERSPECTIVISATION_NS,
    RDF_TYPE,
    RDFS_LABEL,
    XSD_BOOLEAN,
    Graph,
    Iri,
    Literal,
    Term,
    term_sort_key,
)

# Classes
BL_BLEND = Iri(BLENDING_NS + "Blend")
BL_BLENDABLE = Iri(BLENDING_NS + "Blendable")
BL_BLENDED = Iri(BLENDING_NS + "Blended")
BL_BLENDING = Iri(BLENDING_NS + "Blending")
# Object properties
BL_BLENDABLE_COMPONENT = Iri(BLENDING_NS + "blendableComponent")
BL_BLENDED_COMPONENT = Iri(BLENDING_NS + "blendedComponent")
BL_BLENDING_COMPONENT = Iri(BLENDING_NS + "blendingComponent")
BL_ENABLES_BLENDING = Iri(BLENDING_NS + "enablesBlending")
BL_INHERITS_ROLE_FROM = Iri(BLENDING_NS + "inheritsRoleFrom")
# Perspectivisation
CP_LENS = Iri(PERSPECTIVISATION_NS + "Lens")
CP_ATTITUDE = Iri(PERSPECTIVISATION_NS + "Attitude")
CP_CONCEPTUALISER = Iri(PERSPECTIVISATION_NS + "Conceptualiser")
CP_CUT = Iri(PERSPECTIVISATION_NS + "Cut")
# Datatype property carrying the classification
METANET_IS_METAPHORICAL = Iri(METANET_NS + "isMetaphorical")
# Artifact-level annotation marking which Blendable is the source and which
# the target; the ontology core does not distinguish the two structurally.
HAS_BLENDABLE_ROLE = Iri(EXAMPLE_NS + "hasBlendableRole")

VOCABULARY = {
    "bl:Blend": BL_BLEND,
    "bl:Blendable": BL_BLENDABLE,
    "bl:Blended": BL_BLENDED,
    "bl:Blending": BL_BLENDING,
    "bl:blendableComponent": BL_BLENDABLE_COMPONENT,
    "bl:blendedComponent": BL_BLENDED_COMPONENT,
    "bl:blendingComponent": BL_BLENDING_COMPONENT,
    "bl:enablesBlending": BL_ENABLES_BLENDING,
    "bl:inheritsRoleFrom": BL_INHERITS_ROLE_FROM,
    "cp:Lens": CP_LENS,
    "cp:Attitude": CP_ATTITUDE,
    "cp:Conceptualiser": CP_CONCEPTUALISER,
    "cp:Cut": CP_CUT,
    "metanet:isMetaphorical": METANET_IS_METAPHORICAL,
}

_COMPONENT_PROPS = (BL_BLENDABLE_COMPONENT, BL_BLENDED_COMPONENT, BL_BLENDING_COMPONENT)

_IRI_TYPE = Iri(RDF_TYPE)
_IRI_LABEL = Iri(RDFS_LABEL)


class ValidationLevel(Enum):
    LENIENT = "lenient"
    STRICT = "strict"


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Finding:
    code: str
    severity: Severity
    node: Optional[Term]
    message: str


@dataclass(frozen=True)
class ValidationReport:
    level: ValidationLevel
    passed: bool
    findings: tuple[Finding, ...]

    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity is Severity.ERROR]


class NoVerdict(ValueError):
    pass


class AmbiguousVerdict(ValueError):
    pass


class StructureError(ValueError):
    def __init__(self, code: str, message: str = ""):
        super().__init__(message or code)
        self.code = code


class MissingLabels(ValueError):
    pass


class VocabularyMismatch(ValueError):
    def __init__(self, missing: list[str]):
        super().__init__("ontology file does not declare: " + ", ".join(missing))
        self.missing = missing


@dataclass(frozen=True)
class MetaphoricityVerdict:
    metaphorical: bool
    evidence_node: Term
    source_label: Optional[str] = None
    target_label: Optional[str] = None
    property_label: Optional[str] = None


@dataclass(frozen=True)
class Role:
    node: Term
    label: str
    inherits_from: Optional[Term] = None


@dataclass(frozen=True)
class Blendable:
    node: Term
    label: str
    roles: tuple[Role, ...] = ()
    role_marker: Optional[str] = None  # "source" / "target" annotation


@dataclass(frozen=True)
class InheritedRole:
    role: Term
    source_blendable: Optional[Term]


@dataclass(frozen=True)
class BlendStructure:
    blending_node: Term
    blending_label: str
    blendables: tuple[Blendable, Blendable]
    blended_node: Term
    blended_label: str
    inherited_roles: tuple[InheritedRole, ...] = ()
    lens: Optional[tuple[Term, str]] = None
    attitude: Optional[tuple[Term, str]] = None
    conceptualiser: Optional[Term] = None
    blending_property: Optional[str] = None
    metaphorical: bool = True

    def __post_init__(self) -> None:
        if len(self.blendables) != 2:
            raise StructureError("BLENDABLE_COUNT", "a blend needs exactly two blendables")
        if self.metaphorical and not all(b.label for b in self.blendables):
            raise MissingLabels("metaphorical blendables must carry frame labels")


def boolean_value(term: Term) -> Optional[bool]:
    """Normalize the accepted boolean literal shapes to a bool, else None.

    Accepted: `true`/`false` shorthand, `"true"^^xsd:boolean`, and plain
    `"true"` (LLM output varies); lexicals are matched case-insensitively.
    """
    if not isinstance(term, Literal) or term.language is not None:
        return None
    if term.datatype not in (None, XSD_BOOLEAN):
        return None
    lowered = term.lexical.strip().lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    return None


def _typed(g: Graph, cls: Iri) -> list[Term]:
    return [t.s for t in g.match(None, _IRI_TYPE, cls)]


def _components(g: Graph, frame: Term) -> set[Term]:
    out = {frame}
    for prop in _COMPONENT_PROPS:
        out.update(t.o for t in g.match(frame, prop, None))
    return out


def _linked_to_blending(g: Graph, blendable: Term, blendings: list[Term]) -> bool:
    # One inheritsRoleFrom hop between the blendable's neighborhood (itself or
    # its component roles) and some blending's neighborhood, either direction
    # covering both frame-level and role-level mappings.
    sources = _components(g, blendable)
    targets: set[Term] = set()
    for blending in blendings:
        targets.update(_components(g, blending))
    for edge in g.match(None, BL_INHERITS_ROLE_FROM, None):
        if edge.s in sources and edge.o in targets:
            return True
    return False


def validate_xkg(g: Graph, level: ValidationLevel = ValidationLevel.STRICT) -> ValidationReport:
    """Check an XKG against the required blend elements.

    Lenient: exactly one boolean `metanet:isMetaphorical` assertion. Strict
    adds the structural requirements, applied only when the verdict is true
    (literal sentences produce no blend). Problems are findings, not raised.
    """
    findings: list[Finding] = []
    verdict_triples = g.match(None, METANET_IS_METAPHORICAL, None)
    if not verdict_triples:
        findings.append(
            Finding("MISSING_VERDICT", Severity.ERROR, None, "no isMetaphorical assertion found")
        )
    elif len(verdict_triples) > 1:
        findings.append(
            Finding(
                "MULTIPLE_VERDICT",
                Severity.ERROR,
                verdict_triples[0].s,
                f"{len(verdict_triples)} isMetaphorical assertions, expected exactly one",
            )
        )
    verdict: Optional[bool] = None
    if verdict_triples:
        verdict = boolean_value(verdict_triples[0].o)
        if verdict is None:
            findings.append(
                Finding(
                    "NON_BOOLEAN_VERDICT",
                    Severity.ERROR,
                    verdict_triples[0].s,
                    f"isMetaphorical value is not boolean: {verdict_triples[0].o!r}",
                )
            )

    if level is ValidationLevel.STRICT and verdict is True and len(verdict_triples) == 1:
        findings.extend(_strict_findings(g))

    passed = not any(f.severity is Severity.ERROR for f in findings)
    return ValidationReport(level=level, passed=passed, findings=tuple(findings))


def _strict_findings(g: Graph) -> list[Finding]:
    findings: list[Finding] = []
    blendings = _typed(g, BL_BLENDING)
    blendables = _typed(g, BL_BLENDABLE)
    blendeds = _typed(g, BL_BLENDED)

    if not blendings:
        findings.append(
            Finding("MISSING_BLENDING", Severity.ERROR, None, "no node typed bl:Blending")
        )
    if len(blendables) != 2:
        findings.append(
            Finding(
                "BLENDABLE_COUNT",
                Severity.ERROR,
                None,
                f"{len(blendables)} nodes typed bl:Blendable, expected exactly 2",
            )
        )
    if not blendeds:
        findings.append(
            Finding("MISSING_BLENDED", Severity.ERROR, None, "no node typed bl:Blended")
        )
    if not _typed(g, CP_LENS):
        findings.append(Finding("MISSING_LENS", Severity.ERROR, None, "no node typed cp:Lens"))
    if not _typed(g, CP_ATTITUDE):
        findings.append(
            Finding("MISSING_ATTITUDE", Severity.ERROR, None, "no node typed cp:Attitude")
        )

    if blendings:
        for blendable in blendables:
            if not _linked_to_blending(g, blendable, blendings):
                findings.append(
                    Finding(
                        "UNLINKED_BLENDABLE",
                        Severity.ERROR,
                        blendable,
                        "blendable has no inheritsRoleFrom path to the blending space",
                    )
                )
        if blendeds:
            enabled = any(
                t.o in blendeds for b in blendings for t in g.match(b, BL_ENABLES_BLENDING, None)
            )
            if not enabled:
                findings.append(
                    Finding(
                        "MISSING_ENABLES_BLENDING",
                        Severity.ERROR,
                        blendings[0],
                        "blending is not linked to the blended space via enablesBlending",
                    )
                )

    # The Blend meta-node is described by the ontology but not demanded of
    # every graph; its absence is worth flagging, not failing.
    if not _typed(g, BL_BLEND):
        findings.append(
            Finding("BLEND_NODE_ABSENT", Severity.WARNING, None, "no bl:Blend meta-node present")
        )
    return findings


_CAMEL_SPLIT = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")


def local_name(term: Term) -> str:
    if not isinstance(term, Iri):
        return ""
    value = term.value
    for sep in ("#", "/", ":"):
        idx = value.rfind(sep)
        if idx != -1 and idx + 1 < len(value):
            return value[idx + 1 :]
    return value


def decamel(name: str) -> str:
    """`CrimeAsDisease` -> `Crime As Disease`; underscores become spaces."""
    return _CAMEL_SPLIT.sub(" ", name.replace("_", " ")).strip()


def label_for(g: Graph, node: Term) -> str:
    for t in g.match(node, _IRI_LABEL, None):
        if isinstance(t.o, Literal):
            return t.o.lexical
    return decamel(local_name(node))


def _property_label(g: Graph, node: Term) -> str:
    # Explicit labels pass through verbatim; names derived from the IRI are
    # lowercased, matching the convention that blending criteria are common
    # nouns ("internalization", "contamination").
    for t in g.match(node, _IRI_LABEL, None):
        if isinstance(t.o, Literal):
            return t.o.lexical
    return decamel(local_name(node)).lower()


def _role_marker(g: Graph, node: Term) -> Optional[str]:
    for t in g.match(node, HAS_BLENDABLE_ROLE, None):
        if isinstance(t.o, Literal) and t.o.lexical.lower() in ("source", "target"):
            return t.o.lexical.lower()
    return None


def extract_verdict(g: Graph) -> MetaphoricityVerdict:
    """Read the metaphoricity boolean; labels are filled when a blend parses.

    Raises NoVerdict with zero assertions and AmbiguousVerdict when multiple
    assertions disagree.
    """
    values: list[tuple[Term, bool]] = []
    for t in g.match(None, METANET_IS_METAPHORICAL, None):
        value = boolean_value(t.o)
        if value is not None:
            values.append((t.s, value))
    if not values:
        raise NoVerdict("no boolean isMetaphorical assertion found")
    distinct = {v for _, v in values}
    if len(distinct) > 1:
        raise AmbiguousVerdict("conflicting isMetaphorical assertions")
    node, value = values[0]

    source = target = prop = None
    if value:
        try:
            blend = extract_blend(g)
        except (StructureError, MissingLabels):
            blend = None
        if blend is not None:
            source, target = source_target(blend)
            prop = blend.blending_property
    return MetaphoricityVerdict(
        metaphorical=value,
        evidence_node=node,
        source_label=source,
        target_label=target,
        property_label=prop,
    )


def extract_blend(g: Graph) -> BlendStructure:
    """Build the typed blend structure from a Strict-valid metaphorical XKG.

    On an invalid graph this raises StructureError carrying the first failed
    Strict rule's code.
    """
    report = validate_xkg(g, ValidationLevel.STRICT)
    errors = report.errors()
    if errors:
        first = errors[0]
        raise StructureError(first.code, first.message)
    verdict_triples = g.match(None, METANET_IS_METAPHORICAL, None)
    if not verdict_triples or boolean_value(verdict_triples[0].o) is not True:
        raise StructureError("NOT_METAPHORICAL", "graph does not assert a metaphor")

    blending = _typed(g, BL_BLENDING)[0]
    blending_roles = set(_components(g, blending)) - {blending}

    blendables: list[Blendable] = []
    for node in _typed(g, BL_BLENDABLE):
        roles = []
        for t in g.match(node, BL_BLENDABLE_COMPONENT, None):
            inherits = None
            for edge in g.match(t.o, BL_INHERITS_ROLE_FROM, None):
                if edge.o in blending_roles or edge.o == blending:
                    inherits = edge.o
                    break
            roles.append(Role(node=t.o, label=label_for(g, t.o), inherits_from=inherits))
        blendables.append(
            Blendable(
                node=node,
                label=label_for(g, node),
                roles=tuple(sorted(roles, key=lambda r: term_sort_key(r.node))),
                role_marker=_role_marker(g, node),
            )
        )

    blended = _typed(g, BL_BLENDED)[0]
    blendable_neighborhoods = {b.node: _components(g, b.node) for b in blendables}
    inherited: list[InheritedRole] = []
    for t in g.match(blended, BL_BLENDED_COMPONENT, None):
        source_frame: Optional[Term] = None
        for edge in g.match(t.o, BL_INHERITS_ROLE_FROM, None):
            for frame, neighborhood in blendable_neighborhoods.items():
                if edge.o in neighborhood:
                    source_frame = frame
                    break
            if source_frame is not None:
                break
        inherited.append(InheritedRole(role=t.o, source_blendable=source_frame))

    lenses = _typed(g, CP_LENS)
    attitudes = _typed(g, CP_ATTITUDE)
    conceptualisers = _typed(g, CP_CONCEPTUALISER)

    return BlendStructure(
        blending_node=blending,
        blending_label=label_for(g, blending),
        blendables=(blendables[0], blendables[1]),
        blended_node=blended,
        blended_label=label_for(g, blended),
        inherited_roles=tuple(sorted(inherited, key=lambda r: term_sort_key(r.role))),
        lens=(lenses[0], label_for(g, lenses[0])) if lenses else None,
        attitude=(attitudes[0], label_for(g, attitudes[0])) if attitudes else None,
        conceptualiser=conceptualisers[0] if conceptualisers else None,
        blending_property=_property_label(g, blending),
        metaphorical=True,
    )


def source_target(b: BlendStructure) -> tuple[str, str]:
    """Frame labels ordered (source, target).

    Ordering trusts the explicit role annotation when present; without
    markers the stored (node-sorted) order stands. Raises MissingLabels when
    either frame lacks a label.
    """
    first, second = b.blendables
    if not first.label or not second.label:
        raise MissingLabels("both blendables need frame labels to order source/target")
    if first.role_marker == "target" or second.role_marker == "source":
        first, second = second, first
    return (first.label, second.label)


def cross_check_vocabulary(ontology_graph: Graph) -> list[str]:
    """IRIs from the bundled vocabulary that the supplied ontology never mentions."""
    mentioned: set[Term] = set()
    for t in ontology_graph.triples:
        mentioned.add(t.s)
        mentioned.add(t.p)
        mentioned.add(t.o)
    return sorted(name for name, iri in VOCABULARY.items() if iri not in mentioned)
