from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blendkg.rdf import (
    RDF_TYPE,
    XSD_BOOLEAN,
    BlankNode,
    Graph,
    Iri,
    Literal,
    PrefixMap,
    Triple,
    default_prefixes,
    merge,
    parse_turtle,
    serialize_turtle,
)
from blendkg.rdf.turtle import TurtleSyntaxError, UnknownPrefixError


def test_single_statement_document():
    g = parse_turtle('@prefix ex: <http://x/> . ex:a ex:b ex:c .')
    assert len(g) == 1
    t = next(iter(g))
    assert t.s == Iri("http://x/a")
    assert t.p == Iri("http://x/b")
    assert t.o == Iri("http://x/c")


def test_boolean_shorthand_uses_default_prefixes():
    g = parse_turtle("ex:m metanet:isMetaphorical true .")
    t = next(iter(g))
    assert t.o == Literal("true", datatype=XSD_BOOLEAN)


def test_crime_fixture_statement_count(fixtures_dir):
    # independent oracle: count '.'-terminated statement lines, skipping
    # directives, comments, and blanks (the fixture is one triple per line)
    text = (fixtures_dir / "crime_skg.ttl").read_text()
    statements = [
        line
        for line in text.splitlines()
        if line.strip().endswith(".")
        and not line.lstrip().startswith(("@prefix", "#"))
    ]
    g = parse_turtle(text)
    assert len(g) == len(statements) == 14


def test_semicolon_and_comma_continuations():
    g = parse_turtle(
        "@prefix ex: <http://x/> .\n"
        "ex:s ex:p ex:o1 , ex:o2 ;\n"
        "     ex:q ex:o3 ;\n"
        ".\n"
    )
    assert len(g) == 3


def test_a_keyword_expands_to_rdf_type():
    g = parse_turtle("@prefix ex: <http://x/> . ex:s a ex:C .")
    assert next(iter(g)).p == Iri(RDF_TYPE)


def test_blank_nodes_labeled_and_anonymous():
    g = parse_turtle(
        "@prefix ex: <http://x/> .\n"
        "_:b1 ex:p ex:o .\n"
        "ex:s ex:q [] .\n"
        "ex:s ex:r [ ex:p ex:o ] .\n"
    )
    assert len(g) == 4
    blanks = {t.s.label for t in g.triples if isinstance(t.s, BlankNode)}
    assert "b1" in blanks


def test_anonymous_labels_avoid_declared_labels():
    g = parse_turtle(
        "@prefix ex: <http://x/> .\n"
        "_:anon1 ex:p ex:o .\n"
        "ex:s ex:q [] .\n"
    )
    labels = set()
    for t in g.triples:
        for term in (t.s, t.o):
            if isinstance(term, BlankNode):
                labels.add(term.label)
    assert len(labels) == 2  # the generated label did not capture _:anon1


def test_literals_with_datatype_language_and_escapes():
    g = parse_turtle(
        '@prefix ex: <http://x/> . @prefix xsd: <http://www.w3.org/2001/XMLSchema#> .\n'
        'ex:s ex:a "plain" .\n'
        'ex:s ex:b "typed"^^xsd:string .\n'
        'ex:s ex:c "tagged"@en-GB .\n'
        'ex:s ex:d "esc \\"q\\" \\n \\u00e9" .\n'
        "ex:s ex:e 42 .\n"
        "ex:s ex:f 3.14 .\n"
        "ex:s ex:g 1.0e3 .\n"
        "ex:s ex:h false .\n"
    )
    literals = {t.o.lexical for t in g.triples}
    assert 'esc "q" \n é' in literals
    assert "42" in literals


def test_long_strings_keep_newlines():
    g = parse_turtle('@prefix ex: <http://x/> . ex:s ex:p """line1\nline2""" .')
    assert next(iter(g)).o.lexical == "line1\nline2"


def test_sparql_style_prefix_directive():
    g = parse_turtle("PREFIX ex: <http://x/>\nex:a ex:b ex:c .")
    assert len(g) == 1


def test_document_prefixes_override_defaults():
    defaults = PrefixMap({"ex": "http://default/"})
    g = parse_turtle("@prefix ex: <http://doc/> . ex:a ex:b ex:c .", defaults)
    assert next(iter(g)).s == Iri("http://doc/a")


@pytest.mark.parametrize(
    "document, error",
    [
        ("<http://x/a> <http://x/b> <http://x/c>", "expected"),  # missing terminating dot
        ('@prefix ex: <http://x/> . ex:s ex:p "unterminated .', "unterminated string"),
        ("@prefix ex: <http://x/> . ex:s ex:p (1 2) .", "collections"),
        ("@base <http://x/> .", "not supported"),
        ("<relative> <http://x/p> <http://x/o> .", "absolute"),
    ],
)
def test_syntax_errors(document, error):
    with pytest.raises(TurtleSyntaxError) as excinfo:
        parse_turtle(document, PrefixMap({}))
    assert error in str(excinfo.value)


def test_syntax_error_carries_position():
    with pytest.raises(TurtleSyntaxError) as excinfo:
        parse_turtle("@prefix ex: <http://x/> .\nex:s ex:p (1) .")
    assert excinfo.value.line == 2
    assert excinfo.value.column > 0


def test_unknown_prefix():
    with pytest.raises(UnknownPrefixError) as excinfo:
        parse_turtle("nope:a nope:b nope:c .", PrefixMap({}))
    assert excinfo.value.prefix == "nope"


def test_literal_cannot_have_datatype_and_language():
    with pytest.raises(ValueError):
        Literal("x", datatype="http://x/dt", language="en")


def test_predicate_must_be_iri():
    with pytest.raises(ValueError):
        Triple(Iri("http://x/s"), BlankNode("b"), Iri("http://x/o"))


def test_prefix_expand_compact_identity():
    prefixes = default_prefixes()
    for prefix, ns in prefixes.items():
        expanded = prefixes.expand(prefix, "Local")
        assert prefixes.compact(expanded) == (prefix, "Local")


def test_serialize_empty_graph_is_sorted_prefix_directives():
    g = Graph((), PrefixMap({"b": "http://b/", "a": "http://a/"}))
    assert serialize_turtle(g) == "@prefix a: <http://a/> .\n@prefix b: <http://b/> .\n"


def test_roundtrip_fixture(fixtures_dir):
    for name in ("crime_skg.ttl", "crime_xkg.ttl", "ideas_food_xkg.ttl"):
        g = parse_turtle((fixtures_dir / name).read_text())
        assert parse_turtle(serialize_turtle(g)).triples == g.triples


def test_serialization_deterministic_under_insertion_order():
    triples = [
        Triple(Iri(f"http://x/s{i}"), Iri(f"http://x/p{i % 3}"), Literal(f"v{i}"))
        for i in range(12)
    ]
    rng = random.Random(5)
    previous = None
    for _ in range(6):
        shuffled = triples[:]
        rng.shuffle(shuffled)
        text = serialize_turtle(Graph(shuffled, PrefixMap({"ex": "http://x/"})))
        if previous is not None:
            assert text == previous
        previous = text


def test_serialized_document_declares_every_prefix_it_uses():
    g = parse_turtle("@prefix ex: <http://x/> . ex:a ex:b ex:c .", PrefixMap({}))
    text = serialize_turtle(g)
    for line in text.splitlines():
        if not line or line.startswith("@prefix"):
            continue
        for token in line.split():
            if ":" in token and not token.startswith(("<", '"', "_:")):
                prefix = token.split(":", 1)[0]
                assert f"@prefix {prefix}: " in text


def test_merge_identity_and_disjoint_union():
    g = parse_turtle("@prefix ex: <http://x/> . ex:a ex:b ex:c .")
    empty = Graph((), g.prefixes)
    assert merge(g, empty) == g
    other = parse_turtle(
        "@prefix ex: <http://x/> . ex:d ex:e ex:f . ex:g ex:h ex:i . "
        "ex:j ex:k ex:l . ex:m ex:n ex:o ."
    )
    three = parse_turtle(
        "@prefix ex: <http://x/> . ex:a ex:b ex:c . ex:p ex:q ex:r . ex:s ex:t ex:u ."
    )
    assert len(merge(three, other)) == 7


def test_merge_shared_triple_counts_once():
    a = parse_turtle("@prefix ex: <http://x/> . ex:a ex:b ex:c . ex:d ex:e ex:f .")
    b = parse_turtle("@prefix ex: <http://x/> . ex:a ex:b ex:c . ex:g ex:h ex:i .")
    # oracle: set union over the sorted triple lists
    expected = set(a.triples) | set(b.triples)
    merged = merge(a, b)
    assert merged.triples == frozenset(expected)
    assert len(merged) == len(a) + len(b) - 1


def test_merge_renames_colliding_blank_labels():
    a = parse_turtle("@prefix ex: <http://x/> . _:n1 ex:p ex:o1 .")
    b = parse_turtle("@prefix ex: <http://x/> . _:n1 ex:p ex:o2 .")
    merged = merge(a, b)
    labels = {t.s.label for t in merged.triples}
    assert labels == {"n1", "bmerge1"}


def test_merge_rebinds_conflicting_prefixes():
    a = parse_turtle("@prefix ex: <http://a/> . ex:a ex:b ex:c .", PrefixMap({}))
    b = parse_turtle("@prefix ex: <http://b/> . ex:a ex:b ex:c .", PrefixMap({}))
    merged = merge(a, b)
    bindings = merged.prefixes.as_dict()
    assert bindings["ex"] == "http://a/"
    assert "http://b/" in bindings.values()
    # both namespaces still compact unambiguously
    assert parse_turtle(serialize_turtle(merged)).triples == merged.triples


def test_merge_associative_on_ground_graphs():
    g1 = parse_turtle("@prefix ex: <http://x/> . ex:a ex:b ex:c .")
    g2 = parse_turtle("@prefix ex: <http://x/> . ex:d ex:e ex:f .")
    g3 = parse_turtle("@prefix ex: <http://x/> . ex:g ex:h ex:i . ex:a ex:b ex:c .")
    left = merge(merge(g1, g2), g3)
    right = merge(g1, merge(g2, g3))
    assert left.triples == right.triples


def test_match_patterns(fixtures_dir):
    g = parse_turtle((fixtures_dir / "crime_xkg.ttl").read_text())
    empty = Graph((), g.prefixes)
    assert empty.match() == []
    blendables = g.match(None, Iri(RDF_TYPE), Iri("http://www.ontologydesignpatterns.org/ont/blending/blending.owl#Blendable"))
    assert len(blendables) == 2
    t = blendables[0]
    assert g.match(t.s, t.p, t.o) == [t]
    assert len(g.match()) == len(g)


def test_match_unbound_returns_sorted():
    g = parse_turtle("@prefix ex: <http://x/> . ex:b ex:p ex:o . ex:a ex:p ex:o .")
    subjects = [t.s.value for t in g.match()]
    assert subjects == sorted(subjects)


# -- generator-based properties ---------------------------------------------

_iri = st.integers(min_value=0, max_value=30).map(lambda i: Iri(f"http://t.example/n{i}"))
_pred = st.integers(min_value=0, max_value=8).map(lambda i: Iri(f"http://t.example/p{i}"))
_blank = st.integers(min_value=0, max_value=9).map(lambda i: BlankNode(f"b{i}"))
_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), min_codepoint=1),
    max_size=24,
)
_literal = st.one_of(
    _text.map(Literal),
    _text.map(lambda s: Literal(s, datatype="http://t.example/dt")),
    _text.map(lambda s: Literal(s, language="en")),
    st.integers(-999, 999).map(lambda n: Literal(str(n), datatype="http://www.w3.org/2001/XMLSchema#integer")),
    st.booleans().map(lambda b: Literal("true" if b else "false", datatype=XSD_BOOLEAN)),
)
_subject = st.one_of(_iri, _blank)
_object = st.one_of(_iri, _blank, _literal)
_triples = st.lists(
    st.builds(Triple, _subject, _pred, _object), min_size=0, max_size=25
)


@settings(max_examples=120, deadline=None)
@given(_triples)
def test_roundtrip_property(triples):
    g = Graph(triples, PrefixMap({"t": "http://t.example/"}))
    parsed = parse_turtle(serialize_turtle(g), PrefixMap({}))
    assert parsed.triples == g.triples
