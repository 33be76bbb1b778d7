from .model import (
    BLENDING_NS,
    EXAMPLE_NS,
    FRED_NS,
    METANET_NS,
    OWL_NS,
    PERSPECTIVISATION_NS,
    RDF_NS,
    RDF_TYPE,
    RDFS_LABEL,
    RDFS_NS,
    XSD_BOOLEAN,
    XSD_NS,
    BlankNode,
    Graph,
    Iri,
    Literal,
    PrefixMap,
    Term,
    Triple,
    default_prefixes,
    match,
    merge,
    term_sort_key,
)
from .turtle import TurtleSyntaxError, UnknownPrefixError, parse_turtle, serialize_turtle

__all__ = [
    "BLENDING_NS",
    "EXAMPLE_NS",
    "FRED_NS",
    "METANET_NS",
    "OWL_NS",
    "PERSPECTIVISATION_NS",
    "RDF_NS",
    "RDF_TYPE",
    "RDFS_LABEL",
    "RDFS_NS",
    "XSD_BOOLEAN",
    "XSD_NS",
    "BlankNode",
    "Graph",
    "Iri",
    "Literal",
    "PrefixMap",
    "Term",
    "Triple",
    "default_prefixes",
    "match",
    "merge",
    "term_sort_key",
    "TurtleSyntaxError",
    "UnknownPrefixError",
    "parse_turtle",
    "serialize_turtle",
]
