"""blendkg: knowledge-graph augmented metaphor detection and understanding.

Text (or an image caption) is converted to a semantic knowledge graph by an
external service, an LLM extends that graph with conceptual-blending triples
emitted as Turtle, and the extended graph is validated and mined for a
metaphoricity verdict plus source/target/property mappings.
"""

__version__ = "0.1.0"
