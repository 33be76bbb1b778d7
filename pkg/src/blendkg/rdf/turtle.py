"""Hand-written Turtle subset parser and deterministic serializer.

Supported subset: @prefix / PREFIX directives, triples with ';' and ','
continuations, the 'a' keyword, IRIs, CURIEs, labeled blank nodes, anonymous
blank nodes (bare '[]' and '[ p o ; ... ]' property lists), string literals
(short and long, single and double quoted), numeric and boolean shorthand,
'^^' datatypes, and '@lang' tags. RDF collections '( ... )', quoted triples,
and '@base' are unsupported and raise TurtleSyntaxError rather than being
skipped: silent recovery would corrupt validation downstream.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .model import (
    RDF_TYPE,
    XSD_BOOLEAN,
    XSD_DECIMAL,
    XSD_DOUBLE,
    XSD_INTEGER,
    BlankNode,
    Graph,
    Iri,
    Literal,
    PrefixMap,
    Term,
    Triple,
    default_prefixes,
    term_sort_key,
)


class TurtleSyntaxError(ValueError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.message = message


class UnknownPrefixError(ValueError):
    def __init__(self, prefix: str, line: int = 0, column: int = 0):
        super().__init__(f"undeclared prefix: '{prefix}:'")
        self.prefix = prefix
        self.line = line
        self.column = column


@dataclass
class _Token:
    kind: str
    value: str
    line: int
    column: int
    # extra payload: datatype hint for numeric tokens, quote style for strings
    extra: Optional[str] = None


_IRI_ESCAPE = re.compile(r"\\u([0-9A-Fa-f]{4})|\\U([0-9A-Fa-f]{8})")
_PNAME = re.compile(r"^([A-Za-z][A-Za-z0-9_\-]*)?:")
_LANGTAG = re.compile(r"^[a-zA-Z]+(-[a-zA-Z0-9]+)*$")
_INTEGER = re.compile(r"^[+-]?[0-9]+$")
_DECIMAL = re.compile(r"^[+-]?[0-9]*\.[0-9]+$")
_DOUBLE = re.compile(r"^[+-]?(?:[0-9]+\.[0-9]*|\.?[0-9]+)[eE][+-]?[0-9]+$")

_STRING_ESCAPES = {
    "t": "\t",
    "b": "\b",
    "n": "\n",
    "r": "\r",
    "f": "\f",
    '"': '"',
    "'": "'",
    "\\": "\\",
}

# Characters accepted inside prefixed-name local parts. '%NN' passes through
# untouched; backslash escapes are not supported.
_LOCAL_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.%")


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.n = len(text)
        self.i = 0
        self.line = 1
        self.col = 1

    def error(self, message: str) -> TurtleSyntaxError:
        return TurtleSyntaxError(self.line, self.col, message)

    def _advance(self, count: int = 1) -> None:
        for _ in range(count):
            if self.i < self.n and self.text[self.i] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.i += 1

    def _peek(self, offset: int = 0) -> str:
        j = self.i + offset
        return self.text[j] if j < self.n else ""

    def tokens(self) -> list[_Token]:
        out: list[_Token] = []
        while True:
            tok = self._next()
            out.append(tok)
            if tok.kind == "eof":
                return out

    def _next(self) -> _Token:
        while self.i < self.n:
            c = self.text[self.i]
            if c in " \t\r\n":
                self._advance()
                continue
            if c == "#":
                while self.i < self.n and self.text[self.i] != "\n":
                    self._advance()
                continue
            break
        if self.i >= self.n:
            return _Token("eof", "", self.line, self.col)

        line, col = self.line, self.col
        c = self.text[self.i]

        if c == "<":
            return self._iriref(line, col)
        if c in "\"'":
            return self._string(line, col)
        if c == "_" and self._peek(1) == ":":
            return self._blank_label(line, col)
        if c == "[":
            self._advance()
            return _Token("lbracket", "[", line, col)
        if c == "]":
            self._advance()
            return _Token("rbracket", "]", line, col)
        if c == "(":
            raise TurtleSyntaxError(line, col, "RDF collections are not supported")
        if c == ";":
            self._advance()
            return _Token("semicolon", ";", line, col)
        if c == ",":
            self._advance()
            return _Token("comma", ",", line, col)
        if c == "^" and self._peek(1) == "^":
            self._advance(2)
            return _Token("carets", "^^", line, col)
        if c == "@":
            return self._at_word(line, col)
        if c.isdigit() or (c in "+-" and (self._peek(1).isdigit() or self._peek(1) == ".")):
            return self._number(line, col)
        if c == "." and self._peek(1).isdigit():
            return self._number(line, col)
        if c == ".":
            self._advance()
            return _Token("dot", ".", line, col)
        if c.isalpha() or c == ":":
            return self._word(line, col)
        raise TurtleSyntaxError(line, col, f"unexpected character {c!r}")

    def _iriref(self, line: int, col: int) -> _Token:
        self._advance()  # consume '<'
        chars: list[str] = []
        while True:
            if self.i >= self.n:
                raise TurtleSyntaxError(line, col, "unterminated IRI")
            c = self.text[self.i]
            if c == ">":
                self._advance()
                break
            if c in ' "{}|^`' or c == "<" or ord(c) <= 0x20:
                raise self.error(f"illegal character {c!r} in IRI")
            if c == "\\":
                m = _IRI_ESCAPE.match(self.text, self.i)
                if not m:
                    raise self.error("only \\uXXXX/\\UXXXXXXXX escapes allowed in IRIs")
                chars.append(chr(int(m.group(1) or m.group(2), 16)))
                self._advance(m.end() - m.start())
                continue
            chars.append(c)
            self._advance()
        return _Token("iriref", "".join(chars), line, col)

    def _string(self, line: int, col: int) -> _Token:
        quote = self.text[self.i]
        long = self.text[self.i : self.i + 3] == quote * 3
        self._advance(3 if long else 1)
        closer = quote * 3 if long else quote
        chars: list[str] = []
        while True:
            if self.i >= self.n:
                raise TurtleSyntaxError(line, col, "unterminated string literal")
            if self.text.startswith(closer, self.i):
                self._advance(len(closer))
                break
            c = self.text[self.i]
            if not long and c == "\n":
                raise TurtleSyntaxError(line, col, "unterminated string literal")
            if c == "\\":
                esc = self._peek(1)
                if esc in _STRING_ESCAPES:
                    chars.append(_STRING_ESCAPES[esc])
                    self._advance(2)
                    continue
                if esc in "uU":
                    width = 4 if esc == "u" else 8
                    hexdigits = self.text[self.i + 2 : self.i + 2 + width]
                    if len(hexdigits) != width or any(
                        h not in "0123456789abcdefABCDEF" for h in hexdigits
                    ):
                        raise self.error("malformed unicode escape")
                    chars.append(chr(int(hexdigits, 16)))
                    self._advance(2 + width)
                    continue
                raise self.error(f"unknown string escape '\\{esc}'")
            chars.append(c)
            self._advance()
        return _Token("string", "".join(chars), line, col)

    def _blank_label(self, line: int, col: int) -> _Token:
        self._advance(2)  # consume '_:'
        start = self.i
        while self.i < self.n and (self.text[self.i].isalnum() or self.text[self.i] in "_-"):
            self._advance()
        label = self.text[start : self.i]
        if not label:
            raise TurtleSyntaxError(line, col, "empty blank node label")
        return _Token("blank", label, line, col)

    def _at_word(self, line: int, col: int) -> _Token:
        self._advance()  # consume '@'
        start = self.i
        while self.i < self.n and (self.text[self.i].isalnum() or self.text[self.i] == "-"):
            self._advance()
        word = self.text[start : self.i]
        if word == "prefix":
            return _Token("prefix_directive", "@prefix", line, col)
        if word == "base":
            raise TurtleSyntaxError(line, col, "@base is not supported")
        if _LANGTAG.match(word):
            return _Token("langtag", word, line, col)
        raise TurtleSyntaxError(line, col, f"unknown @-token '@{word}'")

    def _number(self, line: int, col: int) -> _Token:
        start = self.i
        while self.i < self.n and self.text[self.i] in "+-0123456789.eE":
            # a '.' not followed by a digit/exponent terminates the statement, not the number
            if self.text[self.i] == ".":
                nxt = self._peek(1)
                if not (nxt.isdigit() or nxt in "eE"):
                    break
            self._advance()
        lexical = self.text[start : self.i]
        if _INTEGER.match(lexical):
            return _Token("number", lexical, line, col, extra=XSD_INTEGER)
        if _DECIMAL.match(lexical):
            return _Token("number", lexical, line, col, extra=XSD_DECIMAL)
        if _DOUBLE.match(lexical):
            return _Token("number", lexical, line, col, extra=XSD_DOUBLE)
        raise TurtleSyntaxError(line, col, f"malformed numeric literal {lexical!r}")

    def _word(self, line: int, col: int) -> _Token:
        start = self.i
        startcol = self.col
        # scan prefix part
        while self.i < self.n and (self.text[self.i].isalnum() or self.text[self.i] in "_-"):
            self._advance()
        if self._peek() == ":":
            prefix = self.text[start : self.i]
            self._advance()  # consume ':'
            local_start = self.i
            while self.i < self.n and self.text[self.i] in _LOCAL_CHARS:
                self._advance()
            local = self.text[local_start : self.i]
            # a trailing '.' belongs to the statement terminator, not the name
            while local.endswith("."):
                local = local[:-1]
                self.i -= 1
                self.col -= 1
            return _Token("pname", f"{prefix}:{local}", line, startcol)
        word = self.text[start : self.i]
        if word == "a":
            return _Token("a", word, line, col)
        if word in ("true", "false"):
            return _Token("boolean", word, line, col)
        if word.upper() == "PREFIX":
            return _Token("prefix_directive", word, line, col)
        if word.upper() == "BASE":
            raise TurtleSyntaxError(line, col, "BASE is not supported")
        raise TurtleSyntaxError(line, col, f"unexpected token {word!r}")


class _Parser:
    def __init__(self, tokens: list[_Token], defaults: PrefixMap):
        self.tokens = tokens
        self.pos = 0
        self.prefixes = defaults.as_dict()
        self.doc_prefixes: dict[str, str] = {}
        self.triples: list[Triple] = []
        used = {t.value for t in tokens if t.kind == "blank"}
        self._anon_counter = 0
        self._used_blank_labels = used

    def _peek(self) -> _Token:
        return self.tokens[self.pos]

    def _take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _expect(self, kind: str, what: str) -> _Token:
        tok = self._take()
        if tok.kind != kind:
            raise TurtleSyntaxError(tok.line, tok.column, f"expected {what}, got {tok.value!r}")
        return tok

    def _fresh_blank(self) -> BlankNode:
        while True:
            self._anon_counter += 1
            label = f"anon{self._anon_counter}"
            if label not in self._used_blank_labels:
                self._used_blank_labels.add(label)
                return BlankNode(label)

    def parse(self) -> tuple[list[Triple], dict[str, str]]:
        while True:
            tok = self._peek()
            if tok.kind == "eof":
                return self.triples, self.doc_prefixes
            if tok.kind == "prefix_directive":
                self._directive()
            else:
                self._triples_block()

    def _directive(self) -> None:
        directive = self._take()
        name = self._expect("pname", "prefix name")
        if not name.value.endswith(":") or ":" in name.value[:-1]:
            raise TurtleSyntaxError(name.line, name.column, "malformed prefix declaration")
        prefix = name.value[:-1]
        iri = self._expect("iriref", "namespace IRI")
        self.prefixes[prefix] = iri.value
        self.doc_prefixes[prefix] = iri.value
        # '@prefix' requires a terminating dot, SPARQL-style 'PREFIX' forbids it
        if directive.value == "@prefix":
            self._expect("dot", "'.'")
        elif self._peek().kind == "dot":
            self._take()

    def _expand_pname(self, tok: _Token) -> Iri:
        prefix, _, local = tok.value.partition(":")
        if prefix not in self.prefixes:
            raise UnknownPrefixError(prefix, tok.line, tok.column)
        return Iri(self.prefixes[prefix] + local)

    def _triples_block(self) -> None:
        subject = self._subject()
        self._predicate_object_list(subject)
        self._expect("dot", "'.'")

    def _subject(self) -> Term:
        tok = self._take()
        if tok.kind == "iriref":
            return self._make_iri(tok)
        if tok.kind == "pname":
            return self._expand_pname(tok)
        if tok.kind == "blank":
            return BlankNode(tok.value)
        if tok.kind == "lbracket":
            return self._blank_property_list(tok)
        raise TurtleSyntaxError(tok.line, tok.column, f"expected subject, got {tok.value!r}")

    def _make_iri(self, tok: _Token) -> Iri:
        try:
            return Iri(tok.value)
        except ValueError as exc:
            raise TurtleSyntaxError(tok.line, tok.column, str(exc)) from None

    def _predicate_object_list(self, subject: Term) -> None:
        while True:
            verb = self._verb()
            self._object_list(subject, verb)
            if self._peek().kind != "semicolon":
                return
            while self._peek().kind == "semicolon":
                self._take()
            # dangling ';' directly before '.' or ']' is tolerated
            if self._peek().kind in ("dot", "rbracket"):
                return

    def _verb(self) -> Iri:
        tok = self._take()
        if tok.kind == "a":
            return Iri(RDF_TYPE)
        if tok.kind == "iriref":
            return self._make_iri(tok)
        if tok.kind == "pname":
            return self._expand_pname(tok)
        raise TurtleSyntaxError(tok.line, tok.column, f"expected predicate, got {tok.value!r}")

    def _object_list(self, subject: Term, verb: Iri) -> None:
        while True:
            obj = self._object()
            self.triples.append(Triple(subject, verb, obj))
            if self._peek().kind == "comma":
                self._take()
                continue
            return

    def _object(self) -> Term:
        tok = self._take()
        if tok.kind == "iriref":
            return self._make_iri(tok)
        if tok.kind == "pname":
            return self._expand_pname(tok)
        if tok.kind == "blank":
            return BlankNode(tok.value)
        if tok.kind == "lbracket":
            return self._blank_property_list(tok)
        if tok.kind == "boolean":
            return Literal(tok.value, datatype=XSD_BOOLEAN)
        if tok.kind == "number":
            return Literal(tok.value, datatype=tok.extra)
        if tok.kind == "string":
            return self._literal_tail(tok)
        raise TurtleSyntaxError(tok.line, tok.column, f"expected object, got {tok.value!r}")

    def _literal_tail(self, tok: _Token) -> Literal:
        nxt = self._peek()
        if nxt.kind == "carets":
            self._take()
            dtok = self._take()
            if dtok.kind == "iriref":
                dt = self._make_iri(dtok).value
            elif dtok.kind == "pname":
                dt = self._expand_pname(dtok).value
            else:
                raise TurtleSyntaxError(dtok.line, dtok.column, "expected datatype IRI after '^^'")
            return Literal(tok.value, datatype=dt)
        if nxt.kind == "langtag":
            self._take()
            return Literal(tok.value, language=nxt.value)
        return Literal(tok.value)

    def _blank_property_list(self, opener: _Token) -> BlankNode:
        node = self._fresh_blank()
        if self._peek().kind == "rbracket":
            self._take()
            return node
        self._predicate_object_list(node)
        closer = self._take()
        if closer.kind != "rbracket":
            raise TurtleSyntaxError(opener.line, opener.column, "unterminated '[' property list")
        return node


def parse_turtle(text: str, defaults: Optional[PrefixMap] = None) -> Graph:
    """Parse a Turtle document into a Graph with all CURIEs expanded.

    Document prefix declarations override `defaults`. Raises TurtleSyntaxError
    on malformed input and UnknownPrefixError for CURIEs whose prefix is
    neither declared in the document nor present in `defaults`.
    """
    base = defaults if defaults is not None else default_prefixes()
    tokens = _Lexer(text).tokens()
    parser = _Parser(tokens, base)
    triples, doc_prefixes = parser.parse()
    return Graph(triples, base.with_bindings(doc_prefixes))


# Local names we re-emit as CURIEs must survive re-lexing unchanged: keep to
# a conservative charset and never end with '.'.
_SAFE_LOCAL = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-.]*$")


def _render_iri(iri: Iri, prefixes: PrefixMap) -> str:
    compacted = prefixes.compact(iri.value)
    if compacted is not None:
        prefix, local = compacted
        if _SAFE_LOCAL.match(local) and not local.endswith("."):
            return f"{prefix}:{local}"
    return f"<{iri.value}>"


def _escape_string(value: str) -> str:
    out: list[str] = []
    for c in value:
        if c == "\\":
            out.append("\\\\")
        elif c == '"':
            out.append('\\"')
        elif c == "\n":
            out.append("\\n")
        elif c == "\r":
            out.append("\\r")
        elif c == "\t":
            out.append("\\t")
        elif ord(c) < 0x20:
            out.append(f"\\u{ord(c):04X}")
        else:
            out.append(c)
    return "".join(out)


def _render_literal(lit: Literal, prefixes: PrefixMap) -> str:
    if lit.datatype == XSD_BOOLEAN and lit.lexical in ("true", "false"):
        return lit.lexical
    if lit.datatype == XSD_INTEGER and _INTEGER.match(lit.lexical):
        return lit.lexical
    if lit.datatype == XSD_DECIMAL and _DECIMAL.match(lit.lexical):
        return lit.lexical
    if lit.datatype == XSD_DOUBLE and _DOUBLE.match(lit.lexical):
        return lit.lexical
    quoted = f'"{_escape_string(lit.lexical)}"'
    if lit.language:
        return f"{quoted}@{lit.language}"
    if lit.datatype:
        return f"{quoted}^^{_render_iri(Iri(lit.datatype), prefixes)}"
    return quoted


def _render_term(term: Term, prefixes: PrefixMap) -> str:
    if isinstance(term, Iri):
        return _render_iri(term, prefixes)
    if isinstance(term, BlankNode):
        return f"_:{term.label}"
    return _render_literal(term, prefixes)


def serialize_turtle(g: Graph) -> str:
    """Deterministic Turtle rendering: a pure function of (triple set, prefixes).

    Prefix directives come out sorted; subjects sort by expanded IRI with
    blanks after IRIs; predicates and objects sort within each subject block.
    """
    lines = [f"@prefix {prefix}: <{ns}> ." for prefix, ns in g.prefixes.items()]
    by_subject: dict[Term, dict[Iri, list[Term]]] = {}
    for t in g.triples:
        by_subject.setdefault(t.s, {}).setdefault(t.p, []).append(t.o)

    if by_subject:
        lines.append("")
    for subject in sorted(by_subject, key=term_sort_key):
        subj_txt = _render_term(subject, g.prefixes)
        pred_parts: list[str] = []
        for pred in sorted(by_subject[subject], key=term_sort_key):
            pred_txt = "a" if pred.value == RDF_TYPE else _render_iri(pred, g.prefixes)
            objects = sorted(by_subject[subject][pred], key=term_sort_key)
            obj_txt = ", ".join(_render_term(o, g.prefixes) for o in objects)
            pred_parts.append(f"{pred_txt} {obj_txt}")
        if len(pred_parts) == 1:
            lines.append(f"{subj_txt} {pred_parts[0]} .")
        else:
            lines.append(f"{subj_txt} {pred_parts[0]} ;")
            for part in pred_parts[1:-1]:
                lines.append(f"    {part} ;")
            lines.append(f"    {pred_parts[-1]} .")
    return "\n".join(lines) + "\n"
