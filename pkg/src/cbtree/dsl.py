"""The ``.bt`` tree-definition language.

A document is a list of declarations followed by one parenthesized node::

    resources {A, B, C}
    group g1 relative 0.1
    action arm linear a=0.01
    action head linear a=0.05
    (par 2 (psync g1 (act arm)) (psync g1 (act head)))

Declarations::

    resources { IDENT (, IDENT)* }
    group IDENT absolute [ NUM* ]  |  group IDENT relative NUM
    action IDENT KIND (IDENT = (NUM | [ NUM* ]))* [uses { IDENT, ... }]
    condition IDENT (true | false)

Nodes::

    (seq N+)  (seq* N+)  (fb N+)  (fb* N+)  (par NUM N+)
    (psync GROUP N)  (rsync zero N)  (rsync const NUM N)
    (act NAME)  (cond NAME)

``#`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

SYNTAX = "E001"
UNKNOWN_GROUP = "E002"
UNKNOWN_RESOURCE = "E003"
UNKNOWN_ACTION = "E004"
ARITY = "E005"
PARALLEL_THRESHOLD = "E006"
DUPLICATE = "E007"
INVALID_VALUE = "E008"
UNKNOWN_KIND = "E009"
UNKNOWN_CONDITION = "E010"
RESOURCE_CONFLICT = "W101"

ACTION_KINDS: dict[str, dict[str, bool]] = {
    # parameter -> required
    "linear": {"a": True, "noise": False, "start": False},
    "profile": {"step": False, "table": False, "start": False},
    "battery": {"step": False, "start": False},
    "perpetual": {},
    "fail": {},
}

COMPOSITES = {"seq", "seq*", "fb", "fb*", "par"}
DECORATORS = {"psync", "rsync"}
LEAVES = {"act", "cond"}
NODE_KINDS = COMPOSITES | DECORATORS | LEAVES
DECL_KEYWORDS = {"resources", "group", "action", "condition"}


@dataclass(frozen=True)
class Span:
    line: int
    col: int
    offset: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NOWHERE = Span(0, 0, 0)


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Span
    severity: str = "error"

    @property
    def is_error(self) -> bool:
        return self.severity == "error"

    def format(self, filename: str = "<string>") -> str:
        return f"{filename}:{self.span.line}:{self.span.col}: {self.code}: {self.message}"


class DSLError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic], filename: str = "<string>"):
        self.diagnostics = diagnostics
        self.filename = filename
        super().__init__("\n".join(d.format(filename) for d in diagnostics))


@dataclass
class GroupDecl:
    name: str
    policy: str  # "absolute" | "relative"
    values: tuple[float, ...]
    span: Span = field(default=NOWHERE, compare=False, repr=False)


@dataclass
class ActionDecl:
    name: str
    kind: str
    params: dict[str, float | tuple[float, ...]] = field(default_factory=dict)
    uses: tuple[str, ...] = ()
    span: Span = field(default=NOWHERE, compare=False, repr=False)


@dataclass
class NodeExpr:
    kind: str
    arg: int | float | str | None = None
    children: tuple[NodeExpr, ...] = ()
    span: Span = field(default=NOWHERE, compare=False, repr=False)

    def walk(self) -> Iterator[NodeExpr]:
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass
class TreeDocument:
    root: NodeExpr | None = None
    resources: tuple[str, ...] | None = None
    groups: dict[str, GroupDecl] = field(default_factory=dict)
    actions: dict[str, ActionDecl] = field(default_factory=dict)
    conditions: dict[str, bool] = field(default_factory=dict)
    resources_span: Span = field(default=NOWHERE, compare=False, repr=False)


def group_members(doc: TreeDocument, name: str) -> int:
    """Number of ``psync`` nodes joining group ``name``."""
    if doc.root is None:
        return 0
    return sum(1 for n in doc.root.walk() if n.kind == "psync" and n.arg == name)


# -- lexing ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*\*?)
  | (?P<punct>[(){}\[\],=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num" | "ident" | one punctuation char | "eof"
    text: str
    span: Span


def tokenize(text: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        span = Span(line, pos - line_start + 1, pos)
        if m is None:
            diags.append(Diagnostic(SYNTAX, f"unexpected character {text[pos]!r}", span))
            if text[pos] == "\n":
                line, line_start = line + 1, pos + 1
            pos += 1
            continue
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "punct":
            tokens.append(Token(lexeme, lexeme, span))
        elif kind != "ws":
            tokens.append(Token(kind, lexeme, span))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, pos - line_start + 1, pos)))
    return tokens, diags


# -- parsing -----------------------------------------------------------------


class _Abort(Exception):
    pass


class _Parser:
    def __init__(self, text: str):
        self.tokens, self.diags = tokenize(text)
        self.i = 0
        self.doc = TreeDocument()

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, message: str, span: Span | None = None, code: str = SYNTAX) -> _Abort:
        diag = Diagnostic(code, message, span or self.tok.span)
        # nested nodes all trip over the same missing ')' at end of input
        if not (self.diags and self.diags[-1].code == code and self.diags[-1].span == diag.span):
            self.diags.append(diag)
        return _Abort()

    def expect(self, kind: str, what: str | None = None) -> Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what or repr(kind)}, found {found!r}")
        return self.advance()

    def keyword(self, *words: str) -> Token:
        if self.tok.kind != "ident" or self.tok.text not in words:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {' or '.join(map(repr, words))}, found {found!r}")
        return self.advance()

    def number(self) -> float:
        t = self.expect("num", "a number")
        return float(t.text)

    def ident_list(self) -> list[Token]:
        self.expect("{")
        names: list[Token] = []
        if self.tok.kind != "}":
            names.append(self.expect("ident", "a name"))
            while self.tok.kind == ",":
                self.advance()
                names.append(self.expect("ident", "a name"))
        self.expect("}")
        return names

    # declarations

    def parse(self) -> TreeDocument:
        while self.tok.kind == "ident" and self.tok.text in DECL_KEYWORDS:
            start = self.i
            try:
                self.declaration()
            except _Abort:
                self.recover_declaration(start)
        if self.tok.kind == "(":
            self.doc.root = self.node()
        else:
            self.error(f"expected a declaration or a node, found {self.tok.text or 'end of input'!r}")
            return self.doc
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r} after the root node")
        return self.doc

    def recover_declaration(self, start: int) -> None:
        if self.i == start:
            self.advance()
        while self.tok.kind != "eof" and self.tok.kind != "(" and not (
            self.tok.kind == "ident" and self.tok.text in DECL_KEYWORDS
        ):
            self.advance()

    def declaration(self) -> None:
        kw = self.advance()
        doc = self.doc
        if kw.text == "resources":
            names = self.ident_list()
            if doc.resources is not None:
                self.error("resources declared twice", kw.span, DUPLICATE)
                return
            seen: list[str] = []
            for t in names:
                if t.text in seen:
                    self.error(f"resource {t.text!r} listed twice", t.span, DUPLICATE)
                else:
                    seen.append(t.text)
            doc.resources = tuple(seen)
            doc.resources_span = kw.span
        elif kw.text == "group":
            name = self.expect("ident", "a group name")
            policy = self.keyword("absolute", "relative")
            if policy.text == "absolute":
                self.expect("[")
                values = []
                while self.tok.kind == "num":
                    values.append(self.number())
                self.expect("]")
            else:
                values = [self.number()]
            if name.text in doc.groups:
                self.error(f"group {name.text!r} declared twice", name.span, DUPLICATE)
                return
            doc.groups[name.text] = GroupDecl(name.text, policy.text, tuple(values), name.span)
        elif kw.text == "action":
            name = self.expect("ident", "an action name")
            kind = self.expect("ident", "an action kind")
            params: dict[str, float | tuple[float, ...]] = {}
            uses: tuple[str, ...] = ()
            while self.tok.kind == "ident" and self.peek().kind == "=":
                key = self.advance()
                self.advance()
                if self.tok.kind == "[":
                    self.advance()
                    vals = []
                    while self.tok.kind == "num":
                        vals.append(self.number())
                    self.expect("]")
                    value: float | tuple[float, ...] = tuple(vals)
                else:
                    value = self.number()
                if key.text in params:
                    self.error(f"parameter {key.text!r} given twice", key.span, DUPLICATE)
                params[key.text] = value
            if self.tok.kind == "ident" and self.tok.text == "uses":
                self.advance()
                uses = tuple(t.text for t in self.ident_list())
            if name.text in doc.actions:
                self.error(f"action {name.text!r} declared twice", name.span, DUPLICATE)
                return
            doc.actions[name.text] = ActionDecl(name.text, kind.text, params, uses, name.span)
        else:
            name = self.expect("ident", "a condition name")
            value = self.keyword("true", "false")
            if name.text in doc.conditions:
                self.error(f"condition {name.text!r} declared twice", name.span, DUPLICATE)
                return
            doc.conditions[name.text] = value.text == "true"

    # nodes

    def node(self) -> NodeExpr | None:
        open_tok = self.expect("(")
        try:
            head = self.expect("ident", "a node kind")
            kind = head.text
            arg: int | float | str | None = None
            if kind not in NODE_KINDS:
                raise self.error(f"unknown node kind {kind!r}", head.span)
            if kind == "par":
                t = self.expect("num", "the parallel success threshold")
                value = float(t.text)
                if value != int(value):
                    raise self.error("parallel threshold must be an integer", t.span)
                arg = int(value)
            elif kind == "rsync":
                g = self.keyword("zero", "const")
                arg = 0.0 if g.text == "zero" else self.number()
            elif kind in ("psync", "act", "cond"):
                arg = self.expect("ident", "a name").text
            children = []
            while self.tok.kind == "(":
                child = self.node()
                if child is not None:
                    children.append(child)
            self.expect(")")
            return NodeExpr(kind, arg, tuple(children), open_tok.span)
        except _Abort:
            self.skip_to_close()
            return None

    def skip_to_close(self) -> None:
        # the opening parenthesis of the broken node is already consumed
        depth = 1
        while self.tok.kind != "eof":
            t = self.advance()
            if t.kind == "(":
                depth += 1
            elif t.kind == ")":
                depth -= 1
                if depth == 0:
                    return


def parse_document(text: str) -> tuple[TreeDocument, list[Diagnostic]]:
    """Parse and validate; never raises on bad input."""
    parser = _Parser(text)
    doc = parser.parse()
    diags = parser.diags
    if not any(d.code == SYNTAX for d in diags):
        diags = diags + validate(doc)
    return doc, sorted(diags, key=lambda d: (d.span.offset, d.code))


def parse(text: str, filename: str = "<string>") -> TreeDocument:
    """Parse ``text`` into a validated document or raise :class:`DSLError`."""
    doc, diags = parse_document(text)
    errors = [d for d in diags if d.is_error]
    if errors:
        raise DSLError(errors, filename)
    return doc


def parse_file(path) -> TreeDocument:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), str(path))


# -- validation --------------------------------------------------------------


def _check_action(decl: ActionDecl) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    schema = ACTION_KINDS.get(decl.kind)
    if schema is None:
        return [Diagnostic(UNKNOWN_KIND, f"unknown action kind {decl.kind!r}", decl.span)]
    for key in decl.params:
        if key not in schema:
            out.append(Diagnostic(INVALID_VALUE, f"{decl.kind} action takes no parameter {key!r}", decl.span))
    for key, required in schema.items():
        if required and key not in decl.params:
            out.append(Diagnostic(INVALID_VALUE, f"{decl.kind} action needs parameter {key!r}", decl.span))
    for key, value in decl.params.items():
        if key in schema and isinstance(value, tuple) != (key == "table"):
            out.append(Diagnostic(INVALID_VALUE, f"parameter {key!r} has the wrong shape", decl.span))
    p = decl.params
    if isinstance(p.get("a"), float) and p["a"] <= 0:
        out.append(Diagnostic(INVALID_VALUE, "increment 'a' must be positive", decl.span))
    if isinstance(p.get("noise"), float) and p["noise"] < 0:
        out.append(Diagnostic(INVALID_VALUE, "'noise' must be non-negative", decl.span))
    if isinstance(p.get("step"), float) and p["step"] <= 0:
        out.append(Diagnostic(INVALID_VALUE, "'step' must be positive", decl.span))
    if isinstance(p.get("start"), float) and not 0 <= p["start"] <= 1:
        out.append(Diagnostic(INVALID_VALUE, "'start' must be in [0, 1]", decl.span))
    table = p.get("table")
    if isinstance(table, tuple) and (not table or min(table) < 0 or table[-1] <= 0):
        out.append(Diagnostic(INVALID_VALUE, "profile table must end in a positive increment", decl.span))
    if decl.kind == "profile" and "step" in p and "table" in p:
        out.append(Diagnostic(INVALID_VALUE, "profile takes either 'step' or 'table'", decl.span))
    return out


def _check_group(decl: GroupDecl) -> list[Diagnostic]:
    vals = decl.values
    if decl.policy == "relative":
        if not 0.0 <= vals[0] <= 1.0:
            return [Diagnostic(INVALID_VALUE, f"relative threshold {vals[0]} outside [0, 1]", decl.span)]
        return []
    if any(not 0.0 < v <= 1.0 for v in vals):
        return [Diagnostic(INVALID_VALUE, "absolute barriers must lie in (0, 1]", decl.span)]
    if any(b <= a for a, b in zip(vals, vals[1:])):
        return [Diagnostic(INVALID_VALUE, "absolute barriers must be strictly increasing", decl.span)]
    return []


def _worst_case(node: NodeExpr, doc: TreeDocument, guarded: bool = False) -> tuple[set[str], set[str]]:
    """(all resources any action below may use, those not under a resource decorator)."""
    if node.kind == "act":
        decl = doc.actions.get(node.arg)  # type: ignore[arg-type]
        uses = set(decl.uses) if decl else set()
        return uses, (set() if guarded else set(uses))
    worst: set[str] = set()
    loose: set[str] = set()
    for child in node.children:
        w, u = _worst_case(child, doc, guarded or node.kind == "rsync")
        worst |= w
        loose |= u
    return worst, loose


def _lint_parallel(node: NodeExpr, doc: TreeDocument) -> list[Diagnostic]:
    out = []
    sets = [_worst_case(c, doc) for c in node.children]
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            clash = sets[i][1] & sets[j][1]
            if clash:
                names = ", ".join(sorted(clash))
                out.append(
                    Diagnostic(
                        RESOURCE_CONFLICT,
                        f"parallel branches {i + 1} and {j + 1} may use {{{names}}} at the same "
                        "time; guard them with rsync",
                        node.children[j].span,
                        "warning",
                    )
                )
    return out


def validate(doc: TreeDocument) -> list[Diagnostic]:
    """Referential, arity and range checks plus the parallel resource lint."""
    out: list[Diagnostic] = []
    universe = set(doc.resources) if doc.resources is not None else None
    for g in doc.groups.values():
        out += _check_group(g)
    for a in doc.actions.values():
        out += _check_action(a)
        for q in a.uses:
            if universe is None or q not in universe:
                out.append(Diagnostic(UNKNOWN_RESOURCE, f"action {a.name!r} uses undeclared resource {q!r}", a.span))
    if doc.root is None:
        return out
    for node in doc.root.walk():
        n = len(node.children)
        if node.kind in LEAVES and n:
            out.append(Diagnostic(ARITY, f"{node.kind} takes no children", node.span))
        elif node.kind in DECORATORS and n != 1:
            out.append(Diagnostic(ARITY, f"{node.kind} needs exactly one child, got {n}", node.span))
        elif node.kind in COMPOSITES and n < 1:
            out.append(Diagnostic(ARITY, f"{node.kind} needs at least one child", node.span))
        if node.kind == "par" and n >= 1 and not 1 <= node.arg <= n:  # type: ignore[operator]
            out.append(
                Diagnostic(PARALLEL_THRESHOLD, f"parallel threshold {node.arg} outside 1..{n}", node.span)
            )
        if node.kind == "psync" and node.arg not in doc.groups:
            out.append(Diagnostic(UNKNOWN_GROUP, f"unknown group {node.arg!r}", node.span))
        # documents that declare no actions leave leaf names to be bound at build time
        if node.kind == "act" and doc.actions and node.arg not in doc.actions:
            out.append(Diagnostic(UNKNOWN_ACTION, f"unknown action {node.arg!r}", node.span))
        if node.kind == "cond" and doc.conditions and node.arg not in doc.conditions:
            out.append(Diagnostic(UNKNOWN_CONDITION, f"unknown condition {node.arg!r}", node.span))
        if node.kind == "rsync" and node.arg is not None and node.arg < 0:  # type: ignore[operator]
            out.append(Diagnostic(INVALID_VALUE, "priority increment must be non-negative", node.span))
        if node.kind == "par" and n >= 2:
            out += _lint_parallel(node, doc)
    return out


# -- printing ----------------------------------------------------------------


def _num(x: float | int) -> str:
    if isinstance(x, int):
        return str(x)
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def _head(node: NodeExpr) -> str:
    if node.kind == "par":
        return f"par {node.arg}"
    if node.kind == "rsync":
        return "rsync zero" if not node.arg else f"rsync const {_num(node.arg)}"  # type: ignore[arg-type]
    if node.kind in ("psync", "act", "cond"):
        return f"{node.kind} {node.arg}"
    return node.kind


def format_node(node: NodeExpr, indent: int = 0, width: int = 72) -> str:
    inline = _inline(node)
    if len(inline) + 2 * indent <= width or not node.children:
        return inline
    pad = "  " * (indent + 1)
    body = "\n".join(pad + format_node(c, indent + 1, width) for c in node.children)
    return f"({_head(node)}\n{body})"


def _inline(node: NodeExpr) -> str:
    parts = [_head(node)] + [_inline(c) for c in node.children]
    return "(" + " ".join(parts) + ")"


def print_document(doc: TreeDocument) -> str:
    """Canonical text for ``doc``; parsing it gives back an equal document."""
    lines = []
    if doc.resources is not None:
        lines.append("resources {" + ", ".join(doc.resources) + "}")
    for g in doc.groups.values():
        if g.policy == "absolute":
            lines.append(f"group {g.name} absolute [" + " ".join(_num(v) for v in g.values) + "]")
        else:
            lines.append(f"group {g.name} relative {_num(g.values[0])}")
    for a in doc.actions.values():
        words = [f"action {a.name} {a.kind}"]
        for key, value in a.params.items():
            if isinstance(value, tuple):
                words.append(f"{key}=[" + " ".join(_num(v) for v in value) + "]")
            else:
                words.append(f"{key}={_num(value)}")
        if a.uses:
            words.append("uses {" + ", ".join(a.uses) + "}")
        lines.append(" ".join(words))
    for name, value in doc.conditions.items():
        lines.append(f"condition {name} {'true' if value else 'false'}")
    if doc.root is not None:
        lines.append(format_node(doc.root))
    return "\n".join(lines) + "\n"
