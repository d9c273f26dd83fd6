"""Line-oriented parsers and serializers for schema, facts, examples and clause text.

Grammar (UTF-8, ``#`` starts a comment, blank lines ignored):

    relation <name>(<attr>,<attr>,...)
    fd <rel>: <attrs> -> <attrs>
    ind <rel1>[<attrs>] = <rel2>[<attrs>]     equality IND
    ind <rel1>[<attrs>] <= <rel2>[<attrs>]    one-way IND

Facts files hold one ground atom per line, ``rel(c1,c2).``; constants are
bare identifiers or single-quoted strings.  Examples files prefix atoms with
``+`` or ``-``.  Clause text uses the Prolog convention: identifiers starting
with an uppercase letter or ``_`` are variables, everything else (or anything
quoted) is a constant.
"""

from __future__ import annotations

import re
from typing import Iterable

from .errors import ParseError, SchemaError
from .model import (
    FD,
    IND,
    Atom,
    Clause,
    Const,
    Definition,
    ExampleSet,
    Instance,
    Relation,
    Schema,
    Term,
    Var,
)

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_RELATION_RE = re.compile(rf"^relation\s+({_IDENT})\s*\(([^)]*)\)\s*$")
_FD_RE = re.compile(rf"^fd\s+({_IDENT})\s*:\s*(.+?)\s*->\s*(.+?)\s*$")
_IND_RE = re.compile(
    rf"^ind\s+({_IDENT})\s*\[([^\]]*)\]\s*(<?=)\s*({_IDENT})\s*\[([^\]]*)\]\s*$"
)
_ATOM_RE = re.compile(rf"^({_IDENT})\s*\((.*)\)\s*$")


def _strip_lines(text: str) -> list[tuple[int, str]]:
    out = []
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((n, line))
    return out


def _split_names(blob: str, *, lineno: int) -> list[str]:
    parts = [p.strip() for p in blob.split(",")]
    if any(not re.fullmatch(_IDENT, p) for p in parts):
        raise ParseError(f"bad name list {blob!r}", lineno)
    return parts


# ---------------------------------------------------------------------------
# Schema


def parse_schema(text: str) -> Schema:
    relations: list[Relation] = []
    fds: list[FD] = []
    inds: list[IND] = []
    for lineno, line in _strip_lines(text):
        if line.startswith("relation"):
            m = _RELATION_RE.match(line)
            if not m:
                raise ParseError(f"bad relation declaration: {line!r}", lineno)
            name, attrs = m.group(1), _split_names(m.group(2), lineno=lineno)
            try:
                relations.append(Relation(name, tuple(attrs)))
            except SchemaError as e:
                raise ParseError(str(e), lineno) from None
        elif line.startswith("fd"):
            m = _FD_RE.match(line)
            if not m:
                raise ParseError(f"bad fd declaration: {line!r}", lineno)
            fds.append(
                FD(m.group(1), tuple(_split_names(m.group(2), lineno=lineno)), tuple(_split_names(m.group(3), lineno=lineno)))
            )
        elif line.startswith("ind"):
            m = _IND_RE.match(line)
            if not m:
                raise ParseError(f"bad ind declaration: {line!r}", lineno)
            inds.append(
                IND(
                    m.group(1),
                    tuple(_split_names(m.group(2), lineno=lineno)),
                    m.group(4),
                    tuple(_split_names(m.group(5), lineno=lineno)),
                    equality=(m.group(3) == "="),
                )
            )
        else:
            raise ParseError(f"unrecognized line: {line!r}", lineno)
    if not relations:
        raise ParseError("empty schema: no relation declarations")
    try:
        return Schema(tuple(relations), tuple(fds), tuple(inds))
    except SchemaError as e:
        raise ParseError(str(e)) from None


def schema_to_text(schema: Schema) -> str:
    lines = [f"relation {r.name}({','.join(r.attrs)})" for r in schema.relations]
    for fd in schema.fds:
        lines.append(f"fd {fd.relation}: {','.join(fd.lhs)} -> {','.join(fd.rhs)}")
    for ind in schema.inds:
        op = "=" if ind.equality else "<="
        lines.append(
            f"ind {ind.lhs_rel}[{','.join(ind.lhs_attrs)}] {op} {ind.rhs_rel}[{','.join(ind.rhs_attrs)}]"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Term / atom / clause text

_QUOTED_RE = re.compile(r"'((?:[^'\\]|\\.)*)'")


def _split_args(blob: str, *, lineno: int | None = None) -> list[str]:
    """Split a comma-separated argument list, honoring single quotes."""
    args, depth, cur, i = [], 0, [], 0
    in_quote = False
    while i < len(blob):
        ch = blob[i]
        if in_quote:
            cur.append(ch)
            if ch == "\\" and i + 1 < len(blob):
                cur.append(blob[i + 1])
                i += 1
            elif ch == "'":
                in_quote = False
        elif ch == "'":
            in_quote = True
            cur.append(ch)
        elif ch == "," and depth == 0:
            args.append("".join(cur).strip())
            cur = []
        else:
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            cur.append(ch)
        i += 1
    if in_quote:
        raise ParseError(f"unterminated quote in {blob!r}", lineno)
    last = "".join(cur).strip()
    if last or args:
        args.append(last)
    if any(not a for a in args):
        raise ParseError(f"empty argument in {blob!r}", lineno)
    return args


def _parse_term(tok: str, *, ground: bool, lineno: int | None = None) -> Term:
    m = _QUOTED_RE.fullmatch(tok)
    if m:
        return Const(m.group(1).replace("\\'", "'").replace("\\\\", "\\"))
    if not re.fullmatch(_IDENT, tok):
        raise ParseError(f"bad term {tok!r}", lineno)
    if ground:
        return Const(tok)
    if tok[0].isupper() or tok[0] == "_":
        return Var(tok)
    return Const(tok)


def parse_atom(text: str, *, ground: bool = False, lineno: int | None = None) -> Atom:
    text = text.strip().rstrip(".")
    m = _ATOM_RE.match(text)
    if not m:
        raise ParseError(f"bad atom: {text!r}", lineno)
    pred, blob = m.group(1), m.group(2).strip()
    args = _split_args(blob, lineno=lineno) if blob else []
    if not args:
        raise ParseError(f"atom {pred!r} has no arguments", lineno)
    return Atom(pred, tuple(_parse_term(a, ground=ground, lineno=lineno) for a in args))


def parse_ground_atom(text: str, *, lineno: int | None = None) -> Atom:
    return parse_atom(text, ground=True, lineno=lineno)


def term_to_text(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    v = t.value
    if re.fullmatch(_IDENT, v) and not (v[0].isupper() or v[0] == "_"):
        return v
    return "'" + v.replace("\\", "\\\\").replace("'", "\\'") + "'"


def ground_term_to_text(t: Term) -> str:
    assert isinstance(t, Const)
    v = t.value
    if re.fullmatch(_IDENT, v):
        return v
    return "'" + v.replace("\\", "\\\\").replace("'", "\\'") + "'"


def atom_to_text(a: Atom, *, ground: bool = False) -> str:
    fmt = ground_term_to_text if ground else term_to_text
    return f"{a.pred}({','.join(fmt(t) for t in a.args)})"


def parse_clause(text: str, *, lineno: int | None = None) -> Clause:
    """Parse ``head :- b1, b2.`` (or ``head.``); accepts ``<-`` for ``:-``."""
    text = text.strip().rstrip(".")
    for sep in (":-", "<-"):
        if sep in text:
            head_txt, body_txt = text.split(sep, 1)
            head = parse_atom(head_txt, lineno=lineno)
            body_txt = body_txt.strip()
            if body_txt in ("", "true"):
                return Clause(head, ())
            parts = _split_top_level_atoms(body_txt, lineno=lineno)
            return Clause(head, tuple(parse_atom(p, lineno=lineno) for p in parts))
    return Clause(parse_atom(text, lineno=lineno), ())


def _split_top_level_atoms(blob: str, *, lineno: int | None = None) -> list[str]:
    parts, depth, cur = [], 0, []
    in_quote = False
    for ch in blob:
        if in_quote:
            cur.append(ch)
            if ch == "'":
                in_quote = False
            continue
        if ch == "'":
            in_quote = True
            cur.append(ch)
        elif ch == "(":
            depth += 1
            cur.append(ch)
        elif ch == ")":
            depth -= 1
            cur.append(ch)
        elif ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        parts.append("".join(cur).strip())
    return parts


def clause_to_text(c: Clause) -> str:
    if not c.body:
        return f"{atom_to_text(c.head)}."
    return f"{atom_to_text(c.head)} :- {', '.join(atom_to_text(a) for a in c.body)}."


def parse_definition(text: str) -> Definition:
    clauses = [parse_clause(line, lineno=n) for n, line in _strip_lines(text)]
    if not clauses:
        raise ParseError("empty definition")
    return Definition(tuple(clauses))


def definition_to_text(d: Definition) -> str:
    if not d.clauses:
        return ""
    return "\n".join(clause_to_text(c) for c in d.clauses) + "\n"


# ---------------------------------------------------------------------------
# Facts


def parse_facts(text: str, schema: Schema) -> Instance:
    data: dict[str, list[tuple[str, ...]]] = {}
    for lineno, line in _strip_lines(text):
        atom = parse_ground_atom(line, lineno=lineno)
        if atom.pred not in schema.by_name:
            raise ParseError(f"unknown relation {atom.pred!r}", lineno)
        if atom.arity != schema.arity(atom.pred):
            raise ParseError(
                f"{atom.pred}: arity {atom.arity} != declared {schema.arity(atom.pred)}", lineno
            )
        data.setdefault(atom.pred, []).append(tuple(c.value for c in atom.args))
    return Instance.build(schema, data)


def facts_to_text(instance: Instance) -> str:
    lines = []
    for rel in instance.schema.relations:
        for row in instance.rows(rel.name):
            lines.append(atom_to_text(Atom(rel.name, tuple(Const(v) for v in row)), ground=True) + ".")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Examples


def parse_examples(text: str) -> ExampleSet:
    pos: list[Atom] = []
    neg: list[Atom] = []
    for lineno, line in _strip_lines(text):
        if line.startswith("+"):
            pos.append(parse_ground_atom(line[1:], lineno=lineno))
        elif line.startswith("-"):
            neg.append(parse_ground_atom(line[1:], lineno=lineno))
        else:
            raise ParseError(f"example lines must start with '+' or '-': {line!r}", lineno)
    try:
        return ExampleSet.build(pos, neg)
    except SchemaError as e:
        raise ParseError(str(e)) from None


def examples_to_text(examples: ExampleSet) -> str:
    lines = [f"+ {atom_to_text(a, ground=True)}." for a in examples.positives]
    lines += [f"- {atom_to_text(a, ground=True)}." for a in examples.negatives]
    return "\n".join(lines) + ("\n" if lines else "")


def atoms_to_text(atoms: Iterable[Atom]) -> str:
    return "\n".join(atom_to_text(a, ground=True) + "." for a in atoms)
