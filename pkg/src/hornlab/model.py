"""Relational substrate: terms, clauses, schemas, instances and their invariants.

Tuples are positional vectors of constants; attributes are matched by name
when schemas are compared across a transformation.  All values share one
uninterpreted constant domain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import ConstraintViolation, SchemaError

# ---------------------------------------------------------------------------
# Terms, atoms, clauses


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __repr__(self) -> str:
        return f"Var({self.name})"


@dataclass(frozen=True, order=True)
class Const:
    value: str

    def __repr__(self) -> str:
        return f"Const({self.value})"


Term = Var | Const


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...]

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def is_ground(self) -> bool:
        return all(isinstance(t, Const) for t in self.args)

    def variables(self) -> tuple[Var, ...]:
        return tuple(t for t in self.args if isinstance(t, Var))

    def constants(self) -> tuple[Const, ...]:
        return tuple(t for t in self.args if isinstance(t, Const))

    def __repr__(self) -> str:
        return f"{self.pred}({', '.join(map(_term_str, self.args))})"


def _term_str(t: Term) -> str:
    return t.name if isinstance(t, Var) else t.value


def ground_atom(pred: str, values: Iterable[str]) -> Atom:
    return Atom(pred, tuple(Const(v) for v in values))


@dataclass(frozen=True)
class Clause:
    """An ordered definite clause: literal order and duplication matter."""

    head: Atom
    body: tuple[Atom, ...] = ()

    def __post_init__(self):
        if not isinstance(self.body, tuple):
            object.__setattr__(self, "body", tuple(self.body))

    def variables(self) -> list[Var]:
        """Distinct variables in first-occurrence order (head, then body)."""
        seen: dict[Var, None] = {}
        for atom in (self.head, *self.body):
            for t in atom.args:
                if isinstance(t, Var):
                    seen.setdefault(t)
        return list(seen)

    def constants(self) -> set[Const]:
        out: set[Const] = set()
        for atom in (self.head, *self.body):
            out.update(atom.constants())
        return out

    def body_predicates(self) -> set[str]:
        return {a.pred for a in self.body}

    def is_safe(self) -> bool:
        """True iff every head variable occurs somewhere in the body."""
        body_vars = {v for a in self.body for v in a.variables()}
        return all(v in body_vars for v in self.head.variables())

    def __repr__(self) -> str:
        if not self.body:
            return f"{self.head!r}."
        return f"{self.head!r} :- {', '.join(map(repr, self.body))}."


@dataclass(frozen=True)
class Definition:
    """A Horn definition: clauses sharing one head predicate and arity.

    May be empty (a learner that covered nothing); ``target``/``arity`` are
    then unavailable.
    """

    clauses: tuple[Clause, ...]

    def __post_init__(self):
        if not isinstance(self.clauses, tuple):
            object.__setattr__(self, "clauses", tuple(self.clauses))
        preds = {(c.head.pred, c.head.arity) for c in self.clauses}
        if len(preds) > 1:
            raise SchemaError(f"definition mixes head predicates: {sorted(preds)}")

    @property
    def target(self) -> str:
        if not self.clauses:
            raise SchemaError("empty definition has no target")
        return self.clauses[0].head.pred

    @property
    def arity(self) -> int:
        if not self.clauses:
            raise SchemaError("empty definition has no arity")
        return self.clauses[0].head.arity

    def __iter__(self) -> Iterator[Clause]:
        return iter(self.clauses)

    def __len__(self) -> int:
        return len(self.clauses)


# ---------------------------------------------------------------------------
# Canonical forms

_CANON_PREFIX = "V"


def rename_canonical(clause: Clause, prefix: str = _CANON_PREFIX) -> Clause:
    """Rename variables to V1, V2, ... by first occurrence (head, then body).

    Preserves body order, so two clauses get the same result iff they are
    variants with identical literal order.
    """
    mapping: dict[Var, Var] = {}
    for v in clause.variables():
        mapping[v] = Var(f"{prefix}{len(mapping) + 1}")

    def sub(atom: Atom) -> Atom:
        return Atom(atom.pred, tuple(mapping.get(t, t) if isinstance(t, Var) else t for t in atom.args))

    return Clause(sub(clause.head), tuple(sub(a) for a in clause.body))


def variant_key(clause: Clause) -> tuple:
    """Hashable key equal for clauses that are variants (same literal order)."""
    c = rename_canonical(clause)
    return (c.head.pred, tuple((a.pred, tuple(map(_term_str, a.args))) for a in (c.head, *c.body)))


def set_canonical_key(clause: Clause, perm_cap: int = 40320) -> tuple:
    """Key invariant under variable renaming *and* body reordering/duplication.

    Uses color refinement over variables plus a bounded brute-force
    tie-break, so isomorphic clauses (as literal sets) share a key.
    """
    body = sorted(set(clause.body), key=lambda a: (a.pred, len(a.args)))
    head = clause.head
    atoms = [head, *body]
    vars_ = [t for a in atoms for t in a.args if isinstance(t, Var)]
    var_set = list(dict.fromkeys(vars_))

    # Initial colors: head positions are fixed anchors.
    color: dict[Var, tuple] = {}
    for v in var_set:
        head_pos = tuple(i for i, t in enumerate(head.args) if t == v)
        occ = sorted((a.pred, i) for a in body for i, t in enumerate(a.args) if t == v)
        color[v] = (head_pos, tuple(occ))

    for _ in range(len(var_set) + 1):
        lit_colors = []
        for a in body:
            lit_colors.append((a.pred, tuple(color[t] if isinstance(t, Var) else ("c", t.value) for t in a.args)))
        new_color = {}
        for v in var_set:
            signature = sorted(
                (lc, i)
                for a, lc in zip(body, lit_colors)
                for i, t in enumerate(a.args)
                if t == v
            )
            new_color[v] = (color[v], tuple(signature))
        if len(set(new_color.values())) == len(set(color.values())):
            color = new_color
            break
        color = new_color

    # Group variables by final color; brute-force orderings inside tied groups.
    groups: dict[tuple, list[Var]] = {}
    for v in var_set:
        groups.setdefault(color[v], []).append(v)
    ordered_groups = [groups[c] for c in sorted(groups)]

    def serialization(assign: Mapping[Var, int]) -> tuple:
        def key_atom(a: Atom) -> tuple:
            return (a.pred, tuple(("v", assign[t]) if isinstance(t, Var) else ("c", t.value) for t in a.args))

        return (key_atom(head), tuple(sorted(key_atom(a) for a in body)))

    total = 1
    for g in ordered_groups:
        for k in range(2, len(g) + 1):
            total *= k
    if total > perm_cap:
        # Degenerate symmetry: fall back to the refinement order (still
        # deterministic, may split one isomorphism class; callers tolerate).
        assign = {v: i for i, v in enumerate(v for g in ordered_groups for v in g)}
        return serialization(assign)

    best = None
    for perms in itertools.product(*(itertools.permutations(g) for g in ordered_groups)):
        flat = [v for g in perms for v in g]
        assign = {v: i for i, v in enumerate(flat)}
        s = serialization(assign)
        if best is None or s < best:
            best = s
    return best if best is not None else serialization({})


# ---------------------------------------------------------------------------
# Examples


@dataclass(frozen=True)
class ExampleSet:
    """Labeled ground atoms of the target relation.

    Positives and negatives keep their input order: learners use that order
    for deterministic seed selection.
    """

    target: str
    arity: int
    positives: tuple[Atom, ...]
    negatives: tuple[Atom, ...]

    def __post_init__(self):
        for e in (*self.positives, *self.negatives):
            if e.pred != self.target or e.arity != self.arity:
                raise SchemaError(f"example {e!r} does not match target {self.target}/{self.arity}")
            if not e.is_ground():
                raise SchemaError(f"example {e!r} is not ground")
        overlap = set(self.positives) & set(self.negatives)
        if overlap:
            raise SchemaError(f"examples labeled both positive and negative: {sorted(map(repr, overlap))}")

    @staticmethod
    def build(positives: Sequence[Atom], negatives: Sequence[Atom]) -> "ExampleSet":
        pool = list(positives) or list(negatives)
        if not pool:
            raise SchemaError("empty example set: target relation cannot be inferred")
        t, a = pool[0].pred, pool[0].arity
        return ExampleSet(t, a, tuple(dict.fromkeys(positives)), tuple(dict.fromkeys(negatives)))


# ---------------------------------------------------------------------------
# Schemas


@dataclass(frozen=True)
class Relation:
    name: str
    attrs: tuple[str, ...]

    def __post_init__(self):
        if not isinstance(self.attrs, tuple):
            object.__setattr__(self, "attrs", tuple(self.attrs))
        if len(self.attrs) < 1:
            raise SchemaError(f"relation {self.name}: arity must be >= 1")
        if len(set(self.attrs)) != len(self.attrs):
            raise SchemaError(f"relation {self.name}: duplicate attribute names {self.attrs}")
        if not self.name or any(not a for a in self.attrs):
            raise SchemaError("relation and attribute names must be nonempty")

    @property
    def arity(self) -> int:
        return len(self.attrs)


@dataclass(frozen=True)
class FD:
    """Functional dependency lhs -> rhs within one relation."""

    relation: str
    lhs: tuple[str, ...]
    rhs: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "lhs", tuple(sorted(set(self.lhs))))
        object.__setattr__(self, "rhs", tuple(sorted(set(self.rhs))))
        if not self.lhs or not self.rhs:
            raise SchemaError(f"FD in {self.relation}: lhs and rhs must be nonempty")


@dataclass(frozen=True)
class IND:
    """Inclusion dependency lhs_rel[lhs_attrs] <= rhs_rel[rhs_attrs].

    With ``equality=True`` both containments hold (an "IND with equality").
    """

    lhs_rel: str
    lhs_attrs: tuple[str, ...]
    rhs_rel: str
    rhs_attrs: tuple[str, ...]
    equality: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lhs_attrs", tuple(self.lhs_attrs))
        object.__setattr__(self, "rhs_attrs", tuple(self.rhs_attrs))
        if len(self.lhs_attrs) != len(self.rhs_attrs):
            raise SchemaError(f"IND {self.lhs_rel}{self.lhs_attrs} / {self.rhs_rel}{self.rhs_attrs}: length mismatch")
        if not self.lhs_attrs:
            raise SchemaError("IND attribute lists must be nonempty")


@dataclass(frozen=True)
class AttrFD:
    """A derived, relation-agnostic FD with singleton rhs (closure element)."""

    lhs: frozenset[str]
    rhs: str


@dataclass(frozen=True)
class Schema:
    relations: tuple[Relation, ...]
    fds: tuple[FD, ...] = ()
    inds: tuple[IND, ...] = ()

    def __post_init__(self):
        if not isinstance(self.relations, tuple):
            object.__setattr__(self, "relations", tuple(self.relations))
        if not isinstance(self.fds, tuple):
            object.__setattr__(self, "fds", tuple(self.fds))
        if not isinstance(self.inds, tuple):
            object.__setattr__(self, "inds", tuple(self.inds))
        names = [r.name for r in self.relations]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate relation names: {names}")
        if not self.relations:
            raise SchemaError("empty schema")
        by_name = {r.name: r for r in self.relations}
        for fd in self.fds:
            rel = by_name.get(fd.relation)
            if rel is None:
                raise SchemaError(f"FD references unknown relation {fd.relation}")
            for a in (*fd.lhs, *fd.rhs):
                if a not in rel.attrs:
                    raise SchemaError(f"FD in {fd.relation}: unknown attribute {a}")
        for ind in self.inds:
            for rel_name, attrs in ((ind.lhs_rel, ind.lhs_attrs), (ind.rhs_rel, ind.rhs_attrs)):
                rel = by_name.get(rel_name)
                if rel is None:
                    raise SchemaError(f"IND references unknown relation {rel_name}")
                for a in attrs:
                    if a not in rel.attrs:
                        raise SchemaError(f"IND on {rel_name}: unknown attribute {a}")

    @cached_property
    def by_name(self) -> Mapping[str, Relation]:
        return {r.name: r for r in self.relations}

    def relation(self, name: str) -> Relation:
        try:
            return self.by_name[name]
        except KeyError:
            raise SchemaError(f"unknown relation {name}") from None

    def arity(self, name: str) -> int:
        return self.relation(name).arity

    def equality_inds(self) -> list[IND]:
        return [i for i in self.inds if i.equality]

    def fds_of(self, rel: str) -> list[FD]:
        return [f for f in self.fds if f.relation == rel]


# ---------------------------------------------------------------------------
# Instances


@dataclass(frozen=True)
class Instance:
    """A finite instance: one tuple set per relation, validated on build."""

    schema: Schema
    tuples: Mapping[str, frozenset[tuple[str, ...]]] = field(default_factory=dict)

    @staticmethod
    def build(
        schema: Schema,
        data: Mapping[str, Iterable[Sequence[str]]] | None = None,
        validate: bool = True,
    ) -> "Instance":
        data = data or {}
        store: dict[str, frozenset[tuple[str, ...]]] = {}
        for rel_name in data:
            if rel_name not in schema.by_name:
                raise SchemaError(f"facts for unknown relation {rel_name}")
        for rel in schema.relations:
            rows = frozenset(tuple(row) for row in data.get(rel.name, ()))
            for row in rows:
                if len(row) != rel.arity:
                    raise ConstraintViolation(
                        f"{rel.name}{row}: arity {len(row)} != declared {rel.arity}", (row,)
                    )
            store[rel.name] = rows
        inst = Instance(schema, store)
        if validate:
            inst.check_constraints()
        return inst

    def check_constraints(self) -> None:
        """Raise ConstraintViolation on the first FD or IND violation."""
        for fd in self.schema.fds:
            rel = self.schema.relation(fd.relation)
            lhs_idx = [rel.attrs.index(a) for a in fd.lhs]
            rhs_idx = [rel.attrs.index(a) for a in fd.rhs]
            seen: dict[tuple, tuple] = {}
            for row in sorted(self.tuples.get(fd.relation, ())):
                key = tuple(row[i] for i in lhs_idx)
                val = tuple(row[i] for i in rhs_idx)
                if key in seen and seen[key] != val:
                    raise ConstraintViolation(
                        f"FD {fd.lhs} -> {fd.rhs} violated in {fd.relation}: "
                        f"key {key} maps to both {seen[key]} and {val}",
                        (key, seen[key], val),
                    )
                seen[key] = val
        for ind in self.schema.inds:
            self._check_containment(ind.lhs_rel, ind.lhs_attrs, ind.rhs_rel, ind.rhs_attrs)
            if ind.equality:
                self._check_containment(ind.rhs_rel, ind.rhs_attrs, ind.lhs_rel, ind.lhs_attrs)

    def _check_containment(self, rel_a: str, attrs_a: tuple[str, ...], rel_b: str, attrs_b: tuple[str, ...]) -> None:
        ra, rb = self.schema.relation(rel_a), self.schema.relation(rel_b)
        ia = [ra.attrs.index(x) for x in attrs_a]
        ib = [rb.attrs.index(x) for x in attrs_b]
        have = {tuple(row[i] for i in ib) for row in self.tuples.get(rel_b, ())}
        for row in sorted(self.tuples.get(rel_a, ())):
            proj = tuple(row[i] for i in ia)
            if proj not in have:
                raise ConstraintViolation(
                    f"IND {rel_a}{list(attrs_a)} <= {rel_b}{list(attrs_b)} violated: "
                    f"{rel_a}{row} has no partner",
                    (row,),
                )

    def rows(self, rel: str) -> list[tuple[str, ...]]:
        """Tuples of a relation in canonical (sorted) order."""
        return sorted(self.tuples.get(rel, ()))

    def constants(self) -> set[str]:
        return {v for rows in self.tuples.values() for row in rows for v in row}

    def size(self) -> int:
        return sum(len(rows) for rows in self.tuples.values())

    def same_content(self, other: "Instance") -> bool:
        names = set(self.tuples) | set(other.tuples)
        return all(
            self.tuples.get(n, frozenset()) == other.tuples.get(n, frozenset()) for n in names
        )

    def ground_atoms(self, rel: str) -> list[Atom]:
        return [ground_atom(rel, row) for row in self.rows(rel)]


# ---------------------------------------------------------------------------
# Schema-level derived structure


def _attribute_closure(start: frozenset[str], fds: Sequence[tuple[frozenset[str], frozenset[str]]]) -> frozenset[str]:
    closure = set(start)
    changed = True
    while changed:
        changed = False
        for lhs, rhs in fds:
            if lhs <= closure and not rhs <= closure:
                closure |= rhs
                changed = True
    return frozenset(closure)


def fd_closure(schema: Schema) -> frozenset[AttrFD]:
    """Schema-level FD closure, canonicalized.

    FDs from all relations are pooled as attribute-level implications
    (attributes are matched by name), then closed under Armstrong's rules.
    The result is restricted to nontrivial FDs with a singleton rhs and a
    minimal lhs, which makes it directly comparable across the two sides of
    a vertical (de)composition.
    """
    pooled = [(frozenset(fd.lhs), frozenset(fd.rhs)) for fd in schema.fds]
    candidates = sorted({a for lhs, _ in pooled for a in lhs})
    found: dict[str, list[frozenset[str]]] = {}
    # Enumerate lhs candidates by increasing size, so the first lhs recorded
    # for an attribute is minimal.  Only attributes that occur on some FD lhs
    # can participate in a minimal lhs.
    for r in range(1, len(candidates) + 1):
        for combo in itertools.combinations(candidates, r):
            lhs = frozenset(combo)
            closure = _attribute_closure(lhs, pooled)
            for attr in closure - lhs:
                mins = found.setdefault(attr, [])
                if not any(prev <= lhs for prev in mins):
                    mins.append(lhs)
    return frozenset(AttrFD(lhs, attr) for attr, mins in found.items() for lhs in mins)


def inclusion_classes(schema: Schema) -> tuple[frozenset[str], ...]:
    """Partition of relation names into connected components of equality INDs."""
    parent: dict[str, str] = {r.name: r.name for r in schema.relations}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: str, b: str) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for ind in schema.equality_inds():
        union(ind.lhs_rel, ind.rhs_rel)

    groups: dict[str, set[str]] = {}
    for r in schema.relations:
        groups.setdefault(find(r.name), set()).add(r.name)
    return tuple(sorted((frozenset(g) for g in groups.values()), key=lambda g: sorted(g)))


def inclusion_class_of(schema: Schema, rel: str) -> frozenset[str]:
    for cls in inclusion_classes(schema):
        if rel in cls:
            return cls
    raise SchemaError(f"unknown relation {rel}")
