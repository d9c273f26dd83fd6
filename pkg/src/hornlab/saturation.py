"""Bottom-clause construction.

Three variants share one engine:

* depth-bounded free-literal construction (classic inverse entailment),
* the maxvars variant, where every added literal is immediately chase-closed
  against the equality INDs of its inclusion class and the stopping rule
  counts distinct variables at iteration boundaries,
* ground saturation (all-constant bodies, bounded by a constant budget).

Literal order is deterministic and, for the chase-closed variants, grouped by
inclusion-class rank within each iteration so that bottoms built over two
sides of a (de)composition receive corresponding orders.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import HornlabError
from .model import (
    Atom,
    Clause,
    Const,
    Instance,
    Schema,
    Var,
    inclusion_classes,
)


class VarMap:
    """Bijection between constants and variables, stable within one run."""

    def __init__(self) -> None:
        self._to_var: dict[str, Var] = {}
        self._to_const: dict[Var, str] = {}

    def var(self, const: str) -> Var:
        v = self._to_var.get(const)
        if v is None:
            v = Var(f"V{len(self._to_var) + 1}")
            self._to_var[const] = v
            self._to_const[v] = const
        return v

    def known(self, const: str) -> bool:
        return const in self._to_var

    def const_of(self, v: Var) -> str:
        return self._to_const[v]

    def constants(self) -> list[str]:
        return list(self._to_var)

    def __len__(self) -> int:
        return len(self._to_var)

    def as_mapping(self) -> dict[str, str]:
        return {c: v.name for c, v in self._to_var.items()}


@dataclass(frozen=True)
class BottomClause:
    clause: Clause
    varmap: Mapping[str, str]  # constant -> variable name
    depths: Mapping[str, int]  # variable name -> introduction depth
    provenance: tuple[tuple[str, tuple[str, ...]], ...]  # per body literal

    @property
    def head(self) -> Atom:
        return self.clause.head

    @property
    def body(self) -> tuple[Atom, ...]:
        return self.clause.body


# ---------------------------------------------------------------------------
# Inclusion-class ordering


def _natural_join(instance: Instance, members: Sequence[str]) -> list[tuple[tuple[str, str], ...]]:
    """Natural join (on shared attribute names) of the member relations."""
    rows: list[dict[str, str]] = [{}]
    for rel_name in sorted(members):
        rel = instance.schema.relation(rel_name)
        new_rows: list[dict[str, str]] = []
        for row in rows:
            for tup in instance.rows(rel_name):
                merged = dict(row)
                ok = True
                for attr, val in zip(rel.attrs, tup):
                    if merged.setdefault(attr, val) != val:
                        ok = False
                        break
                if ok:
                    new_rows.append(merged)
        rows = new_rows
        if not rows:
            break
    return sorted({tuple(sorted(r.items())) for r in rows})


def order_inclusion_classes(schema: Schema, instance: Instance) -> tuple[frozenset[str], ...]:
    """Rank inclusion classes by the canonical key of their natural join.

    Corresponding classes on the two sides of a (de)composition have equal
    natural joins, hence equal ranks.  Ties break on the attribute-name
    multiset, then on relation names (the last is schema-local only).
    """
    classes = inclusion_classes(schema)

    def key(cls: frozenset[str]) -> tuple:
        attrs = sorted(a for rel in cls for a in schema.relation(rel).attrs)
        return (repr(_natural_join(instance, sorted(cls))), tuple(attrs), tuple(sorted(cls)))

    return tuple(sorted(classes, key=key))


def class_ranks(schema: Schema, instance: Instance) -> dict[str, int]:
    """Relation name -> rank of its inclusion class under order_inclusion_classes."""
    ranks: dict[str, int] = {}
    for rank, cls in enumerate(order_inclusion_classes(schema, instance)):
        for rel in cls:
            ranks[rel] = rank
    return ranks


# ---------------------------------------------------------------------------
# Shared construction engine


@dataclass
class _Builder:
    instance: Instance
    ground: bool = False
    varmap: VarMap = field(default_factory=VarMap)
    depths: dict[str, int] = field(default_factory=dict)  # var name -> depth
    body: list[Atom] = field(default_factory=list)
    provenance: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    literal_set: set[Atom] = field(default_factory=set)
    const_depth: dict[str, int] = field(default_factory=dict)

    def term_for(self, const: str) -> Const | Var:
        return Const(const) if self.ground else self.varmap.var(const)

    def seen(self, const: str) -> bool:
        return const in self.const_depth

    def literal_for(self, rel: str, row: tuple[str, ...]) -> Atom:
        return Atom(rel, tuple(self.term_for(c) for c in row))

    def register(self, rel: str, row: tuple[str, ...], depth: int) -> Atom | None:
        """Materialize the free literal for a tuple; None when an exact duplicate."""
        atom = self.literal_for(rel, row)
        if atom in self.literal_set:
            return None
        for c in row:
            if c not in self.const_depth:
                self.const_depth[c] = depth
                name = c if self.ground else self.varmap.var(c).name
                self.depths.setdefault(name, depth)
        self.body.append(atom)
        self.provenance.append((rel, row))
        self.literal_set.add(atom)
        return atom

def _frontier_rows(instance: Instance, rel: str, frontier: set[str]) -> list[tuple[str, ...]]:
    return [row for row in instance.rows(rel) if any(c in frontier for c in row)]


def _seed_head(builder: _Builder, e: Atom) -> Atom:
    if not e.is_ground():
        raise HornlabError(f"seed example must be ground: {e!r}")
    head_args = []
    for c in e.args:
        builder.const_depth.setdefault(c.value, 0)
        t = builder.term_for(c.value)
        if isinstance(t, Var):
            builder.depths.setdefault(t.name, 0)
        else:
            builder.depths.setdefault(c.value, 0)
        head_args.append(t)
    return Atom(e.pred, tuple(head_args))


def bottom_clause_depth(e: Atom, instance: Instance, max_depth: int) -> BottomClause:
    """Classic bottom clause: iteration i adds free literals of depth <= i."""
    if max_depth < 0:
        raise HornlabError("max_depth must be >= 0")
    builder = _Builder(instance)
    head = _seed_head(builder, e)
    schema = instance.schema
    for i in range(1, max_depth + 1):
        frontier = set(builder.const_depth)
        added_any = False
        for rel in schema.relations:
            for row in _frontier_rows(instance, rel.name, frontier):
                known = [builder.const_depth[c] for c in row if c in builder.const_depth]
                new_depth = min(known) + 1
                lit_depth = max([new_depth] + known) if any(c not in builder.const_depth for c in row) else max(known)
                if lit_depth > i:
                    continue
                if builder.register(rel.name, row, new_depth) is not None:
                    added_any = True
        if not added_any:
            break
    return BottomClause(
        Clause(head, tuple(builder.body)),
        builder.varmap.as_mapping(),
        dict(builder.depths),
        tuple(builder.provenance),
    )


def _chased_iterations(builder: _Builder, schema: Schema, stop) -> None:
    """Run frontier iterations driven by inclusion-class join rows.

    Iteration k materializes the component pieces of every class-join row
    that contains a frontier constant.  Because corresponding classes on the
    two sides of a (de)composition have equal natural joins, the contents of
    iteration k agree across the two sides literal-for-literal (up to the
    splitting of joined rows into pieces), which is what makes the resulting
    bottom clauses equivalent and the variable-count stopping rule cut both
    runs at corresponding boundaries.
    """
    instance = builder.instance
    ordered_classes = order_inclusion_classes(schema, instance)
    joins = []
    for cls in ordered_classes:
        members = sorted(cls)
        joins.append((members, _natural_join(instance, members)))

    while True:
        frontier = set(builder.const_depth)
        depth = (max(builder.const_depth.values()) if builder.const_depth else 0) + 1
        added_any = False
        for members, rows in joins:
            relevant = [row for row in rows if any(v in frontier for _, v in row)]
            for row in relevant:  # rows are canonical (attr-sorted) tuples
                values = dict(row)
                for member in members:
                    rel = schema.relation(member)
                    piece = tuple(values[a] for a in rel.attrs)
                    if builder.register(member, piece, depth) is not None:
                        added_any = True
        if not added_any or stop():
            break


def bottom_clause_maxvars(e: Atom, instance: Instance, schema: Schema, maxvars: int) -> BottomClause:
    """Chase-closed bottom clause with the variable-count stopping rule.

    Each added literal immediately pulls its inclusion-class partners
    (sharing the IND attribute values) with shared variables; the run stops
    at the first iteration boundary where the number of distinct variables
    reaches ``maxvars``.
    """
    if maxvars < e.arity:
        raise HornlabError(f"maxvars must be >= the seed arity ({e.arity})")
    builder = _Builder(instance)
    head = _seed_head(builder, e)
    _chased_iterations(builder, schema, stop=lambda: len(builder.varmap) >= maxvars)
    return BottomClause(
        Clause(head, tuple(builder.body)),
        builder.varmap.as_mapping(),
        dict(builder.depths),
        tuple(builder.provenance),
    )


def ground_saturation(e: Atom, instance: Instance, max_constants: int) -> Clause:
    """Ground saturation: all reachable ground atoms, chase-closed, bounded
    by the number of distinct constants at iteration boundaries."""
    if max_constants < len(set(c.value for c in e.args)):
        raise HornlabError("max_constants must be >= the number of constants in the seed")
    builder = _Builder(instance, ground=True)
    head = _seed_head(builder, e)
    schema = instance.schema
    _chased_iterations(builder, schema, stop=lambda: len(builder.const_depth) >= max_constants)
    return Clause(head, tuple(builder.body))
