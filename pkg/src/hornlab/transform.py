"""Vertical composition/decomposition of schemas, instances and Horn definitions.

A Transformation is a pair of single-clause Horn programs (projections and
natural joins) between two schemas, with the induced definition mapping.
All builders validate the losslessness conditions, so constructed
transformations are bijective on constraint-satisfying instances;
``verify_bijection`` re-checks that empirically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import ConstraintViolation, HornlabError, ParseError, TransformError
from .evaluate import evaluate_definition
from .chase import fresh_var_factory
from .model import (
    FD,
    IND,
    Atom,
    Clause,
    Definition,
    Instance,
    Relation,
    Schema,
    Var,
    fd_closure,
    _attribute_closure,
)

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"


@dataclass(frozen=True)
class DecompositionSpec:
    """Split one relation into projections sharing the common attributes."""

    source: str
    components: tuple[Relation, ...]

    def __post_init__(self):
        if not isinstance(self.components, tuple):
            object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise TransformError("decomposition needs at least one component")
        names = [c.name for c in self.components]
        if len(set(names)) != len(names):
            raise TransformError(f"duplicate component names: {names}")

    @property
    def shared(self) -> frozenset[str]:
        out = set(self.components[0].attrs)
        for c in self.components[1:]:
            out &= set(c.attrs)
        return frozenset(out)


@dataclass(frozen=True)
class Step:
    """One script step.  A decompose and a compose carry the same payload
    (the wide relation and its projections), so inversion just flips the kind."""

    kind: str  # "decompose" | "compose"
    relation: Relation  # the composed-side relation
    components: tuple[Relation, ...]  # the decomposed-side relations

    def inverted(self) -> "Step":
        return Step("compose" if self.kind == "decompose" else "decompose", self.relation, self.components)

    def to_text(self) -> str:
        if self.kind == "decompose":
            comps = "; ".join(f"{c.name}({','.join(c.attrs)})" for c in self.components)
            return f"decompose {self.relation.name} into {comps}"
        members = ",".join(c.name for c in self.components)
        return f"compose {members} into {self.relation.name}({','.join(self.relation.attrs)})"


@dataclass(frozen=True)
class Transformation:
    source: Schema
    target: Schema
    forward: tuple[Definition, ...]  # defines each target relation over source
    inverse: tuple[Definition, ...]  # defines each source relation over target
    kinds: Mapping[str, str] = field(default_factory=dict)  # target rel -> tag
    steps: tuple[Step, ...] = ()  # script steps that built this transformation

    def forward_program(self) -> dict[str, Definition]:
        return {d.target: d for d in self.forward}

    def inverse_program(self) -> dict[str, Definition]:
        return {d.target: d for d in self.inverse}

    def inverted(self) -> "Transformation":
        return Transformation(
            self.target,
            self.source,
            self.inverse,
            self.forward,
            {r.name: "inverted" for r in self.source.relations},
            tuple(s.inverted() for s in reversed(self.steps)),
        )


# ---------------------------------------------------------------------------
# Builders


def _attr_vars(attrs: Sequence[str]) -> dict[str, Var]:
    return {a: Var(f"X_{a}") for a in attrs}


def _identity_definition(rel: Relation) -> Definition:
    vars_ = _attr_vars(rel.attrs)
    atom = Atom(rel.name, tuple(vars_[a] for a in rel.attrs))
    return Definition((Clause(atom, (atom,)),))


def identity_transformation(schema: Schema) -> Transformation:
    defs = tuple(_identity_definition(r) for r in schema.relations)
    return Transformation(schema, schema, defs, defs, {r.name: "identity" for r in schema.relations})


def _determined(shared: frozenset[str], attrs: Iterable[str], schema: Schema) -> bool:
    pooled = [(frozenset(fd.lhs), frozenset(fd.rhs)) for fd in schema.fds]
    return set(attrs) <= _attribute_closure(shared, pooled)


def _rehome_fd(fd: FD, components: Sequence[Relation]) -> FD:
    needed = set(fd.lhs) | set(fd.rhs)
    for comp in components:
        if needed <= set(comp.attrs):
            return FD(comp.name, fd.lhs, fd.rhs)
    raise TransformError(
        f"FD {fd.lhs} -> {fd.rhs} of {fd.relation} fits in no single component; "
        "decomposition would not preserve the FD closure"
    )


def _rehome_ind_side(rel: str, attrs: tuple[str, ...], old: str, components: Sequence[Relation]) -> tuple[str, tuple[str, ...]]:
    if rel != old:
        return rel, attrs
    for comp in components:
        if set(attrs) <= set(comp.attrs):
            return comp.name, attrs
    raise TransformError(f"IND side {old}{list(attrs)} spans multiple components")


def decompose(schema: Schema, spec: DecompositionSpec) -> tuple[Schema, Transformation]:
    """Replace one relation by projections joined on their shared attributes.

    Validity: the component attribute sets cover the source, intersect
    pairwise in exactly the shared set C, C is a proper nonempty subset, the
    FD closure is preserved, and C determines every component except at most
    one (the checkable sufficient condition for the natural join on C to be
    lossless).
    """
    source_rel = schema.relation(spec.source)
    union = set().union(*(set(c.attrs) for c in spec.components))
    if union != set(source_rel.attrs):
        raise TransformError(
            f"components cover {sorted(union)} but {spec.source} has {sorted(source_rel.attrs)}"
        )
    other_names = {r.name for r in schema.relations} - {spec.source}
    for c in spec.components:
        if c.name in other_names:
            raise TransformError(f"component name {c.name} collides with an existing relation")

    if len(spec.components) == 1:
        comp = spec.components[0]
        if comp.name != spec.source or tuple(comp.attrs) != source_rel.attrs:
            raise TransformError("single-component decomposition must repeat the source relation")
        return schema, identity_transformation(schema)

    shared = spec.shared
    if not shared:
        raise TransformError("components share no attribute (C is empty)")
    if shared == set(source_rel.attrs):
        raise TransformError("shared attributes equal the whole relation (C must be proper)")
    for i, a in enumerate(spec.components):
        for b in spec.components[i + 1 :]:
            inter = set(a.attrs) & set(b.attrs)
            if inter != set(shared):
                raise TransformError(
                    f"components {a.name}/{b.name} share {sorted(inter)}, expected exactly {sorted(shared)}"
                )
    undetermined = [c.name for c in spec.components if not _determined(shared, c.attrs, schema)]
    if len(undetermined) > 1:
        raise TransformError(
            f"shared attributes {sorted(shared)} must determine every component except at most one; "
            f"undetermined: {undetermined}"
        )

    new_relations: list[Relation] = []
    for r in schema.relations:
        if r.name == spec.source:
            new_relations.extend(spec.components)
        else:
            new_relations.append(r)
    new_fds = [
        _rehome_fd(fd, spec.components) if fd.relation == spec.source else fd for fd in schema.fds
    ]
    shared_order = tuple(a for a in source_rel.attrs if a in shared)
    new_inds: list[IND] = []
    for ind in schema.inds:
        l_rel, l_attrs = _rehome_ind_side(ind.lhs_rel, ind.lhs_attrs, spec.source, spec.components)
        r_rel, r_attrs = _rehome_ind_side(ind.rhs_rel, ind.rhs_attrs, spec.source, spec.components)
        if l_rel == r_rel and l_attrs == r_attrs:
            continue
        new_inds.append(IND(l_rel, l_attrs, r_rel, r_attrs, ind.equality))
    for i, a in enumerate(spec.components):
        for b in spec.components[i + 1 :]:
            new_inds.append(IND(a.name, shared_order, b.name, shared_order, equality=True))

    target = Schema(tuple(new_relations), tuple(new_fds), tuple(new_inds))
    if fd_closure(schema) != fd_closure(target):
        raise TransformError("FD closure not preserved by decomposition")

    vars_ = _attr_vars(source_rel.attrs)
    source_atom = Atom(spec.source, tuple(vars_[a] for a in source_rel.attrs))
    forward: list[Definition] = []
    for r in target.relations:
        if r in spec.components:
            comp_atom = Atom(r.name, tuple(vars_[a] for a in r.attrs))
            forward.append(Definition((Clause(comp_atom, (source_atom,)),)))
        else:
            forward.append(_identity_definition(r))
    inverse: list[Definition] = []
    for r in schema.relations:
        if r.name == spec.source:
            join_body = tuple(Atom(c.name, tuple(vars_[a] for a in c.attrs)) for c in spec.components)
            inverse.append(Definition((Clause(source_atom, join_body),)))
        else:
            inverse.append(_identity_definition(r))

    kinds = {r.name: ("decomposed" if r in spec.components else "identity") for r in target.relations}
    step = Step("decompose", source_rel, spec.components)
    return target, Transformation(schema, target, tuple(forward), tuple(inverse), kinds, (step,))


def compose(
    schema: Schema,
    members: Sequence[str],
    into: str,
    attrs: Sequence[str] | None = None,
) -> tuple[Schema, Transformation]:
    """Join relations linked by equality INDs on a common attribute set.

    The members must pairwise overlap in exactly the shared set C, be
    connected by equality INDs on C, and all but at most one must be
    determined by C (losslessness).  INDs pointing into the members are
    re-homed onto the composed relation.
    """
    members = list(dict.fromkeys(members))
    rels = [schema.relation(m) for m in members]
    if len(members) == 1:
        if into != members[0]:
            raise TransformError("singleton composition must keep the relation name")
        return schema, identity_transformation(schema)
    other_names = {r.name for r in schema.relations} - set(members)
    if into in other_names:
        raise TransformError(f"composed name {into} collides with an existing relation")

    shared = set(rels[0].attrs)
    for r in rels[1:]:
        shared &= set(r.attrs)
    if not shared:
        raise TransformError("members share no attribute")
    for i, a in enumerate(rels):
        for b in rels[i + 1 :]:
            inter = set(a.attrs) & set(b.attrs)
            if inter != shared:
                raise TransformError(
                    f"attribute collision outside the shared set: {a.name}/{b.name} share {sorted(inter)}"
                )

    member_set = set(members)
    adjacency: dict[str, set[str]] = {m: set() for m in members}
    for ind in schema.equality_inds():
        if ind.lhs_rel in member_set and ind.rhs_rel in member_set:
            if set(ind.lhs_attrs) != shared or set(ind.rhs_attrs) != shared:
                raise TransformError(
                    f"equality IND {ind.lhs_rel}{list(ind.lhs_attrs)} = {ind.rhs_rel}{list(ind.rhs_attrs)} "
                    f"is not on the shared set {sorted(shared)}"
                )
            adjacency[ind.lhs_rel].add(ind.rhs_rel)
            adjacency[ind.rhs_rel].add(ind.lhs_rel)
    seen = {members[0]}
    frontier = [members[0]]
    while frontier:
        cur = frontier.pop()
        for nxt in adjacency[cur]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    if seen != member_set:
        raise TransformError(f"members not connected by equality INDs on {sorted(shared)}")

    undetermined = [r.name for r in rels if not _determined(frozenset(shared), r.attrs, schema)]
    if len(undetermined) > 1:
        raise TransformError(
            f"shared attributes {sorted(shared)} must determine every member except at most one; "
            f"undetermined: {undetermined}"
        )

    shared_order = tuple(a for a in rels[0].attrs if a in shared)
    default_order = list(shared_order)
    for r in rels:
        default_order.extend(a for a in r.attrs if a not in shared)
    if attrs is not None:
        if sorted(attrs) != sorted(default_order):
            raise TransformError(f"attribute order {list(attrs)} is not a permutation of {default_order}")
        order = tuple(attrs)
    else:
        order = tuple(default_order)
    new_rel = Relation(into, order)

    new_relations: list[Relation] = []
    inserted = False
    for r in schema.relations:
        if r.name in member_set:
            if not inserted:
                new_relations.append(new_rel)
                inserted = True
        else:
            new_relations.append(r)
    new_fds = [FD(into, fd.lhs, fd.rhs) if fd.relation in member_set else fd for fd in schema.fds]
    new_inds: list[IND] = []
    for ind in schema.inds:
        lhs_rel = into if ind.lhs_rel in member_set else ind.lhs_rel
        rhs_rel = into if ind.rhs_rel in member_set else ind.rhs_rel
        if lhs_rel == rhs_rel == into and ind.equality and set(ind.lhs_attrs) == shared:
            continue  # the intra-class INDs are absorbed by the join
        if lhs_rel == rhs_rel and ind.lhs_attrs == ind.rhs_attrs:
            continue
        new_inds.append(IND(lhs_rel, ind.lhs_attrs, rhs_rel, ind.rhs_attrs, ind.equality))

    target = Schema(tuple(new_relations), tuple(new_fds), tuple(new_inds))
    if fd_closure(schema) != fd_closure(target):
        raise TransformError("FD closure not preserved by composition")

    vars_ = _attr_vars(order)
    joined_atom = Atom(into, tuple(vars_[a] for a in order))
    member_atoms = {r.name: Atom(r.name, tuple(vars_[a] for a in r.attrs)) for r in rels}
    forward: list[Definition] = []
    for r in target.relations:
        if r.name == into:
            body = tuple(member_atoms[m] for m in members)
            forward.append(Definition((Clause(joined_atom, body),)))
        else:
            forward.append(_identity_definition(r))
    inverse: list[Definition] = []
    for r in schema.relations:
        if r.name in member_set:
            inverse.append(Definition((Clause(member_atoms[r.name], (joined_atom,)),)))
        else:
            inverse.append(_identity_definition(r))
    kinds = {r.name: ("composed" if r.name == into else "identity") for r in target.relations}
    step = Step("compose", new_rel, tuple(rels))
    return target, Transformation(schema, target, tuple(forward), tuple(inverse), kinds, (step,))


# ---------------------------------------------------------------------------
# Program composition / definition mapping


def _unfold_clause(clause: Clause, program: Mapping[str, Definition]) -> Clause:
    fresh = fresh_var_factory(v.name for v in clause.variables())
    new_body: list[Atom] = []
    for literal in clause.body:
        defn = program.get(literal.pred)
        if defn is None:
            new_body.append(literal)
            continue
        if len(defn.clauses) != 1:
            raise HornlabError(f"cannot unfold through multi-clause definition of {literal.pred}")
        rule = defn.clauses[0]
        sub: dict[Var, object] = {}
        for formal, actual in zip(rule.head.args, literal.args):
            if not isinstance(formal, Var) or formal in sub:
                raise HornlabError(f"transformation rule head for {literal.pred} is not a distinct-variable atom")
            sub[formal] = actual
        for atom in rule.body:
            args = []
            for t in atom.args:
                if isinstance(t, Var):
                    if t not in sub:
                        sub[t] = fresh()
                    args.append(sub[t])
                else:
                    args.append(t)
            new_body.append(Atom(atom.pred, tuple(args)))
    return Clause(clause.head, tuple(new_body))


def _unfold_definition(defn: Definition, program: Mapping[str, Definition]) -> Definition:
    return Definition(tuple(_unfold_clause(c, program) for c in defn.clauses))


def map_definition(tau: Transformation, defn: Definition, direction: str) -> Definition:
    """Carry a Horn definition across the transformation (delta mapping).

    ``forward`` maps a definition over the source schema to an equivalent one
    over the target schema by unfolding each body literal through the inverse
    program (and vice versa for ``inverse``).
    """
    if direction == "forward":
        program = tau.inverse_program()
        from_schema = tau.source
    elif direction == "inverse":
        program = tau.forward_program()
        from_schema = tau.target
    else:
        raise HornlabError(f"direction must be 'forward' or 'inverse', not {direction!r}")
    known = {r.name for r in from_schema.relations}
    for clause in defn.clauses:
        bad = clause.body_predicates() - known - {defn.target}
        if bad:
            raise HornlabError(f"definition references relations outside the source schema: {sorted(bad)}")
    return _unfold_definition(defn, program)


def chain(first: Transformation, second: Transformation) -> Transformation:
    """Compose two transformations into one (source of first to target of second)."""
    mid_a = {(r.name, r.attrs) for r in first.target.relations}
    mid_b = {(r.name, r.attrs) for r in second.source.relations}
    if mid_a != mid_b:
        raise TransformError("cannot chain: intermediate schemas differ")
    forward = tuple(
        _unfold_definition(second.forward_program()[r.name], first.forward_program())
        for r in second.target.relations
    )
    inverse = tuple(
        _unfold_definition(first.inverse_program()[r.name], second.inverse_program())
        for r in first.source.relations
    )
    kinds = dict(second.kinds)
    return Transformation(first.source, second.target, forward, inverse, kinds, first.steps + second.steps)


def chain_all(transformations: Sequence[Transformation]) -> Transformation:
    if not transformations:
        raise TransformError("empty transformation chain")
    out = transformations[0]
    for t in transformations[1:]:
        out = chain(out, t)
    return out


# ---------------------------------------------------------------------------
# Application to instances


def apply_transformation(tau: Transformation, instance: Instance, direction: str) -> Instance:
    if direction == "forward":
        src, dst, program = tau.source, tau.target, tau.forward
    elif direction == "inverse":
        src, dst, program = tau.target, tau.source, tau.inverse
    else:
        raise HornlabError(f"direction must be 'forward' or 'inverse', not {direction!r}")
    if instance.schema is not src and {(r.name, r.attrs) for r in instance.schema.relations} != {
        (r.name, r.attrs) for r in src.relations
    }:
        raise HornlabError("instance schema does not match the transformation direction")
    data: dict[str, set[tuple[str, ...]]] = {}
    for defn in program:
        atoms = evaluate_definition(defn, instance)
        data[defn.target] = {tuple(c.value for c in a.args) for a in atoms}
    return Instance.build(dst, data)


@dataclass(frozen=True)
class BijectionReport:
    checked: int
    failures: tuple[str, ...]
    vacuous: bool = False

    @property
    def passed(self) -> bool:
        return not self.failures and not self.vacuous


def verify_bijection(
    tau: Transformation,
    instances: Sequence[Instance] = (),
    trials: int = 0,
    seed: int = 0,
    max_size: int = 60,
) -> BijectionReport:
    """Check roundtrip equality in both directions on supplied and random instances."""
    pool = list(instances)
    if trials:
        from .datasets import random_instance  # local import to avoid a cycle

        for k in range(trials):
            pool.append(random_instance(tau.source, seed=seed + k, size=max_size))
    if not pool:
        return BijectionReport(0, (), vacuous=True)
    failures: list[str] = []
    for n, inst in enumerate(pool):
        try:
            there = apply_transformation(tau, inst, "forward")
            back = apply_transformation(tau, there, "inverse")
            if not back.same_content(inst):
                failures.append(f"instance #{n}: inverse(forward(I)) != I")
                continue
            re_there = apply_transformation(tau, back, "forward")
            if not re_there.same_content(there):
                failures.append(f"instance #{n}: forward(inverse(J)) != J")
        except (ConstraintViolation, HornlabError) as e:
            failures.append(f"instance #{n}: {e}")
    return BijectionReport(len(pool), tuple(failures))


# ---------------------------------------------------------------------------
# Script grammar

_DECOMP_RE = re.compile(rf"^decompose\s+({_IDENT})\s+into\s+(.+)$")
_COMP_RE = re.compile(rf"^compose\s+(.+?)\s+into\s+({_IDENT})\s*(?:\(([^)]*)\))?\s*$")
_COMP_PART_RE = re.compile(rf"^({_IDENT})\s*\(([^)]*)\)$")


def parse_transform_script(text: str, schema: Schema) -> tuple[Schema, Transformation]:
    """Apply a script of decompose/compose steps to a schema.

    Returns the final schema and the chained transformation from the input
    schema to it.  An empty script yields the identity.
    """
    current = schema
    steps: list[Transformation] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _DECOMP_RE.match(line)
        if m:
            comps = []
            for part in m.group(2).split(";"):
                pm = _COMP_PART_RE.match(part.strip())
                if not pm:
                    raise ParseError(f"bad component {part.strip()!r}", lineno)
                comps.append(Relation(pm.group(1), tuple(a.strip() for a in pm.group(2).split(","))))
            try:
                current, t = decompose(current, DecompositionSpec(m.group(1), tuple(comps)))
            except TransformError as e:
                raise ParseError(str(e), lineno) from None
            steps.append(t)
            continue
        m = _COMP_RE.match(line)
        if m:
            members = [p.strip() for p in m.group(1).split(",")]
            attrs = tuple(a.strip() for a in m.group(3).split(",")) if m.group(3) else None
            try:
                current, t = compose(current, members, m.group(2), attrs)
            except TransformError as e:
                raise ParseError(str(e), lineno) from None
            steps.append(t)
            continue
        raise ParseError(f"unrecognized transformation step: {line!r}", lineno)
    if not steps:
        return schema, identity_transformation(schema)
    return current, chain_all(steps)


def transform_script_text(tau: Transformation) -> str:
    return "\n".join(s.to_text() for s in tau.steps) + ("\n" if tau.steps else "")
