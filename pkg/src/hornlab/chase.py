"""Clause-level logic machinery.

Chase with equality INDs, complete theta-subsumption with a node budget,
constraint-aware clause equivalence, negative reduction, and
homomorphism-based minimization.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ChaseError, HornlabError, SubsumptionBudgetExceeded
from .evaluate import covers
from .model import IND, Atom, Clause, Const, Definition, Instance, Schema, Term, Var

DEFAULT_SUBSUMPTION_BUDGET = 500_000


@dataclass(frozen=True)
class Substitution:
    """A variable-to-term map; application leaves unmapped variables alone."""

    mapping: Mapping[Var, Term] = field(default_factory=dict)

    def apply_term(self, t: Term) -> Term:
        if isinstance(t, Var):
            return self.mapping.get(t, t)
        return t

    def apply_atom(self, a: Atom) -> Atom:
        return Atom(a.pred, tuple(self.apply_term(t) for t in a.args))

    def apply_clause(self, c: Clause) -> Clause:
        return Clause(self.apply_atom(c.head), tuple(self.apply_atom(a) for a in c.body))

    def __len__(self) -> int:
        return len(self.mapping)


@dataclass(frozen=True)
class EquivalenceVerdict:
    status: str  # "equivalent" | "different" | "unknown"
    forward: Substitution | None = None
    backward: Substitution | None = None
    detail: str = ""

    @property
    def equivalent(self) -> bool:
        return self.status == "equivalent"


# ---------------------------------------------------------------------------
# Fresh variable allocation

_VNUM = re.compile(r"^V(\d+)$")


def fresh_var_factory(used_names: Iterable[str]) -> Callable[[], Var]:
    used = set(used_names)
    counter = max((int(m.group(1)) for n in used if (m := _VNUM.match(n))), default=0)

    def fresh() -> Var:
        nonlocal counter
        while True:
            counter += 1
            name = f"V{counter}"
            if name not in used:
                used.add(name)
                return Var(name)

    return fresh


# ---------------------------------------------------------------------------
# Chase


def _equality_ind_views(schema: Schema) -> dict[str, list[tuple[tuple[str, ...], str, tuple[str, ...]]]]:
    """Per relation: (own attrs, partner relation, partner attrs) for each equality IND."""
    views: dict[str, list[tuple[tuple[str, ...], str, tuple[str, ...]]]] = {}
    for ind in schema.equality_inds():
        views.setdefault(ind.lhs_rel, []).append((ind.lhs_attrs, ind.rhs_rel, ind.rhs_attrs))
        views.setdefault(ind.rhs_rel, []).append((ind.rhs_attrs, ind.lhs_rel, ind.lhs_attrs))
    for lst in views.values():
        lst.sort()
    return views


def _positions(schema: Schema, rel: str, attrs: Sequence[str]) -> list[int]:
    declared = schema.relation(rel).attrs
    return [declared.index(a) for a in attrs]


def chase_clause(clause: Clause, schema: Schema) -> Clause:
    """Complete the body under the schema's INDs with equality.

    For every body literal of R and every equality IND R[A]=S[B], the result
    contains an S-literal carrying the same terms at the B positions; fresh
    variables fill the rest.  A partner literal is skipped when one with the
    same projection already exists, which both avoids redundancy and makes
    the chase idempotent.
    """
    views = _equality_ind_views(schema)
    if not views:
        return clause
    body = list(clause.body)
    fresh = fresh_var_factory(v.name for v in clause.variables())
    # Projection index: (rel, attr tuple, term tuple) for fast redundancy checks.
    have: set[tuple] = set()

    def register(atom: Atom) -> None:
        for own_attrs, _, _ in views.get(atom.pred, ()):
            idx = _positions(schema, atom.pred, own_attrs)
            have.add((atom.pred, own_attrs, tuple(atom.args[i] for i in idx)))

    for a in body:
        register(a)

    guard = max(1, len(schema.relations)) * max(1, len(schema.equality_inds())) * max(1, len(body)) + len(body)
    queue = list(body)
    processed = 0
    while queue:
        atom = queue.pop(0)
        processed += 1
        if processed > guard:
            raise ChaseError(
                f"clause chase exceeded {guard} rounds; equality INDs too entangled"
            )
        for own_attrs, partner_rel, partner_attrs in views.get(atom.pred, ()):
            own_idx = _positions(schema, atom.pred, own_attrs)
            terms = tuple(atom.args[i] for i in own_idx)
            if (partner_rel, partner_attrs, terms) in have:
                continue
            partner_decl = schema.relation(partner_rel)
            partner_idx = _positions(schema, partner_rel, partner_attrs)
            args: list[Term] = [None] * partner_decl.arity  # type: ignore[list-item]
            for i, t in zip(partner_idx, terms):
                args[i] = t
            for i in range(partner_decl.arity):
                if args[i] is None:
                    args[i] = fresh()
            new_atom = Atom(partner_rel, tuple(args))
            body.append(new_atom)
            register(new_atom)
            queue.append(new_atom)
    return Clause(clause.head, tuple(body))


def unify_by_fds(clause: Clause, schema: Schema) -> Clause | None:
    """Equate terms forced equal by the schema's FDs (the EGD half of the chase).

    Two body literals of the same relation agreeing on an FD's lhs positions
    get their rhs positions unified; variable/variable picks the earlier
    variable, variable/constant binds the variable.  Returns None when two
    distinct constants collide (the body is unsatisfiable over valid
    instances).
    """
    order = {v: i for i, v in enumerate(clause.variables())}

    def sub_all(c: Clause, a: Term, b: Term) -> Clause:
        def sub_atom(atom: Atom) -> Atom:
            return Atom(atom.pred, tuple(b if t == a else t for t in atom.args))

        return Clause(sub_atom(c.head), tuple(sub_atom(x) for x in c.body))

    current = clause
    changed = True
    while changed:
        changed = False
        for fd in schema.fds:
            rel = schema.relation(fd.relation)
            lhs_idx = [rel.attrs.index(a) for a in fd.lhs]
            rhs_idx = [rel.attrs.index(a) for a in fd.rhs]
            groups: dict[tuple, Atom] = {}
            for atom in current.body:
                if atom.pred != fd.relation:
                    continue
                key = tuple(atom.args[i] for i in lhs_idx)
                first = groups.setdefault(key, atom)
                if first is atom:
                    continue
                for i in rhs_idx:
                    t1, t2 = first.args[i], atom.args[i]
                    if t1 == t2:
                        continue
                    if isinstance(t1, Const) and isinstance(t2, Const):
                        return None
                    if isinstance(t1, Var) and isinstance(t2, Var):
                        keep, drop = (t1, t2) if order.get(t1, 1 << 30) <= order.get(t2, 1 << 30) else (t2, t1)
                    elif isinstance(t1, Var):
                        keep, drop = t2, t1
                    else:
                        keep, drop = t1, t2
                    current = sub_all(current, drop, keep)
                    changed = True
                    break
                if changed:
                    break
            if changed:
                break
    # Unification can create duplicate literals; collapse them, keeping order.
    return Clause(current.head, tuple(dict.fromkeys(current.body)))


def full_chase(clause: Clause, schema: Schema) -> Clause | None:
    """Alternate the equality-IND chase and FD unification to a fixpoint.

    This is the constraint-equivalence normal form used by clause_equivalent
    and minimize_definition; returns None for bodies unsatisfiable over
    constraint-satisfying instances.
    """
    current = clause
    for _ in range(len(clause.variables()) + len(clause.body) + 2):
        step = chase_clause(current, schema)
        unified = unify_by_fds(step, schema)
        if unified is None:
            return None
        if unified == current:
            return current
        current = unified
    return current


# ---------------------------------------------------------------------------
# Theta-subsumption


def _unify_onto(pattern: Atom, target: Atom, theta: dict[Var, Term]) -> dict[Var, Term] | None:
    """Extend theta so pattern[theta] == target (target terms taken literally)."""
    if pattern.pred != target.pred or pattern.arity != target.arity:
        return None
    out = theta
    fresh_copy = False
    for p, t in zip(pattern.args, target.args):
        if isinstance(p, Const):
            if p != t:
                return None
            continue
        bound = out.get(p)
        if bound is None:
            if not fresh_copy:
                out = dict(out)
                fresh_copy = True
            out[p] = t
        elif bound != t:
            return None
    return out if fresh_copy else dict(out)


def theta_subsumes(
    c: Clause,
    d: Clause,
    budget: int = DEFAULT_SUBSUMPTION_BUDGET,
) -> Substitution | None:
    """Find theta with head(c)theta == head(d) and body(c)theta a subset of body(d).

    Complete backtracking search; raises SubsumptionBudgetExceeded when the
    node budget runs out (callers must report "unknown", never "no").
    """
    theta0 = _unify_onto(c.head, d.head, {})
    if theta0 is None:
        return None
    d_by_pred: dict[str, list[Atom]] = {}
    for a in d.body:
        d_by_pred.setdefault(a.pred, []).append(a)
    # Deduplicate c's body (set semantics) but keep deterministic order.
    goals = list(dict.fromkeys(c.body))
    if any(g.pred not in d_by_pred for g in goals):
        return None

    # Goals identical up to goal-local variables (variables occurring in just
    # that goal and not in the head) can share one image literal, so only one
    # representative needs solving; the others inherit its assignment.
    occurrences: dict[Var, int] = {}
    for g in goals:
        for v in set(g.variables()):
            occurrences[v] = occurrences.get(v, 0) + 1
    head_vars = set(c.head.variables())

    def local_pattern(g: Atom) -> tuple | None:
        locals_: dict[Var, int] = {}
        pattern: list = []
        for t in g.args:
            if isinstance(t, Var) and occurrences[t] == 1 and t not in head_vars:
                pattern.append(("_", locals_.setdefault(t, len(locals_))))
            else:
                pattern.append(t)
        return (g.pred, tuple(pattern)) if locals_ else None

    representative: dict[tuple, Atom] = {}
    collapsed: list[Atom] = []
    followers: dict[Atom, list[Atom]] = {}
    for g in goals:
        pat = local_pattern(g)
        if pat is None:
            collapsed.append(g)
            continue
        rep = representative.get(pat)
        if rep is None:
            representative[pat] = g
            collapsed.append(g)
        else:
            followers.setdefault(rep, []).append(g)
    goals = collapsed
    nodes = 0

    def compatible(goal: Atom, cand: Atom, theta: dict[Var, Term]) -> bool:
        for p, t in zip(goal.args, cand.args):
            if isinstance(p, Const):
                if p != t:
                    return False
            else:
                bound = theta.get(p)
                if bound is not None and bound != t:
                    return False
        return True

    def search(remaining: list[Atom], theta: dict[Var, Term]) -> dict[Var, Term] | None:
        nonlocal nodes
        if not remaining:
            return theta
        # Forward checking: pick the goal with the fewest compatible
        # candidates; an empty candidate list prunes the branch outright.
        best_i = -1
        best_cands: list[Atom] | None = None
        for i, g in enumerate(remaining):
            cands = [cand for cand in d_by_pred[g.pred] if compatible(g, cand, theta)]
            if not cands:
                return None
            if best_cands is None or len(cands) < len(best_cands):
                best_i, best_cands = i, cands
                if len(cands) == 1:
                    break
        goal = remaining[best_i]
        rest = remaining[:best_i] + remaining[best_i + 1 :]
        for cand in best_cands:
            nodes += 1
            if nodes > budget:
                raise SubsumptionBudgetExceeded(budget)
            ext = _unify_onto(goal, cand, theta)
            if ext is not None:
                res = search(rest, ext)
                if res is not None:
                    return res
        return None

    # Goals sharing no free variable are independent; solving the connected
    # components separately avoids multiplicative backtracking across them.
    bound0 = set(theta0)
    parent = list(range(len(goals)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    var_home: dict[Var, int] = {}
    for i, g in enumerate(goals):
        for v in g.variables():
            if v in bound0:
                continue
            if v in var_home:
                ra, rb = find(var_home[v]), find(i)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            else:
                var_home[v] = i
    components: dict[int, list[Atom]] = {}
    for i, g in enumerate(goals):
        components.setdefault(find(i), []).append(g)

    theta = dict(theta0)
    for root in sorted(components):
        res = search(components[root], theta)
        if res is None:
            return None
        theta = res

    # Extend the substitution to collapsed follower goals: their local
    # variables copy the representative's assignment position-wise.
    for rep, others in followers.items():
        for g in others:
            for rep_t, g_t in zip(rep.args, g.args):
                if isinstance(g_t, Var) and g_t not in theta:
                    theta[g_t] = theta.get(rep_t, rep_t) if isinstance(rep_t, Var) else rep_t
    return Substitution(theta)


def clause_equivalent(
    c: Clause,
    d: Clause,
    schema_c: Schema | None = None,
    schema_d: Schema | None = None,
    tau=None,
    budget: int = DEFAULT_SUBSUMPTION_BUDGET,
) -> EquivalenceVerdict:
    """Decide equivalence of two clauses over constraint-satisfying instances.

    With ``tau`` given, ``c`` lives over ``tau``'s source schema and is first
    carried across by the induced definition mapping; both clauses are then
    chased under the target schema's constraints and checked for mutual
    theta-subsumption.  Without ``tau`` both clauses must share a schema.
    """
    if tau is not None:
        from .transform import map_definition  # local import to avoid a cycle

        schema_d = schema_d or tau.target
        mapped = map_definition(tau, Definition((c,)), "forward")
        c_side = mapped.clauses[0]
    else:
        c_side = c
        schema_d = schema_d or schema_c
    if schema_d is not None:
        c_chased = full_chase(c_side, schema_d)
        d_chased = full_chase(d, schema_d)
        if c_chased is None or d_chased is None:
            if c_chased is None and d_chased is None:
                return EquivalenceVerdict("equivalent", detail="both bodies unsatisfiable under constraints")
            return EquivalenceVerdict("different", detail="one body unsatisfiable under constraints")
        c_side, d_side = c_chased, d_chased
    else:
        d_side = d
    try:
        fwd = theta_subsumes(c_side, d_side, budget)
        if fwd is None:
            return EquivalenceVerdict("different", detail="no forward subsumption")
        bwd = theta_subsumes(d_side, c_side, budget)
        if bwd is None:
            return EquivalenceVerdict("different", forward=fwd, detail="no backward subsumption")
        return EquivalenceVerdict("equivalent", forward=fwd, backward=bwd)
    except SubsumptionBudgetExceeded as e:
        return EquivalenceVerdict("unknown", detail=str(e))


# ---------------------------------------------------------------------------
# Head-connectivity (ordered-clause sense: connect through preceding atoms)


def drop_non_head_connected(clause: Clause) -> Clause:
    connected = set(clause.head.variables())
    kept = []
    for atom in clause.body:
        atom_vars = set(atom.variables())
        if atom_vars & connected:
            kept.append(atom)
            connected |= atom_vars
    return Clause(clause.head, tuple(kept))


# ---------------------------------------------------------------------------
# Negative reduction


def reduce_negative(
    clause: Clause,
    instance: Instance,
    negatives: Iterable[Atom],
    literal_key: Callable[[Atom], tuple] | None = None,
) -> Clause:
    """Permanently remove body literals whose removal keeps the clause consistent.

    Literals are *considered* in the order given by ``literal_key`` (falling
    back to body position); the surviving body keeps its original relative
    order.  Requires an initially consistent clause.
    """
    negatives = list(negatives)
    if covers(instance, clause, negatives):
        raise HornlabError("reduce_negative: input clause already covers a negative example")
    body = list(clause.body)
    order = sorted(
        range(len(body)),
        key=(lambda i: (literal_key(body[i]), i)) if literal_key else (lambda i: i),
    )

    def cleanup(alive: list[bool]) -> list[bool]:
        # One left-to-right pass: an atom stays only if it shares a variable
        # with the head or with a kept atom before it.
        out = list(alive)
        connected = set(clause.head.variables())
        for j, atom in enumerate(body):
            if not out[j]:
                continue
            atom_vars = set(atom.variables())
            if atom_vars & connected:
                connected |= atom_vars
            else:
                out[j] = False
        return out

    alive = [True] * len(body)
    for i in order:
        if not alive[i]:
            continue
        trial = list(alive)
        trial[i] = False
        trial = cleanup(trial)
        trial_clause = Clause(clause.head, tuple(a for a, ok in zip(body, trial) if ok))
        if not covers(instance, trial_clause, negatives):
            alive = trial
    return Clause(clause.head, tuple(a for a, ok in zip(body, alive) if ok))


# ---------------------------------------------------------------------------
# Minimization


def minimize_clause(clause: Clause, budget: int = DEFAULT_SUBSUMPTION_BUDGET) -> Clause:
    """Remove body literals witnessed redundant by a self-homomorphism."""
    current = clause
    changed = True
    while changed:
        changed = False
        for i in range(len(current.body)):
            candidate = Clause(current.head, current.body[:i] + current.body[i + 1 :])
            if theta_subsumes(current, candidate, budget) is not None:
                current = candidate
                changed = True
                break
    return current


def minimize_definition(
    definition: Definition,
    schema: Schema,
    budget: int = DEFAULT_SUBSUMPTION_BUDGET,
    diagnostics: list[str] | None = None,
) -> Definition:
    """Chase then core-minimize each clause; drop clauses subsumed by another.

    On budget exhaustion a clause is kept unminimized and a note is appended
    to ``diagnostics``.
    """
    minimized: list[Clause] = []
    for c in definition.clauses:
        chased = full_chase(c, schema)
        if chased is None:
            if diagnostics is not None:
                diagnostics.append(f"clause dropped (unsatisfiable under constraints): {c!r}")
            continue
        try:
            minimized.append(minimize_clause(chased, budget))
        except SubsumptionBudgetExceeded:
            if diagnostics is not None:
                diagnostics.append(f"clause left unminimized (budget): {chased!r}")
            minimized.append(chased)
    if not minimized:
        return Definition(())

    dropped = [False] * len(minimized)
    for j in range(len(minimized)):
        for i in range(len(minimized)):
            if i == j or dropped[i]:
                continue
            try:
                if theta_subsumes(minimized[i], minimized[j], budget) is None:
                    continue
                back = theta_subsumes(minimized[j], minimized[i], budget) is not None
            except SubsumptionBudgetExceeded:
                if diagnostics is not None:
                    diagnostics.append(f"clause-set minimization skipped a pair (budget)")
                continue
            if not back or i < j:
                dropped[j] = True
                break
    kept = tuple(c for c, d in zip(minimized, dropped) if not d)
    return Definition(kept if kept else (minimized[0],))
