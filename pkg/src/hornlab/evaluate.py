"""Conjunctive evaluation of ordered clauses and Horn definitions over instances.

Deliberately naive: bind-then-filter joins with a most-constrained-literal
selection heuristic.  Correctness and determinism over speed; result sets
use set semantics.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping, Sequence

from .errors import UnboundHeadVariable
from .model import Atom, Clause, Const, Definition, Instance, Term, Var

Binding = dict[Var, str]


def _match_row(args: Sequence[Term], row: tuple[str, ...], binding: Binding) -> Binding | None:
    """Extend binding so that args instantiate to row, or None."""
    new: Binding | None = None
    local: Binding = binding
    for t, v in zip(args, row):
        if isinstance(t, Const):
            if t.value != v:
                return None
        else:
            bound = local.get(t)
            if bound is None:
                if new is None:
                    new = dict(binding)
                    local = new
                new[t] = v
            elif bound != v:
                return None
    return local if new is not None else dict(binding)


def _candidate_rows(atom: Atom, facts: Mapping[str, Sequence[tuple[str, ...]]]) -> Sequence[tuple[str, ...]]:
    return facts.get(atom.pred, ())


def _boundness(atom: Atom, binding: Binding) -> int:
    return sum(1 for t in atom.args if isinstance(t, Const) or t in binding)


def _row_compatible(args: Sequence[Term], row: tuple[str, ...], binding: Binding) -> bool:
    local: dict[Var, str] = {}
    for t, v in zip(args, row):
        if isinstance(t, Const):
            if t.value != v:
                return False
        else:
            bound = binding.get(t, local.get(t))
            if bound is None:
                local[t] = v
            elif bound != v:
                return False
    return True


def _solutions(
    body: Sequence[Atom],
    facts: Mapping[str, Sequence[tuple[str, ...]]],
    binding: Binding,
) -> Iterator[Binding]:
    """All bindings satisfying the whole body (literal order immaterial)."""
    if not body:
        yield binding
        return
    # Fewest compatible rows first keeps long clauses tractable.
    best_i, best_n = 0, None
    for i, atom in enumerate(body):
        n = sum(1 for row in _candidate_rows(atom, facts) if _row_compatible(atom.args, row, binding))
        if n == 0:
            return
        if best_n is None or n < best_n:
            best_i, best_n = i, n
            if n == 1:
                break
    atom = body[best_i]
    rest = body[:best_i] + body[best_i + 1 :]
    for row in _candidate_rows(atom, facts):
        ext = _match_row(atom.args, row, binding)
        if ext is not None:
            yield from _solutions(rest, facts, ext)


def _body_components(body: Sequence[Atom], binding: Binding) -> list[list[Atom]]:
    """Split the body into components connected by unbound variables."""
    parent = list(range(len(body)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    home: dict[Var, int] = {}
    for i, atom in enumerate(body):
        for v in atom.variables():
            if v in binding:
                continue
            if v in home:
                ra, rb = find(home[v]), find(i)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            else:
                home[v] = i
    comps: dict[int, list[Atom]] = {}
    for i, atom in enumerate(body):
        comps.setdefault(find(i), []).append(atom)
    return [comps[k] for k in sorted(comps)]


def _sat_component(
    goals: Sequence[Atom],
    facts: Mapping[str, Sequence[tuple[str, ...]]],
    binding: Binding,
) -> bool:
    if not goals:
        return True
    best_i, best_n = 0, None
    for i, atom in enumerate(goals):
        n = sum(1 for row in _candidate_rows(atom, facts) if _row_compatible(atom.args, row, binding))
        if n == 0:
            return False
        if best_n is None or n < best_n:
            best_i, best_n = i, n
            if n == 1:
                break
    atom = goals[best_i]
    rest = list(goals[:best_i]) + list(goals[best_i + 1 :])
    for row in _candidate_rows(atom, facts):
        ext = _match_row(atom.args, row, binding)
        if ext is not None and _sat_component(rest, facts, ext):
            return True
    return False


def _satisfiable(
    body: Sequence[Atom],
    facts: Mapping[str, Sequence[tuple[str, ...]]],
    binding: Binding,
) -> bool:
    # Components that share no unbound variable are independent; checking
    # them separately turns a multiplicative search into a sum.
    for comp in _body_components(body, binding):
        if not _sat_component(comp, facts, binding):
            return False
    return True


def _facts_view(
    instance: Instance, extra: Mapping[str, Iterable[tuple[str, ...]]] | None = None
) -> dict[str, list[tuple[str, ...]]]:
    view: dict[str, list[tuple[str, ...]]] = {r.name: instance.rows(r.name) for r in instance.schema.relations}
    if extra:
        for pred, rows in extra.items():
            view[pred] = sorted(set(view.get(pred, [])) | set(rows))
    return view


def evaluate_clause(
    clause: Clause,
    instance: Instance,
    extra_facts: Mapping[str, Iterable[tuple[str, ...]]] | None = None,
) -> set[Atom]:
    """All ground head instantiations whose body is satisfied by the instance.

    ``extra_facts`` supplies tuples for predicates outside the schema (used
    for the target relation when evaluating recursive definitions).
    """
    head_vars = set(clause.head.variables())
    body_vars = {v for a in clause.body for v in a.variables()}
    if not head_vars <= body_vars:
        missing = sorted(v.name for v in head_vars - body_vars)
        raise UnboundHeadVariable(f"head variables {missing} do not occur in the body")
    facts = _facts_view(instance, extra_facts)
    out: set[Atom] = set()
    for binding in _solutions(clause.body, facts, {}):
        out.add(
            Atom(
                clause.head.pred,
                tuple(t if isinstance(t, Const) else Const(binding[t]) for t in clause.head.args),
            )
        )
    return out


def evaluate_definition(definition: Definition, instance: Instance) -> set[Atom]:
    """Definition result: union over clauses, iterated to a fixpoint.

    The fixpoint matters only for recursive definitions (target predicate in
    a body); ordinary definitions converge after one round.
    """
    target = definition.target
    derived: set[tuple[str, ...]] = set()
    while True:
        extra = {target: derived}
        new = set(derived)
        for clause in definition.clauses:
            for atom in evaluate_clause(clause, instance, extra):
                new.add(tuple(c.value for c in atom.args))
        if new == derived:
            break
        derived = new
    return {Atom(target, tuple(Const(v) for v in row)) for row in derived}


def _head_binding(head: Atom, example: Atom) -> Binding | None:
    """Unify a (possibly non-ground) head with a ground example atom."""
    if head.pred != example.pred or head.arity != example.arity:
        return None
    binding: Binding = {}
    for t, e in zip(head.args, example.args):
        v = e.value  # examples are ground
        if isinstance(t, Const):
            if t.value != v:
                return None
        else:
            if binding.setdefault(t, v) != v:
                return None
    return binding


def clause_covers_example(
    clause: Clause,
    instance: Instance,
    example: Atom,
    extra_facts: Mapping[str, Iterable[tuple[str, ...]]] | None = None,
) -> bool:
    binding = _head_binding(clause.head, example)
    if binding is None:
        return False
    facts = _facts_view(instance, extra_facts)
    return _satisfiable(clause.body, facts, binding)


def covers(
    instance: Instance,
    hypothesis: Definition | Clause,
    examples: Iterable[Atom],
) -> set[Atom]:
    """Subset of examples entailed by the hypothesis over the instance.

    Works for unsafe partial clauses (head variables then match anything);
    recursive definitions fall back to fixpoint evaluation and require safe
    clauses.
    """
    clauses = [hypothesis] if isinstance(hypothesis, Clause) else list(hypothesis.clauses)
    examples = list(examples)
    if not clauses or not examples:
        return set()
    target = clauses[0].head.pred
    if any(target in c.body_predicates() for c in clauses):
        result = evaluate_definition(Definition(tuple(clauses)), instance)
        return {e for e in examples if e in result}
    out: set[Atom] = set()
    for e in examples:
        if any(clause_covers_example(c, instance, e) for c in clauses):
            out.add(e)
    return out


def prefix_reach(clause: Clause, instance: Instance, example: Atom) -> int | None:
    """Longest satisfiable body prefix length, with the head bound to ``example``.

    Returns ``None`` when the head does not unify with the example at all,
    the count of satisfiable prefix literals otherwise (== len(body) when
    the whole body is satisfiable).  Used to locate blocking atoms.
    """
    binding = _head_binding(clause.head, example)
    if binding is None:
        return None
    facts = _facts_view(instance)
    best = 0

    def walk(i: int, b: Binding) -> bool:
        nonlocal best
        best = max(best, i)
        if i == len(clause.body):
            return True
        atom = clause.body[i]
        for row in _candidate_rows(atom, facts):
            ext = _match_row(atom.args, row, b)
            if ext is not None and walk(i + 1, ext):
                return True
        return False

    walk(0, binding)
    return best
