"""The four learners: FOIL, modified FOIL, Golem, ProGolem.

Each is a LearnClause strategy plugged into the generic covering loop.
Determinism throughout: positives are processed in input order, sampling is
seeded, and every tie-break is explicit (score, then shorter body, then
earlier generation order).
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Callable, Sequence

from .chase import drop_non_head_connected, fresh_var_factory, reduce_negative
from .errors import ConfigError, HornlabError
from .evaluate import covers, prefix_reach
from .model import (
    Atom,
    Clause,
    Const,
    Definition,
    ExampleSet,
    Instance,
    Schema,
    Term,
    Var,
    inclusion_classes,
    variant_key,
)
from .saturation import (
    BottomClause,
    bottom_clause_depth,
    bottom_clause_maxvars,
    class_ranks,
    ground_saturation,
)

LEARNERS = ("foil", "mfoil", "golem", "progolem")


@dataclass(frozen=True)
class LearnerConfig:
    learner: str = "progolem"
    clause_length: int = 4  # FOIL: max body literals
    max_inclusion_classes: int = 3  # modified FOIL: max class additions
    beam_width: int = 3  # ProGolem beam
    maxvars: int = 12  # maxvars bottoms; doubles as Golem's constant budget
    max_depth: int = 2  # classic depth bottoms
    noise: float = 0.0  # fraction of negatives a clause may cover
    sample_size: int = 5  # ProGolem: armg seeds per round
    seed: int = 0
    eval_fn: str = "coverage"
    pair_bound: int = 20  # Golem: enumerate all pairs while |U| <= bound
    bottom_mode: str = "maxvars"  # "maxvars" (M-ProGolem) or "depth" (classic)

    def __post_init__(self):
        if self.learner not in LEARNERS:
            raise ConfigError(f"unknown learner {self.learner!r}; choose from {LEARNERS}")
        for name in ("clause_length", "max_inclusion_classes", "beam_width", "maxvars", "sample_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0")
        if not 0.0 <= self.noise <= 1.0:
            raise ConfigError("noise must lie in [0, 1]")
        if self.eval_fn != "coverage":
            raise ConfigError(f"unsupported eval_fn {self.eval_fn!r}")
        if self.bottom_mode not in ("maxvars", "depth"):
            raise ConfigError("bottom_mode must be 'maxvars' or 'depth'")


@dataclass(frozen=True)
class LearnResult:
    definition: Definition
    covered: tuple[Atom, ...]
    uncovered: tuple[Atom, ...]
    notes: tuple[str, ...] = ()

    @property
    def complete(self) -> bool:
        return not self.uncovered


@dataclass(frozen=True)
class RefinementNode:
    clause: Clause
    score: float
    parent: "RefinementNode | None" = None


# ---------------------------------------------------------------------------
# Refinement (top-down moves)


def _head_for(target: str, arity: int) -> Atom:
    return Atom(target, tuple(Var(f"X{i + 1}") for i in range(arity)))


def _add_literal_children(clause: Clause, schema: Schema) -> list[Clause]:
    children = []
    existing = clause.variables()
    for rel in schema.relations:
        slots: list[list[Term | None]] = []
        for _ in range(rel.arity):
            slots.append([*existing, None])  # None marks a fresh variable
        for combo in itertools.product(*slots):
            fresh = fresh_var_factory(v.name for v in existing)
            args = tuple(t if t is not None else fresh() for t in combo)
            children.append(Clause(clause.head, clause.body + (Atom(rel.name, args),)))
    return children


def _unify_children(clause: Clause) -> list[Clause]:
    children = []
    vars_ = clause.variables()
    for i in range(len(vars_)):
        for j in range(i + 1, len(vars_)):
            sub = {vars_[j]: vars_[i]}

            def apply(atom: Atom) -> Atom:
                return Atom(atom.pred, tuple(sub.get(t, t) if isinstance(t, Var) else t for t in atom.args))

            children.append(Clause(apply(clause.head), tuple(apply(a) for a in clause.body)))
    return children


def refine(clause: Clause, schema: Schema, config: LearnerConfig) -> list[Clause]:
    """All single-step specializations: add one literal (fresh variables kept
    distinct; sharing is reached via the unify move), or unify two variables.
    Deduplicated up to renaming, in deterministic generation order."""
    children: list[Clause] = []
    if len(clause.body) < config.clause_length:
        children.extend(_add_literal_children(clause, schema))
    children.extend(_unify_children(clause))
    seen = set()
    out = []
    for c in children:
        key = variant_key(c)
        if key not in seen:
            seen.add(key)
            out.append(c)
    return out


def _class_blocks(schema: Schema) -> list[tuple[str, ...]]:
    return [tuple(sorted(cls)) for cls in inclusion_classes(schema)]


def _add_class_children(clause: Clause, schema: Schema) -> list[Clause]:
    """Modified-FOIL add move: one whole inclusion class, IND positions shared."""
    children = []
    existing = clause.variables()
    for block in _class_blocks(schema):
        for seed_name in block:
            seed_rel = schema.relation(seed_name)
            slots: list[list[Term | None]] = [[*existing, None] for _ in range(seed_rel.arity)]
            for combo in itertools.product(*slots):
                fresh = fresh_var_factory(v.name for v in existing)
                seed_args = tuple(t if t is not None else fresh() for t in combo)
                attr_map: dict[str, Term] = {}
                for attr, t in zip(seed_rel.attrs, seed_args):
                    attr_map.setdefault(attr, t)
                block_atoms = []
                for member in block:
                    rel = schema.relation(member)
                    args = []
                    for attr in rel.attrs:
                        if attr not in attr_map:
                            attr_map[attr] = fresh()
                        args.append(attr_map[attr])
                    block_atoms.append(Atom(member, tuple(args)))
                children.append(Clause(clause.head, clause.body + tuple(block_atoms)))
    seen = set()
    out = []
    for c in children:
        key = variant_key(c)
        if key not in seen:
            seen.add(key)
            out.append(c)
    return out


# ---------------------------------------------------------------------------
# Scoring and the greedy top-down loop


def _coverage_score(
    clause: Clause, instance: Instance, uncovered: Sequence[Atom], negatives: Sequence[Atom]
) -> tuple[int, int]:
    p = len(covers(instance, clause, uncovered))
    n = len(covers(instance, clause, negatives))
    return p, n


def _within_noise(n_covered: int, negatives_total: int, noise: float) -> bool:
    return n_covered <= noise * negatives_total


def _greedy_top_down(
    instance: Instance,
    uncovered: Sequence[Atom],
    examples: ExampleSet,
    config: LearnerConfig,
    children_of: Callable[[Clause, int], list[Clause]],
    budget_of: Callable[[Clause, int], bool],
) -> Clause | None:
    """Shared FOIL/modified-FOIL inner loop.

    ``children_of(clause, blocks_used)`` yields specializations;
    ``budget_of`` says whether an add move is still allowed.  The loop
    follows the best-scoring child (ties: earlier generation), returns the
    first admissible clause (safe, within noise, covering a new positive),
    and stops on strict score decline.
    """
    negatives = examples.negatives
    head = _head_for(examples.target, examples.arity)
    current = Clause(head, ())
    blocks_used = 0
    p, n = _coverage_score(current, instance, uncovered, negatives)
    current_score = p - n
    best_admissible: Clause | None = None
    best_admissible_score: tuple | None = None

    while True:
        if (
            current.is_safe()
            and _within_noise(n, len(negatives), config.noise)
            and p >= 1
            and current.body
        ):
            return current
        children = children_of(current, blocks_used) if budget_of(current, blocks_used) else []
        children = children + _unify_children(current)
        seen: set = set()
        ordered = []
        for c in children:
            key = variant_key(c)
            if key not in seen:
                seen.add(key)
                ordered.append(c)
        if not ordered:
            break
        scored = []
        for gen, child in enumerate(ordered):
            cp, cn = _coverage_score(child, instance, uncovered, negatives)
            scored.append((cp - cn, cp, cn, gen, child))
            if (
                child.is_safe()
                and _within_noise(cn, len(negatives), config.noise)
                and cp >= 1
            ):
                if best_admissible is None or (cp - cn, -len(child.body)) > best_admissible_score:
                    best_admissible = child
                    best_admissible_score = (cp - cn, -len(child.body))
        best = max(scored, key=lambda s: (s[0], -len(s[4].body), -s[3]))
        if best[0] <= current_score:
            break  # no child improves; fall back to the best admissible seen
        added_literal = len(best[4].body) > len(current.body)
        current = best[4]
        p, n, current_score = best[1], best[2], best[0]
        if added_literal:
            blocks_used += 1

    if best_admissible is not None:
        return best_admissible
    return None


def foil_learn_clause(
    instance: Instance,
    uncovered: Sequence[Atom],
    examples: ExampleSet,
    config: LearnerConfig,
) -> Clause | None:
    return _greedy_top_down(
        instance,
        uncovered,
        examples,
        config,
        children_of=lambda c, _: _add_literal_children(c, instance.schema),
        budget_of=lambda c, _: len(c.body) < config.clause_length,
    )


def modified_foil_learn_clause(
    instance: Instance,
    uncovered: Sequence[Atom],
    examples: ExampleSet,
    config: LearnerConfig,
) -> Clause | None:
    return _greedy_top_down(
        instance,
        uncovered,
        examples,
        config,
        children_of=lambda c, _: _add_class_children(c, instance.schema),
        budget_of=lambda c, used: used < config.max_inclusion_classes,
    )


# ---------------------------------------------------------------------------
# lgg / rlgg


def lgg(c1: Clause, c2: Clause) -> Clause | None:
    """Plotkin's least general generalization of two (ordered) clauses.

    Variables with the same name in both inputs are treated as the same
    term, so lgg(c, c) == c.  Body literals are anti-unified pairwise over a
    shared term-pair table; output order follows the (body1, body2) index
    pairs, with exact duplicates collapsed.
    """
    if c1.head.pred != c2.head.pred or c1.head.arity != c2.head.arity:
        return None
    used = {v.name for v in c1.variables()} | {v.name for v in c2.variables()}
    fresh = fresh_var_factory(used)
    table: dict[tuple[Term, Term], Var] = {}

    def anti(t1: Term, t2: Term) -> Term:
        if t1 == t2:
            return t1
        v = table.get((t1, t2))
        if v is None:
            v = fresh()
            table[(t1, t2)] = v
        return v

    head = Atom(c1.head.pred, tuple(anti(a, b) for a, b in zip(c1.head.args, c2.head.args)))
    body: list[Atom] = []
    seen: set[Atom] = set()
    for a1 in c1.body:
        for a2 in c2.body:
            if a1.pred != a2.pred or a1.arity != a2.arity:
                continue
            atom = Atom(a1.pred, tuple(anti(x, y) for x, y in zip(a1.args, a2.args)))
            if atom not in seen:
                seen.add(atom)
                body.append(atom)
    return Clause(head, tuple(body))


def variabilize(clause: Clause) -> Clause:
    """Replace every constant by a variable (same constant, same variable)."""
    mapping: dict[Const, Var] = {}
    fresh = fresh_var_factory(v.name for v in clause.variables())

    def sub(atom: Atom) -> Atom:
        args = []
        for t in atom.args:
            if isinstance(t, Const):
                if t not in mapping:
                    mapping[t] = fresh()
                args.append(mapping[t])
            else:
                args.append(t)
        return Atom(atom.pred, tuple(args))

    return Clause(sub(clause.head), tuple(sub(a) for a in clause.body))


def generalize_head_constants(clause: Clause) -> Clause:
    """Lift any constants left in the head to fresh variables, consistently
    through the body (learned clauses carry no head constants)."""
    consts = [t for t in clause.head.args if isinstance(t, Const)]
    if not consts:
        return clause
    fresh = fresh_var_factory(v.name for v in clause.variables())
    mapping: dict[Const, Var] = {}
    for c in consts:
        mapping.setdefault(c, fresh())

    def sub(atom: Atom) -> Atom:
        return Atom(atom.pred, tuple(mapping.get(t, t) if isinstance(t, Const) else t for t in atom.args))

    return Clause(sub(clause.head), tuple(sub(a) for a in clause.body))


def rlgg(e1: Atom, e2: Atom, instance: Instance, config: LearnerConfig) -> Clause | None:
    """lgg of the ground saturations of two examples."""
    if e1.pred != e2.pred or e1.arity != e2.arity:
        return None
    s1 = ground_saturation(e1, instance, config.maxvars)
    s2 = ground_saturation(e2, instance, config.maxvars)
    return lgg(s1, s2)


# ---------------------------------------------------------------------------
# Blocking atoms / ARMG


def find_blocking_atom(clause: Clause | BottomClause, e2: Atom, instance: Instance) -> int | None:
    """0-based index of the first literal whose body prefix cannot be satisfied
    with the head bound to ``e2``; None when the whole body is satisfiable.
    A head that does not unify with ``e2`` blocks at the first literal."""
    if isinstance(clause, BottomClause):
        clause = clause.clause
    reach = prefix_reach(clause, instance, e2)
    if reach is None:
        return 0 if clause.body else None
    if reach >= len(clause.body):
        return None
    return reach


def armg(bottom: Clause | BottomClause, e2: Atom, instance: Instance) -> Clause:
    """Asymmetric relative minimal generalization: drop blocking atoms and the
    debris they disconnect until ``e2`` is covered."""
    current = bottom.clause if isinstance(bottom, BottomClause) else bottom
    while True:
        idx = find_blocking_atom(current, e2, instance)
        if idx is None:
            return current
        body = current.body[:idx] + current.body[idx + 1 :]
        current = drop_non_head_connected(Clause(current.head, body))


# ---------------------------------------------------------------------------
# Golem


def _class_literal_key(ranks: dict[str, int]) -> Callable[[Atom], tuple]:
    big = max(ranks.values(), default=0) + 1
    return lambda atom: (ranks.get(atom.pred, big),)


def golem_learn_clause(
    instance: Instance,
    uncovered: Sequence[Atom],
    examples: ExampleSet,
    config: LearnerConfig,
    ranks: dict[str, int] | None = None,
) -> Clause | None:
    """Golem's LearnClause: grow the consistent lgg of saturations greedily."""
    negatives = examples.negatives
    ranks = ranks if ranks is not None else class_ranks(instance.schema, instance)
    literal_key = _class_literal_key(ranks)
    rng = random.Random(config.seed)

    sats: dict[Atom, Clause] = {}

    def sat(e: Atom) -> Clause:
        if e not in sats:
            sats[e] = ground_saturation(e, instance, config.maxvars)
        return sats[e]

    def consistent(c: Clause) -> bool:
        return _within_noise(len(covers(instance, c, negatives)), len(negatives), config.noise)

    def reduced(c: Clause) -> Clause:
        if covers(instance, c, negatives):
            return c  # noisy winner: negative reduction requires zero coverage
        return reduce_negative(c, instance, negatives, literal_key)

    U = list(uncovered)
    pairs = list(itertools.combinations(range(len(U)), 2))
    if len(pairs) > config.pair_bound:
        pairs = sorted(rng.sample(pairs, config.pair_bound))
    candidates: list[Clause] = []
    for i, j in pairs:
        cand = lgg(sat(U[i]), sat(U[j]))
        if cand is None:
            continue
        cand = generalize_head_constants(cand)
        if consistent(cand):
            candidates.append(cand)

    if not candidates:
        # Fall back to the (variabilized) saturation of the first positive.
        single = variabilize(sat(U[0]))
        if not consistent(single):
            return None
        return reduced(single)

    best: Clause | None = None
    while candidates:
        scored = [
            (len(covers(instance, c, U)), -len(c.body), -gen, c)
            for gen, c in enumerate(candidates)
        ]
        _, _, _, chosen = max(scored, key=lambda s: (s[0], s[1], s[2]))
        chosen = reduced(chosen)
        best = chosen
        newly = covers(instance, chosen, U)
        U = [e for e in U if e not in newly]
        candidates = []
        for e in U:
            cand = lgg(chosen, sat(e))
            if cand is None:
                continue
            cand = generalize_head_constants(cand)
            if consistent(cand):
                candidates.append(cand)
    return best


# ---------------------------------------------------------------------------
# ProGolem


def progolem_learn_clause(
    instance: Instance,
    uncovered: Sequence[Atom],
    examples: ExampleSet,
    config: LearnerConfig,
    ranks: dict[str, int] | None = None,
) -> Clause | None:
    """ProGolem's LearnClause: beam search over armg generalizations of the
    seed's bottom clause (maxvars bottoms for M-ProGolem, depth otherwise)."""
    negatives = examples.negatives
    schema = instance.schema
    ranks = ranks if ranks is not None else class_ranks(schema, instance)
    literal_key = _class_literal_key(ranks)
    rng = random.Random(config.seed)
    seed = uncovered[0]
    if config.bottom_mode == "maxvars":
        bottom = bottom_clause_maxvars(seed, instance, schema, config.maxvars).clause
    else:
        bottom = bottom_clause_depth(seed, instance, config.max_depth).clause

    def n_covered(c: Clause) -> int:
        return len(covers(instance, c, negatives))

    def score(c: Clause) -> int:
        return len(covers(instance, c, uncovered)) - n_covered(c)

    if not _within_noise(n_covered(bottom), len(negatives), config.noise):
        return None  # the most specific clause is already inconsistent

    others = [e for e in uncovered if e != seed]
    k = min(config.sample_size, len(others))
    sample = sorted(rng.sample(range(len(others)), k)) if k else []
    probes = [others[i] for i in sample]

    beam: list[Clause] = [bottom]
    best, best_score = bottom, score(bottom)
    while True:
        candidates: list[Clause] = []
        seen = {variant_key(c) for c in beam}
        for c in beam:
            for e2 in probes:
                g = armg(c, e2, instance)
                key = variant_key(g)
                if key not in seen:
                    seen.add(key)
                    candidates.append(g)
        if not candidates:
            break
        scored = [(score(c), -len(c.body), -gen, c) for gen, c in enumerate(candidates)]
        scored.sort(key=lambda s: (s[0], s[1], s[2]), reverse=True)
        round_best_score = scored[0][0]
        if round_best_score <= best_score:
            break
        beam = [c for _, _, _, c in scored[: config.beam_width]]
        best, best_score = scored[0][3], round_best_score

    if not _within_noise(n_covered(best), len(negatives), config.noise):
        return None
    if not covers(instance, best, uncovered):
        return None
    if n_covered(best) == 0:
        best = reduce_negative(best, instance, negatives, literal_key)
    return best


# ---------------------------------------------------------------------------
# Covering loop


_LEARN_CLAUSE = {
    "foil": foil_learn_clause,
    "mfoil": modified_foil_learn_clause,
}


def learn(instance: Instance, examples: ExampleSet, config: LearnerConfig) -> LearnResult:
    """Generic covering loop: learn a clause, drop the positives it covers,
    repeat until done or the strategy fails to make progress."""
    notes: list[str] = []
    uncovered = list(examples.positives)
    clauses: list[Clause] = []
    ranks = class_ranks(instance.schema, instance) if config.learner in ("golem", "progolem") else None
    failed_seeds: set[Atom] = set()

    while uncovered:
        pool = [e for e in uncovered if e not in failed_seeds]
        if not pool:
            notes.append("no admissible clause for the remaining positives")
            break
        if config.learner == "golem":
            clause = golem_learn_clause(instance, pool, examples, config, ranks)
        elif config.learner == "progolem":
            clause = progolem_learn_clause(instance, pool, examples, config, ranks)
        else:
            clause = _LEARN_CLAUSE[config.learner](instance, pool, examples, config)
        if clause is None:
            if config.learner == "progolem":
                failed_seeds.add(pool[0])
                continue
            notes.append("LearnClause returned no admissible clause; partial definition")
            break
        newly = covers(instance, clause, uncovered)
        if not newly:
            notes.append("LearnClause stopped covering new positives; partial definition")
            break
        clauses.append(clause)
        uncovered = [e for e in uncovered if e not in newly]

    definition = Definition(tuple(clauses))
    covered = tuple(e for e in examples.positives if e not in set(uncovered))
    return LearnResult(definition, covered, tuple(uncovered), tuple(notes))
