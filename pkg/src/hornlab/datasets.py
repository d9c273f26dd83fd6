"""Bundled desk-scale datasets.

* a five-relation student/professor/publication fragment with the classic
  twelve-tuple sample database (used by most worked examples and tests),
* the four-schema family over the full university domain, linked by
  validated composition chains, with a synthetic entity generator,
* the top-down counterexample bundle (two ternary relations split in half),
* a generic constraint-satisfying random instance generator (drop-repair).

The fourth family schema replaces the usual "coauthor(title,prof,stud)"
composition: joining the two publication relations on the title alone is a
join-dependency transformation, which this package deliberately excludes,
so the publication relations stay split in every schema that would
otherwise merge them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping

from .model import Atom, ExampleSet, Instance, Relation, Schema, ground_atom
from .parser import parse_schema
from .transform import Transformation, chain, compose

# ---------------------------------------------------------------------------
# Small fragment (worked examples)

FRAGMENT_SCHEMA_TEXT = """\
relation student(stud)
relation inPhase(stud,phase)
relation professor(prof)
relation hasPosition(prof,position)
relation publication(title,person)
fd inPhase: stud -> phase
fd hasPosition: prof -> position
ind student[stud] = inPhase[stud]
ind professor[prof] = hasPosition[prof]
"""

FRAGMENT_FACTS_TEXT = """\
professor(John).
professor(Mary).
hasPosition(John,Associate).
hasPosition(Mary,Assistant).
student(Jake).
student(Sara).
inPhase(Jake,PreQuals).
inPhase(Sara,PostQuals).
publication(A,John).
publication(A,Jake).
publication(B,Mary).
publication(B,Sara).
"""

# Six-relation variant with yearsInProgram, used where the chase needs the
# full student inclusion class (no bundled facts; Table-style data above has
# no years records).
FRAGMENT6_SCHEMA_TEXT = FRAGMENT_SCHEMA_TEXT.replace(
    "relation inPhase(stud,phase)\n",
    "relation inPhase(stud,phase)\nrelation yearsInProgram(stud,years)\n",
).replace(
    "fd inPhase: stud -> phase\n",
    "fd inPhase: stud -> phase\nfd yearsInProgram: stud -> years\n",
).replace(
    "ind student[stud] = inPhase[stud]\n",
    "ind student[stud] = inPhase[stud]\nind student[stud] = yearsInProgram[stud]\n",
)


def fragment_schema() -> Schema:
    return parse_schema(FRAGMENT_SCHEMA_TEXT)


def fragment6_schema() -> Schema:
    return parse_schema(FRAGMENT6_SCHEMA_TEXT)


def fragment_instance() -> Instance:
    from .parser import parse_facts

    return parse_facts(FRAGMENT_FACTS_TEXT, fragment_schema())


def fragment_composed() -> tuple[Schema, Transformation]:
    """Compose the fragment into {student(stud,phase), professor(prof,position),
    publication(title,person)}."""
    schema = fragment_schema()
    s1, t1 = compose(schema, ["student", "inPhase"], "student")
    s2, t2 = compose(s1, ["professor", "hasPosition"], "professor")
    return s2, chain(t1, t2)


# ---------------------------------------------------------------------------
# The four-schema university family

ORIGINAL_SCHEMA_TEXT = """\
relation student(stud)
relation inPhase(stud,phase)
relation yearsInProgram(stud,years)
relation professor(prof)
relation hasPosition(prof,position)
relation courselevel(crs,level)
relation taughtby(crs,prof,term)
relation ta(crs,stud,term)
relation publicationProfessor(title,prof)
relation publicationStudent(title,stud)
fd inPhase: stud -> phase
fd yearsInProgram: stud -> years
fd hasPosition: prof -> position
fd courselevel: crs -> level
fd taughtby: crs,term -> prof
fd ta: stud,term -> crs
ind student[stud] = inPhase[stud]
ind student[stud] = yearsInProgram[stud]
ind student[stud] = publicationStudent[stud]
ind professor[prof] = hasPosition[prof]
ind professor[prof] = publicationProfessor[prof]
ind courselevel[crs] = taughtby[crs]
ind taughtby[crs,term] = ta[crs,term]
ind taughtby[prof] <= professor[prof]
ind ta[stud] <= student[stud]
"""


@dataclass(frozen=True)
class Family:
    """The four bundled schemas plus transformations between all ordered pairs."""

    schemas: Mapping[str, Schema]
    transformations: Mapping[tuple[str, str], Transformation]

    def schema(self, name: str) -> Schema:
        return self.schemas[name]

    def tau(self, source: str, target: str) -> Transformation:
        return self.transformations[(source, target)]


def uwcse_family() -> Family:
    original = parse_schema(ORIGINAL_SCHEMA_TEXT)

    s, t1 = compose(original, ["student", "inPhase", "yearsInProgram"], "student",
                    attrs=("stud", "phase", "years"))
    s, t2 = compose(s, ["professor", "hasPosition"], "professor", attrs=("prof", "position"))
    to_4nf = chain(t1, t2)
    four_nf = s

    s, t3 = compose(four_nf, ["taughtby", "ta"], "courseassign",
                    attrs=("crs", "prof", "stud", "term"))
    s, t4 = compose(s, ["courseassign", "courselevel"], "course",
                    attrs=("crs", "prof", "stud", "term", "level"))
    four_nf_to_d2 = chain(t3, t4)
    denorm2 = s

    s, t5 = compose(denorm2, ["student", "publicationStudent"], "student",
                    attrs=("stud", "phase", "years", "title"))
    s, t6 = compose(s, ["professor", "publicationProfessor"], "professor",
                    attrs=("prof", "position", "title"))
    d2_to_d1 = chain(t5, t6)
    denorm1 = s

    hub = {
        "4nf": to_4nf,
        "denorm2": chain(to_4nf, four_nf_to_d2),
        "denorm1": chain(to_4nf, chain(four_nf_to_d2, d2_to_d1)),
    }
    schemas = {"original": original, "4nf": four_nf, "denorm2": denorm2, "denorm1": denorm1}

    taus: dict[tuple[str, str], Transformation] = {}
    names = list(schemas)
    for a in names:
        for b in names:
            if a == b:
                continue
            if a == "original":
                taus[(a, b)] = hub[b]
            elif b == "original":
                taus[(a, b)] = hub[a].inverted()
            else:
                taus[(a, b)] = chain(hub[a].inverted(), hub[b])
    return Family(schemas, taus)


# ---------------------------------------------------------------------------
# Synthetic entity generator (over the original schema)


@dataclass(frozen=True)
class UniversityData:
    instance: Instance  # over the original schema
    examples: ExampleSet  # advisedBy(stud, prof)


def uwcse_random_instance(
    seed: int = 0,
    n_students: int = 8,
    n_professors: int = 4,
    n_courses: int = 5,
    n_terms: int = 2,
    negatives_ratio: float = 2.0,
    schema: Schema | None = None,
) -> UniversityData:
    """Generate a constraint-satisfying original-schema instance.

    Advising ground truth drives publications: an advised pair always shares
    at least one publication, non-advised pairs never do.  TA and teaching
    assignments are independent of advising.
    """
    rng = random.Random(seed)
    schema = schema or parse_schema(ORIGINAL_SCHEMA_TEXT)
    students = [f"s{i}" for i in range(1, n_students + 1)]
    professors = [f"p{i}" for i in range(1, n_professors + 1)]
    courses = [f"c{i}" for i in range(1, n_courses + 1)]
    terms = [f"t{i}" for i in range(1, n_terms + 1)]
    phases = ["prequals", "postquals", "postgenerals"]
    positions = ["assistant", "associate", "full"]
    levels = ["intro", "grad"]

    data: dict[str, set[tuple[str, ...]]] = {r.name: set() for r in schema.relations}
    for s in students:
        data["student"].add((s,))
        data["inPhase"].add((s, rng.choice(phases)))
        data["yearsInProgram"].add((s, f"y{rng.randint(1, 7)}"))
    for p in professors:
        data["professor"].add((p,))
        data["hasPosition"].add((p, rng.choice(positions)))

    advisor = {s: rng.choice(professors) for s in students}
    pub_counter = 0
    for s in students:
        p = advisor[s]
        for _ in range(rng.randint(1, 2)):
            pub_counter += 1
            title = f"paper{pub_counter}"
            data["publicationStudent"].add((title, s))
            data["publicationProfessor"].add((title, p))
    for p in professors:
        # Solo professor publications keep the professor IND satisfied even
        # for advisors without students, and add unshared titles.
        pub_counter += 1
        data["publicationProfessor"].add((f"paper{pub_counter}", p))

    for c in courses:
        data["courselevel"].add((c, rng.choice(levels)))
    for term in terms:
        free_tas = [s for s in students]
        rng.shuffle(free_tas)
        taught = rng.sample(courses, k=max(1, len(courses) - rng.randint(0, 2)))
        for c in courses:
            if c not in taught:
                continue
            data["taughtby"].add((c, rng.choice(professors), term))
            if free_tas:
                data["ta"].add((c, free_tas.pop(), term))
            else:
                data["taughtby"].discard(next(t for t in list(data["taughtby"]) if t[0] == c and t[2] == term))
    # Every course must be taught at least once (courselevel = taughtby on crs).
    for c in courses:
        if not any(t[0] == c for t in data["taughtby"]):
            term = terms[0]
            occupied = {t[1] for t in data["ta"] if t[2] == term}
            candidates = [s for s in students if s not in occupied]
            if not candidates:
                data["courselevel"] = {t for t in data["courselevel"] if t[0] != c}
                continue
            data["taughtby"].add((c, rng.choice(professors), term))
            data["ta"].add((c, candidates[0], term))

    instance = Instance.build(schema, data)
    positives = [ground_atom("advisedBy", (s, advisor[s])) for s in students]
    non_pairs = [
        ground_atom("advisedBy", (s, p)) for s in students for p in professors if p != advisor[s]
    ]
    k = min(len(non_pairs), int(negatives_ratio * len(positives)))
    negatives = [non_pairs[i] for i in sorted(rng.sample(range(len(non_pairs)), k))]
    return UniversityData(instance, ExampleSet("advisedBy", 2, tuple(positives), tuple(negatives)))


# ---------------------------------------------------------------------------
# Top-down counterexample bundle

COUNTEREXAMPLE_SCHEMA_TEXT = """\
relation r1(a,b,c)
relation r2(d,f,e)
fd r1: b -> c
fd r2: f -> e
"""


@dataclass(frozen=True)
class CounterexampleBundle:
    schema: Schema  # two ternary relations
    split_schema: Schema  # each split into two binary halves
    tau: Transformation
    instance: Instance  # over the wide schema
    examples: ExampleSet
    target_clause_text: str


def counterexample_bundle() -> CounterexampleBundle:
    from .transform import DecompositionSpec, decompose

    schema = parse_schema(COUNTEREXAMPLE_SCHEMA_TEXT)
    s, ta = decompose(
        schema, DecompositionSpec("r1", (Relation("s1", ("a", "b")), Relation("s2", ("b", "c"))))
    )
    split, tb = decompose(
        s, DecompositionSpec("r2", (Relation("s3", ("d", "f")), Relation("s4", ("f", "e"))))
    )
    tau = chain(ta, tb)
    # b-values z1/z3 agree between the c and e columns, z2 disagrees: only the
    # clause linking both join attributes separates positives from negatives.
    instance = Instance.build(
        schema,
        {
            "r1": [("a1", "z1", "w1"), ("a2", "z2", "w2"), ("a3", "z3", "w4")],
            "r2": [("d1", "z1", "w1"), ("d2", "z2", "w3"), ("d3", "z3", "w4")],
        },
    )
    examples = ExampleSet(
        "t",
        2,
        (ground_atom("t", ("a1", "d1")), ground_atom("t", ("a3", "d3"))),
        (ground_atom("t", ("a2", "d2")), ground_atom("t", ("x0", "d1"))),
    )
    return CounterexampleBundle(
        schema, split, tau, instance, examples, "t(X,Y) :- r1(X,Z,W), r2(Y,Z,W)."
    )


# ---------------------------------------------------------------------------
# Generic constraint-satisfying random instances


def random_instance(schema: Schema, seed: int = 0, size: int = 40) -> Instance:
    """Random instance made constraint-satisfying by drop-repair.

    Rows are sampled from small per-attribute constant pools (so joins
    overlap), then rows violating FDs or INDs are dropped to a fixpoint.
    The result can be small or even empty; it is always valid.
    """
    rng = random.Random(seed)
    pool_size = max(2, size // (2 * len(schema.relations)) + 1)
    pools = {
        attr: [f"{attr}{k}" for k in range(pool_size)]
        for rel in schema.relations
        for attr in rel.attrs
    }
    rows: dict[str, set[tuple[str, ...]]] = {}
    per_rel = max(1, size // len(schema.relations))
    for rel in schema.relations:
        rows[rel.name] = {
            tuple(rng.choice(pools[a]) for a in rel.attrs) for _ in range(rng.randint(1, per_rel))
        }

    def fd_drop() -> bool:
        changed = False
        for fd in schema.fds:
            rel = schema.relation(fd.relation)
            lhs_idx = [rel.attrs.index(a) for a in fd.lhs]
            rhs_idx = [rel.attrs.index(a) for a in fd.rhs]
            keep: dict[tuple, tuple] = {}
            for row in sorted(rows[fd.relation]):
                key = tuple(row[i] for i in lhs_idx)
                val = tuple(row[i] for i in rhs_idx)
                keep.setdefault(key, val)
            pruned = {
                row
                for row in rows[fd.relation]
                if tuple(row[i] for i in rhs_idx) == keep[tuple(row[i] for i in lhs_idx)]
            }
            if pruned != rows[fd.relation]:
                rows[fd.relation] = pruned
                changed = True
        return changed

    def ind_drop() -> bool:
        changed = False
        sides = []
        for ind in schema.inds:
            sides.append((ind.lhs_rel, ind.lhs_attrs, ind.rhs_rel, ind.rhs_attrs))
            if ind.equality:
                sides.append((ind.rhs_rel, ind.rhs_attrs, ind.lhs_rel, ind.lhs_attrs))
        for rel_a, attrs_a, rel_b, attrs_b in sides:
            ra, rb = schema.relation(rel_a), schema.relation(rel_b)
            ia = [ra.attrs.index(x) for x in attrs_a]
            ib = [rb.attrs.index(x) for x in attrs_b]
            have = {tuple(r[i] for i in ib) for r in rows[rel_b]}
            pruned = {r for r in rows[rel_a] if tuple(r[i] for i in ia) in have}
            if pruned != rows[rel_a]:
                rows[rel_a] = pruned
                changed = True
        return changed

    while fd_drop() or ind_drop():
        pass
    return Instance.build(schema, rows)
