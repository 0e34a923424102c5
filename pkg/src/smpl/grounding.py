"""Bottom-up grounding to a finite propositional program.

The grounder computes the set of possibly-true ground atoms by forward
instantiation (negation-as-failure literals are ignored for possibility,
a safe over-approximation), instantiates every rule relevant to that set,
expands query/evidence patterns, and prunes atoms not backward-reachable
from them.  Probabilistic facts with variables (the auxiliary facts created
by `desugar` for annotated rules) are instantiated on demand: each ground
instance is an independent probabilistic fact with the template's label.

Atom ids are dense and deterministic: fact atoms first, ordered by source
statement, then derived atoms in first-derivation order.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ProgramParseError, ResourceLimitError
from .syntax import AUX_PREFIX, Atom, ProbLabel, Program, Rule
from .transform import is_prepared

MAX_ATOMS_DEFAULT = 100_000


@dataclass(frozen=True)
class GroundRule:
    """A ground rule over atom ids: `head :- pos..., \\+neg...`."""

    head: int
    pos: tuple[int, ...]
    neg: tuple[int, ...]


class GroundProgram:
    """A ground normal logic program with indexed probabilistic facts.

    Atoms `0 .. n_facts-1` are the probabilistic facts; `fact_labels[i]`
    and `fact_sources[i]` give their label and the index of the source
    statement they were instantiated from (several ground instances of an
    annotated rule share one source).
    """

    def __init__(self, atoms, fact_labels, fact_sources, rules, queries, evidence):
        self.atoms: list[Atom] = atoms
        self.fact_labels: list[ProbLabel] = fact_labels
        self.fact_sources: list[int] = fact_sources
        self.rules: list[GroundRule] = rules
        self.queries: list[int] = queries
        self.evidence: list[tuple[int, bool]] = evidence
        self.atom_ids: dict[Atom, int] = {a: i for i, a in enumerate(atoms)}

    @property
    def n_facts(self) -> int:
        return len(self.fact_labels)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def fact_mask(self) -> int:
        return (1 << self.n_facts) - 1

    def atom_id(self, atom: Atom) -> int | None:
        return self.atom_ids.get(atom)

    def to_text(self) -> str:
        """Dump in `.smpl` surface syntax (debugging aid)."""
        lines = [f"{label}::{self.atoms[i]}." for i, label in enumerate(self.fact_labels)]
        for rule in self.rules:
            head = str(self.atoms[rule.head])
            body = [str(self.atoms[b]) for b in rule.pos] + [f"\\+{self.atoms[b]}" for b in rule.neg]
            lines.append(f"{head} :- {', '.join(body)}." if body else f"{head}.")
        lines += [f"query({self.atoms[q]})." for q in self.queries]
        lines += [f"evidence({self.atoms[a]}, {'true' if v else 'false'})." for a, v in self.evidence]
        return "\n".join(lines) + ("\n" if lines else "")


def _match(pattern: Atom, ground: Atom, bindings: dict) -> dict | None:
    if pattern.predicate != ground.predicate or pattern.arity != ground.arity:
        return None
    out = bindings
    for pat, val in zip(pattern.args, ground.args):
        if pat.is_variable:
            bound = out.get(pat.value)
            if bound is None:
                if out is bindings:
                    out = dict(bindings)
                out[pat.value] = val
            elif bound != val:
                return None
        elif pat != val:
            return None
    return out


def _substitute(atom: Atom, bindings: dict) -> Atom:
    if atom.is_ground:
        return atom
    return Atom(atom.predicate, tuple(bindings.get(t.value, t) if t.is_variable else t for t in atom.args))


class _Grounder:
    def __init__(self, program: Program, atom_limit: int):
        self.program = program
        self.atom_limit = atom_limit
        # fact atom -> (source statement index, discovery sequence, label)
        self.facts: dict[Atom, tuple[int, int, ProbLabel]] = {}
        self.templates: dict[str, tuple[int, Atom, ProbLabel]] = {}
        self.derived: dict[Atom, None] = {}
        self.by_pred: dict[str, list[Atom]] = {}
        # ordered set of (head, pos atoms, neg atoms) triples
        self.ground_rules: dict[tuple, None] = {}

    def atom_count(self) -> int:
        return len(self.facts) + len(self.derived)

    def add_fact_instance(self, atom: Atom, src: int, label: ProbLabel):
        if atom in self.facts:
            prev_src = self.facts[atom][0]
            if prev_src != src:
                raise ProgramParseError(f"probabilistic fact {atom} declared more than once")
            return
        self.facts[atom] = (src, len(self.facts), label)
        self.by_pred.setdefault(atom.predicate, []).append(atom)
        self.check_limit()

    def add_derived(self, atom: Atom):
        if atom in self.derived or atom in self.facts:
            return
        self.derived[atom] = None
        self.by_pred.setdefault(atom.predicate, []).append(atom)
        self.check_limit()

    def check_limit(self):
        if self.atom_count() > self.atom_limit:
            raise ResourceLimitError(f"grounding exceeded the atom limit ({self.atom_limit})")

    def run(self, keep_all: bool, extra_targets) -> GroundProgram:
        rules: list[tuple[int, Rule]] = []
        for idx, stmt in enumerate(self.program.rules):
            if stmt.label is not None and stmt.is_fact:
                if stmt.head.is_ground:
                    self.add_fact_instance(stmt.head, idx, stmt.label)
                else:
                    pred = stmt.head.predicate
                    if pred in self.templates:
                        raise ProgramParseError(f"two probabilistic fact templates for predicate {pred!r}")
                    self.templates[pred] = (idx, stmt.head, stmt.label)
            else:
                rules.append((idx, stmt))
        for _, rule in rules:
            if rule.head.predicate in self.templates:
                raise ProgramParseError(
                    f"predicate {rule.head.predicate!r} is both a fact template and a rule head"
                )

        # Forward fixpoint: instantiate rules against possibly-true atoms.
        changed = True
        while changed:
            changed = False
            for _, rule in rules:
                changed |= self.instantiate(rule)

        self.alias_rederivable_facts()

        queries = self.expand_patterns(self.program.queries)
        evidence = []
        seen_ev = {}
        for atom, value in self.program.evidence:
            for ground in self.expand_patterns([atom]):
                if ground in seen_ev:
                    if seen_ev[ground] != value:
                        raise ProgramParseError(f"contradictory evidence for {ground}")
                    continue
                seen_ev[ground] = value
                evidence.append((ground, value))

        targets = list(queries) + [a for a, _ in evidence] + [self.ensure_atom(a) for a in extra_targets]
        keep_all = keep_all or not self.program.queries and not extra_targets
        return self.assemble(queries, evidence, None if keep_all else targets)

    def instantiate(self, rule: Rule) -> bool:
        plain = [lit.atom for lit in rule.body if not lit.naf and lit.atom.predicate not in self.templates]
        templs = [lit.atom for lit in rule.body if not lit.naf and lit.atom.predicate in self.templates]
        changed = False

        def bind(i: int, bindings: dict):
            nonlocal changed
            if i < len(plain):
                pattern = plain[i]
                for atom in self.by_pred.get(pattern.predicate, ()):
                    sub = _match(pattern, atom, bindings)
                    if sub is not None:
                        bind(i + 1, sub)
                return
            for pattern in templs:
                instance = _substitute(pattern, bindings)
                if not instance.is_ground:
                    raise ProgramParseError(
                        f"cannot ground probabilistic fact {pattern} in rule for {rule.head}"
                    )
                src, _, label = self.templates[instance.predicate]
                self.add_fact_instance(instance, src, label)
            head = _substitute(rule.head, bindings)
            pos = tuple(_substitute(lit.atom, bindings) for lit in rule.body if not lit.naf)
            neg = tuple(_substitute(lit.atom, bindings) for lit in rule.body if lit.naf)
            for atom in (head,) + pos + neg:
                if not atom.is_ground:
                    raise ProgramParseError(f"rule for {rule.head} does not ground (variable left in {atom})")
            key = (head, pos, neg)
            if key not in self.ground_rules:
                self.ground_rules[key] = None
                self.add_derived(head)
                for atom in neg:
                    if atom.predicate in self.templates and atom not in self.facts:
                        raise ProgramParseError(f"probabilistic fact {atom} used under \\+ before instantiation")
                    self.add_derived(atom)
                changed = True

        bind(0, {})
        return changed

    def alias_rederivable_facts(self):
        """If a probabilistic fact atom is also a rule head, move the random
        choice to a fresh alias atom and keep the original as derived
        (`fact :- alias`), so fact truth and fact inclusion stay separate."""
        heads = {head for head, _, _ in self.ground_rules}
        for atom in [a for a in self.facts if a in heads]:
            src, seq, label = self.facts.pop(atom)
            alias = Atom(f"{AUX_PREFIX}choice_{atom.predicate}", atom.args)
            self.facts[alias] = (src, seq, label)
            self.by_pred.setdefault(alias.predicate, []).append(alias)
            self.derived[atom] = None
            self.ground_rules[(atom, (alias,), ())] = None

    def ensure_atom(self, atom: Atom) -> Atom:
        if atom not in self.facts:
            self.add_derived(atom)
        return atom

    def expand_patterns(self, patterns) -> list[Atom]:
        out: dict[Atom, None] = {}
        for pattern in patterns:
            if pattern.is_ground:
                out[self.ensure_atom(pattern)] = None
                continue
            for atom in self.by_pred.get(pattern.predicate, ()):
                if _match(pattern, atom, {}) is not None:
                    out[atom] = None
        return list(out)

    def assemble(self, queries, evidence, targets) -> GroundProgram:
        if targets is None:
            relevant = None
        else:
            by_head: dict[Atom, list[tuple]] = {}
            for head, pos, neg in self.ground_rules:
                by_head.setdefault(head, []).append((pos, neg))
            relevant = set()
            stack = list(targets)
            while stack:
                atom = stack.pop()
                if atom in relevant:
                    continue
                relevant.add(atom)
                for pos, neg in by_head.get(atom, ()):
                    stack.extend(pos)
                    stack.extend(neg)

        fact_items = sorted(
            (entry for entry in self.facts.items() if relevant is None or entry[0] in relevant),
            key=lambda item: (item[1][0], item[1][1]),
        )
        atoms = [atom for atom, _ in fact_items]
        atoms += [a for a in self.derived if relevant is None or a in relevant]
        ids = {a: i for i, a in enumerate(atoms)}

        rules = [
            GroundRule(ids[head], tuple(ids[a] for a in pos), tuple(ids[a] for a in neg))
            for head, pos, neg in self.ground_rules
            if relevant is None or head in relevant
        ]
        return GroundProgram(
            atoms,
            [label for _, (_, _, label) in fact_items],
            [src for _, (src, _, _) in fact_items],
            rules,
            [ids[q] for q in queries],
            [(ids[a], v) for a, v in evidence],
        )


def ground(
    program: Program,
    *,
    atom_limit: int = MAX_ATOMS_DEFAULT,
    keep_all: bool = False,
    extra_targets: tuple[Atom, ...] = (),
) -> GroundProgram:
    """Ground a prepared program (see `transform.prepare`).

    Atoms backward-reachable from queries, evidence and `extra_targets` are
    kept; if the program declares no queries and no extra targets are given,
    everything is kept.
    """
    if not is_prepared(program):
        raise ValueError("program must be desugared and head-rewritten first (transform.prepare)")
    return _Grounder(program, atom_limit).run(keep_all, extra_targets)


class DependencyGraph:
    """Atom dependency graph of a ground program, with edge polarities."""

    def __init__(self, g: GroundProgram):
        self.n = g.n_atoms
        self.succ: list[list[int]] = [[] for _ in range(self.n)]
        self.neg_edges: set[tuple[int, int]] = set()
        seen = set()
        for rule in g.rules:
            for body_atom in rule.pos:
                if (body_atom, rule.head) not in seen:
                    seen.add((body_atom, rule.head))
                    self.succ[body_atom].append(rule.head)
            for body_atom in rule.neg:
                if (body_atom, rule.head) not in seen:
                    seen.add((body_atom, rule.head))
                    self.succ[body_atom].append(rule.head)
                self.neg_edges.add((body_atom, rule.head))

    def sccs(self) -> list[list[int]]:
        """Strongly connected components in reverse topological order
        (iterative Tarjan)."""
        index = [0] * self.n
        low = [0] * self.n
        on_stack = [False] * self.n
        visited = [False] * self.n
        stack: list[int] = []
        components: list[list[int]] = []
        counter = 1

        for root in range(self.n):
            if visited[root]:
                continue
            work = [(root, 0)]
            while work:
                node, child_idx = work.pop()
                if child_idx == 0:
                    visited[node] = True
                    index[node] = low[node] = counter
                    counter += 1
                    stack.append(node)
                    on_stack[node] = True
                recurse = False
                successors = self.succ[node]
                while child_idx < len(successors):
                    child = successors[child_idx]
                    child_idx += 1
                    if not visited[child]:
                        work.append((node, child_idx))
                        work.append((child, 0))
                        recurse = True
                        break
                    if on_stack[child]:
                        low[node] = min(low[node], index[child])
                if recurse:
                    continue
                if low[node] == index[node]:
                    component = []
                    while True:
                        member = stack.pop()
                        on_stack[member] = False
                        component.append(member)
                        if member == node:
                            break
                    components.append(component)
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[node])
        return components


def has_negative_cycle(g: GroundProgram) -> bool:
    """True iff some strongly connected component contains a negative edge."""
    graph = DependencyGraph(g)
    component_of = {}
    for i, component in enumerate(graph.sccs()):
        for atom in component:
            component_of[atom] = i
    return any(component_of[a] == component_of[b] for a, b in graph.neg_edges)
