"""Knowledge compilation to smooth d-DNNF and corrected model counting.

`compile_circuit` Shannon-expands the ground program on its probabilistic
fact literals.  Conditioning a fact triggers the deterministic propagation
from `stable`, whose consequences are emitted as literals, and identical
residual programs are shared through a memo table, so the result is a
decision-DNNF: decision nodes are deterministic by construction,
conjunctions are decomposable because conditioned atoms leave the residual,
and smoothness holds because both branches of a decision determine exactly
the same atoms.  Once all facts are decided, the residual core (the part
with cycles) contributes one conjunction per stable model.

A satisfying assignment of the circuit is exactly a stable model of the
subprogram induced by the total choice it assigns to the facts.  Worlds
with several stable models make plain weighted model counting overcount;
`evaluate` subtracts the surplus per multi-model total choice, which the
`ChoiceModelIndex` built by `enumerate_models` records.
"""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from .errors import ResourceLimitError, ZeroProbabilityEvidenceError
from .exact import QueryResult, choice_probability, label_values, resolve_atom
from .grounding import GroundProgram
from .stable import bits, core_models, mask_rules, propagate
from .syntax import Atom

LIT, AND, OR = 0, 1, 2

MAX_NODES_DEFAULT = 2_000_000
MAX_MODELS_DEFAULT = 10_000_000


class Circuit:
    """Rooted DAG in negation normal form; node ids are topologically
    ordered (children precede parents).  Literals are `±(atom_id + 1)`."""

    def __init__(self, n_atoms: int, n_facts: int, node_limit: int = MAX_NODES_DEFAULT):
        self.n_atoms = n_atoms
        self.n_facts = n_facts
        self.node_limit = node_limit
        self.kinds: list[int] = []
        self.payload: list = []  # literal for LIT, tuple of child ids otherwise
        self.root = -1
        self._unique: dict[tuple, int] = {}

    def _node(self, kind: int, payload) -> int:
        key = (kind, payload)
        found = self._unique.get(key)
        if found is not None:
            return found
        ident = len(self.kinds)
        if ident >= self.node_limit:
            raise ResourceLimitError(f"circuit exceeded the node limit ({self.node_limit})")
        self.kinds.append(kind)
        self.payload.append(payload)
        self._unique[key] = ident
        return ident

    def literal(self, atom: int, positive: bool) -> int:
        return self._node(LIT, atom + 1 if positive else -(atom + 1))

    def conj(self, children: Sequence[int]) -> int:
        kids = []
        for child in children:
            if self.is_false(child):
                return self.false()
            if not self.is_true(child):
                kids.append(child)
        if not kids:
            return self.true()
        if len(kids) == 1:
            return kids[0]
        return self._node(AND, tuple(sorted(kids)))

    def disj(self, children: Sequence[int]) -> int:
        kids = sorted(child for child in children if not self.is_false(child))
        if not kids:
            return self.false()
        if len(kids) == 1:
            return kids[0]
        return self._node(OR, tuple(kids))

    def true(self) -> int:
        return self._node(AND, ())

    def false(self) -> int:
        return self._node(OR, ())

    def is_true(self, node: int) -> bool:
        return self.kinds[node] == AND and not self.payload[node]

    def is_false(self, node: int) -> bool:
        return self.kinds[node] == OR and not self.payload[node]

    def __len__(self) -> int:
        return len(self.kinds)

    # ---- traversal helpers ----------------------------------------------

    def reachable(self) -> list[int]:
        """Node ids reachable from the root, ascending (hence topological)."""
        seen = {self.root}
        stack = [self.root]
        while stack:
            node = stack.pop()
            if self.kinds[node] != LIT:
                for child in self.payload[node]:
                    if child not in seen:
                        seen.add(child)
                        stack.append(child)
        return sorted(seen)

    def atom_cones(self) -> dict[int, int]:
        """Mask of atoms mentioned below each reachable node."""
        cones: dict[int, int] = {}
        for node in self.reachable():
            if self.kinds[node] == LIT:
                cones[node] = 1 << (abs(self.payload[node]) - 1)
            else:
                mask = 0
                for child in self.payload[node]:
                    mask |= cones[child]
                cones[node] = mask
        return cones

    def model_count(self) -> int:
        counts: dict[int, int] = {}
        for node in self.reachable():
            if self.kinds[node] == LIT:
                counts[node] = 1
            elif self.kinds[node] == AND:
                total = 1
                for child in self.payload[node]:
                    total *= counts[child]
                counts[node] = total
            else:
                counts[node] = sum(counts[child] for child in self.payload[node])
        return counts[self.root]

    def to_nnf_text(self) -> str:
        """Line-based dump: `L <lit>`, `A <children>`, `O <children>`,
        one reachable node per line, root last."""
        order = self.reachable()
        renumber = {node: i for i, node in enumerate(order)}
        lines = []
        for node in order:
            if self.kinds[node] == LIT:
                lines.append(f"L {self.payload[node]}")
            else:
                ids = " ".join(str(renumber[child]) for child in self.payload[node])
                prefix = "A" if self.kinds[node] == AND else "O"
                lines.append(f"{prefix} {ids}".rstrip())
        return "\n".join(lines) + "\n"


def compile_circuit(g: GroundProgram, *, node_limit: int = MAX_NODES_DEFAULT) -> Circuit:
    """Compile the ground program to a smooth decision-DNNF whose models
    are the stable models across all total choices."""
    circuit = Circuit(g.n_atoms, g.n_facts, node_limit)
    rules0 = mask_rules(g.rules)
    fact_mask = g.fact_mask
    universe0 = (1 << g.n_atoms) - 1
    memo: dict[tuple[int, tuple], int] = {}

    def determined_literals(true: int, false: int) -> list[int]:
        return [circuit.literal(a, True) for a in bits(true)] + [
            circuit.literal(a, False) for a in bits(false)
        ]

    def build(undecided: int, rules: tuple, universe: int) -> int:
        key = (undecided, rules)
        found = memo.get(key)
        if found is not None:
            return found
        if undecided:
            fact_bit = undecided & -undecided
            fact = fact_bit.bit_length() - 1
            remaining = undecided ^ fact_bit
            branches = []
            for value in (True, False):
                true, false, core = propagate(
                    rules,
                    fact_bit if value else 0,
                    0 if value else fact_bit,
                    remaining,
                    universe,
                )
                sub = build(remaining & ~true & ~false, core, universe & ~true & ~false)
                branches.append(circuit.conj(determined_literals(true, false) + [sub]))
            node = circuit.disj(branches)
        else:
            models = core_models(rules)
            atoms = bits(universe)
            node = circuit.disj(
                [circuit.conj([circuit.literal(a, m >> a & 1 == 1) for a in atoms]) for m in models]
            )
        memo[key] = node
        return node

    true, false, core = propagate(rules0, 0, 0, fact_mask, universe0)
    body = build(fact_mask & ~true & ~false, core, universe0 & ~true & ~false)
    circuit.root = circuit.conj(determined_literals(true, false) + [body])
    return circuit


class ChoiceModelIndex:
    """Maps each total choice to its stable models (as full-assignment
    masks).  Choices with no consistent model are simply absent."""

    def __init__(self, groups: dict[int, int | list[int]], n_facts: int):
        self.groups = groups
        self.n_facts = n_facts

    def __len__(self) -> int:
        return len(self.groups)

    def count(self, choice: int) -> int:
        entry = self.groups.get(choice)
        if entry is None:
            return 0
        return len(entry) if isinstance(entry, list) else 1

    def models(self, choice: int) -> tuple[int, ...]:
        entry = self.groups.get(choice)
        if entry is None:
            return ()
        return tuple(entry) if isinstance(entry, list) else (entry,)

    def choices(self):
        return self.groups.keys()

    def items(self) -> Iterator[tuple[int, tuple[int, ...]]]:
        for choice, entry in self.groups.items():
            yield choice, (tuple(entry) if isinstance(entry, list) else (entry,))

    @property
    def total_models(self) -> int:
        return sum(len(e) if isinstance(e, list) else 1 for e in self.groups.values())

    def missing_choices(self) -> Iterator[int]:
        for choice in range(1 << self.n_facts):
            if choice not in self.groups:
                yield choice


def enumerate_models(circuit: Circuit, *, model_limit: int = MAX_MODELS_DEFAULT) -> ChoiceModelIndex:
    """Traverse the circuit bottom-up, building per-node model lists
    (leaves give singletons, disjunction is union, conjunction is cartesian
    product), then group root models by their probabilistic-fact bits."""
    if circuit.model_count() > model_limit:
        raise ResourceLimitError(f"circuit has more than {model_limit} models")
    order = circuit.reachable()
    refs: dict[int, int] = {node: 0 for node in order}
    for node in order:
        if circuit.kinds[node] != LIT:
            for child in circuit.payload[node]:
                refs[child] += 1

    models: dict[int, list[int]] = {}
    for node in order:
        kind = circuit.kinds[node]
        if kind == LIT:
            lit = circuit.payload[node]
            models[node] = [1 << (lit - 1)] if lit > 0 else [0]
        elif kind == AND:
            acc = [0]
            for child in circuit.payload[node]:
                child_models = models[child]
                acc = [m | c for m in acc for c in child_models]
            models[node] = acc
        else:
            acc = []
            for child in circuit.payload[node]:
                acc.extend(models[child])
            models[node] = acc
        if kind != LIT:
            for child in circuit.payload[node]:
                refs[child] -= 1
                if refs[child] == 0 and child != circuit.root:
                    del models[child]

    fact_mask = (1 << circuit.n_facts) - 1
    groups: dict[int, int | list[int]] = {}
    for model in models[circuit.root]:
        choice = model & fact_mask
        entry = groups.get(choice)
        if entry is None:
            groups[choice] = model
        elif isinstance(entry, list):
            entry.append(model)
        else:
            groups[choice] = [entry, model]
    return ChoiceModelIndex(groups, circuit.n_facts)


# ---------------------------------------------------------------------------
# Weighted model counting and evaluation.


def wmc(circuit: Circuit, w_pos: Sequence[float], w_neg: Sequence[float]) -> float:
    """Evaluate the circuit as an arithmetic circuit (AND=product, OR=sum,
    leaves = literal weights)."""
    values = [0.0] * len(circuit.kinds)
    for node in circuit.reachable():
        kind = circuit.kinds[node]
        if kind == LIT:
            lit = circuit.payload[node]
            values[node] = w_pos[lit - 1] if lit > 0 else w_neg[-lit - 1]
        elif kind == AND:
            value = 1.0
            for child in circuit.payload[node]:
                value *= values[child]
            values[node] = value
        else:
            values[node] = sum(values[child] for child in circuit.payload[node])
    return values[circuit.root]


def wmc_batch(circuit: Circuit, w_pos: np.ndarray, w_neg: np.ndarray) -> np.ndarray:
    """Vectorized WMC: weight arrays have shape (n_atoms, batch)."""
    batch = w_pos.shape[1]
    values: dict[int, np.ndarray] = {}
    for node in circuit.reachable():
        kind = circuit.kinds[node]
        if kind == LIT:
            lit = circuit.payload[node]
            values[node] = w_pos[lit - 1] if lit > 0 else w_neg[-lit - 1]
        elif kind == AND:
            value = np.ones(batch)
            for child in circuit.payload[node]:
                value = value * values[child]
            values[node] = value
        else:
            value = np.zeros(batch)
            for child in circuit.payload[node]:
                value = value + values[child]
            values[node] = value
    return values[circuit.root]


def _weights(g: GroundProgram, labels: Sequence[float], constraints) -> tuple[list[float], list[float]]:
    w_pos = [1.0] * g.n_atoms
    w_neg = [1.0] * g.n_atoms
    for i, value in enumerate(labels):
        w_pos[i] = value
        w_neg[i] = 1.0 - value
    for atom, value in constraints:
        if value:
            w_neg[atom] = 0.0
        else:
            w_pos[atom] = 0.0
    return w_pos, w_neg


def _satisfies(model: int, constraints) -> bool:
    return all((model >> atom & 1) == value for atom, value in constraints)


def evaluate(
    circuit: Circuit,
    index: ChoiceModelIndex,
    g: GroundProgram,
    query: Atom | int | None,
    evidence: Sequence[tuple[Atom | int, bool]] | None = None,
    labels: Sequence[float] | None = None,
) -> QueryResult:
    """P(query | evidence) by corrected weighted model counting.

    Both the numerator (query and evidence instantiated) and the evidence
    weight are first computed unnormalized, then for every total choice with
    n > 1 models the overcounted share P(choice)*(n-1)/n is subtracted once
    per model satisfying the respective condition.  The corrected weights
    equal sums of normalized model probabilities, so the ratio is the
    conditional probability.
    """
    labels = label_values(g) if labels is None else list(labels)
    ev = [(resolve_atom(g, a), v) for a, v in (g.evidence if evidence is None else evidence)]
    num_constraints = list(ev)
    if query is not None:
        num_constraints.append((resolve_atom(g, query), True))

    numerator = wmc(circuit, *_weights(g, labels, num_constraints))
    denominator = wmc(circuit, *_weights(g, labels, ev))

    used_multi = False
    for choice, entry in index.groups.items():
        if not isinstance(entry, list):
            continue
        n = len(entry)
        surplus = choice_probability(choice, labels) * (n - 1) / n
        for model in entry:
            if _satisfies(model, ev):
                used_multi = True
                denominator -= surplus
                if _satisfies(model, num_constraints):
                    numerator -= surplus
    if denominator <= 0.0:
        raise ZeroProbabilityEvidenceError("evidence has probability zero")
    return QueryResult(numerator / denominator, used_multi)


# ---------------------------------------------------------------------------
# Structural d-DNNF checks (used by the test suite).


def check_decomposable(circuit: Circuit) -> None:
    cones = circuit.atom_cones()
    for node in circuit.reachable():
        if circuit.kinds[node] != AND:
            continue
        seen = 0
        for child in circuit.payload[node]:
            if seen & cones[child]:
                raise AssertionError(f"AND node {node} has children sharing atoms")
            seen |= cones[child]


def check_smooth(circuit: Circuit) -> None:
    cones = circuit.atom_cones()
    for node in circuit.reachable():
        if circuit.kinds[node] != OR or not circuit.payload[node]:
            continue
        first = cones[circuit.payload[node][0]]
        for child in circuit.payload[node][1:]:
            if cones[child] != first:
                raise AssertionError(f"OR node {node} has children over different atom sets")


def check_deterministic(circuit: Circuit, *, model_limit: int = 200_000) -> None:
    """Exhaustive determinism check: the model sets of OR children must be
    pairwise disjoint.  Materializes per-node model sets; only suitable for
    small circuits."""
    if circuit.model_count() > model_limit:
        raise ResourceLimitError("circuit too large for the exhaustive determinism check")
    models: dict[int, frozenset[int]] = {}
    for node in circuit.reachable():
        kind = circuit.kinds[node]
        if kind == LIT:
            lit = circuit.payload[node]
            models[node] = frozenset([1 << (lit - 1) if lit > 0 else 0])
        elif kind == AND:
            acc = frozenset([0])
            for child in circuit.payload[node]:
                acc = frozenset(m | c for m in acc for c in models[child])
            models[node] = acc
        else:
            total = 0
            acc = set()
            for child in circuit.payload[node]:
                total += len(models[child])
                acc |= models[child]
            if len(acc) != total:
                raise AssertionError(f"OR node {node} has overlapping children (not deterministic)")
            models[node] = frozenset(acc)


def check_structure(circuit: Circuit, *, deterministic: bool = True) -> None:
    check_decomposable(circuit)
    check_smooth(circuit)
    if deterministic:
        check_deterministic(circuit)
