"""Reference inference engine by exhaustive world enumeration.

Walks all 2^n total choices of the probabilistic facts, enumerates the
stable models of each induced subprogram, splits the choice probability
uniformly across its models, and sums.  Exponential but simple; the circuit
engine is checked against it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import InvalidProgramError, ResourceLimitError, UnknownAtomError, ZeroProbabilityEvidenceError
from .grounding import GroundProgram
from .stable import core_models, mask_rules, propagate
from .syntax import Atom

MAX_ORACLE_FACTS = 24


@dataclass(frozen=True)
class WorldRecord:
    """One total choice with its probability and stable models."""

    choice: int  # bit i set = fact i included
    probability: float
    models: tuple[int, ...]


@dataclass(frozen=True)
class QueryResult:
    value: float
    used_multiple_models: bool


def label_values(g: GroundProgram) -> list[float]:
    return [label.value for label in g.fact_labels]


def choice_probability(choice: int, labels: Sequence[float]) -> float:
    """Product of fact probabilities for inclusion/exclusion per the choice."""
    p = 1.0
    for i, value in enumerate(labels):
        p *= value if choice >> i & 1 else 1.0 - value
    return p


def resolve_atom(g: GroundProgram, atom: Atom | int) -> int:
    if isinstance(atom, int):
        if not 0 <= atom < g.n_atoms:
            raise UnknownAtomError(f"atom id {atom} out of range")
        return atom
    ident = g.atom_id(atom)
    if ident is None:
        raise UnknownAtomError(f"atom {atom} does not occur in the ground program")
    return ident


def enumerate_worlds(
    g: GroundProgram, *, max_facts: int = MAX_ORACLE_FACTS, allow_empty: bool = False
) -> Iterator[WorldRecord]:
    """Yield all total choices with their stable models, in choice order.

    Raises `InvalidProgramError` on a choice with no stable model unless
    `allow_empty` is set (then the record has an empty model tuple and its
    probability mass is simply lost, mirroring lossy benchmark programs).
    """
    if g.n_facts > max_facts:
        raise ResourceLimitError(
            f"{g.n_facts} probabilistic facts exceed the naive enumeration cap ({max_facts})"
        )
    labels = label_values(g)
    rules = mask_rules(g.rules)
    universe = (1 << g.n_atoms) - 1
    fact_mask = g.fact_mask
    for choice in range(1 << g.n_facts):
        true, _, core = propagate(rules, choice, ~choice & fact_mask, 0, universe)
        models = tuple(true | m for m in core_models(core))
        if not models and not allow_empty:
            raise InvalidProgramError(witness_atoms(g, choice))
        yield WorldRecord(choice, choice_probability(choice, labels), models)


def witness_atoms(g: GroundProgram, choice: int) -> tuple[Atom, ...]:
    return tuple(g.atoms[i] for i in range(g.n_facts) if choice >> i & 1)


def validate(g: GroundProgram, *, max_facts: int = MAX_ORACLE_FACTS) -> None:
    """Check that every total choice has at least one stable model."""
    for _ in enumerate_worlds(g, max_facts=max_facts):
        pass


def marginal(g: GroundProgram, query: Atom | int, **kwargs) -> float:
    """Success probability of a ground atom: sum of normalized model
    probabilities P(choice)/|models| over the models containing it."""
    q = resolve_atom(g, query)
    total = 0.0
    for record in enumerate_worlds(g, **kwargs):
        if not record.models:
            continue
        share = record.probability / len(record.models)
        total += sum(share for m in record.models if m >> q & 1)
    return total


def conditional(
    g: GroundProgram,
    query: Atom | int,
    evidence: Sequence[tuple[Atom | int, bool]] | None = None,
    **kwargs,
) -> float:
    """P(query | evidence) as a ratio of normalized model-probability sums."""
    q = resolve_atom(g, query)
    results = query_results(g, [q], evidence, **kwargs)
    return results[q].value


def query_results(
    g: GroundProgram,
    queries: Sequence[Atom | int] | None = None,
    evidence: Sequence[tuple[Atom | int, bool]] | None = None,
    **kwargs,
) -> dict[int, QueryResult]:
    """Conditional probabilities for several queries in one enumeration pass."""
    query_ids = [resolve_atom(g, q) for q in (g.queries if queries is None else queries)]
    ev = g.evidence if evidence is None else [(resolve_atom(g, a), v) for a, v in evidence]
    ev_true = ev_false = 0
    for atom, value in ev:
        if value:
            ev_true |= 1 << atom
        else:
            ev_false |= 1 << atom

    numerators = {q: 0.0 for q in query_ids}
    denominator = 0.0
    used_multi = False
    for record in enumerate_worlds(g, **kwargs):
        if not record.models:
            continue
        share = record.probability / len(record.models)
        multi = len(record.models) > 1
        for model in record.models:
            if model & ev_true == ev_true and model & ev_false == 0:
                denominator += share
                used_multi = used_multi or multi
                for q in numerators:
                    if model >> q & 1:
                        numerators[q] += share
    if denominator <= 0.0:
        raise ZeroProbabilityEvidenceError("evidence has probability zero")
    return {q: QueryResult(numerators[q] / denominator, used_multi) for q in query_ids}
