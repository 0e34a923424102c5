"""Stable model enumeration for ground normal logic programs.

Interpretations are int bitmasks over atom ids (bit i set = atom i true).

The enumerator first applies deterministic, stable-model-preserving
simplifications (unit propagation of certainly true/false atoms, dead rule
removal, falsification of atoms with no remaining rules), then guesses the
truth of the atoms still occurring under negation as failure in the residual
core: a candidate model is stable iff the least model of the corresponding
reduct reproduces the guess.  `brute_force_stable_models` is the independent
oracle: it filters every candidate interpretation with the textbook
stability test.
"""

from __future__ import annotations

from .errors import ResourceLimitError
from .grounding import DependencyGraph, GroundProgram, GroundRule

MAX_GUESS_ATOMS = 20

MaskRule = tuple[int, int, int]  # (head id, positive body mask, negative body mask)


def mask_rules(rules: list[GroundRule]) -> list[MaskRule]:
    return [(r.head, _mask(r.pos), _mask(r.neg)) for r in rules]


def _mask(ids) -> int:
    out = 0
    for i in ids:
        out |= 1 << i
    return out


def bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


# ---------------------------------------------------------------------------
# Spec operations on explicit rule lists.


def reduct(rules: list[GroundRule], interpretation: int) -> list[GroundRule]:
    """Reduct w.r.t. an interpretation: drop rules blocked by a true
    naf atom, strip the remaining naf literals."""
    out = []
    for rule in rules:
        if any(interpretation >> a & 1 for a in rule.neg):
            continue
        out.append(rule if not rule.neg else GroundRule(rule.head, rule.pos, ()))
    return out


def least_model(rules: list[GroundRule]) -> int:
    """Least fixpoint of the immediate-consequence operator (definite rules)."""
    if any(rule.neg for rule in rules):
        raise ValueError("least_model requires a definite program")
    compiled = [(rule.head, _mask(rule.pos)) for rule in rules]
    model = 0
    changed = True
    while changed:
        changed = False
        for head, pos in compiled:
            if not model >> head & 1 and pos & ~model == 0:
                model |= 1 << head
                changed = True
    return model


def is_stable(rules: list[MaskRule], candidate: int) -> bool:
    """Textbook stability test: candidate equals the least model of its reduct."""
    model = 0
    compiled = [(head, pos) for head, pos, neg in rules if neg & candidate == 0]
    changed = True
    while changed:
        changed = False
        for head, pos in compiled:
            if not model >> head & 1 and pos & ~model == 0:
                model |= 1 << head
                changed = True
    return model == candidate


# ---------------------------------------------------------------------------
# Deterministic simplification shared with the circuit compiler.


def propagate(rules, true_mask: int, false_mask: int, frozen_mask: int, universe_mask: int):
    """Close (true, false) under deterministic consequences.

    `frozen_mask` marks atoms that may not be falsified for lack of rules
    (undecided probabilistic facts).  `universe_mask` is the set of atoms
    that must end up determined or in the residual core.  Returns
    `(true, false, core_rules)` where `core_rules` mention only undetermined
    atoms.  All steps preserve the stable model set.
    """
    true, false = true_mask, false_mask
    rules = list(rules)
    while True:
        changed = False
        kept = []
        heads = 0
        for head, pos, neg in rules:
            if true >> head & 1:
                changed = True
                continue
            if pos & false or neg & true:
                changed = True
                continue
            new_pos, new_neg = pos & ~true, neg & ~false
            if new_pos != pos or new_neg != neg:
                changed = True
            if not new_pos and not new_neg:
                true |= 1 << head
                changed = True
                continue
            kept.append((head, new_pos, new_neg))
            heads |= 1 << head
        new_false = universe_mask & ~frozen_mask & ~true & ~false & ~heads
        if new_false:
            false |= new_false
            changed = True
        rules = kept
        if not changed:
            return true, false, tuple(rules)


def core_models(core_rules) -> list[int]:
    """All stable models of a residual core, as masks over core atoms.

    Guesses the truth of every atom occurring under naf; for each guess the
    reduct is definite and its least model is stable iff it reproduces the
    guess.  Returned in ascending mask order.
    """
    naf_mask = 0
    for _, _, neg in core_rules:
        naf_mask |= neg
    naf_bits = bits(naf_mask)
    if len(naf_bits) > MAX_GUESS_ATOMS:
        raise ResourceLimitError(f"residual program has {len(naf_bits)} atoms under negation (limit {MAX_GUESS_ATOMS})")
    models = []
    for combo in range(1 << len(naf_bits)):
        guess = 0
        for j, bit in enumerate(naf_bits):
            if combo >> j & 1:
                guess |= 1 << bit
        compiled = [(head, pos) for head, pos, neg in core_rules if neg & guess == 0]
        model = 0
        changed = True
        while changed:
            changed = False
            for head, pos in compiled:
                if not model >> head & 1 and pos & ~model == 0:
                    model |= 1 << head
                    changed = True
        if model & naf_mask == guess:
            models.append(model)
    models.sort()
    return models


# ---------------------------------------------------------------------------
# Enumeration entry points.


def stable_models(g: GroundProgram, fixed_facts: int) -> list[int]:
    """All stable models of `g.rules` under a total choice of the facts.

    `fixed_facts` assigns every probabilistic fact (bit i = fact i included).
    Returns full interpretations in ascending mask order; may be empty.
    """
    fact_mask = g.fact_mask
    true, false, core = propagate(
        mask_rules(g.rules),
        fixed_facts & fact_mask,
        ~fixed_facts & fact_mask,
        0,
        (1 << g.n_atoms) - 1,
    )
    return [true | m for m in core_models(core)]


def brute_force_stable_models(g: GroundProgram, fixed_facts: int) -> list[int]:
    """Oracle enumerator: filter all 2^n candidate interpretations."""
    n_derived = g.n_atoms - g.n_facts
    if n_derived > MAX_GUESS_ATOMS:
        raise ResourceLimitError(f"brute force over {n_derived} derived atoms refused")
    included = fixed_facts & g.fact_mask
    rules = mask_rules(g.rules) + [(i, 0, 0) for i in bits(included)]
    out = []
    for derived in range(1 << n_derived):
        candidate = included | derived << g.n_facts
        if is_stable(rules, candidate):
            out.append(candidate)
    return out


def stratified_model(g: GroundProgram, fixed_facts: int) -> int:
    """The unique two-valued model of a program without cycles through
    negation, computed stratum by stratum over the dependency SCCs.
    Independent of the enumeration machinery; used as a cross-check."""
    graph = DependencyGraph(g)
    components = list(reversed(graph.sccs()))  # topological: bodies first
    component_of = {}
    for i, component in enumerate(components):
        for atom in component:
            component_of[atom] = i
    rules_by_scc: dict[int, list[MaskRule]] = {}
    for rule in g.rules:
        for atom in rule.neg:
            if component_of[atom] == component_of[rule.head]:
                raise ValueError("program has a cycle through negation; not stratified")
        rules_by_scc.setdefault(component_of[rule.head], []).append(
            (rule.head, _mask(rule.pos), _mask(rule.neg))
        )
    model = fixed_facts & g.fact_mask
    for i in range(len(components)):
        scc_rules = rules_by_scc.get(i, ())
        changed = True
        while changed:
            changed = False
            for head, pos, neg in scc_rules:
                if not model >> head & 1 and pos & ~model == 0 and neg & model == 0:
                    model |= 1 << head
                    changed = True
    return model
