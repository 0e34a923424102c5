"""Program normalization: label desugaring and negated-head rewriting.

Both passes are idempotent and preserve queries and evidence.  `prepare`
chains them; the grounder requires a prepared program.
"""

from __future__ import annotations

from .syntax import AUX_PREFIX, NEG_SUFFIX, POS_SUFFIX, Atom, Literal, Program, Rule, Term


def desugar(program: Program) -> Program:
    """Replace each annotated rule `p::h :- body` by a fresh probabilistic
    fact `p::aux_i` plus the plain rule `h :- aux_i, body`.

    The auxiliary fact carries the rule's variables (one independent choice
    per ground instance) and is numbered by the rule's position among the
    annotated rules, so output names are deterministic.
    """
    rules: list[Rule] = []
    counter = 0
    for rule in program.rules:
        if rule.label is None or rule.is_fact:
            rules.append(rule)
            continue
        variables = _rule_variables_in_order(rule)
        aux = Atom(f"{AUX_PREFIX}{counter}", tuple(Term(v) for v in variables))
        counter += 1
        rules.append(Rule(aux, (), rule.label))
        rules.append(Rule(rule.head, (Literal(aux),) + rule.body, None, rule.head_negated))
    return Program(tuple(rules), program.queries, program.evidence)


def rewrite_negated_heads(program: Program) -> Program:
    """Compile classical head negation into positive/negative cause atoms.

    For every predicate `p` that occurs classically negated in some head,
    heads `p(..)` become `p_pos(..)`, heads `neg p(..)` become `p_neg(..)`,
    and a bridging rule `p(X..) :- p_pos(X..), \\+p_neg(X..)` is added.
    Predicates never negated in a head are untouched.
    """
    negated: list[str] = []
    arity: dict[str, int] = {}
    for rule in program.rules:
        if rule.head_negated and rule.head.predicate not in negated:
            negated.append(rule.head.predicate)
            arity[rule.head.predicate] = rule.head.arity
    if not negated:
        return program

    rules: list[Rule] = []
    for rule in program.rules:
        head = rule.head
        if head.predicate in negated:
            suffix = NEG_SUFFIX if rule.head_negated else POS_SUFFIX
            head = Atom(head.predicate + suffix, head.args)
        rules.append(Rule(head, rule.body, rule.label, False))
    for pred in negated:
        args = tuple(Term(f"X{i}") for i in range(arity[pred]))
        rules.append(
            Rule(
                Atom(pred, args),
                (Literal(Atom(pred + POS_SUFFIX, args)), Literal(Atom(pred + NEG_SUFFIX, args), naf=True)),
            )
        )
    return Program(tuple(rules), program.queries, program.evidence)


def prepare(program: Program) -> Program:
    """Desugar annotated rules and rewrite negated heads."""
    return rewrite_negated_heads(desugar(program))


def is_prepared(program: Program) -> bool:
    return not program.annotated_rules and not any(r.head_negated for r in program.rules)


def _rule_variables_in_order(rule: Rule) -> list[str]:
    seen: list[str] = []
    for atom in [rule.head] + [lit.atom for lit in rule.body]:
        for term in atom.args:
            if term.is_variable and term.value not in seen:
                seen.append(term.value)  # type: ignore[arg-type]
    return seen
