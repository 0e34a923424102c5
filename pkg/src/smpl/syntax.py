"""Abstract syntax for probabilistic normal logic programs.

A program is a list of rules over atoms built from constants and variables.
Facts may carry probability labels (`0.5::a.`), rules may carry them as
syntactic sugar (see `transform.desugar`), and rule heads may be classically
negated (`neg a :- b.`), which `transform.rewrite_negated_heads` compiles
away.  Values are immutable and hashable so they can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field


# Predicate names generated by the rewrites; user programs must not use them.
AUX_PREFIX = "aux_"
POS_SUFFIX = "_pos"
NEG_SUFFIX = "_neg"


def is_reserved_predicate(name: str) -> bool:
    return name.startswith(AUX_PREFIX) or name.endswith(POS_SUFFIX) or name.endswith(NEG_SUFFIX)


@dataclass(frozen=True)
class Term:
    """A constant (lowercase symbol or integer) or a variable (capitalized)."""

    value: str | int

    @property
    def is_variable(self) -> bool:
        return isinstance(self.value, str) and self.value[0].isupper()

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def is_ground(self) -> bool:
        return all(not t.is_variable for t in self.args)

    def variables(self) -> set[str]:
        return {t.value for t in self.args if t.is_variable}  # type: ignore[misc]

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class Literal:
    """A body literal: an atom, optionally under negation as failure (`\\+`)."""

    atom: Atom
    naf: bool = False

    def __str__(self) -> str:
        return f"\\+{self.atom}" if self.naf else str(self.atom)


@dataclass(frozen=True)
class ProbLabel:
    """Probability annotation; learnable labels carry their initial value."""

    value: float
    learnable: bool = False

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"probability {self.value} outside [0, 1]")

    def __str__(self) -> str:
        return f"t({self.value!r})" if self.learnable else repr(self.value)


@dataclass(frozen=True)
class Rule:
    """`head :- body.`; facts have an empty body.

    `head_negated` marks classical negation of the head (`neg h :- ...`).
    `label` is the probability annotation, if any.
    """

    head: Atom
    body: tuple[Literal, ...] = ()
    label: ProbLabel | None = None
    head_negated: bool = False

    @property
    def is_fact(self) -> bool:
        return not self.body

    def variables(self) -> set[str]:
        out = self.head.variables()
        for lit in self.body:
            out |= lit.atom.variables()
        return out

    def __str__(self) -> str:
        head = f"neg {self.head}" if self.head_negated else str(self.head)
        if self.label is not None:
            head = f"{self.label}::{head}"
        if not self.body:
            return f"{head}."
        return f"{head} :- {', '.join(map(str, self.body))}."


@dataclass(frozen=True)
class Program:
    """A parsed program: rules plus query and evidence declarations."""

    rules: tuple[Rule, ...] = ()
    queries: tuple[Atom, ...] = ()
    evidence: tuple[tuple[Atom, bool], ...] = ()

    @property
    def probabilistic_facts(self) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules if r.label is not None and r.is_fact)

    @property
    def annotated_rules(self) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules if r.label is not None and not r.is_fact)

    def __str__(self) -> str:
        lines = [str(r) for r in self.rules]
        lines += [f"query({q})." for q in self.queries]
        lines += [f"evidence({a}, {'true' if v else 'false'})." for a, v in self.evidence]
        return "\n".join(lines) + ("\n" if lines else "")


def make_atom(predicate: str, *args: str | int) -> Atom:
    """Convenience constructor: `make_atom("arg", "a1")` -> `arg(a1)`."""
    return Atom(predicate, tuple(Term(a) for a in args))
