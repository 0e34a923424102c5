"""Parser for the `.smpl` surface syntax.

Statements end with `.`; `%` starts a line comment.

    0.5::a.                     probabilistic fact
    t(0.3)::b.                  learnable probabilistic fact (initial value 0.3)
    c :- a, \\+b.               rule with negation as failure
    0.6::neg arg(a1) :- arg(a4).  annotated rule with classically negated head
    query(c).
    evidence(a, true).

Constants are lowercase identifiers or integers; variables are capitalized.
Rules must be range restricted: every variable in the head or in a `\\+`
literal must also occur in a positive body literal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ProgramParseError
from .syntax import Atom, Literal, ProbLabel, Program, Rule, Term, is_reserved_predicate

_TOKEN_RE = re.compile(
    r"""
    (?P<WS>\s+)
  | (?P<COMMENT>%[^\n]*)
  | (?P<FLOAT>\d+\.\d+(?:[eE][+-]?\d+)?)
  | (?P<INT>\d+)
  | (?P<VAR>[A-Z]\w*)
  | (?P<IDENT>[a-z]\w*)
  | (?P<ARROW>:-)
  | (?P<LABEL>::)
  | (?P<NAF>\\\+)
  | (?P<LPAREN>\()
  | (?P<RPAREN>\))
  | (?P<COMMA>,)
  | (?P<DOT>\.)
    """,
    re.VERBOSE,
)

_DIRECTIVES = ("query", "evidence")


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ProgramParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind not in ("WS", "COMMENT"):
            tokens.append(_Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(_Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise ProgramParseError(f"expected {what}, found {tok.text or 'end of input'!r}", tok.line, tok.column)
        return tok

    def error(self, message: str, tok: _Token | None = None):
        tok = tok or self.peek()
        raise ProgramParseError(message, tok.line, tok.column)

    # ---- grammar -------------------------------------------------------

    def parse_program(self) -> Program:
        rules: list[Rule] = []
        queries: list[Atom] = []
        evidence: list[tuple[Atom, bool]] = []
        while self.peek().kind != "EOF":
            tok = self.peek()
            if tok.kind == "IDENT" and tok.text in _DIRECTIVES and self.peek(1).kind == "LPAREN":
                self.parse_directive(queries, evidence)
            else:
                rules.append(self.parse_rule())
        return Program(tuple(rules), tuple(queries), tuple(evidence))

    def parse_directive(self, queries, evidence):
        name = self.next()
        self.expect("LPAREN", "'('")
        atom = self.parse_atom()
        if name.text == "query":
            self.expect("RPAREN", "')'")
            queries.append(atom)
        else:
            value = True
            if self.peek().kind == "COMMA":
                self.next()
                tok = self.expect("IDENT", "'true' or 'false'")
                if tok.text not in ("true", "false"):
                    self.error("evidence value must be 'true' or 'false'", tok)
                value = tok.text == "true"
            self.expect("RPAREN", "')'")
            evidence.append((atom, value))
        self.expect("DOT", "'.'")

    def parse_rule(self) -> Rule:
        label = self.parse_label()
        head_negated = False
        if self.peek().kind == "IDENT" and self.peek().text == "neg":
            self.next()
            head_negated = True
        head = self.parse_atom()
        body: list[Literal] = []
        if self.peek().kind == "ARROW":
            self.next()
            body.append(self.parse_literal())
            while self.peek().kind == "COMMA":
                self.next()
                body.append(self.parse_literal())
        end = self.expect("DOT", "'.'")
        rule = Rule(head, tuple(body), label, head_negated)
        self.check_range_restriction(rule, end)
        return rule

    def parse_label(self) -> ProbLabel | None:
        start = self.pos
        tok = self.peek()
        if tok.kind in ("FLOAT", "INT") and self.peek(1).kind == "LABEL":
            self.next()
            self.next()
            return self.make_label(float(tok.text), False, tok)
        if (
            tok.kind == "IDENT"
            and tok.text == "t"
            and self.peek(1).kind == "LPAREN"
            and self.peek(2).kind in ("FLOAT", "INT")
            and self.peek(3).kind == "RPAREN"
            and self.peek(4).kind == "LABEL"
        ):
            value = self.peek(2)
            self.pos += 5
            return self.make_label(float(value.text), True, value)
        self.pos = start
        return None

    def make_label(self, value: float, learnable: bool, tok: _Token) -> ProbLabel:
        try:
            return ProbLabel(value, learnable)
        except ValueError as exc:
            raise ProgramParseError(str(exc), tok.line, tok.column) from None

    def parse_literal(self) -> Literal:
        naf = False
        if self.peek().kind == "NAF":
            self.next()
            naf = True
        if self.peek().kind == "IDENT" and self.peek().text == "neg":
            self.error("classical negation ('neg') is only allowed on rule heads")
        return Literal(self.parse_atom(), naf)

    def parse_atom(self) -> Atom:
        tok = self.expect("IDENT", "a predicate name")
        if tok.text in _DIRECTIVES or tok.text == "neg":
            self.error(f"{tok.text!r} is reserved and cannot be used as a predicate", tok)
        if is_reserved_predicate(tok.text):
            self.error(
                f"predicate {tok.text!r} uses a reserved name "
                f"('aux_' prefix, '_pos'/'_neg' suffix are generated internally)",
                tok,
            )
        args: list[Term] = []
        if self.peek().kind == "LPAREN":
            self.next()
            args.append(self.parse_term())
            while self.peek().kind == "COMMA":
                self.next()
                args.append(self.parse_term())
            self.expect("RPAREN", "')'")
        return Atom(tok.text, tuple(args))

    def parse_term(self) -> Term:
        tok = self.next()
        if tok.kind == "IDENT":
            return Term(tok.text)
        if tok.kind == "VAR":
            return Term(tok.text)
        if tok.kind == "INT":
            return Term(int(tok.text))
        self.error("expected a constant, integer or variable", tok)

    def check_range_restriction(self, rule: Rule, tok: _Token):
        bound = set()
        for lit in rule.body:
            if not lit.naf:
                bound |= lit.atom.variables()
        unbound = (rule.head.variables() - bound) | {
            v for lit in rule.body if lit.naf for v in lit.atom.variables() - bound
        }
        if unbound:
            self.error(
                f"rule is not range restricted: variable(s) {', '.join(sorted(unbound))} "
                f"do not occur in any positive body literal",
                tok,
            )


def parse_program(text: str) -> Program:
    """Parse program text into a `Program`; raises `ProgramParseError`."""
    return _Parser(text).parse_program()


def parse_atom(text: str) -> Atom:
    """Parse a single atom, e.g. for `--evidence` command-line flags."""
    parser = _Parser(text)
    atom = parser.parse_atom()
    if parser.peek().kind != "EOF":
        parser.error("trailing input after atom")
    return atom


def parse_file(path) -> Program:
    with open(path, encoding="utf-8") as handle:
        return parse_program(handle.read())
