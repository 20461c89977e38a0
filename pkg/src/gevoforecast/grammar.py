"""BNF grammar parsing and inspection.

File syntax: one production rule per ``::=``, alternatives separated by
``|``, nonterminals wrapped in ``<...>``.  A rule may continue on following
lines (with or without a trailing backslash).  ``#`` starts a comment.
Whitespace separates symbols; a terminal is any maximal run of characters
that is not whitespace, ``|`` or ``<``.

Time-indexed variable terminals are declared implicitly by the
``NAME[k-<idx>]`` shape; bare alphabetic identifiers that are not unary
function names also count as variables.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import GrammarError
from .expr import UNARY_FUNCTIONS


@dataclass(frozen=True)
class Symbol:
    text: str
    is_nonterminal: bool

    def __str__(self) -> str:
        return f"<{self.text}>" if self.is_nonterminal else self.text


@dataclass(frozen=True)
class ProductionRule:
    lhs: str
    choices: tuple  # tuple of tuples of Symbol, textual order preserved


@dataclass(frozen=True)
class VariableTerminal:
    identifier: str
    lag_form: bool  # True for NAME[k-<idx>] terminals


_LAG_PREFIX_RE = re.compile(r"^([A-Za-z_]\w*)\[k-$")
_BARE_IDENT_RE = re.compile(r"^[A-Za-z_]\w*$")


@dataclass
class Grammar:
    rules: dict  # lhs -> ProductionRule, insertion order = textual order
    start: str
    _table: Optional[dict] = field(default=None, repr=False, compare=False)

    @property
    def nonterminals(self) -> set:
        return set(self.rules)

    @property
    def terminals(self) -> set:
        out = set()
        for rule in self.rules.values():
            for choice in rule.choices:
                out.update(s.text for s in choice if not s.is_nonterminal)
        return out

    def rule(self, nt: str) -> ProductionRule:
        try:
            return self.rules[nt]
        except KeyError:
            raise GrammarError(f"unknown nonterminal <{nt}>") from None

    def choice_count(self, nt: str) -> int:
        return len(self.rule(nt).choices)

    def expansion_table(self) -> dict:
        """lhs -> list of choices, each a list of (is_nonterminal, text)."""
        if self._table is None:
            self._table = {
                lhs: [[(s.is_nonterminal, s.text) for s in choice] for choice in rule.choices]
                for lhs, rule in self.rules.items()
            }
        return self._table


def parse_grammar(source: str) -> Grammar:
    """Parse BNF text into a Grammar; raises GrammarError on bad input."""
    rule_texts = _split_rules(source)
    if not rule_texts:
        raise GrammarError("grammar has no production rules")
    rules: dict = {}
    for lineno, text in rule_texts:
        lhs_part, _, rhs_part = text.partition("::=")
        lhs = lhs_part.strip()
        m = re.fullmatch(r"<\s*([A-Za-z_]\w*)\s*>", lhs)
        if not m:
            raise GrammarError(f"line {lineno}: left-hand side must be a <nonterminal>, got {lhs!r}")
        name = m.group(1)
        if name in rules:
            raise GrammarError(f"line {lineno}: duplicate rule for <{name}>")
        choices = _parse_choices(rhs_part, lineno)
        rules[name] = ProductionRule(name, choices)
    grammar = Grammar(rules=rules, start=next(iter(rules)))
    _validate(grammar)
    return grammar


def _split_rules(source: str) -> list:
    """Group physical lines into one logical text per rule."""
    out: list = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if line.endswith("\\"):
            line = line[:-1]
        if not line.strip():
            continue
        if "::=" in line:
            out.append((lineno, line))
        else:
            if not out:
                raise GrammarError(f"line {lineno}: text before the first rule: {line.strip()!r}")
            prev_lineno, prev = out[-1]
            out[-1] = (prev_lineno, prev + " " + line)
    return out


def _parse_choices(rhs: str, lineno: int) -> tuple:
    choices = []
    current: list = []
    saw_symbol_or_bar = False
    i = 0
    n = len(rhs)
    while i < n:
        ch = rhs[i]
        if ch.isspace():
            i += 1
        elif ch == "|":
            if not current:
                raise GrammarError(f"line {lineno}: empty choice at position {i}")
            choices.append(tuple(current))
            current = []
            saw_symbol_or_bar = True
            i += 1
        elif ch == "<":
            end = rhs.find(">", i)
            if end < 0:
                raise GrammarError(f"line {lineno}: unterminated nonterminal at position {i}")
            name = rhs[i + 1:end].strip()
            if not re.fullmatch(r"[A-Za-z_]\w*", name):
                raise GrammarError(f"line {lineno}: bad nonterminal name {name!r}")
            current.append(Symbol(name, True))
            saw_symbol_or_bar = True
            i = end + 1
        else:
            j = i
            while j < n and not rhs[j].isspace() and rhs[j] not in "|<":
                j += 1
            current.append(Symbol(rhs[i:j], False))
            saw_symbol_or_bar = True
            i = j
    if not current:
        if saw_symbol_or_bar:
            raise GrammarError(f"line {lineno}: empty trailing choice")
        raise GrammarError(f"line {lineno}: rule has no right-hand side")
    choices.append(tuple(current))
    return tuple(choices)


def _validate(grammar: Grammar) -> None:
    for rule in grammar.rules.values():
        for choice in rule.choices:
            for sym in choice:
                if sym.is_nonterminal and sym.text not in grammar.rules:
                    raise GrammarError(
                        f"rule <{rule.lhs}> references undefined nonterminal <{sym.text}>"
                    )


def choice_count(grammar: Grammar, nt: str) -> int:
    return grammar.choice_count(nt)


def reachable_nonterminals(grammar: Grammar) -> set:
    seen = {grammar.start}
    frontier = [grammar.start]
    while frontier:
        nt = frontier.pop()
        for choice in grammar.rules[nt].choices:
            for sym in choice:
                if sym.is_nonterminal and sym.text not in seen:
                    seen.add(sym.text)
                    frontier.append(sym.text)
    return seen


def list_variables(grammar: Grammar) -> set:
    """Variable terminals reachable from the start symbol."""
    out = set()
    for nt in reachable_nonterminals(grammar):
        for choice in grammar.rules[nt].choices:
            for pos, sym in enumerate(choice):
                if sym.is_nonterminal:
                    continue
                m = _LAG_PREFIX_RE.match(sym.text)
                if m:
                    out.add(VariableTerminal(m.group(1), lag_form=True))
                elif _BARE_IDENT_RE.match(sym.text) and sym.text not in UNARY_FUNCTIONS:
                    out.add(VariableTerminal(sym.text, lag_form=False))
    return out


def variable_identifiers(grammar: Grammar) -> set:
    return {v.identifier for v in list_variables(grammar)}


def render(grammar: Grammar) -> str:
    """Canonical text form; parse_grammar(render(g)) == g."""
    lines = []
    for rule in grammar.rules.values():
        alts = []
        for choice in rule.choices:
            parts = []
            prev_terminal = False
            for sym in choice:
                if parts and prev_terminal and not sym.is_nonterminal:
                    parts.append(" ")
                parts.append(str(sym))
                prev_terminal = not sym.is_nonterminal
            alts.append("".join(parts))
        lines.append(f"<{rule.lhs}> ::= " + " | ".join(alts))
    return "\n".join(lines) + "\n"


def load_grammar(path) -> Grammar:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_grammar(fh.read())
