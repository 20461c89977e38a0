import pytest

from gevoforecast.errors import GrammarError
from gevoforecast.grammar import (
    list_variables,
    parse_grammar,
    reachable_nonterminals,
    render,
    variable_identifiers,
)


def test_appendix_grammar_shape(appendix_grammar):
    g = appendix_grammar
    assert g.start == "expr"
    assert len(g.rules) == 6
    assert g.choice_count("expr") == 3
    assert g.choice_count("op") == 4
    assert g.choice_count("preop") == 3


def test_minimal_grammar():
    g = parse_grammar("<s> ::= a")
    assert g.start == "s"
    assert len(g.rules) == 1
    assert g.choice_count("s") == 1


def test_cpu_grammar_choice_counts(cpu_grammar):
    assert cpu_grammar.choice_count("op") == 4
    assert cpu_grammar.choice_count("var") == 5


def test_list_variables_appendix(appendix_grammar):
    assert {v.identifier for v in list_variables(appendix_grammar)} == {"x", "y", "z"}


def test_list_variables_cpu(cpu_grammar):
    assert variable_identifiers(cpu_grammar) == {"TpS", "TS", "TIN", "PS", "FS"}
    assert all(v.lag_form for v in list_variables(cpu_grammar))


def test_list_variables_inlet(inlet_grammar):
    assert variable_identifiers(inlet_grammar) == {"TIN", "TpIN", "TSUP", "HUM"}


def test_numeric_terminals_are_not_variables():
    g = parse_grammar("<s> ::= 1")
    assert list_variables(g) == set()


def test_function_names_are_not_variables(appendix_grammar):
    names = variable_identifiers(appendix_grammar)
    assert not names & {"sin", "cos", "exp", "log", "tan"}


def test_duplicate_lhs_rejected():
    with pytest.raises(GrammarError):
        parse_grammar("<s> ::= a\n<s> ::= b")


def test_undefined_nonterminal_rejected():
    with pytest.raises(GrammarError):
        parse_grammar("<s> ::= <missing>")


def test_empty_choice_rejected():
    with pytest.raises(GrammarError):
        parse_grammar("<s> ::= a | | b")


def test_missing_rule_body_rejected():
    with pytest.raises(GrammarError):
        parse_grammar("<s> ::=")


def test_continuation_lines():
    g = parse_grammar("<s> ::= a | b \\\n | c\n")
    assert g.choice_count("s") == 3
    g2 = parse_grammar("<s> ::= a | b\n | c\n")
    assert g2.choice_count("s") == 3


def test_comments_ignored():
    g = parse_grammar("# leading comment\n<s> ::= a | b  # trailing\n")
    assert g.choice_count("s") == 2


def test_whitespace_between_symbols_ignored():
    g1 = parse_grammar("<s> ::= <a><a>\n<a> ::= x")
    g2 = parse_grammar("<s> ::=   <a> <a>  \n<a> ::= x")
    assert g1 == g2


@pytest.mark.parametrize(
    "name", ["appendix_grammar", "cpu_grammar", "inlet_grammar", "wide_cpu_grammar"]
)
def test_render_round_trip(name, request):
    g = request.getfixturevalue(name)
    assert parse_grammar(render(g)) == g


def test_choice_count_agrees_with_pipe_count(appendix_grammar, cpu_grammar):
    from gevoforecast.grammar import render as render_grammar

    for g in (appendix_grammar, cpu_grammar):
        for line in render_grammar(g).splitlines():
            lhs, _, rhs = line.partition("::=")
            nt = lhs.strip()[1:-1]
            assert g.choice_count(nt) == rhs.count("|") + 1


def test_unknown_nonterminal_choice_count(appendix_grammar):
    with pytest.raises(GrammarError):
        appendix_grammar.choice_count("nope")


def test_reachability(appendix_grammar):
    reach = reachable_nonterminals(appendix_grammar)
    # the numeric rules exist in the listing but are not reachable from <expr>
    assert "expr" in reach and "var" in reach
    assert "num" not in reach and "dig" not in reach
