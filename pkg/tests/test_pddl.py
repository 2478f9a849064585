import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuzz import random_domain
from nesytamp.assets import DOMAIN_FILE, PROBLEM_FILE, read_asset
from nesytamp.pddl import (
    ArityMismatch,
    Atom,
    ContradictoryLiterals,
    DuplicateAction,
    InvalidProblem,
    Literal,
    PDDLError,
    PDDLSyntaxError,
    UnknownPredicate,
    UnknownSymbol,
    format_domain,
    format_problem,
    parse_domain,
    parse_problem,
)

LISTING = (Path(__file__).parent / "data" / "shorthand_listing.pddl").read_text()
SENSOR = ("sensor",)


@pytest.fixture(scope="module")
def bolt():
    return parse_domain(read_asset(DOMAIN_FILE))


def test_shipped_domain_shape(bolt):
    assert [a.name for a in bolt.actions] == ["Approach", "Mate", "Push", "Insert", "Disassemble"]
    assert bolt.neural_predicates == ("target_aim", "target_clear")
    assert bolt.constants == ("coarse_pose", "sensor")
    mate = bolt.action("mate")
    assert mate.pre == (Literal(Atom("above_bolt", SENSOR)),
                        Literal(Atom("target_aim", SENSOR), negated=True))
    assert mate.eff == (Literal(Atom("target_aim", SENSOR)),)


def test_shipped_problem(bolt):
    prob = parse_problem(read_asset(PROBLEM_FILE), bolt)
    assert prob.init == (Literal(Atom("have", ("coarse_pose",))),)
    assert prob.goal == (Literal(Atom("disassembled", SENSOR)),)
    assert parse_problem(format_problem(prob), bolt) == prob


def test_shipped_domain_round_trip(bolt):
    text = format_domain(bolt)
    again = parse_domain(text)
    assert again == bolt
    assert format_domain(again) == text


def test_listing_lenient_gives_five_actions(bolt):
    dom = parse_domain(LISTING, lenient=True)
    assert [a.name for a in dom.actions] == ["Approach", "Mate", "Push", "Insert", "Disassemble"]
    # the bare above_bolt in Approach is read as above_bolt(sensor)
    assert Literal(Atom("above_bolt", SENSOR)) in dom.action("Approach").eff
    for a in dom.actions:
        assert a.pre == bolt.action(a.name).pre
        assert a.eff == bolt.action(a.name).eff


def test_listing_problem_lenient():
    dom = parse_domain(LISTING, lenient=True)
    prob = parse_problem(LISTING, dom, lenient=True)
    assert prob.goal == (Literal(Atom("disassembled", SENSOR)),)


def test_listing_strict_rejected():
    with pytest.raises(PDDLSyntaxError) as err:
        parse_domain(LISTING)
    assert err.value.line == 1


def test_call_notation_equals_sexpr():
    a = parse_domain("(define (domain d) (:action go :parameters (?x) "
                     ":precondition (and (p ?x) (not (q ?x))) :effect (q ?x)))")
    b = parse_domain("(define (domain d) (:action go :param (?x) "
                     ":pre and(p(?x))(not(q(?x))) :eff q(?x)))")
    assert a == b


@pytest.mark.parametrize("text, exc", [
    ("(define (domain d) (:action a :parameters () :precondition (p x) :effect (p x y)))", ArityMismatch),
    ("(define (domain d) (:action a :effect (p)) (:action A :effect (p)))", DuplicateAction),
    ("(define (domain d) (:action a :parameters (?x) :effect (and (p ?x) (not (p ?x)))))",
     ContradictoryLiterals),
    ("(define (domain d) (:action a :effect (p ?y)))", UnknownSymbol),
    ("(define (domain d) (:neural q) (:action a :effect (p)))", UnknownPredicate),
    ("(define (domain d) (:action a :effect (p))", PDDLSyntaxError),
    ("(define (domain d) (:action a :effect (p))))", PDDLSyntaxError),
    ("(define (domain d) (:action :effect (p)))", PDDLSyntaxError),
])
def test_domain_errors(text, exc):
    with pytest.raises(exc):
        parse_domain(text)


def test_errors_are_value_errors():
    assert issubclass(PDDLSyntaxError, PDDLError)
    assert issubclass(PDDLError, ValueError)


def test_syntax_error_position():
    with pytest.raises(PDDLSyntaxError) as err:
        parse_domain("(define (domain d)\n  (:action a :effect (p))))")
    assert err.value.line == 2


def test_lenient_closes_unbalanced_domain():
    dom = parse_domain("(define (domain d) (:action a :effect (p)", lenient=True)
    assert dom.action("a").eff == (Literal(Atom("p")),)


def test_problem_errors(bolt):
    with pytest.raises(InvalidProblem):
        parse_problem("(define (problem t) (:init (have coarse_pose)))", bolt)
    with pytest.raises(UnknownPredicate):
        parse_problem("(define (problem t) (:init) (:goal (flying sensor)))", bolt)
    with pytest.raises(UnknownSymbol):
        parse_problem("(define (problem t) (:init) (:goal (disassembled wrench)))", bolt)
    with pytest.raises(ArityMismatch):
        parse_problem("(define (problem t) (:init) (:goal (disassembled sensor sensor)))", bolt)
    with pytest.raises(PDDLError):
        parse_problem(read_asset(DOMAIN_FILE), bolt)


def test_empty_domain_round_trip():
    dom = parse_domain("(define (domain empty))")
    assert dom.actions == () and dom.predicates == ()
    assert parse_domain(format_domain(dom)) == dom


def test_comments_ignored():
    a = parse_domain("; header\n(define (domain d) ; trailing\n (:action a :effect (p)))")
    assert a.action("a").eff == (Literal(Atom("p")),)


@settings(max_examples=200, deadline=None)
@given(st.randoms(use_true_random=False))
def test_fuzz_round_trip(rnd):
    dom = random_domain(random.Random(rnd.random()))
    text = format_domain(dom)
    again = parse_domain(text)
    assert again == dom
    assert format_domain(again) == text
