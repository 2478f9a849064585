"""Reader and writer for the small PDDL dialect used by the bolt domain.

Two surface syntaxes are accepted side by side:

* standard s-expressions, ``(above_bolt sensor)`` with ``:parameters``,
  ``:precondition``, ``:effect``, ``:init`` and ``:goal``;
* the compact listing style, ``above_bolt(sensor)`` with ``:param``,
  ``:pre``, ``:eff``, ``:Init`` and ``:Goal``, where ``and(x)(y)`` applies
  ``and`` to the parenthesised groups that follow it.

Keywords and predicate names are case-insensitive (predicates and constants
are folded to lower case; action names keep their spelling). ``;`` starts a
comment. The ``(:neural p q ...)`` block marks predicates whose values come
from perception rather than from action effects.

In strict mode every list must be closed. ``lenient=True`` closes lists that
are still open when the next field keyword, the next top-level block or the
end of input is reached, and accepts a bare sequence of blocks without the
``(define ...)`` wrapper.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple

__all__ = [
    "Atom",
    "Literal",
    "Predicate",
    "ActionSchema",
    "Domain",
    "Problem",
    "PDDLError",
    "PDDLSyntaxError",
    "ArityMismatch",
    "DuplicateAction",
    "UnknownPredicate",
    "UnknownSymbol",
    "ContradictoryLiterals",
    "InvalidProblem",
    "parse_domain",
    "parse_problem",
    "format_domain",
    "format_problem",
    "format_literal",
]

SYMBOLIC = "symbolic"
NEURAL = "neural"


class PDDLError(ValueError):
    """Base class for every domain/problem reading error."""


class PDDLSyntaxError(PDDLError):
    def __init__(self, message: str, line: int, col: int, expected: str | None = None):
        self.line = line
        self.col = col
        self.expected = expected
        where = f"line {line}, column {col}"
        if expected:
            message = f"{message} (expected {expected})"
        super().__init__(f"{where}: {message}")


class ArityMismatch(PDDLError):
    pass


class DuplicateAction(PDDLError):
    pass


class UnknownPredicate(PDDLError):
    pass


class UnknownSymbol(PDDLError):
    pass


class ContradictoryLiterals(PDDLError):
    pass


class InvalidProblem(PDDLError):
    pass


class Atom(NamedTuple):
    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.predicate}({', '.join(self.args)})"


class Literal(NamedTuple):
    atom: Atom
    negated: bool = False

    def __str__(self) -> str:
        return f"not {self.atom}" if self.negated else str(self.atom)

    def negate(self) -> "Literal":
        return Literal(self.atom, not self.negated)


@dataclass(frozen=True)
class Predicate:
    name: str
    arity: int
    kind: str = SYMBOLIC


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[str, ...] = ()
    pre: tuple[Literal, ...] = ()
    eff: tuple[Literal, ...] = ()

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(p for p in self.params if p.startswith("?"))


@dataclass(frozen=True)
class Domain:
    name: str
    actions: tuple[ActionSchema, ...] = ()
    predicates: tuple[Predicate, ...] = ()
    constants: tuple[str, ...] = ()

    def predicate(self, name: str) -> Predicate:
        for p in self.predicates:
            if p.name == name.lower():
                return p
        raise UnknownPredicate(f"predicate {name!r} is not declared in domain {self.name!r}")

    def action(self, name: str) -> ActionSchema:
        for a in self.actions:
            if a.name.lower() == name.lower():
                return a
        raise KeyError(name)

    @property
    def neural_predicates(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.predicates if p.kind == NEURAL)

    def is_neural(self, atom: Atom) -> bool:
        return any(p.name == atom.predicate and p.kind == NEURAL for p in self.predicates)


@dataclass(frozen=True)
class Problem:
    init: tuple[Literal, ...]
    goal: tuple[Literal, ...]
    name: str = "task"
    domain_name: str | None = None


# --------------------------------------------------------------------------
# tokens

class _Tok(NamedTuple):
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")

_FIELD_ALIASES = {
    ":param": ":parameters",
    ":params": ":parameters",
    ":parameters": ":parameters",
    ":pre": ":precondition",
    ":precondition": ":precondition",
    ":eff": ":effect",
    ":effect": ":effect",
}
_SECTIONS = {
    ":action", ":init", ":goal", ":predicates", ":constants", ":neural",
    ":requirements", ":domain", ":objects",
}


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, line_start = 1, 0
    for m in _TOKEN_RE.finditer(text):
        s = m.group()
        if not s[0].isspace() and s[0] != ";":
            toks.append(_Tok(s, line, m.start() - line_start + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = m.start() + s.rindex("\n") + 1
    return toks


class _Reader:
    """Cursor over the token list with the implicit-close rules."""

    def __init__(self, text: str, lenient: bool):
        self.toks = _tokenize(text)
        self.i = 0
        self.lenient = lenient
        end_line = text.count("\n") + 1
        self._eof = _Tok("<end of input>", end_line, 1)

    def peek(self, k: int = 0) -> _Tok | None:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def next(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input")
        self.i += 1
        return tok

    def error(self, message: str, expected: str | None = None) -> PDDLSyntaxError:
        tok = self.peek() or self._eof
        return PDDLSyntaxError(f"{message} at {tok.text!r}", tok.line, tok.col, expected)

    def at_block_start(self) -> bool:
        a, b = self.peek(), self.peek(1)
        return (
            a is not None and b is not None and a.text == "("
            and b.text.lower() in _SECTIONS
        )

    def at_boundary(self) -> bool:
        """True where a lenient reader may close lists that are still open."""
        tok = self.peek()
        if tok is None:
            return True
        if tok.text.lower() in _FIELD_ALIASES:
            return True
        return self.at_block_start()

    def expect_open(self) -> _Tok:
        tok = self.peek()
        if tok is None or tok.text != "(":
            raise self.error("missing opening parenthesis", "'('")
        return self.next()

    def close(self) -> None:
        tok = self.peek()
        if tok is not None and tok.text == ")":
            self.i += 1
            return
        if self.lenient and self.at_boundary():
            return
        raise self.error("unbalanced list", "')'")

    def name(self, what: str = "a name") -> _Tok:
        tok = self.peek()
        if tok is None or tok.text in "()" or tok.text.startswith(":"):
            raise self.error(f"expected {what}", what)
        return self.next()


# --------------------------------------------------------------------------
# formulas

def _name_list(r: _Reader) -> tuple[str, ...]:
    names = []
    while (tok := r.peek()) is not None and tok.text not in "()" and not tok.text.startswith(":"):
        names.append(r.next().text)
    return tuple(names)


def _atom_body(r: _Reader, head: _Tok) -> Atom:
    # call style ``name(a b)`` or standard ``name a b`` (the open paren of the
    # standard form has already been consumed by the caller)
    tok = r.peek()
    if tok is not None and tok.text == "(":
        r.next()
        args = _name_list(r)
        r.close()
    else:
        args = _name_list(r)
    return Atom(head.text.lower(), tuple(a if a.startswith("?") else a.lower() for a in args))


def _formula(r: _Reader) -> list[Literal]:
    """Read one formula; conjunctions are flattened into a literal list."""
    tok = r.peek()
    if tok is None or tok.text == ")" or tok.text.startswith(":"):
        raise r.error("expected a formula", "formula")
    if tok.text != "(":
        head = r.next()
        if head.text.lower() in ("and", "not"):
            return _connective(r, head)
        return [Literal(_atom_body_bare(r, head))]
    r.next()
    inner = r.peek()
    if inner is None:
        raise r.error("unexpected end of input", "formula")
    if inner.text == ")":
        r.next()
        return []
    if inner.text == "(":
        lits = _formula(r)
        r.close()
        return lits
    head = r.name("a predicate or connective")
    if head.text.lower() in ("and", "not"):
        lits = _connective(r, head)
    else:
        lits = [Literal(_atom_body(r, head))]
    r.close()
    return lits


def _atom_body_bare(r: _Reader, head: _Tok) -> Atom:
    # outside parentheses only the call style makes sense: ``have(coarse_pose)``
    tok = r.peek()
    if tok is not None and tok.text == "(":
        r.next()
        args = _name_list(r)
        r.close()
        return Atom(head.text.lower(), tuple(a if a.startswith("?") else a.lower() for a in args))
    return Atom(head.text.lower(), ())


def _connective(r: _Reader, head: _Tok) -> list[Literal]:
    if head.text.lower() == "and":
        lits: list[Literal] = []
        while (tok := r.peek()) is not None and tok.text != ")" and not r.at_boundary():
            lits.extend(_formula(r))
        return lits
    sub = _formula(r)
    if len(sub) != 1 or sub[0].negated:
        raise PDDLSyntaxError("'not' applies to a single atom", head.line, head.col, "atom")
    return [sub[0].negate()]


def _dedupe(lits: Iterable[Literal]) -> tuple[Literal, ...]:
    return tuple(dict.fromkeys(lits))


# --------------------------------------------------------------------------
# blocks

@dataclass
class _RawAction:
    name: str
    params: tuple[str, ...]
    pre: tuple[Literal, ...]
    eff: tuple[Literal, ...]
    line: int
    col: int


@dataclass
class _RawFile:
    kind: str | None = None
    name: str | None = None
    domain_ref: str | None = None
    constants: list[str] = field(default_factory=list)
    declared: list[tuple[str, int]] = field(default_factory=list)
    neural: list[_Tok] = field(default_factory=list)
    actions: list[_RawAction] = field(default_factory=list)
    init: list[Literal] | None = None
    goal: list[Literal] | None = None


def _read_action(r: _Reader, raw: _RawFile) -> None:
    name_tok = r.name("an action name")
    params: tuple[str, ...] = ()
    pre: list[Literal] = []
    eff: list[Literal] = []
    while True:
        tok = r.peek()
        if tok is None or tok.text == ")" or r.at_block_start():
            break
        key = tok.text.lower()
        if key not in _FIELD_ALIASES:
            raise r.error("unknown action field", ":parameters, :precondition or :effect")
        r.next()
        canon = _FIELD_ALIASES[key]
        if canon == ":parameters":
            r.expect_open()
            params = tuple(a if a.startswith("?") else a.lower() for a in _name_list(r))
            r.close()
        elif canon == ":precondition":
            pre = _formula(r)
        else:
            eff = _formula(r)
    r.close()
    raw.actions.append(_RawAction(name_tok.text, params, _dedupe(pre), _dedupe(eff), name_tok.line, name_tok.col))


def _read_section(r: _Reader, raw: _RawFile) -> None:
    r.expect_open()
    key_tok = r.next()
    key = key_tok.text.lower()
    if key == ":action":
        _read_action(r, raw)
        return
    if key == ":requirements":
        _name_list(r)
    elif key == ":constants" or key == ":objects":
        raw.constants.extend(n.lower() for n in _name_list(r) if n != "-")
    elif key == ":neural":
        while (tok := r.peek()) is not None and tok.text not in "()" and not tok.text.startswith(":"):
            raw.neural.append(r.next())
    elif key == ":predicates":
        while (tok := r.peek()) is not None and tok.text == "(":
            r.next()
            head = r.name("a predicate name")
            atom = _atom_body(r, head)
            r.close()
            raw.declared.append((atom.predicate, len(atom.args)))
    elif key == ":domain":
        raw.domain_ref = r.name("a domain name").text
    elif key == ":init":
        lits: list[Literal] = []
        while (tok := r.peek()) is not None and tok.text != ")" and not r.at_boundary():
            lits.extend(_formula(r))
        raw.init = (raw.init or []) + lits
    elif key == ":goal":
        tok = r.peek()
        if tok is None or tok.text == ")" or r.at_boundary():
            raw.goal = []
        else:
            raw.goal = _formula(r)
    else:
        raise PDDLSyntaxError(f"unknown section {key_tok.text!r}", key_tok.line, key_tok.col)
    r.close()


def _read_file(text: str, lenient: bool) -> _RawFile:
    r = _Reader(text, lenient)
    raw = _RawFile()
    first, second = r.peek(), r.peek(1)
    if first is None:
        raise r.error("empty input", "'(define'")
    if first.text == "(" and second is not None and second.text.lower() == "define":
        r.next()
        r.next()
        r.expect_open()
        kind_tok = r.name("'domain' or 'problem'")
        raw.kind = kind_tok.text.lower()
        if raw.kind not in ("domain", "problem"):
            raise PDDLSyntaxError("expected 'domain' or 'problem'", kind_tok.line, kind_tok.col)
        raw.name = r.name("a name").text
        r.close()
        while (tok := r.peek()) is not None and tok.text != ")":
            _read_section(r, raw)
        r.close()
    elif lenient:
        while r.peek() is not None:
            if not r.at_block_start():
                raise r.error("expected a top-level block", "'(:'")
            _read_section(r, raw)
    else:
        raise r.error("expected '(define'", "'(define'")
    if r.peek() is not None:
        raise r.error("trailing input after the definition")
    return raw


# --------------------------------------------------------------------------
# validation / assembly

def _all_literals(actions: Iterable[_RawAction]) -> Iterator[Literal]:
    for a in actions:
        yield from a.pre
        yield from a.eff


def _pad_bare_atoms(actions: list[_RawAction]) -> list[_RawAction]:
    """Give argument-less uses of a predicate the arguments its other uses share."""
    uses: dict[str, set[tuple[str, ...]]] = {}
    for lit in _all_literals(actions):
        uses.setdefault(lit.atom.predicate, set()).add(lit.atom.args)
    fill = {}
    for pred, arg_sets in uses.items():
        nonempty = arg_sets - {()}
        if () in arg_sets and len(nonempty) == 1:
            fill[pred] = next(iter(nonempty))

    def fix(lits: tuple[Literal, ...]) -> tuple[Literal, ...]:
        return _dedupe(
            Literal(Atom(l.atom.predicate, fill[l.atom.predicate]), l.negated)
            if not l.atom.args and l.atom.predicate in fill else l
            for l in lits
        )

    return [_RawAction(a.name, a.params, fix(a.pre), fix(a.eff), a.line, a.col) for a in actions]


def _check_consistent(lits: tuple[Literal, ...], what: str) -> None:
    s = set(lits)
    for lit in lits:
        if lit.negate() in s:
            raise ContradictoryLiterals(f"{what} contains both {lit.atom} and its negation")


def _build_domain(raw: _RawFile, lenient: bool) -> Domain:
    actions = _pad_bare_atoms(raw.actions) if lenient else raw.actions

    arity: dict[str, int] = {}
    order: list[str] = []

    def note(name: str, n: int, where: str) -> None:
        if name in arity:
            if arity[name] != n:
                raise ArityMismatch(f"{name} used with {n} argument(s) in {where}, declared with {arity[name]}")
        else:
            arity[name] = n
            order.append(name)

    for name, n in raw.declared:
        if name in arity:
            raise PDDLError(f"predicate {name!r} declared twice")
        note(name, n, "(:predicates)")

    constants = list(dict.fromkeys(raw.constants))
    seen_actions: set[str] = set()
    schemas = []
    for a in actions:
        if a.name.lower() in seen_actions:
            raise DuplicateAction(f"action {a.name!r} defined more than once (line {a.line})")
        seen_actions.add(a.name.lower())
        for p in a.params:
            if not p.startswith("?") and p not in constants:
                constants.append(p)
        for lit in itertools.chain(a.pre, a.eff):
            note(lit.atom.predicate, len(lit.atom.args), f"action {a.name}")
        _check_consistent(a.pre, f"precondition of {a.name}")
        _check_consistent(a.eff, f"effect of {a.name}")
        schemas.append(ActionSchema(a.name, a.params, a.pre, a.eff))

    for s in schemas:
        for lit in itertools.chain(s.pre, s.eff):
            for arg in lit.atom.args:
                if arg.startswith("?"):
                    if arg not in s.params:
                        raise UnknownSymbol(f"variable {arg} in {s.name} is not a parameter")
                elif arg not in constants:
                    raise UnknownSymbol(f"{arg!r} in {s.name} is neither a parameter nor a constant")

    neural: set[str] = set()
    for tok in raw.neural:
        name = tok.text.lower()
        if name in neural:
            raise PDDLError(f"predicate {name!r} marked neural twice (line {tok.line})")
        if name not in arity:
            raise UnknownPredicate(f"neural predicate {name!r} is never declared or used (line {tok.line})")
        neural.add(name)

    predicates = tuple(Predicate(n, arity[n], NEURAL if n in neural else SYMBOLIC) for n in order)
    return Domain(
        name=(raw.name or "listing").lower(),
        actions=tuple(schemas),
        predicates=predicates,
        constants=tuple(constants),
    )


def parse_domain(text: str, *, lenient: bool = False) -> Domain:
    """Parse a domain definition.

    ``:init``/``:goal`` blocks are skipped when the input is a bare listing
    (lenient mode), so the same text can be handed to :func:`parse_problem`.
    """
    raw = _read_file(text, lenient)
    if raw.kind == "problem":
        raise PDDLError("expected a domain definition, found a problem")
    if raw.kind == "domain" and (raw.init is not None or raw.goal is not None):
        raise PDDLError("a domain definition cannot contain :init or :goal")
    return _build_domain(raw, lenient)


def parse_problem(text: str, domain: Domain, *, lenient: bool = False) -> Problem:
    """Parse initial state and goal, resolving every atom against ``domain``."""
    raw = _read_file(text, lenient)
    if raw.kind == "domain":
        raise PDDLError("expected a problem definition, found a domain")
    if raw.goal is None:
        raise InvalidProblem("problem has no :goal")
    init = _dedupe(raw.init or [])
    goal = _dedupe(raw.goal)
    if not goal:
        raise InvalidProblem("goal must contain at least one literal")
    _check_consistent(init, "initial state")
    known_constants = set(domain.constants) | set(raw.constants)
    for lit in itertools.chain(init, goal):
        pred = domain.predicate(lit.atom.predicate)
        if pred.arity != len(lit.atom.args):
            if lenient and not lit.atom.args:
                continue
            raise ArityMismatch(f"{lit.atom} does not match arity {pred.arity} of {pred.name}")
        for arg in lit.atom.args:
            if arg not in known_constants:
                raise UnknownSymbol(f"{arg!r} in {lit.atom} is not a known object")
    return Problem(init=init, goal=goal, name=(raw.name or "task").lower(), domain_name=raw.domain_ref)


# --------------------------------------------------------------------------
# writer

def _fmt_atom(atom: Atom) -> str:
    return "(" + " ".join((atom.predicate,) + atom.args) + ")"


def format_literal(lit: Literal) -> str:
    return f"(not {_fmt_atom(lit.atom)})" if lit.negated else _fmt_atom(lit.atom)


def _fmt_conj(lits: tuple[Literal, ...]) -> str:
    if len(lits) == 1:
        return format_literal(lits[0])
    return "(and" + "".join(" " + format_literal(l) for l in lits) + ")"


def format_domain(domain: Domain) -> str:
    """Canonical standard-keyword text; ``parse_domain`` reads it back unchanged."""
    body: list[str] = []
    if domain.constants:
        body.append("  (:constants " + " ".join(domain.constants) + ")")
    if domain.predicates:
        decls = [
            "    (" + " ".join([p.name] + [f"?a{i + 1}" for i in range(p.arity)]) + ")"
            for p in domain.predicates
        ]
        body.append("  (:predicates\n" + "\n".join(decls) + ")")
    if domain.neural_predicates:
        body.append("  (:neural " + " ".join(domain.neural_predicates) + ")")
    for a in domain.actions:
        body.append(
            f"  (:action {a.name}\n"
            f"    :parameters ({' '.join(a.params)})\n"
            f"    :precondition {_fmt_conj(a.pre)}\n"
            f"    :effect {_fmt_conj(a.eff)})"
        )
    head = f"(define (domain {domain.name})"
    if not body:
        return head + ")\n"
    return head + "\n" + "\n".join(body) + ")\n"


def format_problem(problem: Problem) -> str:
    lines = [f"(define (problem {problem.name})"]
    if problem.domain_name:
        lines.append(f"  (:domain {problem.domain_name})")
    lines.append("  (:init" + "".join(" " + format_literal(l) for l in problem.init) + ")")
    lines.append(f"  (:goal {_fmt_conj(problem.goal)}))")
    return "\n".join(lines) + "\n"
