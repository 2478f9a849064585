"""Likelihood-sorted forward search over belief states.

Preconditions are scored rather than tested: an action is applicable when
the product of its literal probabilities (its *satisfaction*) reaches
``prune_threshold``, and a partial plan's likelihood is the product of the
satisfactions met along the way. Effects are asserted optimistically
(positive literals to 1, negated ones to 0); the executor checks them
against perception after each real step.

The frontier is expanded one depth layer at a time. Each expansion's
successors are filtered and sorted by likelihood, and the merged layer is
sorted again before it is expanded, so the first goal layer yields the most
likely plan among the shortest ones. Beliefs that already appeared in an
earlier layer are skipped; within a layer only the most likely path to a
belief is kept. Ties keep domain declaration order.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ._validation import check_count, check_probability
from .belief import BeliefState
from .pddl import ActionSchema, Atom, Domain, Literal

__all__ = [
    "GroundAction",
    "PlanNode",
    "Plan",
    "PlannerConfig",
    "SearchStats",
    "NoPlanFound",
    "PreconditionBelowThreshold",
    "satisfaction",
    "apply",
    "ground_actions",
    "sort_and_filter",
    "plan",
]


class NoPlanFound(RuntimeError):
    pass


class PreconditionBelowThreshold(ValueError):
    pass


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple[str, ...]
    pre: tuple[Literal, ...]
    eff: tuple[Literal, ...]
    lifted: bool = False

    def __str__(self) -> str:
        if self.lifted:
            return f"{self.name}({', '.join(self.args)})"
        return self.name

    def without_effects(self, atoms: Iterable[Atom]) -> "GroundAction":
        drop = set(atoms)
        return GroundAction(self.name, self.args, self.pre,
                            tuple(l for l in self.eff if l.atom not in drop), self.lifted)


@dataclass(frozen=True)
class PlannerConfig:
    prune_threshold: float = 0.5
    goal_threshold: float = 0.5
    max_depth: int = 12

    def __post_init__(self):
        check_probability(self.prune_threshold, "prune_threshold")
        if self.prune_threshold == 0:
            raise ValueError("prune_threshold must be positive")
        check_probability(self.goal_threshold, "goal_threshold")
        check_count(self.max_depth, "max_depth", minimum=1)


@dataclass(frozen=True)
class PlanNode:
    belief: BeliefState
    op_list: tuple[GroundAction, ...]
    likelihood: float


@dataclass(frozen=True)
class Plan:
    steps: tuple[GroundAction, ...]
    likelihood: float

    @property
    def names(self) -> list[str]:
        return [str(a) for a in self.steps]

    def __len__(self) -> int:
        return len(self.steps)


@dataclass
class SearchStats:
    expanded: list[BeliefState] = field(default_factory=list)
    generated: int = 0


def satisfaction(belief: BeliefState, literals: Iterable[Literal]) -> float:
    """Probability that every literal holds, treating atoms as independent."""
    s = 1.0
    for lit in literals:
        p = belief.prob(lit.atom)
        s *= (1.0 - p) if lit.negated else p
    return s


def _assert_effects(belief: BeliefState, action: GroundAction) -> BeliefState:
    if not action.eff:
        return belief
    return belief.updated({l.atom: 0.0 if l.negated else 1.0 for l in action.eff})


def apply(belief: BeliefState, action: GroundAction, prune_threshold: float = 0.5) -> BeliefState:
    s = satisfaction(belief, action.pre)
    if s < prune_threshold:
        raise PreconditionBelowThreshold(
            f"{action}: precondition satisfaction {s:.4g} is below {prune_threshold:.4g}")
    return _assert_effects(belief, action)


def _substitute(lits: Sequence[Literal], binding: Mapping[str, str]) -> tuple[Literal, ...]:
    return tuple(
        Literal(Atom(l.atom.predicate, tuple(binding.get(a, a) for a in l.atom.args)), l.negated)
        for l in lits
    )


def ground_actions(domain: Domain, objects: Sequence[str] = ()) -> list[GroundAction]:
    """Instantiate every schema; variables range over constants then ``objects``."""
    universe = list(dict.fromkeys(list(domain.constants) + list(objects)))
    out: list[GroundAction] = []
    for schema in domain.actions:
        out.extend(_ground_schema(schema, universe))
    return out


def _ground_schema(schema: ActionSchema, universe: Sequence[str]) -> Iterable[GroundAction]:
    variables = schema.variables
    if not variables:
        yield GroundAction(schema.name, schema.params, schema.pre, schema.eff)
        return
    for values in itertools.product(universe, repeat=len(variables)):
        binding = dict(zip(variables, values))
        args = tuple(binding.get(p, p) for p in schema.params)
        yield GroundAction(schema.name, args, _substitute(schema.pre, binding),
                           _substitute(schema.eff, binding), lifted=True)


def sort_and_filter(candidates: Iterable[tuple[PlanNode, float]], threshold: float) -> list[PlanNode]:
    """Drop successors whose step satisfaction is below ``threshold``; most likely first."""
    kept = [node for node, step in candidates if step >= threshold]
    kept.sort(key=lambda n: n.likelihood, reverse=True)
    return kept


def _pinned_actions(actions: list[GroundAction],
                    pinned: Mapping[str, Iterable[Atom]] | None) -> list[GroundAction]:
    if not pinned:
        return actions
    pins = {k.lower(): set(v) for k, v in pinned.items()}
    return [a.without_effects(pins[a.name.lower()]) if a.name.lower() in pins else a for a in actions]


def plan(domain: Domain, s0: BeliefState, goal: Iterable[Literal],
         cfg: PlannerConfig | None = None, *,
         pinned: Mapping[str, Iterable[Atom]] | None = None,
         actions: Sequence[GroundAction] | None = None,
         stats: SearchStats | None = None) -> Plan:
    """Return the most likely shortest plan from ``s0`` to ``goal``.

    ``pinned`` maps an action name to atoms whose effect that action is known
    not to deliver right now; the search does not assert them. ``actions``
    overrides the grounded action list. Raises :class:`NoPlanFound` when the
    frontier empties or ``cfg.max_depth`` layers produce no goal node.
    """
    cfg = cfg or PlannerConfig()
    goal = tuple(goal)
    ground = _pinned_actions(list(actions) if actions is not None else ground_actions(domain), pinned)

    if satisfaction(s0, goal) >= cfg.goal_threshold:
        return Plan((), 1.0)

    frontier = [PlanNode(s0, (), 1.0)]
    seen = {s0}
    for _depth in range(cfg.max_depth):
        layer: dict[BeliefState, PlanNode] = {}
        for node in frontier:
            if stats is not None:
                stats.expanded.append(node.belief)
            tmp = []
            for a in ground:
                s = satisfaction(node.belief, a.pre)
                if s <= 0.0:
                    continue
                b = _assert_effects(node.belief, a)
                if b in seen:
                    continue
                tmp.append((PlanNode(b, node.op_list + (a,), node.likelihood * s), s))
            if stats is not None:
                stats.generated += len(tmp)
            for child in sort_and_filter(tmp, cfg.prune_threshold):
                best = layer.get(child.belief)
                if best is None or child.likelihood > best.likelihood:
                    layer[child.belief] = child
        if not layer:
            raise NoPlanFound("search queue exhausted")
        frontier = sorted(layer.values(), key=lambda n: n.likelihood, reverse=True)
        for node in frontier:
            if satisfaction(node.belief, goal) >= cfg.goal_threshold:
                return Plan(node.op_list, node.likelihood)
        seen.update(layer)
    raise NoPlanFound(f"no plan within {cfg.max_depth} steps")
