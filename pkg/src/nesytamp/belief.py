"""Probabilistic state over ground atoms and the perception grounders.

A :class:`BeliefState` maps ground atoms to the probability that they hold;
anything not listed is false (probability 0). Binary predicates store only
``p_true``.

The two perception predicates are produced by logistic classifiers over a
scalar geometric observation, followed by a label-swap channel that flips the
output distribution with a fixed probability to emulate classifier mistakes:

* ``target_aim``:   ``p = expit((e0 - e) / k)`` for alignment error ``e``;
* ``target_clear``: ``p = expit((d - d0) / k)`` for obstacle clearance ``d``,
  and ``p = 1 - clear_error_rate`` when no obstacle exists (``d = inf``).

:class:`TargetAimGrounder` and :class:`TargetClearGrounder` expose the same
model as scikit-learn classifiers (``predict_proba`` columns ordered as
``classes_ == [True, False]``) for batch scoring and calibration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_nonnegative, check_positive, check_probability
from .pddl import Atom, Literal

__all__ = [
    "BeliefState",
    "GrounderConfig",
    "GrounderOutput",
    "TargetAimGrounder",
    "TargetClearGrounder",
    "TARGET_AIM",
    "TARGET_CLEAR",
    "as_generator",
    "assert_literal",
    "ground_target_aim",
    "ground_target_clear",
    "refresh",
]

TARGET_AIM = Atom("target_aim", ("sensor",))
TARGET_CLEAR = Atom("target_clear", ("sensor",))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


class BeliefState:
    """Immutable map from ground atoms to probabilities, closed-world."""

    __slots__ = ("_probs", "_hash")

    def __init__(self, probs: Mapping[Atom, float] | Iterable[tuple[Atom, float]] | None = None):
        items = probs.items() if isinstance(probs, Mapping) else (probs or ())
        clean: dict[Atom, float] = {}
        for atom, p in items:
            p = float(p)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability of {atom} must lie in [0, 1], got {p}")
            atom = Atom(atom[0], tuple(atom[1]))
            if p == 0.0:
                clean.pop(atom, None)
            else:
                clean[atom] = p
        self._probs = clean
        self._hash: int | None = None

    @classmethod
    def from_literals(cls, literals: Iterable[Literal]) -> "BeliefState":
        return cls((lit.atom, 0.0 if lit.negated else 1.0) for lit in literals)

    def prob(self, atom: Atom) -> float:
        return self._probs.get(atom, 0.0)

    __getitem__ = prob

    def distribution(self, atom: Atom) -> tuple[float, float]:
        p = self.prob(atom)
        return p, 1.0 - p

    def holds(self, atom: Atom) -> bool:
        """Argmax of the binary distribution (ties count as true)."""
        return self.prob(atom) >= 0.5

    def updated(self, changes: Mapping[Atom, float]) -> "BeliefState":
        merged = dict(self._probs)
        merged.update(changes)
        return BeliefState(merged)

    def signature(self) -> frozenset[Atom]:
        return frozenset(a for a in self._probs if self.holds(a))

    def items(self):
        return self._probs.items()

    def __iter__(self) -> Iterator[Atom]:
        return iter(self._probs)

    def __len__(self) -> int:
        return len(self._probs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BeliefState):
            return NotImplemented
        return self._probs == other._probs

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._probs.items()))
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"{a}: {p:.4g}" for a, p in self._probs.items())
        return f"BeliefState({{{body}}})"


def assert_literal(belief: BeliefState, literal: Literal) -> BeliefState:
    return belief.updated({literal.atom: 0.0 if literal.negated else 1.0})


@dataclass(frozen=True)
class GrounderConfig:
    aim_threshold_e0: float = 2.0
    aim_steepness_k: float = 0.5
    clear_threshold_d0: float = 12.0
    clear_steepness_k: float = 2.0
    aim_error_rate: float = 0.02
    clear_error_rate: float = 0.04
    rng_seed: int = 0

    def __post_init__(self):
        check_nonnegative(self.aim_threshold_e0, "aim_threshold_e0")
        check_nonnegative(self.clear_threshold_d0, "clear_threshold_d0")
        check_positive(self.aim_steepness_k, "aim_steepness_k")
        check_positive(self.clear_steepness_k, "clear_steepness_k")
        check_probability(self.aim_error_rate, "aim_error_rate", upper=0.5, closed=False)
        check_probability(self.clear_error_rate, "clear_error_rate", upper=0.5, closed=False)


@dataclass(frozen=True)
class GrounderOutput:
    atom: Atom
    distribution: tuple[float, float]

    @property
    def p_true(self) -> float:
        return self.distribution[0]

    @property
    def label(self) -> bool:
        return self.distribution[0] >= self.distribution[1]


def _binary(atom: Atom, p: float) -> GrounderOutput:
    return GrounderOutput(atom, (p, 1.0 - p))


def ground_target_aim(e: float, cfg: GrounderConfig, rng: np.random.Generator,
                      atom: Atom = TARGET_AIM) -> GrounderOutput:
    if not e >= 0:
        raise ValueError(f"alignment error must be >= 0, got {e}")
    p = float(expit((cfg.aim_threshold_e0 - e) / cfg.aim_steepness_k))
    if rng.random() < cfg.aim_error_rate:
        p = 1.0 - p
    return _binary(atom, p)


def ground_target_clear(d: float, cfg: GrounderConfig, rng: np.random.Generator,
                        atom: Atom = TARGET_CLEAR) -> GrounderOutput:
    if not d >= 0:
        raise ValueError(f"clearance must be >= 0 or inf, got {d}")
    if math.isinf(d):
        return _binary(atom, 1.0 - cfg.clear_error_rate)
    p = float(expit((d - cfg.clear_threshold_d0) / cfg.clear_steepness_k))
    if rng.random() < cfg.clear_error_rate:
        p = 1.0 - p
    return _binary(atom, p)


def refresh(belief: BeliefState, world, cfg: GrounderConfig, rng: np.random.Generator,
            sensor: str = "sensor") -> BeliefState:
    """Overwrite the perception atoms from a noisy observation of ``world``."""
    from .simworld import observe

    e, d = observe(world, rng)
    aim = ground_target_aim(e, cfg, rng, Atom("target_aim", (sensor,)))
    clear = ground_target_clear(d, cfg, rng, Atom("target_clear", (sensor,)))
    return belief.updated({aim.atom: aim.p_true, clear.atom: clear.p_true})


class _LogisticGrounder(ClassifierMixin, BaseEstimator):
    _sign = 1.0

    def __init__(self, threshold=0.0, steepness=1.0, error_rate=0.0, random_state=None):
        self.threshold = threshold
        self.steepness = steepness
        self.error_rate = error_rate
        self.random_state = random_state

    def _validate(self, X, reset: bool):
        X = check_array(X, ensure_all_finite=False, dtype=np.float64)
        if np.isnan(X).any():
            raise ValueError("observations contain NaN")
        if (X < 0).any():
            raise ValueError("observations must be non-negative")
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} feature(s), got {X.shape[1]}")
        if X.shape[1] != 1:
            raise ValueError("grounders take a single scalar observation per row")
        return X[:, 0]

    def fit(self, X, y=None):
        """Validate the observation layout; the logistic model has no free state."""
        check_positive(self.steepness, "steepness")
        check_probability(self.error_rate, "error_rate", upper=0.5, closed=False)
        self._validate(X, reset=True)
        if y is not None:
            labels = np.unique(np.asarray(y))
            if not set(labels.tolist()) <= {True, False}:
                raise ValueError("labels must be boolean")
        self.classes_ = np.array([True, False])
        return self

    def decision_function(self, X):
        check_is_fitted(self)
        x = self._validate(X, reset=False)
        with np.errstate(invalid="ignore"):
            return self._sign * (x - self.threshold) / self.steepness

    def predict_proba(self, X, rng=None):
        """Rows are ``[p_true, p_false]``; each finite row may be swapped."""
        z = self.decision_function(X)
        p = expit(z)
        finite = np.isfinite(z)
        if not finite.all():
            p[~finite] = self._infinite_value(z[~finite])
        gen = as_generator(self.random_state if rng is None else rng)
        swap = np.zeros(len(p), dtype=bool)
        swap[finite] = gen.random(int(finite.sum())) < self.error_rate
        p = np.where(swap, 1.0 - p, p)
        return np.column_stack([p, 1.0 - p])

    def _infinite_value(self, z):
        return expit(z)

    def predict(self, X, rng=None):
        proba = self.predict_proba(X, rng=rng)
        return self.classes_[np.argmax(proba, axis=1)]


class TargetAimGrounder(_LogisticGrounder):
    """``target_aim`` classifier over the alignment error in millimetres."""

    _sign = -1.0

    def __init__(self, threshold=2.0, steepness=0.5, error_rate=0.02, random_state=None):
        super().__init__(threshold, steepness, error_rate, random_state)

    @classmethod
    def from_config(cls, cfg: GrounderConfig, random_state=None) -> "TargetAimGrounder":
        return cls(cfg.aim_threshold_e0, cfg.aim_steepness_k, cfg.aim_error_rate,
                   cfg.rng_seed if random_state is None else random_state)


class TargetClearGrounder(_LogisticGrounder):
    """``target_clear`` classifier over the obstacle clearance in millimetres."""

    def __init__(self, threshold=12.0, steepness=2.0, error_rate=0.04, random_state=None):
        super().__init__(threshold, steepness, error_rate, random_state)

    def _infinite_value(self, z):
        # no obstacle at all: confident but never certain
        return np.where(z > 0, 1.0 - self.error_rate, 0.0)

    @classmethod
    def from_config(cls, cfg: GrounderConfig, random_state=None) -> "TargetClearGrounder":
        return cls(cfg.clear_threshold_d0, cfg.clear_steepness_k, cfg.clear_error_rate,
                   cfg.rng_seed if random_state is None else random_state)
