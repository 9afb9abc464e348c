"""Message structuring: which propositions to send, and how often.

Each proposition ``i`` has importance ``v_i``, a transmit time ``t_i`` and a
per-transmission loss probability ``p_i``. Sending it ``x_i`` times is worth
``v_i * f(x_i)`` where ``f`` saturates, so repeating a proposition pays off
less and less. The plan maximises the total worth subject to
``sum(t_i * x_i) <= T``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .errors import DomainError, InvalidProposition

UtilityFunction = Callable[[int], float]


def saturating_utility(x: int) -> float:
    """``f(0) = 0`` and ``f(x) = exp(-1/x)`` for ``x >= 1``."""
    if x <= 0:
        return 0.0
    return math.exp(-1.0 / x)


def step_utility(x: int) -> float:
    """The other shape allowed: one transmission is all that counts."""
    return 1.0 if x >= 1 else 0.0


def exact(value: float) -> Fraction:
    """Decimal-faithful rational for a float, so 0.1 * 3 == 0.3 holds."""
    return Fraction(repr(float(value)))


@dataclass(frozen=True)
class Proposition:
    id: str
    text: str
    value: float
    transmit_time: float
    loss_prob: float = 0.0

    def __post_init__(self):
        if not (self.transmit_time > 0 and math.isfinite(self.transmit_time)):
            raise InvalidProposition(
                f"{self.id}: transmit_time must be positive, got {self.transmit_time}"
            )
        if not 0.0 <= self.loss_prob <= 1.0:
            raise InvalidProposition(
                f"{self.id}: loss_prob must lie in [0, 1], got {self.loss_prob}"
            )
        if not (self.value >= 0 and math.isfinite(self.value)):
            raise InvalidProposition(f"{self.id}: value must be >= 0, got {self.value}")

    @classmethod
    def from_dict(cls, d: Mapping) -> "Proposition":
        try:
            return cls(
                id=str(d["id"]),
                text=str(d.get("text", "")),
                value=float(d["value"]),
                transmit_time=float(d["transmit_time"]),
                loss_prob=float(d.get("loss_prob", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InvalidProposition):
                raise
            raise InvalidProposition(f"bad proposition record {dict(d)!r}: {exc}") from None


@dataclass
class TransmissionPlan:
    counts: dict[str, int]
    used_time: float
    budget: float
    objective: float
    propositions: list[Proposition] = field(default_factory=list, repr=False)

    def success_probabilities(self) -> dict[str, float]:
        return {
            p.id: success_probability(p.loss_prob, self.counts.get(p.id, 0))
            for p in self.propositions
        }

    def to_dict(self) -> dict:
        return {
            "counts": dict(sorted(self.counts.items())),
            "used_time": self.used_time,
            "budget": self.budget,
            "objective": self.objective,
            "success_probability": self.success_probabilities(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def load_propositions(text: str) -> list[Proposition]:
    records = json.loads(text)
    if not isinstance(records, list):
        raise InvalidProposition("proposition document must be a JSON list")
    return [Proposition.from_dict(r) for r in records]


def plan_objective(
    props: Iterable[Proposition], counts: Mapping[str, int], f: UtilityFunction = saturating_utility
) -> float:
    return sum(p.value * f(counts.get(p.id, 0)) for p in props)


def plan_time(props: Iterable[Proposition], counts: Mapping[str, int]) -> Fraction:
    return sum((exact(p.transmit_time) * counts.get(p.id, 0) for p in props), Fraction(0))


def _greedy_fill(
    props: list[Proposition],
    counts: dict[str, int],
    remaining: Fraction,
    f: UtilityFunction,
) -> Fraction:
    times = {p.id: exact(p.transmit_time) for p in props}
    while True:
        best = None
        best_density = -math.inf
        for p in props:  # props are sorted by id, so ">" keeps the lowest id on ties
            if times[p.id] > remaining:
                continue
            x = counts[p.id]
            density = p.value * (f(x + 1) - f(x)) / p.transmit_time
            if density > best_density:
                best, best_density = p, density
        if best is None or best_density <= 0:  # nothing fits, or nothing left to gain
            return remaining
        counts[best.id] += 1
        remaining -= times[best.id]


def plan_messages(
    props: list[Proposition],
    budget: float,
    f: UtilityFunction = saturating_utility,
    safeguard: bool = True,
) -> TransmissionPlan:
    """Choose repetition counts by marginal-density greedy ascent.

    One repetition at a time, the proposition with the largest
    ``v_i * (f(x_i + 1) - f(x_i)) / t_i`` among those that still fit is
    added (ties go to the lexicographically smaller id) until nothing fits
    or no repetition adds any value.

    With ``safeguard`` on, a second greedy run is seeded with the single
    most valuable first transmission and the better plan is returned. For
    concave ``f`` this bounds the result at half the optimum; plain greedy
    alone can fall below that when a cheap proposition crowds out a
    valuable expensive one. Plain greedy wins ties, so instances where it
    is already optimal are unaffected.
    """
    if budget < 0 or not math.isfinite(budget):
        raise DomainError(f"budget must be a finite value >= 0, got {budget}")
    if not props:
        raise DomainError("no propositions to plan")
    ids = [p.id for p in props]
    if len(set(ids)) != len(ids):
        raise InvalidProposition(f"duplicate proposition ids in {ids}")
    props = sorted(props, key=lambda p: p.id)
    total = exact(budget)

    counts = {p.id: 0 for p in props}
    _greedy_fill(props, counts, total, f)
    best_counts = counts
    best_obj = plan_objective(props, counts, f)

    if safeguard:
        fitting = [p for p in props if exact(p.transmit_time) <= total]
        if fitting:
            # max() keeps the first (lowest id) among equal values
            seed = max(fitting, key=lambda p: p.value * (f(1) - f(0)))
            seeded = {p.id: 0 for p in props}
            seeded[seed.id] = 1
            _greedy_fill(props, seeded, total - exact(seed.transmit_time), f)
            seeded_obj = plan_objective(props, seeded, f)
            if seeded_obj > best_obj:
                best_counts, best_obj = seeded, seeded_obj

    return TransmissionPlan(
        counts=best_counts,
        used_time=float(plan_time(props, best_counts)),
        budget=float(budget),
        objective=best_obj,
        propositions=props,
    )


def success_probability(p: float, x: int) -> float:
    """Chance that at least one of ``x`` independent sends gets through."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"loss probability must lie in [0, 1], got {p}")
    if x < 0 or int(x) != x:
        raise DomainError(f"repetition count must be a non-negative integer, got {x}")
    return 1.0 - p ** int(x)


def transmission_window(distance: float, speed: float, density: float) -> float:
    """Seconds available for the message before the next interruption.

    ``density`` is the fraction of the carrier given over to the message
    (e.g. 0.1 for one part message to ten parts cover).
    """
    if speed <= 0:
        raise DomainError(f"speed must be positive, got {speed}")
    if not 0 < density <= 1:
        raise DomainError(f"density must lie in (0, 1], got {density}")
    if distance < 0:
        raise DomainError(f"distance must be >= 0, got {distance}")
    return density * distance / speed
