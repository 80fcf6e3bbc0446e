"""Finite local-hidden-variable models built from deterministic strategies.

A model is a weighted mixture over hidden-variable values; each value fixes
a response table (setting -> outcome in {-1, 0, +1}) for each party. Three
demonstrations live here: the classical CHSH bound by exhaustive
enumeration, a post-selection witness that reaches the algebraic maximum 4,
and a two-component model whose ensemble marginals agree across settings
while the per-component marginals do not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

OUTCOMES = (-1, 0, 1)
SETTING_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))
CHSH_SIGNS = {(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): -1}
WEIGHT_TOL = 1e-12


class LhvError(ValueError):
    pass


@dataclass(frozen=True)
class LocalStrategy:
    responses: tuple[int, int]

    def __post_init__(self):
        if len(self.responses) != 2 or any(r not in OUTCOMES for r in self.responses):
            raise LhvError(f"responses must be two values in {OUTCOMES}, got {self.responses}")

    def __call__(self, setting: int) -> int:
        return self.responses[setting]

    @property
    def dichotomic(self) -> bool:
        return 0 not in self.responses


@dataclass(frozen=True)
class Component:
    weight: float
    alice: LocalStrategy
    bob: LocalStrategy


@dataclass(frozen=True)
class LhvModel:
    components: tuple[Component, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise LhvError("model needs at least one component")
        if any(c.weight <= 0 for c in comps):
            raise LhvError("weights must be positive")
        total = math.fsum(c.weight for c in comps)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise LhvError(f"weights sum to {total}, expected 1")
        object.__setattr__(self, "components", comps)

    @classmethod
    def uniform(cls, pairs) -> LhvModel:
        pairs = [(LocalStrategy(tuple(a)), LocalStrategy(tuple(b))) for a, b in pairs]
        return cls(tuple(Component(1 / len(pairs), a, b) for a, b in pairs))

    @property
    def dichotomic(self) -> bool:
        return all(c.alice.dichotomic and c.bob.dichotomic for c in self.components)

    def to_dict(self) -> list[dict]:
        return [
            {"weight": c.weight, "alice": list(c.alice.responses), "bob": list(c.bob.responses)}
            for c in self.components
        ]


def _chsh_combination(e) -> float:
    return math.fsum(CHSH_SIGNS[xy] * e(*xy) for xy in SETTING_PAIRS)


def correlator(m: LhvModel, x: int, y: int) -> float:
    """Ensemble correlator E(xy) with a 0 outcome contributing 0."""
    return math.fsum(c.weight * c.alice(x) * c.bob(y) for c in m.components)


def chsh_of_model(m: LhvModel) -> float:
    if not m.dichotomic:
        raise LhvError("model has 0 outcomes; use postselected_chsh or full_ensemble_chsh")
    return _chsh_combination(lambda x, y: correlator(m, x, y))


def full_ensemble_chsh(m: LhvModel) -> float:
    """CHSH on the whole ensemble, counting 0 outcomes as 0."""
    return _chsh_combination(lambda x, y: correlator(m, x, y))


def selected_weight(m: LhvModel, x: int, y: int) -> float:
    """Weight of the subensemble where both sides answer +-1 at settings (x, y)."""
    return math.fsum(c.weight for c in m.components if c.alice(x) != 0 and c.bob(y) != 0)


def conditional_correlator(m: LhvModel, x: int, y: int) -> float:
    sel = selected_weight(m, x, y)
    if sel <= WEIGHT_TOL:
        raise LhvError(f"empty selection for setting pair ({x}, {y})")
    return correlator(m, x, y) / sel


def postselected_chsh(m: LhvModel) -> float:
    """CHSH with each correlator computed only on pairs where both sides gave +-1.

    The selected subensemble depends on the settings, so this can exceed 2.
    """
    return _chsh_combination(lambda x, y: conditional_correlator(m, x, y))


def deterministic_strategies(outcomes=(-1, 1)) -> list[LocalStrategy]:
    return [LocalStrategy(r) for r in product(outcomes, repeat=2)]


def enumerate_deterministic_chsh() -> dict[tuple[LocalStrategy, LocalStrategy], int]:
    """CHSH value of every dichotomic deterministic pair, in lexicographic order."""
    out = {}
    for a, b in product(deterministic_strategies(), repeat=2):
        out[a, b] = sum(CHSH_SIGNS[x, y] * a(x) * b(y) for x, y in SETTING_PAIRS)
    return out


def max_deterministic_chsh() -> int:
    return max(enumerate_deterministic_chsh().values())


def loophole_demo_model() -> LhvModel:
    """Four equal-weight components, one per setting pair (x, y).

    Component (x, y) answers +-1 only at Alice's setting x and Bob's setting
    y, so each setting pair selects exactly that one component. Bob's sign
    is flipped on the (1, 1) component to match the CHSH signs.
    """
    pairs = []
    for x, y in SETTING_PAIRS:
        alice = tuple(1 if s == x else 0 for s in (0, 1))
        bob = tuple(CHSH_SIGNS[x, y] if s == y else 0 for s in (0, 1))
        pairs.append((alice, bob))
    return LhvModel.uniform(pairs)


def loophole_report(m: LhvModel | None = None) -> dict:
    m = loophole_demo_model() if m is None else m
    return {
        "components": m.to_dict(),
        "selected_weight": {f"{x}{y}": selected_weight(m, x, y) for x, y in SETTING_PAIRS},
        "conditional_correlators": {
            f"{x}{y}": conditional_correlator(m, x, y) for x, y in SETTING_PAIRS
        },
        "full_ensemble_correlators": {f"{x}{y}": correlator(m, x, y) for x, y in SETTING_PAIRS},
        "postselected_chsh": postselected_chsh(m),
        "full_ensemble_chsh": full_ensemble_chsh(m),
    }


def zero_probability(strategy: LocalStrategy, setting: int) -> float:
    return 1.0 if strategy(setting) == 0 else 0.0


@dataclass(frozen=True)
class MarginalReport:
    averaged_zero: tuple[float, float]
    averaged_pm: tuple[float, float]
    per_component_zero: tuple[tuple[float, float], ...]
    per_component_zero_gap: tuple[float, ...]
    per_component_pm_gap: tuple[float, ...]

    @property
    def averaged_equal(self) -> bool:
        return (
            abs(self.averaged_zero[0] - self.averaged_zero[1]) <= WEIGHT_TOL
            and abs(self.averaged_pm[0] - self.averaged_pm[1]) <= WEIGHT_TOL
        )

    @property
    def pointwise_equal(self) -> bool:
        return all(g <= WEIGHT_TOL for g in self.per_component_zero_gap + self.per_component_pm_gap)

    def to_dict(self) -> dict:
        return {
            "averaged_p_zero": list(self.averaged_zero),
            "averaged_p_plus_minus": list(self.averaged_pm),
            "per_component_p_zero": [list(p) for p in self.per_component_zero],
            "per_component_zero_gap": list(self.per_component_zero_gap),
            "per_component_plus_minus_gap": list(self.per_component_pm_gap),
            "averaged_equal": self.averaged_equal,
            "pointwise_equal": self.pointwise_equal,
        }


def marginal_report(m: LhvModel) -> MarginalReport:
    """Compare Alice's 0-outcome mass across her two settings, averaged and per component."""
    per = tuple(
        (zero_probability(c.alice, 0), zero_probability(c.alice, 1)) for c in m.components
    )
    avg = tuple(math.fsum(c.weight * p[s] for c, p in zip(m.components, per)) for s in (0, 1))
    return MarginalReport(
        averaged_zero=avg,
        averaged_pm=(1.0 - avg[0], 1.0 - avg[1]),
        per_component_zero=per,
        per_component_zero_gap=tuple(abs(p0 - p1) for p0, p1 in per),
        # the +-1 mass is the complement of the 0 mass
        per_component_pm_gap=tuple(abs((1 - p0) - (1 - p1)) for p0, p1 in per),
    )


def marginal_consistency_demo() -> tuple[LhvModel, MarginalReport]:
    """Two equal-weight components: one answers 0 at A and +1 at A', the other the reverse.

    Bob mirrors Alice so both parties use the same freedom.
    """
    model = LhvModel.uniform([((0, 1), (0, 1)), ((1, 0), (1, 0))])
    return model, marginal_report(model)
