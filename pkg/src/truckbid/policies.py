"""Bidding policies over a discrete price grid.

Knowledge gradient with one-step contextual lookahead, pure exploitation,
Thompson sampling, optimistic Thompson sampling, estimate-and-optimize, and
the static mean-price rule, plus the theory primitives: the uninstructive
bid of a two-candidate pair and membership in the incomplete-learning set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _core
from .belief import BeliefState, CandidateModel, candidate_margins
from .features import FeatureRegistry, LoadAttributes, sigmoid, sigmoid_scalar


@dataclass(frozen=True)
class PriceGrid:
    """Strictly increasing bid prices within (lower, upper]."""

    lower: float
    upper: float
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if self.lower >= self.upper:
            raise ValueError("lower bound must be below upper bound")
        if len(pts) == 0 or np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if pts[0] <= self.lower or pts[-1] > self.upper:
            raise ValueError("grid points must lie in (lower, upper]")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @classmethod
    def regular(cls, lower: float, upper: float, count: int) -> "PriceGrid":
        """``count`` evenly spaced points ending exactly at ``upper``."""
        pts = lower + (upper - lower) * np.arange(1, count + 1) / count
        return cls(lower, upper, pts)

    def __len__(self) -> int:
        return len(self.points)

    def index_of(self, price: float, tol: float = 1e-9) -> int:
        i = int(np.argmin(np.abs(self.points - price)))
        if abs(self.points[i] - price) > tol:
            raise ValueError(f"price {price} not on the grid")
        return i


@dataclass(frozen=True)
class HorizonWeight:
    """Exploration weight tau: a constant, or the remaining-steps rule N - n."""

    value: float | None = 100.0
    remaining: bool = False

    def resolve(self, n: int = 0, horizon: int | None = None) -> float:
        if self.remaining:
            if horizon is None:
                raise ValueError("remaining-steps rule needs a horizon")
            return float(max(horizon - n, 0))
        if self.value is None or self.value < 0:
            raise ValueError("tau must be nonnegative")
        return float(self.value)


@dataclass
class PolicyDecision:
    price: float
    index: int
    score: float
    diagnostics: dict | None = None


def acceptance_tables(state: BeliefState, registry: FeatureRegistry,
                      b: LoadAttributes, grid: PriceGrid):
    """Per-candidate carrier/shipper acceptance probabilities over the grid."""
    c0, c1, s0, s1 = candidate_margins(state.candidates, registry, b)
    p = grid.points
    fc = sigmoid(c0[:, None] + c1[:, None] * p[None, :])
    fs = sigmoid(s0[:, None] + s1[:, None] * p[None, :])
    return fc, fs


def expected_revenue(state: BeliefState, registry: FeatureRegistry,
                     b: LoadAttributes, p: float) -> float:
    """Price times the posterior-mixture joint acceptance probability."""
    c0, c1, s0, s1 = candidate_margins(state.candidates, registry, b)
    joint = sigmoid(c0 + c1 * p) * sigmoid(s0 + s1 * p)
    return float(p * (state.q @ joint))


def kg_value(state: BeliefState, registry: FeatureRegistry, b: LoadAttributes,
             p: float, grid: PriceGrid) -> float:
    """Value of information from one measurement at price ``p``.

    Enumerates the four (carrier, shipper) response pairs exactly; the inner
    maximization runs over the same grid.
    """
    fc, fs = acceptance_tables(state, registry, b, grid)
    _, nu = _core.kg_grid_values(np.asarray(state.q), fc, fs, grid.points)
    return float(nu[grid.index_of(p)])


def kg_policy(state: BeliefState, registry: FeatureRegistry, b: LoadAttributes,
              tau: HorizonWeight | float, grid: PriceGrid, *,
              n: int = 0, horizon: int | None = None,
              want_diagnostics: bool = False) -> PolicyDecision:
    """argmax over the grid of expected revenue + tau * KG value."""
    t = tau.resolve(n, horizon) if isinstance(tau, HorizonWeight) else float(tau)
    fc, fs = acceptance_tables(state, registry, b, grid)
    rev, nu = _core.kg_grid_values(np.asarray(state.q), fc, fs, grid.points)
    score = rev + t * nu
    j = int(np.argmax(score))
    diag = None
    if want_diagnostics:
        diag = {float(p): (float(r), float(v))
                for p, r, v in zip(grid.points, rev, nu)}
    return PolicyDecision(float(grid.points[j]), j, float(score[j]), diag)


def exploit_policy(state: BeliefState, registry: FeatureRegistry,
                   b: LoadAttributes, grid: PriceGrid) -> PolicyDecision:
    """argmax of expected revenue; ties break to the lowest price."""
    fc, fs = acceptance_tables(state, registry, b, grid)
    rev = grid.points * (np.asarray(state.q) @ (fc * fs))
    j = int(np.argmax(rev))
    return PolicyDecision(float(grid.points[j]), j, float(rev[j]))


def thompson_policy(state: BeliefState, registry: FeatureRegistry,
                    b: LoadAttributes, grid: PriceGrid,
                    rng: np.random.Generator) -> PolicyDecision:
    """Sample a candidate from the posterior; price its own best bid."""
    k = int(rng.choice(state.k, p=np.asarray(state.q)))
    fc, fs = acceptance_tables(state, registry, b, grid)
    rev = grid.points * fc[k] * fs[k]
    j = int(np.argmax(rev))
    return PolicyDecision(float(grid.points[j]), j, float(rev[j]),
                          {"sampled_candidate": k})


def opt_thompson_policy(state: BeliefState, registry: FeatureRegistry,
                        b: LoadAttributes, grid: PriceGrid,
                        rng: np.random.Generator) -> PolicyDecision:
    """Thompson sampling with per-price scores floored at the posterior mean."""
    k = int(rng.choice(state.k, p=np.asarray(state.q)))
    fc, fs = acceptance_tables(state, registry, b, grid)
    joint = fc * fs
    sampled = grid.points * joint[k]
    mean = grid.points * (np.asarray(state.q) @ joint)
    score = np.maximum(sampled, mean)
    j = int(np.argmax(score))
    return PolicyDecision(float(grid.points[j]), j, float(score[j]),
                          {"sampled_candidate": k})


def est_opt_policy(fitted: CandidateModel, registry: FeatureRegistry,
                   b: LoadAttributes, grid: PriceGrid) -> PolicyDecision:
    """Myopic argmax of p * f(b, p; fitted); no belief interaction."""
    c0, c1, s0, s1 = candidate_margins([fitted], registry, b)
    p = grid.points
    rev = p * (sigmoid(c0[0] + c1[0] * p) * sigmoid(s0[0] + s1[0] * p))
    j = int(np.argmax(rev))
    return PolicyDecision(float(p[j]), j, float(rev[j]))


class MeanPriceUnavailable(ValueError):
    """Raised when no accepted prices exist to average."""


def mean_price_policy(history_prices: Sequence[float]) -> float:
    """Arithmetic mean of accepted per-mile prices; not clamped to the grid."""
    prices = list(history_prices)
    if not prices:
        raise MeanPriceUnavailable("no accepted prices; configure a fallback")
    return float(np.mean(prices))


# ---------------------------------------------------------------------------
# theory primitives (context-free two-candidate analysis)


@dataclass(frozen=True)
class LinePair:
    """Two candidates' margins as lines in price: sigma(a0 + a1 p) per side.

    ``carrier[k] = (a0, a1)`` and ``shipper[k] = (b0, b1)`` for k in {0, 1}.
    """

    carrier: tuple[tuple[float, float], tuple[float, float]]
    shipper: tuple[tuple[float, float], tuple[float, float]]

    def carrier_prob(self, k: int, p: float) -> float:
        a0, a1 = self.carrier[k]
        return sigmoid_scalar(a0 + a1 * p)

    def shipper_prob(self, k: int, p: float) -> float:
        b0, b1 = self.shipper[k]
        return sigmoid_scalar(b0 + b1 * p)

    def joint(self, k: int, p: float) -> float:
        return self.carrier_prob(k, p) * self.shipper_prob(k, p)


def margin_lines(candidates: Sequence[CandidateModel],
                 registry: FeatureRegistry, b: LoadAttributes) -> LinePair:
    """Reduce two contextual candidates to price lines at a fixed context."""
    if len(candidates) != 2:
        raise ValueError("margin_lines expects exactly two candidates")
    c0, c1, s0, s1 = candidate_margins(candidates, registry, b)
    return LinePair(((c0[0], c1[0]), (c0[1], c1[1])),
                    ((s0[0], s1[0]), (s0[1], s1[1])))


@dataclass(frozen=True)
class UninstructiveBid:
    price: float | None
    degenerate: bool = False


def uninstructive_bid(pair: LinePair, lower: float, upper: float,
                      tol: float = 1e-9) -> UninstructiveBid:
    """Common intersection price of both sides' margin lines, if one exists.

    A price is uninstructive when both candidates produce identical carrier
    margins and identical shipper margins there, so responses cannot separate
    them.  Identical candidates make every price qualify; that degenerate
    case returns no price with the flag set.
    """
    (a10, a11), (a20, a21) = pair.carrier
    (b10, b11), (b20, b21) = pair.shipper
    dc0, dc1 = a10 - a20, a21 - a11
    ds0, ds1 = b10 - b20, b21 - b11
    if dc0 == 0 and dc1 == 0 and ds0 == 0 and ds1 == 0:
        return UninstructiveBid(None, degenerate=True)
    if dc1 == 0 or ds1 == 0:
        # parallel lines on a side: they either never meet or are identical
        if (dc1 == 0 and dc0 != 0) or (ds1 == 0 and ds0 != 0):
            return UninstructiveBid(None)
        # one side identical: intersection determined by the other side alone
        if dc1 != 0:
            p = dc0 / dc1
        elif ds1 != 0:
            p = ds0 / ds1
        else:
            return UninstructiveBid(None, degenerate=True)
        if lower <= p <= upper:
            return UninstructiveBid(float(p))
        return UninstructiveBid(None)
    p_c = dc0 / dc1
    p_s = ds0 / ds1
    if abs(p_c - p_s) <= tol and lower <= p_c <= upper:
        return UninstructiveBid(float(p_c))
    return UninstructiveBid(None)


@dataclass(frozen=True)
class IncompleteLearningResult:
    in_set: bool
    m1: float | None = None
    m2: float | None = None
    p_hat: float | None = None


def incomplete_learning_check(pair: LinePair, lower: float = 0.0,
                              upper: float = float("inf")
                              ) -> IncompleteLearningResult:
    """Membership in the incomplete-learning set of candidate pairs.

    Requires rising carrier lines and falling shipper lines.  With the
    uninstructive bid ``p_hat`` and
    ``M_k = a_k1 (1 - sigma_c(p_hat)) + b_k1 (1 - sigma_s(p_hat))``,
    membership needs ``M_2 > 0``, ``M_1 < 0`` and ``M_1 + M_2 >= -1/p_hat``.
    """
    for (_, a1) in pair.carrier:
        if a1 <= 0:
            raise ValueError("carrier price slopes must be positive")
    for (_, b1) in pair.shipper:
        if b1 >= 0:
            raise ValueError("shipper price slopes must be negative")
    hat = uninstructive_bid(pair, lower, upper)
    if hat.price is None:
        return IncompleteLearningResult(False)
    p_hat = hat.price
    ms = []
    for k in range(2):
        a1 = pair.carrier[k][1]
        b1 = pair.shipper[k][1]
        ms.append(a1 * (1.0 - pair.carrier_prob(k, p_hat))
                  + b1 * (1.0 - pair.shipper_prob(k, p_hat)))
    m1, m2 = ms
    in_set = (m2 > 0) and (m1 < 0) and (m1 + m2 >= -1.0 / p_hat)
    return IncompleteLearningResult(in_set, m1, m2, p_hat)
