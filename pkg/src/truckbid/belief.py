"""Sampled-belief Bayesian state over K candidate response models.

The belief is a discrete posterior ``q`` over K explicit (carrier, shipper)
logistic parameter pairs, updated per observation and periodically refreshed
by bootstrap aggregation: K models refit on bootstrap resamples of the full
observation history, with the new posterior set from each refit model's
likelihood on that history.

All posterior arithmetic runs in log space with max-subtraction; the paired
log-sigmoid terms underflow linear-space products within a few dozen
observations otherwise.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .features import (
    FeatureRegistry,
    LoadAttributes,
    Side,
    WeightVector,
    carrier_features,
    feature_parts,
    fit_l1_logistic_arrays,
    log_sigmoid,
    shipper_features,
    sigmoid,
)


@dataclass(frozen=True)
class CandidateModel:
    """One sampled parameter pair: carrier weights alpha, shipper weights beta."""

    alpha: WeightVector
    beta: WeightVector

    def __post_init__(self):
        if self.alpha.side is not Side.CARRIER or self.beta.side is not Side.SHIPPER:
            raise ValueError("candidate sides must be (carrier, shipper)")


@dataclass(frozen=True)
class ObservationRecord:
    b: LoadAttributes
    p: float
    y_c: int
    y_s: int
    n: int

    def __post_init__(self):
        if self.y_c not in (-1, 1) or self.y_s not in (-1, 1):
            raise ValueError("responses must be +/-1")


@dataclass(frozen=True)
class BeliefState:
    candidates: tuple[CandidateModel, ...]
    q: np.ndarray
    resample_count: int = 0
    history: tuple[ObservationRecord, ...] = ()
    underflow_resets: int = 0

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if len(q) != len(self.candidates) or len(q) < 1:
            raise ValueError("q length must equal the candidate count (>= 1)")
        if np.any(q < 0) or abs(float(q.sum()) - 1.0) > 1e-12:
            raise ValueError("q must be a probability simplex")
        q = q.copy()
        q.flags.writeable = False
        object.__setattr__(self, "q", q)

    @property
    def k(self) -> int:
        return len(self.candidates)

    @property
    def n_observations(self) -> int:
        return len(self.history)


@dataclass(frozen=True)
class FitConfig:
    """Bootstrap-fit settings for bagging.

    ``lam=None`` scales the L1 penalty as 1/n of the resample size, i.e. a
    unit penalty on the summed (rather than mean) logistic loss.
    """

    lam: float | None = None
    max_iter: int = 500
    tol: float = 1e-6
    max_retries: int = 3


@dataclass
class ResampleReport:
    retained_slots: tuple[int, ...] = ()
    retries: int = 0
    converged: tuple[bool, ...] = ()


def init_uniform(candidates: Sequence[CandidateModel]) -> BeliefState:
    """Uniform prior over the candidates, empty history, zero resamples."""
    candidates = tuple(candidates)
    if not candidates:
        raise ValueError("at least one candidate model is required")
    k = len(candidates)
    return BeliefState(candidates, np.full(k, 1.0 / k))


def candidate_margins(candidates: Sequence[CandidateModel],
                      registry: FeatureRegistry, b: LoadAttributes):
    """Affine price coefficients of every candidate's margins at context ``b``.

    Both covariate vectors are affine in the price, so each candidate's
    carrier margin is ``c0 + c1 * p`` and shipper margin ``s0 + s1 * p``.
    Returns four length-K arrays ``(c0, c1, s0, s1)``.
    """
    stat_c, slope_c = feature_parts(registry, b, Side.CARRIER)
    stat_s, slope_s = feature_parts(registry, b, Side.SHIPPER)
    a = np.stack([c.alpha.weights for c in candidates])
    bmat = np.stack([c.beta.weights for c in candidates])
    return a @ stat_c, a @ slope_c, bmat @ stat_s, bmat @ slope_s


def posterior_update(state: BeliefState, obs: ObservationRecord,
                     registry: FeatureRegistry) -> BeliefState:
    """Bayes update of ``q`` from one (carrier, shipper) response pair.

    Each candidate's mass is multiplied by its likelihood of the observed
    responses and the vector renormalized.  A total underflow (all masses
    vanish) resets ``q`` to uniform and bumps ``underflow_resets``.
    """
    c0, c1, s0, s1 = candidate_margins(state.candidates, registry, obs.b)
    mc = c0 + c1 * obs.p
    ms = s0 + s1 * obs.p
    log_lik = log_sigmoid(obs.y_c * mc) + log_sigmoid(obs.y_s * ms)
    with np.errstate(divide="ignore"):
        log_q = np.where(state.q > 0, np.log(state.q), -np.inf) + log_lik
    top = float(np.max(log_q))
    history = state.history + (obs,)
    if not np.isfinite(top):
        k = state.k
        return replace(state, q=np.full(k, 1.0 / k), history=history,
                       underflow_resets=state.underflow_resets + 1)
    w = np.exp(log_q - top)
    q_new = w / w.sum()
    return replace(state, q=q_new, history=history)


def predictive_accept_prob(state: BeliefState, registry: FeatureRegistry,
                           b: LoadAttributes, p: float) -> float:
    """Posterior-mixture probability that both sides accept at price ``p``."""
    c0, c1, s0, s1 = candidate_margins(state.candidates, registry, b)
    joint = sigmoid(c0 + c1 * p) * sigmoid(s0 + s1 * p)
    return float(state.q @ joint)


def history_matrices(history: Sequence[ObservationRecord],
                     registry: FeatureRegistry):
    """Design matrices and labels (Xc, yc, Xs, ys) for the full history."""
    xc = np.stack([carrier_features(registry, o.b, o.p).values for o in history])
    xs = np.stack([shipper_features(registry, o.b, o.p).values for o in history])
    yc = np.array([o.y_c for o in history], dtype=float)
    ys = np.array([o.y_s for o in history], dtype=float)
    return xc, yc, xs, ys


def log_likelihood(theta: CandidateModel, history: Sequence[ObservationRecord],
                   registry: FeatureRegistry) -> float:
    """Log likelihood of the history under ``theta``; 0 for an empty history."""
    if not history:
        return 0.0
    xc, yc, xs, ys = history_matrices(history, registry)
    return _log_likelihood_arrays(theta, xc, yc, xs, ys)


def _log_likelihood_arrays(theta: CandidateModel, xc, yc, xs, ys) -> float:
    mc = xc @ theta.alpha.weights
    ms = xs @ theta.beta.weights
    return float(np.sum(log_sigmoid(yc * mc)) + np.sum(log_sigmoid(ys * ms)))


def resample_due(n: int, r: int, c: int) -> bool:
    """True iff step ``n`` hits the geometric schedule C * 2**r."""
    if c < 1:
        raise ValueError("resample base must be >= 1")
    return n == c * (2 ** r)


def bagging_resample(state: BeliefState, registry: FeatureRegistry,
                     k: int | None = None,
                     fit_config: FitConfig | None = None,
                     rng: np.random.Generator | None = None
                     ) -> tuple[BeliefState, ResampleReport]:
    """Refresh the candidate set by bootstrap aggregation.

    Draws K bootstrap datasets of the history's size (uniform with
    replacement), refits carrier and shipper models independently on each,
    and sets the new posterior from each refit model's likelihood on the full
    history.  A resample whose labels are single-class on either side is
    redrawn (up to ``max_retries``); if retries run out the slot keeps its
    previous candidate and is flagged in the report.
    """
    if not state.history:
        raise ValueError("bagging requires a nonempty history")
    k = state.k if k is None else k
    cfg = fit_config or FitConfig()
    rng = rng or np.random.default_rng()
    xc, yc, xs, ys = history_matrices(state.history, registry)
    n = len(yc)
    lam = cfg.lam if cfg.lam is not None else 1.0 / n

    new_candidates: list[CandidateModel] = []
    retained: list[int] = []
    converged: list[bool] = []
    retries_total = 0
    for slot in range(k):
        fitted = None
        for attempt in range(cfg.max_retries):
            idx = rng.integers(0, n, size=n)
            yc_b, ys_b = yc[idx], ys[idx]
            if len(np.unique(yc_b)) < 2 or len(np.unique(ys_b)) < 2:
                retries_total += 1
                continue
            fit_c = fit_l1_logistic_arrays(xc[idx], yc_b, Side.CARRIER, lam,
                                           max_iter=cfg.max_iter, tol=cfg.tol)
            fit_s = fit_l1_logistic_arrays(xs[idx], ys_b, Side.SHIPPER, lam,
                                           max_iter=cfg.max_iter, tol=cfg.tol)
            fitted = CandidateModel(fit_c.weights, fit_s.weights)
            converged.append(fit_c.converged and fit_s.converged)
            break
        if fitted is None:
            slot_src = slot % state.k
            fitted = state.candidates[slot_src]
            retained.append(slot)
            converged.append(True)
        new_candidates.append(fitted)

    log_liks = np.array([_log_likelihood_arrays(c, xc, yc, xs, ys)
                         for c in new_candidates])
    w = np.exp(log_liks - log_liks.max())
    q_new = w / w.sum()
    new_state = BeliefState(tuple(new_candidates), q_new,
                            resample_count=state.resample_count + 1,
                            history=state.history,
                            underflow_resets=state.underflow_resets)
    report = ResampleReport(tuple(retained), retries_total, tuple(converged))
    return new_state, report


# ---------------------------------------------------------------------------
# serialization


def history_to_csv(history: Sequence[ObservationRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "origin", "destination", "equipment", "miles",
                         "p", "y_c", "y_s"])
        for o in history:
            writer.writerow([o.n, o.b.origin, o.b.destination,
                             o.b.equipment.value, repr(o.b.miles),
                             repr(o.p), o.y_c, o.y_s])


def belief_snapshot(state: BeliefState, candidate_files: Sequence[str]) -> str:
    """JSON snapshot referencing per-candidate weight files."""
    if len(candidate_files) != state.k:
        raise ValueError("one file reference per candidate required")
    return json.dumps({
        "q": [float(x) for x in state.q],
        "resample_count": state.resample_count,
        "n_observations": state.n_observations,
        "underflow_resets": state.underflow_resets,
        "candidates": list(candidate_files),
    }, indent=2)
