"""Discrete-choice feature construction and L1-regularized logistic fitting.

Carrier and shipper acceptance are modeled as logistic functions of covariates
built from a load's attributes and the quoted per-mile price.  The feature
layouts are frozen (documented below) so that serialized weight vectors are
portable across processes.

Carrier layout (dim = 16 + |origins| + |destinations|)::

    0                intercept
    1                DailyLoad (lane daily load)
    2                DestDailyDemand
    3                MinDist (1 if miles <= 300)
    4 ..             origin indicators (sorted by region id)
    .. + |O|         destination indicators (sorted by region id)
    next 5           equipment intercepts (DryVan, FlatBed, Refrigerated, RGN, StepDeck)
    next 5           equipment x price
    next 1           price * miles * MinDist
    next 1           price * DailyLoad

Shipper layout (dim = 8 + |origins| + |destinations|)::

    0                intercept
    1                MinDist
    2 ..             origin indicators
    .. + |O|         destination indicators
    next 5           equipment x price
    next 1           price * miles * MinDist

The shipper model carries no DailyLoad, DestDailyDemand, equipment intercepts
or price*DailyLoad term, so its dimension is the carrier's minus eight.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

MIN_DIST_MILES = 300.0
MAX_PREBOOK_DAYS = 14

# exp() overflows float64 just above 709; clamping keeps accept_prob in (0, 1)
_SIGMOID_CLIP = 709.0


class Equipment(enum.Enum):
    DRY_VAN = "DryVan"
    FLAT_BED = "FlatBed"
    REFRIGERATED = "Refrigerated"
    RGN = "RGN"
    STEP_DECK = "StepDeck"


EQUIPMENT_ORDER: tuple[Equipment, ...] = tuple(Equipment)
_EQUIPMENT_INDEX = {eq: i for i, eq in enumerate(EQUIPMENT_ORDER)}


class Side(enum.Enum):
    CARRIER = "carrier"
    SHIPPER = "shipper"


@dataclass(frozen=True)
class LoadAttributes:
    """Context vector for one offered load."""

    origin: int
    destination: int
    equipment: Equipment
    miles: float
    call_in: int = 0
    pickup: int = 0
    lane_daily_load: float = 0.0
    dest_daily_demand: float = 0.0

    def __post_init__(self):
        if self.miles <= 0:
            raise ValueError(f"miles must be positive, got {self.miles}")
        if self.pickup < self.call_in:
            raise ValueError("pickup must not precede call_in")
        if self.lane_daily_load < 0 or self.dest_daily_demand < 0:
            raise ValueError("daily load/demand rates must be nonnegative")

    @property
    def min_dist(self) -> float:
        return 1.0 if self.miles <= MIN_DIST_MILES else 0.0


@dataclass(frozen=True)
class FeatureRegistry:
    """Indexed region indicators shared by the carrier and shipper models."""

    origin_indicators: tuple[int, ...]
    destination_indicators: tuple[int, ...]
    version: int = 1

    def __post_init__(self):
        for name, ids in (("origin", self.origin_indicators),
                          ("destination", self.destination_indicators)):
            if len(set(ids)) != len(ids):
                raise ValueError(f"duplicate {name} indicator region")
        object.__setattr__(self, "_origin_pos",
                           {r: i for i, r in enumerate(self.origin_indicators)})
        object.__setattr__(self, "_dest_pos",
                           {r: i for i, r in enumerate(self.destination_indicators)})

    @property
    def carrier_dim(self) -> int:
        return 16 + len(self.origin_indicators) + len(self.destination_indicators)

    @property
    def shipper_dim(self) -> int:
        return 8 + len(self.origin_indicators) + len(self.destination_indicators)

    def dim(self, side: Side) -> int:
        return self.carrier_dim if side is Side.CARRIER else self.shipper_dim

    def origin_position(self, region: int) -> int | None:
        return self._origin_pos.get(region)

    def destination_position(self, region: int) -> int | None:
        return self._dest_pos.get(region)

    def carrier_feature_names(self) -> list[str]:
        names = ["intercept", "DailyLoad", "DestDailyDemand", "MinDist"]
        names += [f"O:{r}" for r in self.origin_indicators]
        names += [f"D:{r}" for r in self.destination_indicators]
        names += [f"EQ:{eq.value}" for eq in EQUIPMENT_ORDER]
        names += [f"pxEQ:{eq.value}" for eq in EQUIPMENT_ORDER]
        names += ["pxMilesxMinDist", "pxDailyLoad"]
        return names

    def shipper_feature_names(self) -> list[str]:
        names = ["intercept", "MinDist"]
        names += [f"O:{r}" for r in self.origin_indicators]
        names += [f"D:{r}" for r in self.destination_indicators]
        names += [f"pxEQ:{eq.value}" for eq in EQUIPMENT_ORDER]
        names += ["pxMilesxMinDist"]
        return names

    def feature_names(self, side: Side) -> list[str]:
        return (self.carrier_feature_names() if side is Side.CARRIER
                else self.shipper_feature_names())


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    side: Side

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray
    side: Side

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.weights)


def build_feature_registry(counts_by_region: Mapping[int, int] | None = None,
                           threshold: int = 15,
                           *,
                           origin_counts: Mapping[int, int] | None = None,
                           destination_counts: Mapping[int, int] | None = None,
                           version: int = 1) -> FeatureRegistry:
    """Build indicator sets: a region gets an indicator iff its count > threshold.

    ``counts_by_region`` applies to both sides; pass ``origin_counts`` /
    ``destination_counts`` to differentiate.  Index order is deterministic
    (sorted by region id).  An empty count map yields a registry with no
    indicators, degenerating the models to their global intercept terms.
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    o_counts = origin_counts if origin_counts is not None else (counts_by_region or {})
    d_counts = (destination_counts if destination_counts is not None
                else (counts_by_region or {}))
    for counts in (o_counts, d_counts):
        if any(c < 0 for c in counts.values()):
            raise ValueError("counts must be nonnegative")
    origins = tuple(sorted(r for r, c in o_counts.items() if c > threshold))
    dests = tuple(sorted(r for r, c in d_counts.items() if c > threshold))
    return FeatureRegistry(origins, dests, version=version)


def _carrier_parts(registry: FeatureRegistry, b: LoadAttributes):
    """Split the carrier covariates x(b, p) = static + p * slope."""
    n_o = len(registry.origin_indicators)
    n_d = len(registry.destination_indicators)
    dim = registry.carrier_dim
    static = np.zeros(dim)
    slope = np.zeros(dim)
    static[0] = 1.0
    static[1] = b.lane_daily_load
    static[2] = b.dest_daily_demand
    static[3] = b.min_dist
    pos = registry.origin_position(b.origin)
    if pos is not None:
        static[4 + pos] = 1.0
    pos = registry.destination_position(b.destination)
    if pos is not None:
        static[4 + n_o + pos] = 1.0
    eq = _EQUIPMENT_INDEX[b.equipment]
    base_eq = 4 + n_o + n_d
    static[base_eq + eq] = 1.0
    slope[base_eq + 5 + eq] = 1.0
    slope[base_eq + 10] = b.miles * b.min_dist
    slope[base_eq + 11] = b.lane_daily_load
    return static, slope


def _shipper_parts(registry: FeatureRegistry, b: LoadAttributes):
    """Split the shipper covariates x(b, p) = static + p * slope."""
    n_o = len(registry.origin_indicators)
    n_d = len(registry.destination_indicators)
    dim = registry.shipper_dim
    static = np.zeros(dim)
    slope = np.zeros(dim)
    static[0] = 1.0
    static[1] = b.min_dist
    pos = registry.origin_position(b.origin)
    if pos is not None:
        static[2 + pos] = 1.0
    pos = registry.destination_position(b.destination)
    if pos is not None:
        static[2 + n_o + pos] = 1.0
    eq = _EQUIPMENT_INDEX[b.equipment]
    base_eqp = 2 + n_o + n_d
    slope[base_eqp + eq] = 1.0
    slope[base_eqp + 5] = b.miles * b.min_dist
    return static, slope


def feature_parts(registry: FeatureRegistry, b: LoadAttributes, side: Side):
    """(static, slope) arrays with x(b, p) = static + p * slope for the side."""
    if side is Side.CARRIER:
        return _carrier_parts(registry, b)
    return _shipper_parts(registry, b)


def carrier_features(registry: FeatureRegistry, b: LoadAttributes,
                     p: float) -> FeatureVector:
    """Carrier covariate vector for load ``b`` at per-mile price ``p``."""
    if p <= 0:
        raise ValueError("price per mile must be positive")
    static, slope = _carrier_parts(registry, b)
    return FeatureVector(static + p * slope, Side.CARRIER)


def shipper_features(registry: FeatureRegistry, b: LoadAttributes,
                     p: float) -> FeatureVector:
    """Shipper covariate vector for load ``b`` at per-mile price ``p``."""
    if p <= 0:
        raise ValueError("price per mile must be positive")
    static, slope = _shipper_parts(registry, b)
    return FeatureVector(static + p * slope, Side.SHIPPER)


def sigmoid(h):
    """Numerically stable logistic function, elementwise, always in (0, 1)."""
    h = np.clip(h, -_SIGMOID_CLIP, _SIGMOID_CLIP)
    out = np.empty_like(h, dtype=float)
    pos = h >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-h[pos]))
    e = np.exp(h[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid_scalar(h: float) -> float:
    h = min(max(h, -_SIGMOID_CLIP), _SIGMOID_CLIP)
    if h >= 0:
        return 1.0 / (1.0 + math.exp(-h))
    e = math.exp(h)
    return e / (1.0 + e)


def log_sigmoid(h):
    """log(sigmoid(h)), stable for large negative margins."""
    return -np.logaddexp(0.0, -np.asarray(h, dtype=float))


def accept_prob(w: WeightVector, x: FeatureVector) -> float:
    """Probability of an ``accept`` response: sigmoid(w . x)."""
    if w.side is not x.side:
        raise ValueError(f"side mismatch: weights {w.side.value}, features {x.side.value}")
    if len(w.weights) != len(x.values):
        raise ValueError(
            f"dimension mismatch ({len(w.weights)} vs {len(x.values)}): "
            "registry and model disagree")
    return sigmoid_scalar(float(w.weights @ x.values))


def joint_accept_prob(theta, registry: FeatureRegistry, b: LoadAttributes,
                      p: float) -> float:
    """Probability that carrier and shipper both accept (independent responses)."""
    pc = accept_prob(theta.alpha, carrier_features(registry, b, p))
    ps = accept_prob(theta.beta, shipper_features(registry, b, p))
    return pc * ps


@dataclass
class FitResult:
    weights: WeightVector
    converged: bool
    n_iter: int
    objective: float


def _l1_objective(X, y, w, lam):
    margins = y * (X @ w)
    loss = float(np.mean(np.logaddexp(0.0, -margins)))
    return loss + lam * float(np.sum(np.abs(w[1:])))


def fit_l1_logistic_arrays(X: np.ndarray, y: np.ndarray, side: Side,
                           lam: float = 1.0, *, max_iter: int = 500,
                           tol: float = 1e-6, w0: np.ndarray | None = None) -> FitResult:
    """Proximal-gradient fit of mean logistic loss + lam * ||w[1:]||_1.

    Labels are +/-1.  The intercept (index 0) is not regularized.  Backtracking
    line search; converged when the successive objective change drops below
    ``tol``.  On hitting ``max_iter`` the best iterate is returned with
    ``converged=False``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be 2-D with one row per label")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +/-1")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if lam == 0 and (np.all(y > 0) or np.all(y < 0)):
        raise ValueError("unregularized fit requires both labels present")

    n, d = X.shape
    w = np.zeros(d) if w0 is None else np.array(w0, dtype=float)
    # Lipschitz bound for the mean logistic loss gradient
    lip = float(np.linalg.norm(X, 2) ** 2) / (4.0 * n)
    step = 1.0 / max(lip, 1e-12)

    def smooth_loss_grad(wv):
        margins = y * (X @ wv)
        loss = float(np.mean(np.logaddexp(0.0, -margins)))
        coef = -y * sigmoid(-margins)
        grad = (X.T @ coef) / n
        return loss, grad

    obj = _l1_objective(X, y, w, lam)
    best_w, best_obj = w.copy(), obj
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        loss, grad = smooth_loss_grad(w)
        t = step
        while True:
            w_new = w - t * grad
            w_new[1:] = np.sign(w_new[1:]) * np.maximum(np.abs(w_new[1:]) - t * lam, 0.0)
            diff = w_new - w
            new_loss = float(np.mean(np.logaddexp(0.0, -y * (X @ w_new))))
            if new_loss <= loss + float(grad @ diff) + float(diff @ diff) / (2.0 * t):
                break
            t *= 0.5
            if t < 1e-18:
                break
        new_obj = new_loss + lam * float(np.sum(np.abs(w_new[1:])))
        delta = abs(obj - new_obj)
        w, obj = w_new, new_obj
        if obj < best_obj:
            best_w, best_obj = w.copy(), obj
        if delta < tol:
            converged = True
            break
    return FitResult(WeightVector(best_w, side), converged, it, best_obj)


def fit_l1_logistic(data: Iterable[tuple[FeatureVector, int]],
                    lam: float = 1.0, *, max_iter: int = 500,
                    tol: float = 1e-6) -> FitResult:
    """Fit on (FeatureVector, label) pairs; see ``fit_l1_logistic_arrays``."""
    pairs = list(data)
    if not pairs:
        raise ValueError("empty training data")
    side = pairs[0][0].side
    if any(fv.side is not side for fv, _ in pairs):
        raise ValueError("mixed feature sides in training data")
    X = np.stack([fv.values for fv, _ in pairs])
    y = np.array([label for _, label in pairs], dtype=float)
    return fit_l1_logistic_arrays(X, y, side, lam, max_iter=max_iter, tol=tol)


# ---------------------------------------------------------------------------
# serialization


def registry_to_json(registry: FeatureRegistry) -> str:
    return json.dumps({
        "version": registry.version,
        "origin_indicators": list(registry.origin_indicators),
        "destination_indicators": list(registry.destination_indicators),
        "carrier_dim": registry.carrier_dim,
        "shipper_dim": registry.shipper_dim,
    }, indent=2)


def registry_from_json(text: str) -> FeatureRegistry:
    obj = json.loads(text)
    reg = FeatureRegistry(tuple(obj["origin_indicators"]),
                          tuple(obj["destination_indicators"]),
                          version=obj.get("version", 1))
    for key, expect in (("carrier_dim", reg.carrier_dim),
                        ("shipper_dim", reg.shipper_dim)):
        if key in obj and obj[key] != expect:
            raise ValueError(f"registry {key} mismatch: file says {obj[key]}, "
                             f"layout implies {expect}")
    return reg


def weights_to_json(w: WeightVector, registry_version: int = 1) -> str:
    return json.dumps({
        "side": w.side.value,
        "registry_version": registry_version,
        "weights": [float(v) for v in w.weights],
    }, indent=2)


def weights_from_json(text: str) -> WeightVector:
    obj = json.loads(text)
    return WeightVector(np.asarray(obj["weights"], dtype=float), Side(obj["side"]))


def weights_to_csv(w: WeightVector, registry: FeatureRegistry, path) -> None:
    names = registry.feature_names(w.side)
    if len(names) != len(w.weights):
        raise ValueError("weight vector does not match registry layout")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variable", "weight"])
        for name, val in zip(names, w.weights):
            writer.writerow([name, repr(float(val))])
