"""Multinomial logit choice model: probabilities, expected revenue, sampling.

Items are indexed 1..N throughout the public API; 0 always denotes the
no-purchase outcome. Item i carries a feature vector x_i and a fixed
nonnegative revenue r_i, and a preference vector theta scores item i with
weight exp(x_i . theta) against a no-purchase weight of 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

__all__ = [
    "Catalog",
    "ParamSpace",
    "ChoiceDistribution",
    "as_assortment",
    "choice_probabilities",
    "expected_revenue",
    "expected_revenue_gradient",
    "sample_choice",
]

Assortment = tuple[int, ...]


def as_assortment(members: Iterable[int]) -> Assortment:
    """Normalize a collection of 1-based item indices into a sorted tuple.

    Raises ValueError on duplicates or nonpositive indices. Emptiness is
    allowed here; operations that cannot accept the empty assortment check
    for it themselves.
    """
    s = tuple(sorted(int(i) for i in members))
    if any(i < 1 for i in s):
        raise ValueError(f"item indices must be >= 1, got {s}")
    if len(set(s)) != len(s):
        raise ValueError(f"duplicate item indices in assortment {s}")
    return s


@dataclass(frozen=True)
class Catalog:
    """The N items on offer: one feature vector and one revenue per item.

    features has shape (N, d); revenues has shape (N,) with r_i >= 0.
    The implicit no-purchase option has revenue 0 and utility weight 1.
    """

    features: np.ndarray
    revenues: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        revenues = np.asarray(self.revenues, dtype=float)
        if features.ndim != 2:
            raise ValueError("features must be a 2-d array of shape (n_items, dim)")
        if revenues.ndim != 1 or revenues.shape[0] != features.shape[0]:
            raise ValueError("revenues must be 1-d with one entry per item")
        if features.shape[1] < 1:
            raise ValueError("feature dimension must be >= 1")
        if not np.all(np.isfinite(features)) or not np.all(np.isfinite(revenues)):
            raise ValueError("features and revenues must be finite")
        if np.any(revenues < 0):
            raise ValueError("revenues must be nonnegative")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "revenues", revenues)

    @property
    def n_items(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def check_assortment(self, s: Iterable[int]) -> Assortment:
        s = as_assortment(s)
        if s and s[-1] > self.n_items:
            raise ValueError(f"assortment {s} references items beyond catalog size {self.n_items}")
        return s

    def utilities(self, theta: np.ndarray) -> np.ndarray:
        """x_i . theta for every item, shape (N,)."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ValueError(f"theta must have shape ({self.dim},), got {theta.shape}")
        return self.features @ theta

    def to_json_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "d": self.dim,
            "revenues": [float(r) for r in self.revenues],
            "features": [[float(v) for v in row] for row in self.features],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Catalog":
        catalog = cls(
            features=np.asarray(obj["features"], dtype=float),
            revenues=np.asarray(obj["revenues"], dtype=float),
        )
        if catalog.n_items != int(obj["n_items"]) or catalog.dim != int(obj["d"]):
            raise ValueError("catalog JSON header inconsistent with array shapes")
        return catalog

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Catalog":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class ParamSpace:
    """Euclidean ball of preference vectors: {theta : ||theta||_2 <= theta_max}."""

    dim: int
    theta_max: float = 100.0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not np.isfinite(self.theta_max) or self.theta_max <= 0:
            raise ValueError("theta_max must be finite and positive")

    def contains(self, theta: np.ndarray) -> bool:
        theta = np.asarray(theta, dtype=float)
        return theta.shape == (self.dim,) and float(np.linalg.norm(theta)) <= self.theta_max

    def project(self, theta: np.ndarray) -> np.ndarray:
        """Euclidean projection onto the ball."""
        theta = np.asarray(theta, dtype=float)
        norm = float(np.linalg.norm(theta))
        if norm <= self.theta_max:
            return theta
        return theta * (self.theta_max / norm)


@dataclass(frozen=True)
class ChoiceDistribution:
    """Choice probabilities over an assortment plus the no-purchase outcome.

    item_probs[k] is the probability of purchasing items[k]; no_purchase is
    the remaining mass. All masses are strictly positive and sum to one.
    """

    items: Assortment
    item_probs: np.ndarray
    no_purchase: float

    @property
    def outcomes(self) -> tuple[int, ...]:
        """All outcomes in a fixed order: the offered items, then 0."""
        return self.items + (0,)

    def as_array(self) -> np.ndarray:
        """Masses aligned with .outcomes (no-purchase last)."""
        return np.append(self.item_probs, self.no_purchase)

    def prob_of(self, outcome: int) -> float:
        if outcome == 0:
            return self.no_purchase
        return float(self.item_probs[self.items.index(outcome)])


def _stable_weights(catalog: Catalog, s: Assortment, theta: np.ndarray) -> tuple[np.ndarray, float]:
    """exp(x_i.theta - m) for i in s and exp(-m), with m = max(0, max utility).

    Shifting by the shared m keeps every exponential in (0, 1], so the
    normalized probabilities are exact even for extreme theta.
    """
    idx = np.asarray(s, dtype=int) - 1
    u = catalog.utilities(theta)[idx]
    m = max(0.0, float(u.max())) if len(s) else 0.0
    return np.exp(u - m), float(np.exp(-m))


def choice_probabilities(catalog: Catalog, s: Iterable[int], theta: np.ndarray) -> ChoiceDistribution:
    """MNL purchase probabilities for assortment s under preference theta.

    P(i) = exp(x_i.theta) / (1 + sum_j exp(x_j.theta)) for offered i, and
    P(no purchase) takes the remaining 1 / (1 + sum_j ...) mass.
    """
    s = catalog.check_assortment(s)
    w, w0 = _stable_weights(catalog, s, theta)
    denom = w0 + w.sum()
    return ChoiceDistribution(items=s, item_probs=w / denom, no_purchase=w0 / denom)


def expected_revenue(catalog: Catalog, s: Iterable[int], theta: np.ndarray) -> float:
    """Expected revenue of offering s: sum_i r_i P(i | s; theta).

    The empty assortment is a valid degenerate input and yields 0.
    """
    s = catalog.check_assortment(s)
    if not s:
        return 0.0
    dist = choice_probabilities(catalog, s, theta)
    r = catalog.revenues[np.asarray(s, dtype=int) - 1]
    return float(r @ dist.item_probs)


def expected_revenue_gradient(catalog: Catalog, s: Iterable[int], theta: np.ndarray) -> np.ndarray:
    """Gradient of expected_revenue with respect to theta.

    With p_i = P(i|s;theta) and v = expected revenue, the analytic form is
    sum_i p_i (r_i - v) x_i.
    """
    s = catalog.check_assortment(s)
    if not s:
        raise ValueError("gradient is undefined for the empty assortment")
    dist = choice_probabilities(catalog, s, theta)
    idx = np.asarray(s, dtype=int) - 1
    r = catalog.revenues[idx]
    x = catalog.features[idx]
    v = float(r @ dist.item_probs)
    return (dist.item_probs * (r - v)) @ x


def sample_choice(
    catalog: Catalog, s: Iterable[int], theta: np.ndarray, rng: np.random.Generator
) -> int:
    """Draw one purchase outcome from s (1-based item index) or 0 for no purchase."""
    s = catalog.check_assortment(s)
    if not s:
        raise ValueError("cannot sample a choice from the empty assortment")
    dist = choice_probabilities(catalog, s, theta)
    k = int(rng.choice(len(s) + 1, p=dist.as_array()))
    return 0 if k == len(s) else s[k]
