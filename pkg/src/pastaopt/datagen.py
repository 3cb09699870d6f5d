"""Synthetic instance and offline-dataset generation.

An instance is a catalog plus a known ground-truth preference vector and
its optimal assortment, so the regret of any solver output is computable
exactly. Offline datasets are logged under a design that shows the optimal
assortment with probability p and spreads the rest uniformly over every
other feasible assortment, which makes coverage of the optimum the only
guaranteed property of the log.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable

import numpy as np

from .lp import best_assortment, cardinality_constraints
from .model import Assortment, Catalog, as_assortment, expected_revenue, sample_choice
from .likelihood import OfflineDataset
from .rng import derive_rng

__all__ = [
    "InstanceConfig",
    "Instance",
    "SamplingDesign",
    "count_assortments",
    "generate_instance",
    "sample_assortment",
    "generate_dataset",
]

_MAX_REJECTIONS = 100_000


def count_assortments(n_items: int, k: int) -> int:
    """Number of nonempty assortments of size at most k, as an exact integer."""
    if not 1 <= k <= n_items <= 64:
        raise ValueError(f"need 1 <= k <= n_items <= 64, got k={k}, n_items={n_items}")
    return sum(math.comb(n_items, j) for j in range(1, k + 1))


@dataclass(frozen=True)
class InstanceConfig:
    """Scenario knobs: catalog size, cardinality bound, feature dimension,
    how the true preference vector is drawn, and the acceptance threshold
    tau enforced on every item's utility (x_i . theta_star <= tau)."""

    n_items: int
    k: int
    dim: int
    seed: int
    theta_star_mode: str = "unit-sphere"
    tau: float = -0.6
    r_lo: float = 0.5
    r_hi: float = 0.8

    def __post_init__(self):
        if not 1 <= self.k <= self.n_items:
            raise ValueError("need 1 <= k <= n_items")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.r_lo > self.r_hi:
            raise ValueError("empty revenue range")
        if self.tau >= 0:
            raise ValueError("tau must be negative")
        if self.theta_star_mode not in ("unit-sphere", "iid-uniform"):
            raise ValueError(f"unknown theta_star_mode {self.theta_star_mode!r}")


@dataclass(frozen=True)
class Instance:
    """A fully known scenario: catalog, truth, and the true optimum."""

    catalog: Catalog
    theta_star: np.ndarray
    s_star: Assortment
    v_star: float
    config: InstanceConfig

    def to_json_dict(self) -> dict:
        d = self.catalog.to_json_dict()
        d["theta_star"] = [float(v) for v in self.theta_star]
        d["s_star"] = list(self.s_star)
        d["v_star"] = self.v_star
        d["config"] = asdict(self.config)
        return d

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Instance":
        return cls(
            catalog=Catalog.from_json_dict(obj),
            theta_star=np.asarray(obj["theta_star"], dtype=float),
            s_star=as_assortment(obj["s_star"]),
            v_star=float(obj["v_star"]),
            config=InstanceConfig(**obj["config"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Instance":
        return cls.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _unit_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    # normalizing a standard normal draw is rotation invariant, hence uniform
    while True:
        z = rng.standard_normal(dim)
        norm = float(np.linalg.norm(z))
        if norm > 1e-12:
            return z / norm


def generate_instance(cfg: InstanceConfig) -> Instance:
    """Draw a scenario and compute its ground-truth optimal assortment.

    theta_star is a uniform unit vector (or iid Uniform[-1,1] coordinates in
    iid-uniform mode); item features are uniform unit vectors re-drawn until
    x_i . theta_star <= tau, so no single item dominates; revenues are
    uniform on [r_lo, r_hi]. The optimum is computed with the LP.
    """
    theta_rng = derive_rng(cfg.seed, 0, "theta")
    feat_rng = derive_rng(cfg.seed, 0, "features")
    rev_rng = derive_rng(cfg.seed, 0, "revenues")
    if cfg.theta_star_mode == "unit-sphere":
        theta_star = _unit_vector(theta_rng, cfg.dim)
    else:
        theta_star = theta_rng.uniform(-1.0, 1.0, size=cfg.dim)
    features = np.empty((cfg.n_items, cfg.dim))
    for i in range(cfg.n_items):
        for attempt in range(_MAX_REJECTIONS):
            x = _unit_vector(feat_rng, cfg.dim)
            if float(x @ theta_star) <= cfg.tau:
                features[i] = x
                break
        else:
            raise RuntimeError(
                f"could not draw a feature with utility <= {cfg.tau} in "
                f"{_MAX_REJECTIONS} attempts; threshold unreachable for this theta_star"
            )
    revenues = rev_rng.uniform(cfg.r_lo, cfg.r_hi, size=cfg.n_items)
    catalog = Catalog(features=features, revenues=revenues)
    s_star = best_assortment(catalog, theta_star, cardinality_constraints(cfg.n_items, cfg.k))
    v_star = expected_revenue(catalog, s_star, theta_star)
    return Instance(
        catalog=catalog, theta_star=theta_star, s_star=s_star, v_star=v_star, config=cfg
    )


@dataclass(frozen=True)
class SamplingDesign:
    """Logging policy: mass p on the optimal assortment, the remaining
    (1 - p) split evenly over every other assortment of size 1..k."""

    p: float
    n_items: int
    k: int
    n_assortments: int = field(init=False)

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError("p must lie strictly between 0 and 1")
        object.__setattr__(self, "n_assortments", count_assortments(self.n_items, self.k))

    def mass_of(self, s: Iterable[int], s_star: Iterable[int]) -> float:
        s, s_star = as_assortment(s), as_assortment(s_star)
        if s == s_star:
            return self.p
        return (1.0 - self.p) / (self.n_assortments - 1)


def _uniform_below(rng: np.random.Generator, total: int) -> int:
    """Uniform integer in [0, total) for arbitrarily large totals."""
    nbits = total.bit_length()
    nbytes = (nbits + 7) // 8
    mask = (1 << nbits) - 1
    while True:
        t = int.from_bytes(rng.bytes(nbytes), "little") & mask
        if t < total:
            return t


def sample_assortment(
    instance: Instance, design: SamplingDesign, rng: np.random.Generator
) -> Assortment:
    """One draw from the logging policy.

    With probability p the optimal assortment; otherwise a size j is drawn
    with exact weight C(N, j), a uniform j-subset is drawn, and the pair is
    re-drawn whenever it collides with the optimum, which leaves the draw
    exactly uniform over the remaining assortments.
    """
    if rng.random() < design.p:
        return instance.s_star
    n, k = design.n_items, design.k
    cumulative = []
    total = 0
    for j in range(1, k + 1):
        total += math.comb(n, j)
        cumulative.append(total)
    while True:
        t = _uniform_below(rng, total)
        size = 1 + next(i for i, c in enumerate(cumulative) if t < c)
        s = as_assortment(int(j) + 1 for j in rng.choice(n, size=size, replace=False))
        if s != instance.s_star:
            return s


def generate_dataset(
    instance: Instance, design: SamplingDesign, n: int, rng: np.random.Generator
) -> OfflineDataset:
    """n i.i.d. logged records: assortment from the design, choice from the
    true MNL, revenue of the chosen item (0 for no purchase).

    The generator is split into one stream per record component, so
    extending n appends records without reshuffling earlier ones.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    assort_rng, choice_rng = rng.spawn(2)
    assortments, choices, revenues = [], [], []
    for _ in range(n):
        s = sample_assortment(instance, design, assort_rng)
        a = sample_choice(instance.catalog, s, instance.theta_star, choice_rng)
        assortments.append(s)
        choices.append(a)
        revenues.append(0.0 if a == 0 else float(instance.catalog.revenues[a - 1]))
    return OfflineDataset(assortments, choices, revenues)
