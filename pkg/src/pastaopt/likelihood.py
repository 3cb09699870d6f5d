"""Empirical negative log-likelihood, MLE fitting, and the confidence region.

The dataset is the usual offline log: for each customer visit, the shown
assortment S_i, the chosen item A_i (0 for no purchase), and the realized
revenue R_i. Fitting minimizes the sample-average negative log choice
probability over the preference ball; the confidence region collects every
theta whose likelihood gap to the MLE is at most a radius alpha.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .model import Assortment, Catalog, ParamSpace, as_assortment

__all__ = [
    "OfflineDataset",
    "FitOptions",
    "MleFit",
    "ConfidenceRegion",
    "neg_log_likelihood",
    "nll_gradient",
    "fit_mle",
    "confidence_radius",
]


class OfflineDataset:
    """n records of (assortment shown, item chosen, revenue realized).

    Assortments are sorted tuples of 1-based indices; choice 0 means no
    purchase. Instances are immutable by convention; internal matrices for
    vectorized likelihood evaluation are built lazily and cached.
    """

    def __init__(
        self,
        assortments: Sequence[Iterable[int]],
        choices: Sequence[int],
        revenues: Sequence[float],
    ):
        if not (len(assortments) == len(choices) == len(revenues)):
            raise ValueError("assortments, choices, revenues must have equal length")
        self.assortments: list[Assortment] = [as_assortment(s) for s in assortments]
        self.choices = np.asarray(choices, dtype=int)
        self.revenues = np.asarray(revenues, dtype=float)
        for s, a in zip(self.assortments, self.choices):
            if not s:
                raise ValueError("dataset records must have nonempty assortments")
            if a != 0 and a not in s:
                raise ValueError(f"choice {a} not offered in assortment {s}")
        if np.any(self.revenues < 0):
            raise ValueError("revenues must be nonnegative")
        self._cache: dict[int, tuple] = {}

    @property
    def n(self) -> int:
        return len(self.assortments)

    def __len__(self) -> int:
        return self.n

    def records(self) -> Iterator[tuple[Assortment, int, float]]:
        for s, a, r in zip(self.assortments, self.choices, self.revenues):
            yield s, int(a), float(r)

    def _matrices(self, catalog: Catalog) -> tuple:
        """Padded index/mask matrices for vectorized likelihood evaluation."""
        key = id(catalog)
        if key not in self._cache:
            if self.n == 0:
                raise ValueError("dataset is empty")
            max_k = max(len(s) for s in self.assortments)
            idx = np.zeros((self.n, max_k), dtype=int)
            mask = np.zeros((self.n, max_k), dtype=bool)
            for i, s in enumerate(self.assortments):
                if s[-1] > catalog.n_items:
                    raise ValueError(f"record {i} references item beyond catalog size")
                idx[i, : len(s)] = np.asarray(s, dtype=int) - 1
                mask[i, : len(s)] = True
            chosen = self.choices - 1  # -1 marks no purchase
            # the catalog reference pins its id for the cache's lifetime
            self._cache[key] = (catalog, (idx, mask, chosen))
        return self._cache[key][1]

    # CSV format: header sample_id,assortment,choice,revenue with the
    # assortment as semicolon-joined sorted 1-based indices.
    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["sample_id", "assortment", "choice", "revenue"])
            for i, (s, a, r) in enumerate(self.records(), start=1):
                writer.writerow([i, ";".join(str(j) for j in s), a, f"{r:.17g}"])

    @classmethod
    def load_csv(cls, path: str | Path) -> "OfflineDataset":
        assortments, choices, revenues = [], [], []
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            header = next(reader)
            if header != ["sample_id", "assortment", "choice", "revenue"]:
                raise ValueError(f"unexpected dataset CSV header: {header}")
            for row in reader:
                assortments.append(tuple(int(t) for t in row[1].split(";") if t))
                choices.append(int(row[2]))
                revenues.append(float(row[3]))
        return cls(assortments, choices, revenues)


def _log_denominators(catalog: Catalog, dataset: OfflineDataset, theta: np.ndarray):
    """Per-record log(1 + sum_{j in S_i} exp(u_j)) and the padded utility rows."""
    idx, mask, chosen = dataset._matrices(catalog)
    u = catalog.utilities(theta)
    rows = np.where(mask, u[idx], -np.inf)
    m = np.maximum(0.0, rows.max(axis=1))
    log_denom = m + np.log(np.exp(-m) + np.where(mask, np.exp(rows - m[:, None]), 0.0).sum(axis=1))
    return rows, log_denom, (idx, mask, chosen), u


def neg_log_likelihood(dataset: OfflineDataset, catalog: Catalog, theta: np.ndarray) -> float:
    """Sample-average negative log choice probability of the observed choices."""
    if dataset.n == 0:
        raise ValueError("dataset is empty")
    _, log_denom, (idx, mask, chosen), u = _log_denominators(catalog, dataset, theta)
    chosen_u = np.where(chosen >= 0, u[np.maximum(chosen, 0)], 0.0)
    value = float(np.mean(log_denom - chosen_u))
    if not math.isfinite(value):
        raise FloatingPointError("non-finite likelihood; data or theta out of range")
    return value


def nll_gradient(dataset: OfflineDataset, catalog: Catalog, theta: np.ndarray) -> np.ndarray:
    """Gradient of neg_log_likelihood in theta.

    Per record the score is sum_{j in S} P(j|S;theta) x_j - x_A (dropping
    the x_A term for no-purchase records); the result averages over records.
    Accumulation happens in per-item weight space so a single (N, d) product
    yields the gradient.
    """
    if dataset.n == 0:
        raise ValueError("dataset is empty")
    rows, log_denom, (idx, mask, chosen), _ = _log_denominators(catalog, dataset, theta)
    probs = np.where(mask, np.exp(rows - log_denom[:, None]), 0.0)
    item_weight = np.zeros(catalog.n_items)
    np.add.at(item_weight, idx[mask], probs[mask])
    purchase = chosen >= 0
    np.add.at(item_weight, chosen[purchase], -1.0)
    return (item_weight @ catalog.features) / dataset.n


@dataclass(frozen=True)
class FitOptions:
    """Gradient-descent controls for MLE fitting."""

    max_iters: int = 5000
    grad_tol: float = 1e-6
    step_size: float = 1.0
    max_halvings: int = 60

    def __post_init__(self):
        if self.max_iters < 1 or self.max_halvings < 1:
            raise ValueError("iteration counts must be positive")
        if self.grad_tol <= 0 or self.step_size <= 0:
            raise ValueError("grad_tol and step_size must be positive")


@dataclass(frozen=True)
class MleFit:
    """Result of fit_mle: the estimate plus convergence bookkeeping."""

    theta: np.ndarray
    converged: bool
    n_iters: int
    nll: float
    grad_norm: float


def fit_mle(
    dataset: OfflineDataset,
    catalog: Catalog,
    space: ParamSpace | None = None,
    opts: FitOptions | None = None,
) -> MleFit:
    """Maximize the likelihood by projected gradient descent from theta = 0.

    Each iteration starts the step at opts.step_size and halves it until the
    loss does not increase; iterates are projected onto the preference ball
    after every step. Stops when the gradient norm reaches grad_tol, when no
    projected step can improve the loss (boundary or numerically stationary
    iterate), or after max_iters.
    """
    space = space or ParamSpace(dim=catalog.dim)
    if space.dim != catalog.dim:
        raise ValueError("parameter space dimension must match catalog features")
    opts = opts or FitOptions()
    theta = np.zeros(catalog.dim)
    nll = neg_log_likelihood(dataset, catalog, theta)
    grad = nll_gradient(dataset, catalog, theta)
    grad_norm = float(np.linalg.norm(grad))
    it = 0
    while grad_norm > opts.grad_tol and it < opts.max_iters:
        step = opts.step_size
        accepted = False
        for _ in range(opts.max_halvings):
            cand = space.project(theta - step * grad)
            cand_nll = neg_log_likelihood(dataset, catalog, cand)
            if cand_nll <= nll:
                accepted = True
                break
            step *= 0.5
        if not accepted or (cand_nll == nll and np.array_equal(cand, theta)):
            break  # no improving projected step exists at float resolution
        theta, nll = cand, cand_nll
        grad = nll_gradient(dataset, catalog, theta)
        grad_norm = float(np.linalg.norm(grad))
        it += 1
    return MleFit(
        theta=theta,
        converged=grad_norm <= opts.grad_tol,
        n_iters=it,
        nll=nll,
        grad_norm=grad_norm,
    )


def confidence_radius(
    mode: str,
    *,
    nll_at_ml: float | None = None,
    dim: int | None = None,
    n: int | None = None,
    theta_max: float | None = None,
    delta: float | None = None,
    c_a: float = 1.0,
    factor: float = 1.0,
) -> float:
    """Radius alpha of the likelihood-ratio confidence region.

    mode "empirical": 2 * (NLL at the MLE). mode "theoretical": the
    rate-shaped radius factor * (c_a * dim / n) * log(theta_max / delta),
    with the constant factor and delta supplied by the caller.
    """
    if mode == "empirical":
        if nll_at_ml is None:
            raise ValueError("empirical mode needs nll_at_ml")
        alpha = 2.0 * nll_at_ml
    elif mode == "theoretical":
        if None in (dim, n, theta_max, delta):
            raise ValueError("theoretical mode needs dim, n, theta_max, delta")
        alpha = factor * (c_a * dim / n) * math.log(theta_max / delta)
    else:
        raise ValueError(f"unknown confidence radius mode {mode!r}")
    if not alpha > 0:
        raise ValueError(f"degenerate confidence radius {alpha}; check the dataset")
    return float(alpha)


@dataclass(frozen=True)
class ConfidenceRegion:
    """All theta in the ball whose likelihood gap to the MLE is within alpha.

    Membership caches the NLL at the MLE so repeated tests never drift with
    re-evaluation order.
    """

    theta_ml: np.ndarray
    alpha: float
    dataset: OfflineDataset
    catalog: Catalog
    space: ParamSpace
    nll_at_ml: float

    @classmethod
    def from_fit(
        cls,
        fit: MleFit,
        dataset: OfflineDataset,
        catalog: Catalog,
        space: ParamSpace,
        alpha: float,
    ) -> "ConfidenceRegion":
        return cls(
            theta_ml=fit.theta,
            alpha=alpha,
            dataset=dataset,
            catalog=catalog,
            space=space,
            nll_at_ml=fit.nll,
        )

    def contains(self, theta: np.ndarray) -> bool:
        theta = np.asarray(theta, dtype=float)
        if not self.space.contains(theta):
            return False
        gap = neg_log_likelihood(self.dataset, self.catalog, theta) - self.nll_at_ml
        return gap <= self.alpha
