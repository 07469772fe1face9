"""Rule antecedents: fuzzy c-means clustering and Gaussian memberships.

Each fuzzy rule holds one Gaussian per input dimension; a rule's firing
strength is the product of its per-dimension memberships.  Centers come
from fuzzy c-means with a deterministic quantile initialisation so the
whole pipeline is reproducible without a seed, and spreads are the
membership-weighted standard deviations around the converged centers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import ValidationError

# Spreads below this are clamped so memberships stay well defined.
SPREAD_FLOOR = 1e-4


@dataclass(frozen=True)
class AntecedentBank:
    """Gaussian antecedent parameters for one view's rule base.

    ``centers`` and ``spreads`` are both (rules, dim); ``scale`` is the
    multiplier that was applied to the raw spreads.
    """

    centers: np.ndarray
    spreads: np.ndarray
    scale: float = 1.0

    def __post_init__(self) -> None:
        centers = np.asarray(self.centers, dtype=float)
        spreads = np.asarray(self.spreads, dtype=float)
        if centers.ndim != 2 or centers.shape != spreads.shape:
            raise ValidationError(
                "centers and spreads must be 2-D with matching shapes, got "
                f"{centers.shape} and {spreads.shape}"
            )
        if not (np.all(np.isfinite(centers)) and np.all(np.isfinite(spreads))):
            raise ValidationError("antecedent parameters contain NaN or Inf")
        if np.any(spreads <= 0):
            raise ValidationError("spreads must be positive")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "spreads", spreads)

    @property
    def rules(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]


def _fcm_memberships(sq_dist: np.ndarray, fuzzifier: float) -> np.ndarray:
    """Membership matrix from squared point-center distances.

    Rows where some distance is zero (or vanishes relative to the row
    maximum) split membership uniformly over the coincident centers.
    """
    expo = 1.0 / (fuzzifier - 1.0)
    scale = sq_dist.max(axis=1, keepdims=True)
    scale = np.where(scale > 0.0, scale, 1.0)
    ratio = sq_dist / scale
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inv = ratio ** (-expo)
        u = inv / inv.sum(axis=1, keepdims=True)
    hard = ~np.isfinite(inv)
    hard_rows = hard.any(axis=1)
    if hard_rows.any():
        u[hard_rows] = hard[hard_rows] / hard[hard_rows].sum(axis=1, keepdims=True)
    return u


def cluster_antecedents(
    data: np.ndarray,
    rules: int,
    fuzzifier: float = 2.0,
    spread_scale: float = 1.0,
    max_iters: int = 200,
    tol: float = 1e-6,
) -> AntecedentBank:
    """Fit Gaussian rule antecedents to one view's training data.

    Runs fuzzy c-means with ``rules`` clusters.  Centers are initialised
    at per-feature quantiles k/(rules+1), k = 1..rules, which makes the
    procedure deterministic.  Iteration stops when the largest center
    movement drops below ``tol`` or after ``max_iters`` sweeps.  Spreads
    are scaled by ``spread_scale`` and clamped below at
    :data:`SPREAD_FLOOR`; a clamp triggers a warning because it usually
    means a zero-variance feature.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValidationError(f"data must be 2-D, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise ValidationError("data contains NaN or Inf")
    n, dim = data.shape
    if rules < 1:
        raise ValidationError(f"rules must be >= 1, got {rules}")
    if n < rules:
        raise ValidationError(f"need at least {rules} samples, got {n}")
    if fuzzifier <= 1.0:
        raise ValidationError(f"fuzzifier must be > 1, got {fuzzifier}")
    if spread_scale <= 0.0:
        raise ValidationError(f"spread_scale must be positive, got {spread_scale}")

    probs = (np.arange(rules) + 1.0) / (rules + 1.0)
    centers = np.quantile(data, probs, axis=0)
    if rules == 1:
        centers = centers.reshape(1, dim)

    for _ in range(max_iters):
        sq_dist = ((data[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        u = _fcm_memberships(sq_dist, fuzzifier)
        um = u**fuzzifier
        mass = um.sum(axis=0)
        # A cluster can lose all mass when duplicates collapse onto others;
        # keep its previous center in that case.
        safe = np.where(mass > 0.0, mass, 1.0)
        new_centers = (um.T @ data) / safe[:, None]
        new_centers = np.where((mass > 0.0)[:, None], new_centers, centers)
        shift = np.max(np.abs(new_centers - centers)) if rules else 0.0
        centers = new_centers
        if shift < tol:
            break

    sq_diff = (data[:, None, :] - centers[None, :, :]) ** 2
    um = _fcm_memberships(sq_diff.sum(axis=2), fuzzifier) ** fuzzifier
    mass = um.sum(axis=0)
    safe = np.where(mass > 0.0, mass, 1.0)
    variances = (um[:, :, None] * sq_diff).sum(axis=0) / safe[:, None]
    spreads = spread_scale * np.sqrt(variances)
    if np.any(spreads < SPREAD_FLOOR):
        warnings.warn(
            "clamping near-zero rule spreads; some features have no "
            "variance within a cluster",
            RuntimeWarning,
            stacklevel=2,
        )
        spreads = np.maximum(spreads, SPREAD_FLOOR)
    return AntecedentBank(centers=centers, spreads=spreads, scale=spread_scale)


def log_memberships(data: np.ndarray, bank: AntecedentBank) -> np.ndarray:
    """Log rule memberships for each row of ``data``, shape (n, rules).

    The membership of rule k is the product over dimensions of
    exp(-(x_i - c_ki)^2 / (2 s_ki^2)); working in log space avoids
    underflow for high-dimensional views.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != bank.dim:
        raise ValidationError(
            f"data has shape {data.shape}, expected (n, {bank.dim})"
        )
    with np.errstate(over="ignore"):
        z = (data[:, None, :] - bank.centers[None, :, :]) / bank.spreads[None, :, :]
        return -0.5 * (z**2).sum(axis=2)


def membership(x: np.ndarray, bank: AntecedentBank, rule: int) -> float:
    """Unnormalised membership of one sample under one rule."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != bank.dim:
        raise ValidationError(
            f"sample has shape {x.shape}, expected ({bank.dim},)"
        )
    if rule < 0 or rule >= bank.rules:
        raise ValidationError(f"rule index {rule} outside [0, {bank.rules})")
    logs = log_memberships(x[None, :], bank)
    return float(np.exp(logs[0, rule]))
