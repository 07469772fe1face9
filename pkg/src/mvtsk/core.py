"""Shared domain types, label encoding, and input validation.

Every estimator in this package consumes the types defined here.  A sample
is described by one feature vector per view; a domain (source or target) is
a :class:`MultiViewDataset` whose views all index the same underlying
samples in the same order.  Labels are carried as one-hot rows so they can
be used directly as regression targets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DOMAIN_TAGS = ("source", "target")


class ValidationError(ValueError):
    """Raised when an input violates a documented invariant."""


def _as_matrix(a: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class LabeledSample:
    """A single sample: one feature vector and its class index."""

    features: np.ndarray
    label: int

    def __post_init__(self) -> None:
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim != 1:
            raise ValidationError(
                f"sample features must be 1-D, got shape {feats.shape}"
            )
        if not np.all(np.isfinite(feats)):
            raise ValidationError("sample features contain NaN or Inf")
        if int(self.label) < 0:
            raise ValidationError(f"label must be non-negative, got {self.label}")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "label", int(self.label))


@dataclass(frozen=True)
class ViewDataset:
    """Feature matrix for one view of one domain.

    ``data`` has one row per sample.  ``labels``, when present, is the
    one-hot matrix shared by every view of the same dataset.
    """

    view_id: int
    data: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "data", _as_matrix(self.data, "view data"))
        if self.labels is not None:
            lab = _as_matrix(self.labels, "labels")
            object.__setattr__(self, "labels", lab)

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class MultiViewDataset:
    """All views of one domain, row-aligned across views."""

    views: tuple[ViewDataset, ...]
    domain_tag: str = "source"

    def __post_init__(self) -> None:
        object.__setattr__(self, "views", tuple(self.views))

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def n_samples(self) -> int:
        return self.views[0].n_samples if self.views else 0

    @property
    def labels(self) -> np.ndarray | None:
        return self.views[0].labels if self.views else None

    @property
    def n_classes(self) -> int:
        lab = self.labels
        if lab is None:
            raise ValidationError("dataset carries no labels")
        return lab.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    """Hyper-parameters for the multi-view transfer trainer.

    ``rules`` is the number of fuzzy rules per view, ``fuzzy_index`` the
    exponent applied to view weights, ``lam_reg`` the coefficient penalty,
    ``lam_transfer`` the pull toward source consequents, ``lam_mmd`` the
    distribution-matching penalty, and ``lam_consensus`` the cross-view
    agreement penalty.  ``prior_refresh`` re-seeds the cross-view reference
    consequents from the current iterate after each sweep instead of
    keeping the source-trained ones.
    """

    rules: int = 3
    fuzzy_index: float = 2.0
    lam_reg: float = 0.1
    lam_transfer: float = 0.1
    lam_mmd: float = 0.1
    lam_consensus: float = 0.1
    max_iters: int = 10
    tol: float = 1e-6
    spread_scale: float = 1.0
    prior_refresh: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.rules < 1:
            raise ValidationError(f"rules must be >= 1, got {self.rules}")
        if self.fuzzy_index <= 0:
            raise ValidationError(
                f"fuzzy_index must be positive, got {self.fuzzy_index}"
            )
        for name in ("lam_reg", "lam_transfer", "lam_mmd", "lam_consensus"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol <= 0:
            raise ValidationError(f"tol must be positive, got {self.tol}")
        if self.spread_scale <= 0:
            raise ValidationError(
                f"spread_scale must be positive, got {self.spread_scale}"
            )


@dataclass(frozen=True)
class FeatureStats:
    """Per-feature z-score statistics for one view.

    ``std`` entries are floored to 1.0 wherever the training data had no
    variance, so applying the stats never divides by zero.
    """

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        std = np.asarray(self.std, dtype=float)
        if mean.ndim != 1 or mean.shape != std.shape:
            raise ValidationError(
                f"stats must be matching 1-D vectors, got {mean.shape} "
                f"and {std.shape}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(std))):
            raise ValidationError("stats contain NaN or Inf")
        if np.any(std <= 0):
            raise ValidationError("std entries must be positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @classmethod
    def from_data(cls, data: np.ndarray, std_floor: float = 1e-12) -> "FeatureStats":
        data = _as_matrix(data, "data")
        if data.shape[0] < 1:
            raise ValidationError("need at least one sample to compute stats")
        mean = data.mean(axis=0)
        std = data.std(axis=0)
        std = np.where(std > std_floor, std, 1.0)
        return cls(mean=mean, std=std)

    def apply(self, data: np.ndarray) -> np.ndarray:
        data = _as_matrix(data, "data")
        if data.shape[1] != self.mean.size:
            raise ValidationError(
                f"data has {data.shape[1]} features, stats expect {self.mean.size}"
            )
        return (data - self.mean) / self.std


def one_hot_encode(labels: Sequence[int], n_classes: int) -> np.ndarray:
    """Encode integer class indices as one-hot rows.

    Raises :class:`ValidationError` if any label falls outside
    ``[0, n_classes)``, naming the offending row.
    """
    if n_classes < 1:
        raise ValidationError(f"n_classes must be >= 1, got {n_classes}")
    idx = np.asarray(labels)
    if idx.ndim != 1:
        raise ValidationError(f"labels must be 1-D, got shape {idx.shape}")
    if idx.size and not np.issubdtype(idx.dtype, np.integer):
        cast = idx.astype(int)
        if not np.array_equal(cast, idx):
            raise ValidationError("labels must be integers")
        idx = cast
    out = np.zeros((idx.size, n_classes))
    for row, lab in enumerate(idx):
        if lab < 0 or lab >= n_classes:
            raise ValidationError(
                f"label {lab} at row {row} is outside [0, {n_classes})"
            )
        out[row, lab] = 1.0
    return out


def decode_labels(onehot: np.ndarray) -> np.ndarray:
    """Inverse of :func:`one_hot_encode` for valid one-hot input."""
    mat = _as_matrix(onehot, "one-hot labels")
    return np.argmax(mat, axis=1)


def validate_multiview(dataset: MultiViewDataset) -> MultiViewDataset:
    """Check the cross-view invariants of a dataset and return it.

    Views must be indexed 0..V-1 in order, share one sample count, and
    (when labeled) carry identical one-hot label matrices.
    """
    if dataset.domain_tag not in DOMAIN_TAGS:
        raise ValidationError(
            f"domain_tag must be one of {DOMAIN_TAGS}, got {dataset.domain_tag!r}"
        )
    if dataset.n_views < 1:
        raise ValidationError("dataset must contain at least one view")
    n = dataset.views[0].n_samples
    have_labels = dataset.views[0].labels is not None
    for pos, view in enumerate(dataset.views):
        if view.view_id != pos:
            raise ValidationError(
                f"view at position {pos} has view_id {view.view_id}"
            )
        if view.n_samples != n:
            raise ValidationError(
                f"view {pos} has {view.n_samples} samples, expected {n}"
            )
        if (view.labels is not None) != have_labels:
            raise ValidationError("labels must be present in all views or none")
        if view.labels is not None:
            _check_onehot(view.labels, n)
            if pos and not np.array_equal(view.labels, dataset.views[0].labels):
                raise ValidationError(f"view {pos} labels differ from view 0")
    return dataset


def _check_onehot(labels: np.ndarray, n_rows: int) -> None:
    if labels.shape[0] != n_rows:
        raise ValidationError(
            f"labels have {labels.shape[0]} rows, expected {n_rows}"
        )
    if labels.shape[1] < 1:
        raise ValidationError("labels must have at least one class column")
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise ValidationError("labels must be one-hot (entries 0 or 1)")
    if n_rows and not np.all(labels.sum(axis=1) == 1.0):
        raise ValidationError("each label row must contain exactly one 1")
