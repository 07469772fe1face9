"""Mapping raw feature vectors into the fuzzy rule feature space.

A sample x with d features becomes one block per rule: the normalised
firing strength of the rule times the augmented vector [1, x].  Blocks
are concatenated rule-by-rule, giving a vector of length
rules * (d + 1).  A linear function of this mapped vector is exactly a
first-order fuzzy rule system evaluated at x, which is what lets the
trainers work with plain ridge algebra.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .antecedent import AntecedentBank, log_memberships
from .core import ValidationError, ViewDataset


@dataclass(frozen=True)
class FuzzyDesignMatrix:
    """Mapped design matrix for one view plus the bank that produced it."""

    view_id: int
    matrix: np.ndarray
    bank: AntecedentBank

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=float)
        expect = self.bank.rules * (self.bank.dim + 1)
        if mat.ndim != 2 or mat.shape[1] != expect:
            raise ValidationError(
                f"mapped matrix has shape {mat.shape}, expected (n, {expect})"
            )
        object.__setattr__(self, "matrix", mat)

    @property
    def n_samples(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def firing_strength_matrix(data: np.ndarray, bank: AntecedentBank) -> np.ndarray:
    """Normalised firing strengths, shape (n, rules); rows sum to 1.

    Normalisation happens in log space (shift by the row maximum before
    exponentiating), so rows stay finite whenever any rule has non-zero
    membership.  Rows where every membership underflows to exp(-inf) fall
    back to uniform strengths with a warning.
    """
    logs = log_memberships(data, bank)
    n, rules = logs.shape
    if n == 0:
        return np.zeros((0, rules))
    top = logs.max(axis=1, keepdims=True)
    dead = ~np.isfinite(top[:, 0])
    shifted = np.exp(logs - np.where(np.isfinite(top), top, 0.0))
    with np.errstate(invalid="ignore"):
        out = shifted / shifted.sum(axis=1, keepdims=True)
    if dead.any():
        warnings.warn(
            f"firing strengths vanished for {int(dead.sum())} sample(s); "
            "falling back to uniform strengths",
            RuntimeWarning,
            stacklevel=2,
        )
        out[dead] = 1.0 / rules
    return out


def firing_strengths(x: np.ndarray, bank: AntecedentBank) -> np.ndarray:
    """Normalised firing strengths of a single sample, shape (rules,)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValidationError(f"sample must be 1-D, got shape {x.shape}")
    return firing_strength_matrix(x[None, :], bank)[0]


def map_sample(x: np.ndarray, bank: AntecedentBank) -> np.ndarray:
    """Map one sample into the rule feature space, length rules*(d+1)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != bank.dim:
        raise ValidationError(
            f"sample has shape {x.shape}, expected ({bank.dim},)"
        )
    strengths = firing_strengths(x, bank)
    augmented = np.concatenate(([1.0], x))
    return (strengths[:, None] * augmented[None, :]).reshape(-1)


def map_dataset(view: ViewDataset, bank: AntecedentBank) -> FuzzyDesignMatrix:
    """Map every sample of a view; block k holds strength_k * [1, x]."""
    data = view.data
    if data.shape[1] != bank.dim:
        raise ValidationError(
            f"view dim {data.shape[1]} does not match bank dim {bank.dim}"
        )
    n = data.shape[0]
    if n == 0:
        mat = np.zeros((0, bank.rules * (bank.dim + 1)))
        return FuzzyDesignMatrix(view_id=view.view_id, matrix=mat, bank=bank)
    strengths = firing_strength_matrix(data, bank)
    augmented = np.hstack([np.ones((n, 1)), data])
    mat = (strengths[:, :, None] * augmented[:, None, :]).reshape(n, -1)
    return FuzzyDesignMatrix(view_id=view.view_id, matrix=mat, bank=bank)
