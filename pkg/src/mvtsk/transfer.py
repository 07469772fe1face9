"""Transfer penalties: distribution matching and consequent anchoring.

Two penalties tie the target-domain model to the source domain.  The
distribution-match term scores the gap between the mean mapped source
sample and the mean mapped target sample, projected through the model
coefficients; its quadratic form is the outer product of that mean gap.
The anchor term is the squared distance between the current consequents
and the source-trained ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .antecedent import AntecedentBank
from .core import ValidationError
from .fuzzy_map import FuzzyDesignMatrix
from .tsk import ConsequentBlock


@dataclass(frozen=True)
class MmdMatrix:
    """Rank-one quadratic form for one view's mean-gap penalty."""

    matrix: np.ndarray
    mean_gap: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=float)
        gap = np.asarray(self.mean_gap, dtype=float)
        if gap.ndim != 1 or mat.shape != (gap.size, gap.size):
            raise ValidationError(
                f"matrix shape {mat.shape} does not match gap length {gap.size}"
            )
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "mean_gap", gap)


@dataclass(frozen=True)
class SourceKnowledge:
    """Everything the target trainer reuses from the source domain."""

    banks: tuple[AntecedentBank, ...]
    consequents: tuple[ConsequentBlock, ...]

    def __post_init__(self) -> None:
        if len(self.banks) != len(self.consequents):
            raise ValidationError("banks and consequents must align per view")
        object.__setattr__(self, "banks", tuple(self.banks))
        object.__setattr__(self, "consequents", tuple(self.consequents))

    @property
    def n_views(self) -> int:
        return len(self.banks)


def _matrix_of(design: FuzzyDesignMatrix | np.ndarray) -> np.ndarray:
    mat = design.matrix if isinstance(design, FuzzyDesignMatrix) else design
    return np.asarray(mat, dtype=float)


def build_mmd(
    source_design: FuzzyDesignMatrix | np.ndarray,
    target_design: FuzzyDesignMatrix | np.ndarray,
) -> MmdMatrix:
    """Mean-gap quadratic form between two mapped domains.

    Both designs must be non-empty and share the mapped dimension.  The
    returned matrix is the outer product of the mean gap with itself, so
    it is exactly symmetric and positive semidefinite with rank <= 1.
    """
    src = _matrix_of(source_design)
    tgt = _matrix_of(target_design)
    if src.ndim != 2 or tgt.ndim != 2:
        raise ValidationError("designs must be 2-D")
    if src.shape[0] == 0 or tgt.shape[0] == 0:
        raise ValidationError("domain means are undefined for empty designs")
    if src.shape[1] != tgt.shape[1]:
        raise ValidationError(
            f"mapped dims differ: {src.shape[1]} vs {tgt.shape[1]}"
        )
    gap = src.mean(axis=0) - tgt.mean(axis=0)
    return MmdMatrix(matrix=np.outer(gap, gap), mean_gap=gap)


def mmd_value(
    coeffs: Sequence[np.ndarray], penalties: Sequence[MmdMatrix]
) -> float:
    """Sum over views and classes of p' Omega p for coefficient columns p."""
    if len(coeffs) != len(penalties):
        raise ValidationError("need one penalty matrix per view")
    total = 0.0
    for block, pen in zip(coeffs, penalties):
        mat = np.asarray(block, dtype=float)
        if mat.shape[0] != pen.mean_gap.size:
            raise ValidationError(
                f"coefficients have {mat.shape[0]} rows, penalty expects "
                f"{pen.mean_gap.size}"
            )
        proj = pen.mean_gap @ mat
        total += float(proj @ proj)
    return total


def anchor_value(
    coeffs: Sequence[np.ndarray], reference: Sequence[np.ndarray]
) -> float:
    """Squared distance between current and reference consequents."""
    if len(coeffs) != len(reference):
        raise ValidationError("need one reference block per view")
    total = 0.0
    for cur, ref in zip(coeffs, reference):
        cur = np.asarray(cur, dtype=float)
        ref = np.asarray(ref, dtype=float)
        if cur.shape != ref.shape:
            raise ValidationError(
                f"coefficient shapes differ: {cur.shape} vs {ref.shape}"
            )
        total += float(((cur - ref) ** 2).sum())
    return total


def transfer_value(
    coeffs: Sequence[np.ndarray],
    reference: Sequence[np.ndarray],
    penalties: Sequence[MmdMatrix] | None,
    lam_transfer: float,
    lam_mmd: float,
) -> float:
    """Combined transfer objective: anchor plus distribution match."""
    if lam_transfer < 0 or lam_mmd < 0:
        raise ValidationError("transfer coefficients must be >= 0")
    total = 0.0
    if lam_transfer > 0:
        total += lam_transfer * anchor_value(coeffs, reference)
    if lam_mmd > 0:
        if penalties is None:
            raise ValidationError("lam_mmd > 0 requires penalty matrices")
        total += lam_mmd * mmd_value(coeffs, penalties)
    return total
