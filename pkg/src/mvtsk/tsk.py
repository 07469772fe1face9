"""Single-view TSK fuzzy classifier trained by ridge regression.

With samples mapped into the rule feature space, each class score is a
linear function of the mapped vector, so the consequent parameters of all
rules solve one regularised least-squares problem per class.  This module
is both the data-rich source-domain trainer and the target-only baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .antecedent import AntecedentBank, cluster_antecedents
from .core import ValidationError, ViewDataset
from .fuzzy_map import FuzzyDesignMatrix, map_dataset, map_sample


@dataclass(frozen=True)
class ConsequentBlock:
    """Stacked consequent coefficients for one view.

    ``coeffs`` has shape (rules*(d+1), n_classes); column j scores class j.
    ``ridge`` records the diagonal regularisation used in the solve.
    """

    coeffs: np.ndarray
    ridge: float

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.ndim != 2:
            raise ValidationError(
                f"coefficients must be 2-D, got shape {coeffs.shape}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValidationError("coefficients contain NaN or Inf")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n_classes(self) -> int:
        return self.coeffs.shape[1]


@dataclass(frozen=True)
class TskModel:
    """One view's rule bank plus trained consequents."""

    bank: AntecedentBank
    consequents: ConsequentBlock

    def __post_init__(self) -> None:
        expect = self.bank.rules * (self.bank.dim + 1)
        if self.consequents.coeffs.shape[0] != expect:
            raise ValidationError(
                f"consequents have {self.consequents.coeffs.shape[0]} rows, "
                f"expected {expect}"
            )

    @property
    def n_classes(self) -> int:
        return self.consequents.n_classes


def solve_regularized(
    gram: np.ndarray, rhs: np.ndarray, context: str
) -> np.ndarray:
    """Solve a symmetric positive definite system via Cholesky.

    ``gram`` must be SPD; a factorisation failure is re-raised with a hint
    to increase the ridge penalty, since in this package it always means
    the regulariser was zero on rank-deficient data.
    """
    try:
        factor = scipy.linalg.cho_factor(gram, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"{context}: normal equations are singular; "
            "use a ridge penalty > 0"
        ) from exc
    # LAPACK can round the trailing pivot of an exactly singular matrix up
    # to ~sqrt(eps), so inspect the factor diagonal as well.
    diag = np.abs(np.diag(factor[0]))
    floor = diag.max() ** 2 * diag.size * np.finfo(float).eps
    if diag.min() ** 2 <= floor:
        raise np.linalg.LinAlgError(
            f"{context}: normal equations are singular; "
            "use a ridge penalty > 0"
        )
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


def ridge_consequents(
    design: FuzzyDesignMatrix | np.ndarray, targets: np.ndarray, lam: float
) -> ConsequentBlock:
    """Fit consequent coefficients by ridge regression.

    Solves (lam*I + G'G) P = G'Y with one column per class; the penalty is
    applied across the full rule-augmented coefficient vector.
    """
    mat = design.matrix if isinstance(design, FuzzyDesignMatrix) else design
    mat = np.asarray(mat, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if mat.ndim != 2 or targets.ndim != 2:
        raise ValidationError("design and targets must be 2-D")
    if mat.shape[0] != targets.shape[0]:
        raise ValidationError(
            f"design has {mat.shape[0]} rows but targets have {targets.shape[0]}"
        )
    if mat.shape[0] < 1:
        raise ValidationError("need at least one sample to fit consequents")
    if lam < 0:
        raise ValidationError(f"ridge penalty must be >= 0, got {lam}")
    dim = mat.shape[1]
    gram = mat.T @ mat + lam * np.eye(dim)
    coeffs = solve_regularized(gram, mat.T @ targets, "ridge fit")
    return ConsequentBlock(coeffs=coeffs, ridge=float(lam))


def fit_tsk(
    view: ViewDataset,
    rules: int,
    lam: float,
    fuzzifier: float = 2.0,
    spread_scale: float = 1.0,
) -> TskModel:
    """Train a single-view TSK classifier on labeled data.

    Clusters the antecedents on the view's own samples, maps them, and
    fits ridge consequents against the one-hot labels.
    """
    if view.labels is None:
        raise ValidationError("view carries no labels")
    bank = cluster_antecedents(
        view.data, rules, fuzzifier=fuzzifier, spread_scale=spread_scale
    )
    design = map_dataset(view, bank)
    block = ridge_consequents(design, view.labels, lam)
    return TskModel(bank=bank, consequents=block)


def decision_values(model: TskModel, x: np.ndarray) -> np.ndarray:
    """Per-class scores for one raw sample, shape (n_classes,)."""
    mapped = map_sample(np.asarray(x, dtype=float), model.bank)
    return model.consequents.coeffs.T @ mapped


def decision_matrix(model: TskModel, data: np.ndarray) -> np.ndarray:
    """Per-class scores for each row of ``data``, shape (n, n_classes)."""
    view = ViewDataset(view_id=0, data=data)
    design = map_dataset(view, model.bank)
    return design.matrix @ model.consequents.coeffs


def predict_class(scores: np.ndarray) -> tuple[int, np.ndarray]:
    """Argmax decision with lowest-index tie break.

    Returns the class index and its one-hot row.  The decision is
    invariant to adding a constant to every score.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or scores.size < 1:
        raise ValidationError(f"scores must be a non-empty vector, got {scores.shape}")
    idx = int(np.argmax(scores))
    onehot = np.zeros(scores.size)
    onehot[idx] = 1.0
    return idx, onehot
