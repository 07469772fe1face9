"""Alternating trainer for the multi-view transfer classifier.

The target-domain objective combines four ingredients: weighted per-view
squared error against the one-hot labels, a coefficient norm penalty, a
cross-view consensus penalty that pulls each view's fitted scores toward
the mean score of the other views, and the transfer penalties defined in
:mod:`mvtsk.transfer`.  Training alternates exact block solves for each
view's consequents with a closed-form update of the view weights.  With
the cross-view reference consequents held fixed (the default), every step
solves its block exactly, so the recorded objective never increases.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .antecedent import AntecedentBank, cluster_antecedents
from .core import (
    FeatureStats,
    MultiViewDataset,
    TrainConfig,
    ValidationError,
    validate_multiview,
)
from .fuzzy_map import map_dataset, map_sample
from .transfer import MmdMatrix, build_mmd, transfer_value
from .tsk import ConsequentBlock, predict_class, ridge_consequents, solve_regularized


class TrainingDivergedError(RuntimeError):
    """Raised when the training objective leaves the finite range."""

    def __init__(self, message: str, trace: "TrainTrace") -> None:
        super().__init__(message)
        self.trace = trace


@dataclass
class TrainTrace:
    """Per-iteration diagnostics from one training run.

    ``objective`` holds the full objective after each sweep; ``flags``
    records which optional penalty terms were active so ablated runs can
    be told apart from full ones.
    """

    objective: list[float] = field(default_factory=list)
    view_errors: list[np.ndarray] = field(default_factory=list)
    weights: list[np.ndarray] = field(default_factory=list)
    seconds: float = 0.0
    converged: bool = False
    prior_provenance: str = "source"
    flags: dict[str, bool] = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.objective)


@dataclass(frozen=True)
class MultiViewModel:
    """Trained multi-view classifier: per-view rule models plus weights."""

    banks: tuple[AntecedentBank, ...]
    consequents: tuple[ConsequentBlock, ...]
    weights: np.ndarray
    fuzzy_index: float
    n_classes: int
    normalization: tuple[FeatureStats, ...] | None = None
    config: TrainConfig | None = None

    def __post_init__(self) -> None:
        banks = tuple(self.banks)
        blocks = tuple(self.consequents)
        weights = np.asarray(self.weights, dtype=float)
        if not banks or len(banks) != len(blocks):
            raise ValidationError("need one consequent block per view")
        for bank, block in zip(banks, blocks):
            expect = bank.rules * (bank.dim + 1)
            if block.coeffs.shape[0] != expect:
                raise ValidationError(
                    f"consequents have {block.coeffs.shape[0]} rows, "
                    f"expected {expect}"
                )
            if block.n_classes != self.n_classes:
                raise ValidationError("consequent class counts differ")
        if weights.shape != (len(banks),):
            raise ValidationError(
                f"weights have shape {weights.shape}, expected ({len(banks)},)"
            )
        if np.any(weights < 0) or abs(float(weights.sum()) - 1.0) > 1e-9:
            raise ValidationError("weights must lie on the probability simplex")
        if self.normalization is not None and len(self.normalization) != len(banks):
            raise ValidationError("need one stats entry per view")
        object.__setattr__(self, "banks", banks)
        object.__setattr__(self, "consequents", blocks)
        object.__setattr__(self, "weights", weights)

    @property
    def n_views(self) -> int:
        return len(self.banks)


def view_errors(
    coeffs: Sequence[np.ndarray],
    designs: Sequence[np.ndarray],
    targets: np.ndarray,
) -> np.ndarray:
    """Squared fitting error of each view against the one-hot targets."""
    out = np.empty(len(coeffs))
    for v, (block, design) in enumerate(zip(coeffs, designs)):
        resid = design @ block - targets
        out[v] = float((resid**2).sum())
    return out


def _consensus_targets(
    designs: Sequence[np.ndarray], priors: Sequence[np.ndarray], view: int
) -> np.ndarray:
    """Mean fitted score of every view but ``view``, using the priors."""
    others = [l for l in range(len(designs)) if l != view]
    total = np.zeros((designs[view].shape[0], priors[view].shape[1]))
    for l in others:
        total += designs[l] @ priors[l]
    return total / len(others)


def collaborative_value(
    coeffs: Sequence[np.ndarray],
    weights: np.ndarray,
    fuzzy_index: float,
    priors: Sequence[np.ndarray],
    designs: Sequence[np.ndarray],
    targets: np.ndarray,
    lam_reg: float,
    lam_consensus: float,
) -> float:
    """Evaluate the collaborative part of the training objective.

    With a single view the consensus sum is empty, so the value reduces
    to the weighted error plus the coefficient penalty.
    """
    n_views = len(coeffs)
    errs = view_errors(coeffs, designs, targets)
    value = 0.5 * float((weights**fuzzy_index) @ errs)
    value += lam_reg * sum(float((np.asarray(c) ** 2).sum()) for c in coeffs)
    if n_views > 1 and lam_consensus > 0:
        for v in range(n_views):
            gap = designs[v] @ coeffs[v] - _consensus_targets(designs, priors, v)
            value += 0.5 * lam_consensus * float((gap**2).sum())
    return value


def update_consequents(
    view: int,
    designs: Sequence[np.ndarray],
    targets: np.ndarray,
    weights: np.ndarray,
    fuzzy_index: float,
    priors: Sequence[np.ndarray],
    anchors: Sequence[np.ndarray],
    penalties: Sequence[MmdMatrix] | None,
    lam_reg: float,
    lam_transfer: float,
    lam_mmd: float,
    lam_consensus: float,
) -> np.ndarray:
    """Exact minimiser of the objective over one view's consequents.

    All other views enter only through the fixed cross-view references,
    so the stationarity condition is one SPD linear system shared by all
    class columns.
    """
    n_views = len(designs)
    design = designs[view]
    dim = design.shape[1]
    wm = float(weights[view]) ** fuzzy_index
    lam_con = lam_consensus if n_views > 1 else 0.0

    gram = (wm + lam_con) * (design.T @ design)
    gram[np.diag_indices(dim)] += 2.0 * (lam_reg + lam_transfer)
    if lam_mmd > 0:
        if penalties is None:
            raise ValidationError("lam_mmd > 0 requires penalty matrices")
        gram += 2.0 * lam_mmd * penalties[view].matrix

    rhs = wm * (design.T @ targets)
    if lam_con > 0:
        rhs += lam_con * (design.T @ _consensus_targets(designs, priors, view))
    if lam_transfer > 0:
        rhs += 2.0 * lam_transfer * np.asarray(anchors[view], dtype=float)
    return solve_regularized(gram, rhs, "consequent update")


def update_weights(errors: np.ndarray, fuzzy_index: float) -> np.ndarray:
    """Closed-form view weights for the current per-view errors.

    For fuzzy_index > 1 the minimiser is proportional to
    error^(1/(1-fuzzy_index)); views with zero error split the mass
    uniformly among themselves.  For fuzzy_index <= 1 the objective is
    minimised at a vertex, so the lowest-error view (lowest index on
    ties) takes weight one.  All-zero errors give uniform weights.
    """
    errs = np.asarray(errors, dtype=float)
    if errs.ndim != 1 or errs.size < 1:
        raise ValidationError("errors must be a non-empty vector")
    if np.any(errs < 0):
        raise ValidationError("errors must be non-negative")
    n_views = errs.size
    if np.all(errs == 0.0):
        return np.full(n_views, 1.0 / n_views)
    if fuzzy_index > 1.0:
        zero = errs == 0.0
        if zero.any():
            return zero / zero.sum()
        # Ratios to the smallest error keep the powers in (0, 1].
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = errs / errs.min()
            raw = ratio ** (1.0 / (1.0 - fuzzy_index))
            return raw / raw.sum()
    out = np.zeros(n_views)
    out[int(np.argmin(errs))] = 1.0
    return out


def _check_pair(source: MultiViewDataset, target: MultiViewDataset) -> None:
    validate_multiview(source)
    validate_multiview(target)
    if source.labels is None or target.labels is None:
        raise ValidationError("both domains must carry labels for training")
    if source.n_views != target.n_views:
        raise ValidationError(
            f"view counts differ: {source.n_views} vs {target.n_views}"
        )
    if source.n_classes != target.n_classes:
        raise ValidationError(
            f"class counts differ: {source.n_classes} vs {target.n_classes}"
        )
    for sv, tv in zip(source.views, target.views):
        if sv.dim != tv.dim:
            raise ValidationError(
                f"view {sv.view_id} dims differ: {sv.dim} vs {tv.dim}"
            )


def fit(
    source: MultiViewDataset,
    target: MultiViewDataset,
    config: TrainConfig,
    banks: Sequence[AntecedentBank] | None = None,
) -> tuple[MultiViewModel, TrainTrace]:
    """Train the multi-view transfer classifier.

    Rule antecedents are clustered on the data-rich source domain (pass
    ``banks`` to reuse ones clustered earlier), both domains are mapped
    through them, and source-trained ridge consequents seed both the
    anchor term and the cross-view references.  The alternating loop then
    runs up to ``config.max_iters`` sweeps, stopping early when the
    objective changes by less than ``config.tol`` relative to its size.
    """
    _check_pair(source, target)
    n_views = source.n_views
    n_classes = source.n_classes

    if banks is None:
        banks = tuple(
            cluster_antecedents(
                v.data,
                config.rules,
                spread_scale=config.spread_scale,
            )
            for v in source.views
        )
    else:
        banks = tuple(banks)
        if len(banks) != n_views:
            raise ValidationError("need one antecedent bank per view")
        for bank, v in zip(banks, source.views):
            if bank.dim != v.dim:
                raise ValidationError(
                    f"bank dim {bank.dim} does not match view dim {v.dim}"
                )

    src_designs = [map_dataset(v, b).matrix for v, b in zip(source.views, banks)]
    tgt_designs = [map_dataset(v, b).matrix for v, b in zip(target.views, banks)]
    targets = target.labels

    # The single-view reduction of the collaborative objective equals a
    # ridge fit with penalty 2*lam_reg, so the source model uses the same
    # effective penalty.
    source_lam = 2.0 * config.lam_reg
    anchors = [
        ridge_consequents(mat, source.labels, source_lam).coeffs
        for mat in src_designs
    ]
    priors = [a.copy() for a in anchors]
    provenance = "source"

    penalties = None
    if config.lam_mmd > 0:
        penalties = [
            build_mmd(gs, gt) for gs, gt in zip(src_designs, tgt_designs)
        ]

    weights = np.full(n_views, 1.0 / n_views)
    coeffs = [a.copy() for a in anchors]

    trace = TrainTrace(
        prior_provenance=provenance,
        flags={
            "knowledge_transfer": config.lam_transfer > 0,
            "distribution_match": config.lam_mmd > 0,
            "consensus": config.lam_consensus > 0 and n_views > 1,
            "prior_refresh": config.prior_refresh,
        },
    )
    start = time.perf_counter()
    previous = None
    for _ in range(config.max_iters):
        for v in range(n_views):
            coeffs[v] = update_consequents(
                v,
                tgt_designs,
                targets,
                weights,
                config.fuzzy_index,
                priors,
                anchors,
                penalties,
                config.lam_reg,
                config.lam_transfer,
                config.lam_mmd,
                config.lam_consensus,
            )
        errs = view_errors(coeffs, tgt_designs, targets)
        weights = update_weights(errs, config.fuzzy_index)
        value = collaborative_value(
            coeffs,
            weights,
            config.fuzzy_index,
            priors,
            tgt_designs,
            targets,
            config.lam_reg,
            config.lam_consensus,
        ) + transfer_value(
            coeffs, anchors, penalties, config.lam_transfer, config.lam_mmd
        )
        trace.objective.append(value)
        trace.view_errors.append(errs)
        trace.weights.append(weights.copy())
        if not np.isfinite(value):
            trace.seconds = time.perf_counter() - start
            raise TrainingDivergedError(
                f"objective became non-finite at iteration {trace.iterations}",
                trace,
            )
        if previous is not None and abs(value - previous) < config.tol * max(
            1.0, abs(previous)
        ):
            trace.converged = True
            break
        previous = value
        if config.prior_refresh:
            priors = [c.copy() for c in coeffs]
            provenance = "refreshed"

    trace.seconds = time.perf_counter() - start
    trace.prior_provenance = provenance

    solve_ridge = 2.0 * (config.lam_reg + config.lam_transfer)
    model = MultiViewModel(
        banks=banks,
        consequents=tuple(
            ConsequentBlock(coeffs=c, ridge=solve_ridge) for c in coeffs
        ),
        weights=weights,
        fuzzy_index=config.fuzzy_index,
        n_classes=n_classes,
        config=config,
    )
    return model, trace


def decision_matrix(model: MultiViewModel, dataset: MultiViewDataset) -> np.ndarray:
    """Weighted per-class scores for every sample, shape (n, n_classes)."""
    validate_multiview(dataset)
    if dataset.n_views != model.n_views:
        raise ValidationError(
            f"dataset has {dataset.n_views} views, model expects {model.n_views}"
        )
    total = np.zeros((dataset.n_samples, model.n_classes))
    for view, bank, block, weight in zip(
        dataset.views, model.banks, model.consequents, model.weights
    ):
        design = map_dataset(view, bank).matrix
        total += weight * (design @ block.coeffs)
    return total


def predict(
    model: MultiViewModel, sample_views: Sequence[np.ndarray]
) -> tuple[np.ndarray, int]:
    """Score one sample given all of its views; returns (scores, class).

    Every view the model was trained with must be present; the fused
    score is the weight-blended sum of the per-view rule model outputs.
    """
    if len(sample_views) != model.n_views:
        raise ValidationError(
            f"got {len(sample_views)} views, model expects {model.n_views}"
        )
    scores = np.zeros(model.n_classes)
    for x, bank, block, weight in zip(
        sample_views, model.banks, model.consequents, model.weights
    ):
        if x is None:
            raise ValidationError("missing view in sample")
        mapped = map_sample(np.asarray(x, dtype=float), bank)
        scores += weight * (block.coeffs.T @ mapped)
    idx, _ = predict_class(scores)
    return scores, idx


def predict_labels(model: MultiViewModel, dataset: MultiViewDataset) -> np.ndarray:
    """Predicted class index for every sample of a dataset."""
    return np.argmax(decision_matrix(model, dataset), axis=1)
