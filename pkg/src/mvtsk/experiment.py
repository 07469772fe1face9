"""Benchmark harness: cross-validated transfer tasks and grid search.

A task trains on one data-rich source dataset and evaluates on one
data-poor target dataset.  The target is split into shuffled CV folds;
inside each fold the training labels are subsampled to a small stratified
fraction before fitting, and accuracy is measured on the held-out fold.
Everything is seeded per (task, fold) so results are reproducible no
matter how runs are scheduled, and all CSV emitters sort rows into one
canonical order before writing.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .antecedent import cluster_antecedents
from .core import (
    MultiViewDataset,
    TrainConfig,
    ValidationError,
    ViewDataset,
)
from .dataio import ParseError, fmt
from .features import VIEW_NAMES
from .trainer import fit, predict_labels
from .tsk import decision_matrix as tsk_decision_matrix
from .tsk import fit_tsk

log = logging.getLogger("mvtsk")

RESULTS_FORMAT = "mvtsk-results"
RESULTS_VERSION = 1
PREDICTIONS_FORMAT = "mvtsk-predictions"
SWEEP_FORMAT = "mvtsk-sweep"

RESULT_COLUMNS = [
    "method",
    "source",
    "target",
    "fold",
    "rules",
    "fuzzy_index",
    "lam_reg",
    "lam_transfer",
    "lam_mmd",
    "lam_consensus",
    "label_fraction",
    "status",
    "n_test",
    "n_correct",
    "accuracy",
    "accuracy_sd",
    "w_time",
    "w_freq",
    "w_wavelet",
]

METHOD_FULL = "mv-tl"
METHOD_ABLATED = "mv-tl-ablated"


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one benchmark run."""

    tasks: tuple[tuple[str, str], ...]
    train: TrainConfig = TrainConfig()
    lambda_grid: tuple[float, ...] = (0.01, 0.1, 1.0, 10.0, 100.0)
    fuzzy_grid: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
    folds: int = 5
    label_fraction: float = 0.05
    seed: int = 0
    threads: int = 1

    def __post_init__(self) -> None:
        if self.folds < 2:
            raise ValidationError(f"folds must be >= 2, got {self.folds}")
        if not 0.0 < self.label_fraction <= 1.0:
            raise ValidationError(
                f"label_fraction must be in (0, 1], got {self.label_fraction}"
            )
        if self.threads < 1:
            raise ValidationError(f"threads must be >= 1, got {self.threads}")
        object.__setattr__(self, "tasks", tuple(tuple(t) for t in self.tasks))


@dataclass
class ResultRow:
    """One fold (or one per-task summary) of one method on one task."""

    method: str
    source: str
    target: str
    fold: str
    config: TrainConfig
    label_fraction: float
    status: str = "ok"
    n_test: int = 0
    n_correct: int = 0
    accuracy: float | None = None
    accuracy_sd: float | None = None
    weights: tuple[float, ...] | None = None
    seconds: float | None = None


@dataclass
class Prediction:
    """Per-sample prediction used for the accuracy recount."""

    method: str
    source: str
    target: str
    fold: str
    sample: int
    truth: int
    predicted: int


def build_folds(
    n: int, folds: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Shuffled near-equal CV partition; returns sorted test-index arrays."""
    if n < folds:
        raise ValidationError(f"cannot split {n} samples into {folds} folds")
    perm = rng.permutation(n)
    return [np.sort(chunk) for chunk in np.array_split(perm, folds)]


def stratified_subsample(
    labels: np.ndarray,
    pool: np.ndarray,
    fraction: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-class subsample of ``pool``: max(1, round(fraction*n_c)) each."""
    chosen = []
    for cls in np.unique(labels[pool]):
        members = pool[labels[pool] == cls]
        keep = max(1, int(round(fraction * members.size)))
        chosen.append(rng.choice(members, size=keep, replace=False))
    return np.sort(np.concatenate(chosen))


def subset_dataset(
    dataset: MultiViewDataset, idx: np.ndarray, tag: str | None = None
) -> MultiViewDataset:
    views = tuple(
        ViewDataset(
            view_id=v.view_id,
            data=v.data[idx],
            labels=None if v.labels is None else v.labels[idx],
        )
        for v in dataset.views
    )
    return MultiViewDataset(views=views, domain_tag=tag or dataset.domain_tag)


def retag(dataset: MultiViewDataset, tag: str) -> MultiViewDataset:
    """Same data under a different domain tag; ids double as either role."""
    if dataset.domain_tag == tag:
        return dataset
    return MultiViewDataset(views=dataset.views, domain_tag=tag)


def _fold_rng(seed: int, task_idx: int, fold: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([seed, task_idx, fold, stream])
    )


def _task_folds(
    n: int, cfg: ExperimentConfig, task_idx: int
) -> list[np.ndarray]:
    rng = _fold_rng(cfg.seed, task_idx, 0, 1)
    return build_folds(n, cfg.folds, rng)


def _summarise(
    rows: list[ResultRow], method: str, source: str, target: str,
    config: TrainConfig, fraction: float,
) -> ResultRow:
    ok = [r for r in rows if r.status == "ok"]
    summary = ResultRow(
        method=method, source=source, target=target, fold="summary",
        config=config, label_fraction=fraction,
        status="ok" if ok else "skipped",
    )
    if ok:
        accs = np.array([r.accuracy for r in ok])
        summary.n_test = int(sum(r.n_test for r in ok))
        summary.n_correct = int(sum(r.n_correct for r in ok))
        summary.accuracy = float(accs.mean())
        # sample standard deviation over folds; zero by convention for n=1
        summary.accuracy_sd = float(accs.std(ddof=1)) if accs.size > 1 else 0.0
    return summary


def _check_fold_hygiene(
    train_idx: np.ndarray, test_idx: np.ndarray, n: int
) -> None:
    if np.intersect1d(train_idx, test_idx).size:
        raise AssertionError("fold hygiene violated: train/test overlap")
    union = np.union1d(train_idx, test_idx)
    if union.size != n or union[0] != 0 or union[-1] != n - 1:
        raise AssertionError("fold hygiene violated: indices do not cover")


def run_multiview_task(
    source: MultiViewDataset,
    target: MultiViewDataset,
    task: tuple[str, str],
    task_idx: int,
    cfg: ExperimentConfig,
    train_config: TrainConfig,
    method: str,
) -> tuple[list[ResultRow], list[Prediction]]:
    """Cross-validate the multi-view transfer model on one task."""
    src_id, tgt_id = task
    source = retag(source, "source")
    target = retag(target, "target")
    labels = np.argmax(target.labels, axis=1)
    n = target.n_samples
    folds = _task_folds(n, cfg, task_idx)
    banks = tuple(
        cluster_antecedents(
            v.data, train_config.rules, spread_scale=train_config.spread_scale
        )
        for v in source.views
    )
    rows: list[ResultRow] = []
    predictions: list[Prediction] = []
    for fold_idx, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(n), test_idx)
        _check_fold_hygiene(train_idx, test_idx, n)
        row = ResultRow(
            method=method, source=src_id, target=tgt_id, fold=str(fold_idx),
            config=train_config, label_fraction=cfg.label_fraction,
        )
        if np.unique(labels[test_idx]).size < 2 or np.unique(
            labels[train_idx]
        ).size < 2:
            log.warning(
                "%s %s->%s fold %d lacks a class; skipped",
                method, src_id, tgt_id, fold_idx,
            )
            row.status = "skipped"
            rows.append(row)
            continue
        rng = _fold_rng(cfg.seed, task_idx, fold_idx, 2)
        sub_idx = stratified_subsample(
            labels, train_idx, cfg.label_fraction, rng
        )
        train_ds = subset_dataset(target, sub_idx, "target")
        model, trace = fit(source, train_ds, train_config, banks=banks)
        test_ds = subset_dataset(target, test_idx, "target")
        predicted = predict_labels(model, test_ds)
        truth = labels[test_idx]
        row.n_test = int(test_idx.size)
        row.n_correct = int(np.sum(predicted == truth))
        row.accuracy = row.n_correct / row.n_test
        row.weights = tuple(float(w) for w in model.weights)
        row.seconds = trace.seconds
        rows.append(row)
        predictions.extend(
            Prediction(
                method=method, source=src_id, target=tgt_id,
                fold=str(fold_idx), sample=int(s), truth=int(tr),
                predicted=int(pr),
            )
            for s, tr, pr in zip(test_idx, truth, predicted)
        )
    rows.append(
        _summarise(rows, method, src_id, tgt_id, train_config,
                   cfg.label_fraction)
    )
    return rows, predictions


def run_single_view_task(
    target: MultiViewDataset,
    view_id: int,
    task: tuple[str, str],
    task_idx: int,
    cfg: ExperimentConfig,
    train_config: TrainConfig,
) -> tuple[list[ResultRow], list[Prediction]]:
    """Target-only single-view ridge TSK baseline on one task.

    Uses the same folds and label subsets as the transfer runs, but both
    the rule antecedents and the consequents come from the small labeled
    target subset alone.
    """
    src_id, tgt_id = task
    name = (
        VIEW_NAMES[view_id]
        if target.n_views == len(VIEW_NAMES)
        else f"view{view_id}"
    )
    method = f"tsk-{name}"
    labels = np.argmax(target.labels, axis=1)
    n = target.n_samples
    folds = _task_folds(n, cfg, task_idx)
    rows: list[ResultRow] = []
    predictions: list[Prediction] = []
    for fold_idx, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(n), test_idx)
        _check_fold_hygiene(train_idx, test_idx, n)
        row = ResultRow(
            method=method, source=src_id, target=tgt_id, fold=str(fold_idx),
            config=train_config, label_fraction=cfg.label_fraction,
        )
        rng = _fold_rng(cfg.seed, task_idx, fold_idx, 2)
        degenerate = (
            np.unique(labels[test_idx]).size < 2
            or np.unique(labels[train_idx]).size < 2
        )
        if not degenerate:
            sub_idx = stratified_subsample(
                labels, train_idx, cfg.label_fraction, rng
            )
            degenerate = sub_idx.size < train_config.rules
        if degenerate:
            log.warning(
                "%s %s->%s fold %d is degenerate; skipped",
                method, src_id, tgt_id, fold_idx,
            )
            row.status = "skipped"
            rows.append(row)
            continue
        view = target.views[view_id]
        train_view = ViewDataset(
            view_id=0, data=view.data[sub_idx], labels=target.labels[sub_idx]
        )
        model = fit_tsk(
            train_view,
            rules=train_config.rules,
            lam=2.0 * train_config.lam_reg,
            spread_scale=train_config.spread_scale,
        )
        scores = tsk_decision_matrix(model, view.data[test_idx])
        predicted = np.argmax(scores, axis=1)
        truth = labels[test_idx]
        row.n_test = int(test_idx.size)
        row.n_correct = int(np.sum(predicted == truth))
        row.accuracy = row.n_correct / row.n_test
        rows.append(row)
        predictions.extend(
            Prediction(
                method=method, source=src_id, target=tgt_id,
                fold=str(fold_idx), sample=int(s), truth=int(tr),
                predicted=int(pr),
            )
            for s, tr, pr in zip(test_idx, truth, predicted)
        )
    rows.append(
        _summarise(rows, method, src_id, tgt_id, train_config,
                   cfg.label_fraction)
    )
    return rows, predictions


def ablated(config: TrainConfig) -> TrainConfig:
    """The same configuration with both transfer penalties disabled."""
    return replace(config, lam_transfer=0.0, lam_mmd=0.0)


def run_transfer(
    cfg: ExperimentConfig,
    datasets: dict[str, MultiViewDataset],
    methods: Sequence[str] = (METHOD_FULL,),
) -> tuple[list[ResultRow], list[Prediction]]:
    """Run every (task, method) pair, in a worker pool when asked.

    ``methods`` may contain the transfer method, its ablation, and
    ``tsk-<view>`` single-view baselines.  Rows come back in canonical
    order regardless of scheduling.
    """
    jobs: list[Callable[[], tuple[list[ResultRow], list[Prediction]]]] = []
    for task_idx, task in enumerate(cfg.tasks):
        src_id, tgt_id = task
        if src_id not in datasets or tgt_id not in datasets:
            missing = src_id if src_id not in datasets else tgt_id
            raise ValidationError(f"no features for dataset id {missing!r}")
        source = datasets[src_id]
        target = datasets[tgt_id]
        for method in methods:
            if method == METHOD_FULL:
                jobs.append(
                    lambda s=source, t=target, ta=task, i=task_idx: (
                        run_multiview_task(
                            s, t, ta, i, cfg, cfg.train, METHOD_FULL
                        )
                    )
                )
            elif method == METHOD_ABLATED:
                jobs.append(
                    lambda s=source, t=target, ta=task, i=task_idx: (
                        run_multiview_task(
                            s, t, ta, i, cfg, ablated(cfg.train),
                            METHOD_ABLATED,
                        )
                    )
                )
            elif method.startswith("tsk-"):
                name = method[len("tsk-") :]
                if name in VIEW_NAMES and target.n_views == len(VIEW_NAMES):
                    view_id = VIEW_NAMES.index(name)
                elif name.startswith("view") and name[4:].isdigit():
                    view_id = int(name[4:])
                else:
                    raise ValidationError(f"unknown method {method!r}")
                if view_id >= target.n_views:
                    raise ValidationError(f"no view for method {method!r}")
                jobs.append(
                    lambda t=target, v=view_id, ta=task, i=task_idx: (
                        run_single_view_task(t, v, ta, i, cfg, cfg.train)
                    )
                )
            else:
                raise ValidationError(f"unknown method {method!r}")

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            outputs = list(pool.map(lambda job: job(), jobs))
    else:
        outputs = [job() for job in jobs]

    rows: list[ResultRow] = []
    predictions: list[Prediction] = []
    for job_rows, job_preds in outputs:
        rows.extend(job_rows)
        predictions.extend(job_preds)
    rows.sort(key=_row_key)
    predictions.sort(
        key=lambda p: (p.method, p.source, p.target, int(p.fold), p.sample)
    )
    _recount_accuracy(rows, predictions)
    return rows, predictions


def _row_key(row: ResultRow):
    fold_rank = (1, 0) if row.fold == "summary" else (0, int(row.fold))
    return (row.method, row.source, row.target) + fold_rank


def _recount_accuracy(
    rows: list[ResultRow], predictions: list[Prediction]
) -> None:
    """Assert each fold row's accuracy against the prediction log."""
    counts: dict[tuple, list[int]] = {}
    for p in predictions:
        key = (p.method, p.source, p.target, p.fold)
        entry = counts.setdefault(key, [0, 0])
        entry[0] += int(p.truth == p.predicted)
        entry[1] += 1
    for row in rows:
        if row.fold == "summary" or row.status != "ok":
            continue
        correct, total = counts[(row.method, row.source, row.target, row.fold)]
        if correct != row.n_correct or total != row.n_test:
            raise AssertionError(
                f"prediction log disagrees with result row {row}"
            )


# grid search -----------------------------------------------------------

@dataclass(frozen=True)
class GridPoint:
    lam_reg: float
    lam_transfer: float
    lam_mmd: float
    lam_consensus: float
    fuzzy_index: float

    def apply(self, config: TrainConfig) -> TrainConfig:
        return replace(
            config,
            lam_reg=self.lam_reg,
            lam_transfer=self.lam_transfer,
            lam_mmd=self.lam_mmd,
            lam_consensus=self.lam_consensus,
            fuzzy_index=self.fuzzy_index,
        )

    def key(self) -> tuple[float, ...]:
        return (
            self.lam_reg,
            self.lam_transfer,
            self.lam_mmd,
            self.lam_consensus,
            self.fuzzy_index,
        )


@dataclass
class SweepRow:
    source: str
    target: str
    point: GridPoint
    accuracy: float | None
    n_evals: int


def grid_points(cfg: ExperimentConfig) -> list[GridPoint]:
    """Full product of the lambda grid (4 ways) and the fuzzy-index grid."""
    if not cfg.lambda_grid or not cfg.fuzzy_grid:
        raise ValidationError("grids must not be empty")
    points = []
    for lam_reg in cfg.lambda_grid:
        for lam_transfer in cfg.lambda_grid:
            for lam_mmd in cfg.lambda_grid:
                for lam_consensus in cfg.lambda_grid:
                    for fuzzy_index in cfg.fuzzy_grid:
                        points.append(
                            GridPoint(
                                lam_reg, lam_transfer, lam_mmd,
                                lam_consensus, fuzzy_index,
                            )
                        )
    return points


def run_gridsearch_task(
    source: MultiViewDataset,
    target: MultiViewDataset,
    task: tuple[str, str],
    task_idx: int,
    cfg: ExperimentConfig,
) -> tuple[list[SweepRow], SweepRow]:
    """Nested-CV grid search for one task; test folds are never scored.

    For each outer fold, the remaining samples are split again into inner
    folds; every grid point is scored on inner validation folds only.
    The winner maximises mean inner accuracy, ties broken toward the
    lexicographically smallest (lambda..., fuzzy_index) vector.
    """
    src_id, tgt_id = task
    source = retag(source, "source")
    target = retag(target, "target")
    labels = np.argmax(target.labels, axis=1)
    n = target.n_samples
    outer = _task_folds(n, cfg, task_idx)
    banks = tuple(
        cluster_antecedents(
            v.data, cfg.train.rules, spread_scale=cfg.train.spread_scale
        )
        for v in source.views
    )

    # Precompute inner splits so every grid point sees identical data.
    splits = []
    for fold_idx, test_idx in enumerate(outer):
        train_idx = np.setdiff1d(np.arange(n), test_idx)
        _check_fold_hygiene(train_idx, test_idx, n)
        inner_folds = min(cfg.folds, train_idx.size)
        if inner_folds < 2:
            continue
        rng = _fold_rng(cfg.seed, task_idx, fold_idx, 3)
        parts = build_folds(train_idx.size, inner_folds, rng)
        for inner_idx, part in enumerate(parts):
            val_idx = train_idx[part]
            fit_pool = np.setdiff1d(train_idx, val_idx)
            if (
                np.unique(labels[val_idx]).size < 2
                or np.unique(labels[fit_pool]).size < 2
            ):
                continue
            rng_sub = _fold_rng(
                cfg.seed, task_idx, fold_idx * 100 + inner_idx, 4
            )
            sub_idx = stratified_subsample(
                labels, fit_pool, cfg.label_fraction, rng_sub
            )
            splits.append((sub_idx, val_idx))
    if not splits:
        raise ValidationError(
            f"task {src_id}->{tgt_id}: no usable inner folds for grid search"
        )

    sweep: list[SweepRow] = []
    for point in grid_points(cfg):
        train_config = point.apply(cfg.train)
        correct = 0
        total = 0
        for sub_idx, val_idx in splits:
            train_ds = subset_dataset(target, sub_idx, "target")
            model, _ = fit(source, train_ds, train_config, banks=banks)
            val_ds = subset_dataset(target, val_idx, "target")
            predicted = predict_labels(model, val_ds)
            correct += int(np.sum(predicted == labels[val_idx]))
            total += int(val_idx.size)
        sweep.append(
            SweepRow(
                source=src_id, target=tgt_id, point=point,
                accuracy=correct / total, n_evals=len(splits),
            )
        )
    best = max(
        sweep,
        key=lambda row: (row.accuracy, tuple(-v for v in row.point.key())),
    )
    return sweep, best


# CSV emission ----------------------------------------------------------

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return fmt(value)
    return str(value)


def result_csv_lines(rows: list[ResultRow]) -> list[str]:
    lines = [
        f"# {RESULTS_FORMAT} v{RESULTS_VERSION}",
        ",".join(RESULT_COLUMNS),
    ]
    for row in rows:
        weights = row.weights or (None, None, None)
        weights = tuple(weights) + (None,) * (3 - len(weights))
        cfg = row.config
        cells = [
            row.method,
            row.source,
            row.target,
            row.fold,
            str(cfg.rules),
            fmt(cfg.fuzzy_index),
            fmt(cfg.lam_reg),
            fmt(cfg.lam_transfer),
            fmt(cfg.lam_mmd),
            fmt(cfg.lam_consensus),
            fmt(row.label_fraction),
            row.status,
            str(row.n_test),
            str(row.n_correct),
            _cell(row.accuracy),
            _cell(row.accuracy_sd),
            _cell(weights[0]),
            _cell(weights[1]),
            _cell(weights[2]),
        ]
        lines.append(",".join(cells))
    return lines


def write_results(rows: list[ResultRow], path: Path) -> None:
    Path(path).write_text(
        "\n".join(result_csv_lines(rows)) + "\n", newline="\n"
    )


def write_predictions(predictions: list[Prediction], path: Path) -> None:
    lines = [
        f"# {PREDICTIONS_FORMAT} v{RESULTS_VERSION}",
        "method,source,target,fold,sample,truth,predicted",
    ]
    lines += [
        f"{p.method},{p.source},{p.target},{p.fold},{p.sample},"
        f"{p.truth},{p.predicted}"
        for p in predictions
    ]
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def write_timings(rows: list[ResultRow], path: Path) -> None:
    """Wall-clock seconds live apart from results so those stay stable."""
    lines = [
        f"# mvtsk-timings v{RESULTS_VERSION}",
        "method,source,target,fold,seconds",
    ]
    for row in rows:
        if row.seconds is None:
            continue
        lines.append(
            f"{row.method},{row.source},{row.target},{row.fold},"
            f"{fmt(row.seconds)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def write_sweep(rows: list[SweepRow], path: Path) -> None:
    lines = [
        f"# {SWEEP_FORMAT} v{RESULTS_VERSION}",
        "source,target,lam_reg,lam_transfer,lam_mmd,lam_consensus,"
        "fuzzy_index,accuracy,n_evals",
    ]
    ordered = sorted(
        rows, key=lambda r: (r.source, r.target) + r.point.key()
    )
    for row in ordered:
        p = row.point
        lines.append(
            f"{row.source},{row.target},{fmt(p.lam_reg)},"
            f"{fmt(p.lam_transfer)},{fmt(p.lam_mmd)},"
            f"{fmt(p.lam_consensus)},{fmt(p.fuzzy_index)},"
            f"{_cell(row.accuracy)},{row.n_evals}"
        )
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_csv_rows(path: Path, expected_format: str) -> list[dict[str, str]]:
    """Read a versioned CSV back into dicts keyed by column name."""
    path = Path(path)
    if not path.exists():
        raise ParseError(path, None, "file not found")
    lines = path.read_text().splitlines()
    if not lines or not lines[0].startswith(f"# {expected_format} "):
        raise ParseError(path, 1, f"not a {expected_format} file")
    version = lines[0].split()[-1]
    if version != f"v{RESULTS_VERSION}":
        raise ParseError(path, 1, f"unsupported version {version}")
    if len(lines) < 2:
        raise ParseError(path, None, "missing column header")
    columns = lines[1].split(",")
    rows = []
    for number, raw in enumerate(lines[2:], start=3):
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) != len(columns):
            raise ParseError(
                path, number,
                f"expected {len(columns)} fields, got {len(parts)}",
            )
        rows.append(dict(zip(columns, parts)))
    return rows


# report aggregation ----------------------------------------------------

@dataclass
class TaskSummary:
    method: str
    source: str
    target: str
    mean: float
    sd: float
    folds: int


def aggregate(rows: list[dict[str, str]]) -> list[TaskSummary]:
    """Recompute per-task mean and SD from fold rows of a results CSV."""
    groups: dict[tuple[str, str, str], list[float]] = {}
    for row in rows:
        if row.get("fold") == "summary" or row.get("status") != "ok":
            continue
        acc = row.get("accuracy", "")
        if not acc:
            continue
        key = (row["method"], row["source"], row["target"])
        groups.setdefault(key, []).append(float(acc))
    out = []
    for (method, source, target), accs in sorted(groups.items()):
        arr = np.array(accs)
        sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        out.append(
            TaskSummary(
                method=method, source=source, target=target,
                mean=float(arr.mean()), sd=sd, folds=arr.size,
            )
        )
    return out


def method_averages(summaries: list[TaskSummary]) -> dict[str, float]:
    """Mean of per-task means for each method."""
    groups: dict[str, list[float]] = {}
    for s in summaries:
        groups.setdefault(s.method, []).append(s.mean)
    return {m: float(np.mean(v)) for m, v in sorted(groups.items())}


def summary_csv_lines(summaries: list[TaskSummary]) -> list[str]:
    lines = [
        f"# {RESULTS_FORMAT}-summary v{RESULTS_VERSION}",
        "method,source,target,folds,accuracy_mean,accuracy_sd",
    ]
    for s in summaries:
        lines.append(
            f"{s.method},{s.source},{s.target},{s.folds},"
            f"{fmt(s.mean)},{fmt(s.sd)}"
        )
    for method, avg in method_averages(summaries).items():
        lines.append(f"{method},average,,,{fmt(avg)},")
    return lines


def summary_text(summaries: list[TaskSummary]) -> str:
    """Aligned text table with accuracies as percent, two decimals."""
    header = f"{'method':<16} {'task':<20} {'accuracy %':>10} {'sd':>8}"
    rule = "-" * len(header)
    lines = [header, rule]
    for s in summaries:
        task = f"{s.source}->{s.target}"
        lines.append(
            f"{s.method:<16} {task:<20} {100.0 * s.mean:>10.2f} "
            f"{100.0 * s.sd:>8.2f}"
        )
    lines.append(rule)
    for method, avg in method_averages(summaries).items():
        lines.append(
            f"{method:<16} {'average':<20} {100.0 * avg:>10.2f} {'':>8}"
        )
    return "\n".join(lines)
