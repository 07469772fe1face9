"""Command line front end.

Subcommands:
  synth       write a synthetic two-domain recording corpus
  extract     turn raw recordings into per-view feature CSVs
  transfer    cross-validated transfer runs, results + predictions CSVs
  gridsearch  nested-CV hyperparameter sweep, sweep + best CSVs
  report      aggregate result CSVs into summary tables and figures

Options may come from ``--config FILE`` (key=value lines); flags given on
the command line override config values, which override built-in
defaults.  Exit codes: 0 success, 2 bad input or usage, 1 other failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .core import MultiViewDataset, TrainConfig, ValidationError
from .dataio import (
    ArchiveError,
    ParseError,
    SynthSpec,
    load_raw,
    read_features,
    read_kv,
    save_record,
    synth_domains,
    write_features,
)
from .experiment import (
    METHOD_FULL,
    SWEEP_FORMAT,
    ExperimentConfig,
    RESULTS_FORMAT,
    aggregate,
    read_csv_rows,
    run_gridsearch_task,
    run_transfer,
    summary_csv_lines,
    summary_text,
    write_predictions,
    write_results,
    write_sweep,
    write_timings,
)
from .features import FeatureConfig, WindowSpec, extract_multiview

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}

# every key a config file may set, with its parser
_CASTS = {
    "seed": int,
    "threads": int,
    "out": str,
    "folds": int,
    "label_fraction": float,
    "rules": int,
    "fuzzy_index": float,
    "lam_reg": float,
    "lam_transfer": float,
    "lam_mmd": float,
    "lam_consensus": float,
    "max_iters": int,
    "tol": float,
    "spread_scale": float,
    "prior_refresh": "bool",
    "tasks": str,
    "methods": str,
    "lambda_grid": str,
    "fuzzy_grid": str,
    "window_s": float,
    "overlap": float,
    "keep_frac": float,
    "decimation": int,
    "band_lo": float,
    "band_hi": float,
    "levels": int,
    "source_records": int,
    "target_records": int,
    "channels": int,
    "duration_s": float,
    "fs": float,
    "seizures": int,
    "shift_scale": float,
}


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValidationError(f"expected a boolean, got {text!r}")


def _load_config(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    values = read_kv(Path(path))
    for key in values:
        if key not in _CASTS:
            raise ValidationError(f"unknown config key {key!r}")
    return values


class _Options:
    """Flag > config file > default resolution for one parsed command."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = _load_config(getattr(args, "config", None))

    def pick(self, key: str, default):
        value = getattr(self.args, key, None)
        if value is not None:
            return value
        if key in self.config:
            cast = _CASTS[key]
            raw = self.config[key]
            try:
                return _parse_bool(raw) if cast == "bool" else cast(raw)
            except ValueError as exc:
                raise ValidationError(
                    f"config key {key}: {exc}"
                ) from exc
        return default

    def require(self, key: str, what: str):
        value = self.pick(key, None)
        if value is None:
            raise ValidationError(f"missing required option: {what}")
        return value


def _parse_tasks(text: str) -> tuple[tuple[str, str], ...]:
    tasks = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ValidationError(
                f"task {chunk!r} is not of the form source:target"
            )
        src, tgt = chunk.split(":", 1)
        if not src or not tgt:
            raise ValidationError(
                f"task {chunk!r} is not of the form source:target"
            )
        tasks.append((src, tgt))
    if not tasks:
        raise ValidationError("no tasks given")
    return tuple(tasks)


def _parse_grid(text: str, name: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ValidationError(f"bad {name}: {exc}") from exc
    if not values:
        raise ValidationError(f"{name} must not be empty")
    return values


def _train_config(opt: _Options) -> TrainConfig:
    return TrainConfig(
        rules=opt.pick("rules", 3),
        fuzzy_index=opt.pick("fuzzy_index", 2.0),
        lam_reg=opt.pick("lam_reg", 0.1),
        lam_transfer=opt.pick("lam_transfer", 0.1),
        lam_mmd=opt.pick("lam_mmd", 0.1),
        lam_consensus=opt.pick("lam_consensus", 0.1),
        max_iters=opt.pick("max_iters", 10),
        tol=opt.pick("tol", 1e-6),
        spread_scale=opt.pick("spread_scale", 1.0),
        prior_refresh=opt.pick("prior_refresh", False),
        seed=opt.pick("seed", 0),
    )


def _window_spec(opt: _Options) -> WindowSpec:
    return WindowSpec(
        length_s=opt.pick("window_s", 1.0),
        overlap_frac=opt.pick("overlap", 0.5),
        negative_keep_frac=opt.pick("keep_frac", 0.5),
    )


def _feature_config(opt: _Options) -> FeatureConfig:
    return FeatureConfig(
        decimation=opt.pick("decimation", 4),
        band=(opt.pick("band_lo", 4.0), opt.pick("band_hi", 30.0)),
        levels=opt.pick("levels", 4),
        seed=opt.pick("seed", 0),
    )


def _out_dir(opt: _Options) -> Path:
    out = Path(opt.require("out", "--out DIR"))
    out.mkdir(parents=True, exist_ok=True)
    return out


# subcommands -----------------------------------------------------------

def cmd_synth(args: argparse.Namespace) -> int:
    opt = _Options(args)
    out = _out_dir(opt)
    spec = SynthSpec(
        source_records=opt.pick("source_records", 6),
        target_records=opt.pick("target_records", 4),
        channels=opt.pick("channels", 2),
        fs=opt.pick("fs", 256.0),
        duration_s=opt.pick("duration_s", 120.0),
        seizures_per_record=opt.pick("seizures", 3),
        shift_scale=opt.pick("shift_scale", 1.0),
    )
    seed = opt.pick("seed", 0)
    source, target = synth_domains(spec, seed=seed)
    for name, records in (("source", source), ("target", target)):
        domain_dir = out / name
        domain_dir.mkdir(parents=True, exist_ok=True)
        for idx, record in enumerate(records):
            save_record(record, domain_dir / f"rec{idx:02d}")
        print(f"{name}: {len(records)} records -> {domain_dir}")
    return 0


def _record_stems(directory: Path) -> list[Path]:
    stems = []
    for path in sorted(directory.glob("*.csv")):
        if path.name.endswith(".ann.csv") or path.name.endswith(".stats.csv"):
            continue
        stems.append(path.with_suffix(""))
    return stems


def _dataset_dirs(raw: Path) -> dict[str, list[Path]]:
    """Map dataset id -> record stems.

    Subdirectories of the raw dir are dataset ids holding their records;
    a flat dir makes each record its own single-record dataset.
    """
    groups: dict[str, list[Path]] = {}
    for sub in sorted(p for p in raw.iterdir() if p.is_dir()):
        stems = _record_stems(sub)
        if stems:
            groups[sub.name] = stems
    for stem in _record_stems(raw):
        groups[stem.name] = [stem]
    return groups


def cmd_extract(args: argparse.Namespace) -> int:
    opt = _Options(args)
    raw = Path(opt.require("raw", "--raw DIR"))
    if not raw.is_dir():
        raise ValidationError(f"no records found: {raw} is not a directory")
    out = _out_dir(opt)
    groups = _dataset_dirs(raw)
    if not groups:
        raise ValidationError(f"no records found in {raw}")
    spec = _window_spec(opt)
    config = _feature_config(opt)
    for dataset_id, stems in groups.items():
        records = []
        for stem in stems:
            ann = stem.with_suffix(".ann.csv")
            records.append(
                load_raw(stem.with_suffix(".csv"), ann if ann.exists() else None)
            )
        dataset, stats = extract_multiview(records, spec, config)
        if dataset.n_samples == 0:
            raise ValidationError(
                f"dataset {dataset_id}: extraction produced no windows"
            )
        write_features(dataset, stats, out, dataset_id)
        counts = np.bincount(
            np.argmax(dataset.labels, axis=1), minlength=2
        )
        print(
            f"{dataset_id}: {dataset.n_samples} windows "
            f"({counts[1]} seizure, {counts[0]} normal) -> {out}"
        )
    return 0


def _load_datasets(
    feature_dir: Path, ids: set[str]
) -> dict[str, MultiViewDataset]:
    datasets = {}
    for dataset_id in sorted(ids):
        dataset, _ = read_features(feature_dir, dataset_id)
        datasets[dataset_id] = dataset
    return datasets


def _experiment_config(opt: _Options, need_tasks: bool = True):
    tasks_text = opt.require("tasks", "--tasks a:b[,c:d...]") if need_tasks \
        else opt.pick("tasks", None)
    tasks = _parse_tasks(tasks_text) if tasks_text else ()
    return ExperimentConfig(
        tasks=tasks,
        train=_train_config(opt),
        lambda_grid=_parse_grid(
            opt.pick("lambda_grid", "0.01,0.1,1,10,100"), "lambda_grid"
        ),
        fuzzy_grid=_parse_grid(
            opt.pick("fuzzy_grid", "0.25,0.5,1,2,4"), "fuzzy_grid"
        ),
        folds=opt.pick("folds", 5),
        label_fraction=opt.pick("label_fraction", 0.05),
        seed=opt.pick("seed", 0),
        threads=opt.pick("threads", 1),
    )


def cmd_transfer(args: argparse.Namespace) -> int:
    opt = _Options(args)
    feature_dir = Path(opt.require("features", "--features DIR"))
    cfg = _experiment_config(opt)
    methods = tuple(
        m.strip()
        for m in opt.pick("methods", METHOD_FULL).split(",")
        if m.strip()
    )
    ids = {i for task in cfg.tasks for i in task}
    datasets = _load_datasets(feature_dir, ids)
    rows, predictions = run_transfer(cfg, datasets, methods)
    out = _out_dir(opt)
    write_results(rows, out / "results.csv")
    write_predictions(predictions, out / "predictions.csv")
    write_timings(rows, out / "timings.csv")
    fold_rows = sum(1 for r in rows if r.fold != "summary")
    print(f"{fold_rows} fold rows + "
          f"{len(rows) - fold_rows} summary rows -> {out / 'results.csv'}")
    for row in rows:
        if row.fold == "summary" and row.accuracy is not None:
            print(
                f"{row.method} {row.source}->{row.target}: "
                f"{100.0 * row.accuracy:.2f}% "
                f"(sd {100.0 * (row.accuracy_sd or 0.0):.2f})"
            )
    return 0


def cmd_gridsearch(args: argparse.Namespace) -> int:
    opt = _Options(args)
    feature_dir = Path(opt.require("features", "--features DIR"))
    cfg = _experiment_config(opt)
    ids = {i for task in cfg.tasks for i in task}
    datasets = _load_datasets(feature_dir, ids)

    def run(item):
        task_idx, task = item
        return run_gridsearch_task(
            datasets[task[0]], datasets[task[1]], task, task_idx, cfg
        )

    items = list(enumerate(cfg.tasks))
    if cfg.threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            outputs = list(pool.map(run, items))
    else:
        outputs = [run(item) for item in items]

    sweep = [row for rows, _ in outputs for row in rows]
    best = [best_row for _, best_row in outputs]
    out = _out_dir(opt)
    write_sweep(sweep, out / "sweep.csv")
    write_sweep(best, out / "best.csv")
    print(f"{len(sweep)} grid evaluations -> {out / 'sweep.csv'}")
    for row in best:
        p = row.point
        print(
            f"best {row.source}->{row.target}: acc {100.0 * row.accuracy:.2f}% "
            f"at lam_reg={p.lam_reg} lam_transfer={p.lam_transfer} "
            f"lam_mmd={p.lam_mmd} lam_consensus={p.lam_consensus} "
            f"m={p.fuzzy_index}"
        )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    opt = _Options(args)
    if not args.results:
        raise ValidationError("missing required option: --results FILE...")
    rows = []
    for path in args.results:
        rows.extend(read_csv_rows(Path(path), RESULTS_FORMAT))
    summaries = aggregate(rows)
    if not summaries:
        raise ValidationError("no usable fold rows in the given results")
    out = _out_dir(opt)
    (out / "summary.csv").write_text(
        "\n".join(summary_csv_lines(summaries)) + "\n", newline="\n"
    )
    text = summary_text(summaries)
    (out / "summary.txt").write_text(text + "\n", newline="\n")
    print(text)
    written = [out / "summary.csv", out / "summary.txt"]
    if not opt.pick("no_figures", False):
        from .figures import accuracy_figure, sensitivity_figures

        written.append(accuracy_figure(summaries, out / "accuracy.png"))
        if args.sweep:
            sweep_rows = read_csv_rows(Path(args.sweep), SWEEP_FORMAT)
            written.extend(sensitivity_figures(sweep_rows, out))
    print("wrote " + ", ".join(str(p) for p in written))
    return 0


# parser ----------------------------------------------------------------

def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE",
                        help="key=value file supplying option defaults")
    parser.add_argument("--seed", type=int, help="master random seed")
    parser.add_argument("--threads", type=int, help="worker threads")
    parser.add_argument("--out", metavar="DIR", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvtsk",
        description="multi-view transfer fuzzy classifier toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    _common(p)
    p.add_argument("--source-records", type=int, dest="source_records")
    p.add_argument("--target-records", type=int, dest="target_records")
    p.add_argument("--channels", type=int)
    p.add_argument("--fs", type=float)
    p.add_argument("--duration-s", type=float, dest="duration_s")
    p.add_argument("--seizures", type=int)
    p.add_argument("--shift-scale", type=float, dest="shift_scale")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="extract per-view features")
    _common(p)
    p.add_argument("--raw", metavar="DIR", help="directory of raw records")
    p.add_argument("--window-s", type=float, dest="window_s")
    p.add_argument("--overlap", type=float)
    p.add_argument("--keep-frac", type=float, dest="keep_frac")
    p.add_argument("--decimation", type=int)
    p.add_argument("--band-lo", type=float, dest="band_lo")
    p.add_argument("--band-hi", type=float, dest="band_hi")
    p.add_argument("--levels", type=int)
    p.set_defaults(func=cmd_extract)

    def _task_options(p: argparse.ArgumentParser) -> None:
        _common(p)
        p.add_argument("--features", metavar="DIR")
        p.add_argument("--tasks", help="comma list of source:target ids")
        p.add_argument("--folds", type=int)
        p.add_argument("--label-fraction", type=float,
                       dest="label_fraction")
        p.add_argument("--rules", type=int)
        p.add_argument("--fuzzy-index", type=float, dest="fuzzy_index")
        p.add_argument("--lam-reg", type=float, dest="lam_reg")
        p.add_argument("--lam-transfer", type=float, dest="lam_transfer")
        p.add_argument("--lam-mmd", type=float, dest="lam_mmd")
        p.add_argument("--lam-consensus", type=float, dest="lam_consensus")
        p.add_argument("--max-iters", type=int, dest="max_iters")
        p.add_argument("--tol", type=float)
        p.add_argument("--spread-scale", type=float, dest="spread_scale")
        p.add_argument("--prior-refresh", action="store_const", const=True,
                       dest="prior_refresh")

    p = sub.add_parser("transfer", help="run cross-validated transfer")
    _task_options(p)
    p.add_argument("--methods",
                   help="comma list: mv-tl, mv-tl-ablated, tsk-<view>")
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("gridsearch", help="nested-CV hyperparameter sweep")
    _task_options(p)
    p.add_argument("--lambda-grid", dest="lambda_grid",
                   help="comma list of penalty values")
    p.add_argument("--fuzzy-grid", dest="fuzzy_grid",
                   help="comma list of weight exponents")
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("report", help="aggregate results into a report")
    _common(p)
    p.add_argument("--results", nargs="+", metavar="FILE",
                   help="results CSVs to aggregate")
    p.add_argument("--sweep", metavar="FILE",
                   help="sweep CSV for sensitivity figures")
    p.add_argument("--no-figures", action="store_const", const=True,
                   dest="no_figures", help="skip PNG rendering")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ParseError, ArchiveError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
