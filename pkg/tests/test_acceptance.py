"""Acceptance gate: one test per published criterion.

Each test records a single ``ACCEPTANCE n (<title>): PASS|FAIL`` line,
echoed in the terminal summary, so a log scrape shows the verdict per
criterion.  Budgeted criteria assert their own wall-clock limits.
"""

import os
import time
from contextlib import contextmanager

import numpy as np
import pytest

import conftest

from mvtsk.antecedent import cluster_antecedents
from mvtsk.cli import main
from mvtsk.core import (
    MultiViewDataset,
    TrainConfig,
    ViewDataset,
    one_hot_encode,
)
from mvtsk.dataio import (
    SynthSpec,
    load_model,
    save_model,
    synth_domains,
)
from mvtsk.experiment import (
    METHOD_ABLATED,
    METHOD_FULL,
    ExperimentConfig,
    aggregate,
    read_csv_rows,
    run_transfer,
    subset_dataset,
)
from mvtsk.features import (
    FeatureConfig,
    SignalRecord,
    WindowSpec,
    band_bins,
    channel_spectrum,
    extract_multiview,
    segment,
    wavelet_decompose,
    wavelet_reconstruct,
)
from mvtsk.fuzzy_map import firing_strengths, map_dataset
from mvtsk.trainer import (
    collaborative_value,
    decision_matrix,
    fit,
    update_consequents,
    update_weights,
)
from mvtsk.transfer import build_mmd, mmd_value, transfer_value
from mvtsk.tsk import decision_values, fit_tsk, ridge_consequents


@contextmanager
def criterion(number, title):
    def emit(verdict):
        line = f"ACCEPTANCE {number} ({title}): {verdict}"
        print(line)
        conftest.acceptance_lines.append(line)

    try:
        yield
    except pytest.skip.Exception:
        emit("SKIP")
        raise
    except BaseException:
        emit("FAIL")
        raise
    emit("PASS")


def random_views(rng, n=10, n_views=3, lo=3, hi=7):
    dims = [int(d) for d in rng.integers(lo, hi, size=n_views)]
    return [rng.normal(size=(n, d)) for d in dims]


def random_block_problem(rng, n_views=3, n=12, n_classes=2):
    designs = random_views(rng, n=n, n_views=n_views, lo=4, hi=8)
    targets = one_hot_encode(rng.integers(0, n_classes, size=n), n_classes)
    weights = rng.dirichlet(np.ones(n_views))
    fuzzy_index = float(rng.uniform(1.2, 4.0))
    priors = [rng.normal(size=(d.shape[1], n_classes)) for d in designs]
    anchors = [rng.normal(size=(d.shape[1], n_classes)) for d in designs]
    penalties = [
        build_mmd(
            rng.normal(size=(9, d.shape[1])),
            rng.normal(loc=0.4, size=(6, d.shape[1])),
        )
        for d in designs
    ]
    lams = 10.0 ** rng.uniform(-3, 1, size=4)
    return (designs, targets, weights, fuzzy_index, priors, anchors,
            penalties, lams)


def block_objective(coeffs, problem):
    (designs, targets, weights, fuzzy_index, priors, anchors, penalties,
     lams) = problem
    lam_reg, lam_transfer, lam_mmd, lam_consensus = lams
    return collaborative_value(
        coeffs, weights, fuzzy_index, priors, designs, targets,
        lam_reg, lam_consensus,
    ) + transfer_value(coeffs, anchors, penalties, lam_transfer, lam_mmd)


def make_random_pair(rng, n_views=3, n_src=30, n_tgt=14, sep=2.5):
    dims = [int(d) for d in rng.integers(3, 6, size=n_views)]

    def domain(n, shift, tag):
        labels_idx = rng.integers(0, 2, size=n)
        labels = one_hot_encode(labels_idx, 2)
        views = tuple(
            ViewDataset(
                view_id=v,
                data=rng.normal(size=(n, d)) + sep * labels_idx[:, None]
                + shift,
                labels=labels,
            )
            for v, d in enumerate(dims)
        )
        return MultiViewDataset(views=views, domain_tag=tag)

    return domain(n_src, 0.0, "source"), domain(n_tgt, 0.3, "target")


class TestCriterion1EquationOracles:
    def test_identities_and_stationarity(self):
        with criterion(1, "equation oracles"):
            start = time.monotonic()
            rng = np.random.default_rng(100)

            # rule-by-rule fuzzy output equals the stacked linear form
            for _ in range(20):
                d = int(rng.integers(2, 6))
                data = rng.normal(size=(12, d))
                bank = cluster_antecedents(data, rules=3)
                view = ViewDataset(
                    view_id=0, data=data,
                    labels=one_hot_encode(rng.integers(0, 2, 12), 2),
                )
                model = fit_tsk(view, rules=3, lam=0.2)
                coeffs = model.consequents.coeffs.reshape(3, d + 1, 2)
                for x in rng.normal(size=(4, d)):
                    strengths = firing_strengths(x, bank)
                    augmented = np.concatenate(([1.0], x))
                    by_rule = sum(
                        strengths[k] * (augmented @ coeffs[k])
                        for k in range(3)
                    )
                    linear = decision_values(model, x)
                    assert np.max(np.abs(by_rule - linear)) < 1e-10

            # double-sum mean discrepancy equals the outer-product form
            for _ in range(10):
                d = int(rng.integers(2, 6))
                src = rng.normal(size=(int(rng.integers(3, 9)), d))
                tgt = rng.normal(loc=0.3, size=(int(rng.integers(3, 9)), d))
                penalty = build_mmd(src, tgt)
                n, mcount = src.shape[0], tgt.shape[0]
                omega = np.zeros((d, d))
                for i in range(n):
                    for j in range(n):
                        omega += np.outer(src[i], src[j]) / (n * n)
                for i in range(mcount):
                    for j in range(mcount):
                        omega += np.outer(tgt[i], tgt[j]) / (mcount * mcount)
                for i in range(n):
                    for j in range(mcount):
                        cross = np.outer(src[i], tgt[j])
                        omega -= (cross + cross.T) / (n * mcount)
                assert np.max(np.abs(omega - penalty.matrix)) < 1e-10

            # per-class projection sum equals the trace form
            for _ in range(10):
                problem = random_block_problem(rng)
                designs, _, _, _, priors, _, penalties, _ = problem
                value = mmd_value(priors, penalties)
                trace_form = sum(
                    float(np.trace(p.T @ pen.matrix @ p))
                    for p, pen in zip(priors, penalties)
                )
                assert abs(value - trace_form) <= 1e-9 * max(
                    1.0, abs(trace_form)
                )

            # finite differences vanish at the block solution
            step = 1e-6
            for _ in range(50):
                problem = random_block_problem(rng)
                (designs, targets, weights, fuzzy_index, priors, anchors,
                 penalties, lams) = problem
                coeffs = [p.copy() for p in priors]
                for v in range(len(designs)):
                    coeffs[v] = update_consequents(
                        v, designs, targets, weights, fuzzy_index,
                        priors, anchors, penalties, *lams,
                    )
                worst = 0.0
                for v in range(len(designs)):
                    block = coeffs[v]
                    for pos in np.ndindex(*block.shape):
                        saved = block[pos]
                        block[pos] = saved + step
                        up = block_objective(coeffs, problem)
                        block[pos] = saved - step
                        down = block_objective(coeffs, problem)
                        block[pos] = saved
                        worst = max(worst, abs(up - down) / (2.0 * step))
                assert worst < 1e-6

            assert time.monotonic() - start < 60.0


class TestCriterion2Reductions:
    def test_single_view_ridge_and_ablation_flags(self):
        with criterion(2, "ridge reduction and ablation flags"):
            rng = np.random.default_rng(200)
            source, target = make_random_pair(rng, n_views=1)
            bank = cluster_antecedents(source.views[0].data, rules=2)
            lam_reg = 0.3
            config = TrainConfig(
                rules=2, lam_reg=lam_reg, lam_transfer=0.0, lam_mmd=0.0,
                lam_consensus=0.9,
            )
            model, trace = fit(source, target, config, banks=[bank])
            design = map_dataset(target.views[0], bank)
            ref = ridge_consequents(design, target.labels, 2.0 * lam_reg)
            gap = np.max(np.abs(model.consequents[0].coeffs - ref.coeffs))
            assert gap < 1e-8
            assert trace.flags["consensus"] is False

            source3, target3 = make_random_pair(rng, n_views=3)
            _, full_trace = fit(source3, target3, TrainConfig(rules=2))
            assert full_trace.flags["knowledge_transfer"] is True
            assert full_trace.flags["distribution_match"] is True
            _, ablated_trace = fit(
                source3, target3,
                TrainConfig(rules=2, lam_transfer=0.0, lam_mmd=0.0),
            )
            assert ablated_trace.flags["knowledge_transfer"] is False
            assert ablated_trace.flags["distribution_match"] is False


class TestCriterion3Descent:
    def test_objective_descends_and_weights_optimal(self):
        with criterion(3, "alternating descent"):
            rng = np.random.default_rng(300)
            for i in range(50):
                n_views = int(rng.integers(2, 5))
                source, target = make_random_pair(rng, n_views=n_views)
                config = TrainConfig(
                    rules=2,
                    fuzzy_index=float(rng.uniform(1.2, 4.0)),
                    lam_reg=float(10.0 ** rng.uniform(-2, 0)),
                    lam_transfer=float(10.0 ** rng.uniform(-2, 1)),
                    lam_mmd=float(10.0 ** rng.uniform(-2, 0)),
                    lam_consensus=float(10.0 ** rng.uniform(-2, 0)),
                    max_iters=6,
                    prior_refresh=False,
                )
                model, trace = fit(source, target, config)
                values = trace.objective
                for prev, nxt in zip(values, values[1:]):
                    assert nxt <= prev + 1e-8 * abs(prev)
                assert abs(float(np.sum(model.weights)) - 1.0) < 1e-12
                assert np.all(model.weights >= 0.0)

                errors = trace.view_errors[-1]
                best = update_weights(errors, 2.0)
                best_value = float((best**2) @ errors)
                candidates = rng.dirichlet(np.ones(errors.size), size=1000)
                values_rand = (candidates**2) @ errors
                assert best_value <= float(values_rand.min()) + 1e-12


class TestCriterion4SignalPath:
    def test_transforms_and_segmentation(self):
        with criterion(4, "signal path"):
            start = time.monotonic()
            rng = np.random.default_rng(400)

            # energy is preserved from signal to spectrum
            for _ in range(10):
                x = rng.normal(size=256)
                mags = channel_spectrum(x)
                centered = x - x.mean()
                spectral = float(np.sum(mags**2)) / x.size
                direct = float(np.sum(centered**2))
                assert abs(spectral - direct) <= 1e-8 * max(1.0, direct)

            # orthonormal wavelet bank reconstructs and keeps energy
            for _ in range(10):
                x = rng.normal(size=256)
                parts = wavelet_decompose(x, levels=4)
                assert [p.size for p in parts] == [16, 16, 32, 64, 128]
                back = wavelet_reconstruct(parts)
                assert np.max(np.abs(back - x)) < 1e-8
                part_energy = float(sum(np.sum(p**2) for p in parts))
                energy = float(np.sum(x**2))
                assert abs(part_energy - energy) <= 1e-8 * energy

            assert band_bins(256, 256.0, (4.0, 30.0)).size == 27

            # segmentation counts for a crafted record, by hand:
            # seizures (3,7)s and (12,15)s at one-second windows with
            # half overlap give 7 + 5 windows; the normal complement
            # [0,3) [7,12) [15,20) tiles to 3 + 5 + 5 windows
            fs = 256.0
            samples = rng.normal(size=(1, int(20.0 * fs)))
            record = SignalRecord(
                samples=samples, fs=fs,
                seizure_intervals=((3.0, 7.0), (12.0, 15.0)),
            )
            spec = WindowSpec(
                length_s=1.0, overlap_frac=0.5, negative_keep_frac=1.0
            )
            windows, labels = segment(record, spec, seed=0)
            assert int(labels.sum()) == 7 + 5
            assert labels.size == 12 + 13

            assert time.monotonic() - start < 30.0


SCENARIO_SEED = 42
SCENARIO_FRACTION = 0.05
SCENARIO_FOLDS = 5
SCENARIO_TRAIN = TrainConfig(lam_transfer=10.0, lam_mmd=1.0)
# margins measured on the first verified run of this frozen scenario
FROZEN_MARGIN_ABLATION = 0.4112
FROZEN_MARGIN_SINGLE_VIEW = 0.0770
MARGIN_TOLERANCE = 0.01


@pytest.fixture(scope="module")
def scenario_rows():
    spec = SynthSpec(shift_scale=0.5)
    src_recs, tgt_recs = synth_domains(spec, seed=SCENARIO_SEED)
    window = WindowSpec()
    features = FeatureConfig(seed=SCENARIO_SEED)
    source, _ = extract_multiview(
        src_recs, window, features, domain_tag="source"
    )
    target, _ = extract_multiview(
        tgt_recs, window, features, domain_tag="target"
    )
    cfg = ExperimentConfig(
        tasks=(("source", "target"),),
        train=SCENARIO_TRAIN,
        folds=SCENARIO_FOLDS,
        label_fraction=SCENARIO_FRACTION,
        seed=SCENARIO_SEED,
    )
    start = time.monotonic()
    rows, _ = run_transfer(
        cfg,
        {"source": source, "target": target},
        (METHOD_FULL, METHOD_ABLATED, "tsk-time", "tsk-freq",
         "tsk-wavelet"),
    )
    return rows, time.monotonic() - start


class TestCriterion5FrozenScenario:
    def test_transfer_beats_ablation_and_single_views(self, scenario_rows):
        with criterion(5, "frozen synthetic scenario"):
            rows, elapsed = scenario_rows
            assert elapsed < 300.0
            means = {
                r.method: r.accuracy for r in rows if r.fold == "summary"
            }
            best_single = max(
                means["tsk-time"], means["tsk-freq"], means["tsk-wavelet"]
            )
            assert means[METHOD_FULL] >= means[METHOD_ABLATED]
            assert means[METHOD_FULL] >= best_single
            margin_abl = means[METHOD_FULL] - means[METHOD_ABLATED]
            margin_sv = means[METHOD_FULL] - best_single
            assert abs(margin_abl - FROZEN_MARGIN_ABLATION) <= (
                MARGIN_TOLERANCE
            )
            assert abs(margin_sv - FROZEN_MARGIN_SINGLE_VIEW) <= (
                MARGIN_TOLERANCE
            )


class TestCriterion6Determinism:
    def test_csv_bytes_and_archive_round_trip(self, tmp_path):
        with criterion(6, "determinism and persistence"):
            raw = tmp_path / "raw"
            feats = tmp_path / "features"
            assert main(
                [
                    "synth", "--out", str(raw), "--seed", "6",
                    "--source-records", "2", "--target-records", "2",
                    "--channels", "1", "--duration-s", "30",
                    "--seizures", "2",
                ]
            ) == 0
            assert main(
                [
                    "extract", "--raw", str(raw), "--out", str(feats),
                    "--seed", "6",
                ]
            ) == 0
            flags = [
                "transfer", "--features", str(feats),
                "--tasks", "source:target,target:source",
                "--rules", "2", "--max-iters", "3",
                "--label-fraction", "0.3", "--seed", "6",
            ]
            outs = []
            for name, threads in (("r1", "1"), ("r2", "1"), ("r4", "2")):
                out = tmp_path / name
                assert main(
                    flags + ["--out", str(out), "--threads", threads]
                ) == 0
                outs.append(out)
            ref_results = (outs[0] / "results.csv").read_bytes()
            ref_preds = (outs[0] / "predictions.csv").read_bytes()
            for out in outs[1:]:
                assert (out / "results.csv").read_bytes() == ref_results
                assert (out / "predictions.csv").read_bytes() == ref_preds

            # saved model answers identically on 100 fresh probes
            rng = np.random.default_rng(600)
            source, target = make_random_pair(rng, n_views=3, n_src=40)
            model, _ = fit(source, target, TrainConfig(rules=2))
            path = tmp_path / "model.json"
            save_model(model, path)
            loaded = load_model(path)
            probe_views = tuple(
                ViewDataset(
                    view_id=v.view_id,
                    data=rng.normal(size=(100, v.dim)),
                )
                for v in target.views
            )
            probes = MultiViewDataset(
                views=probe_views, domain_tag="target"
            )
            before = decision_matrix(model, probes)
            after = decision_matrix(loaded, probes)
            assert np.array_equal(before, after)


class TestCriterion7ReportFixture:
    def test_published_mean(self, tmp_path):
        with criterion(7, "report fixture mean"):
            header = (
                "method,source,target,fold,rules,fuzzy_index,lam_reg,"
                "lam_transfer,lam_mmd,lam_consensus,label_fraction,status,"
                "n_test,n_correct,accuracy,accuracy_sd,w_time,w_freq,"
                "w_wavelet"
            )
            accs = ["0.985", "0.9962", "0.985", "0.9925"]
            lines = ["# mvtsk-results v1", header]
            for fold, acc in enumerate(accs):
                lines.append(
                    f"mv-tl,p1,p1x,{fold},3,2.0,0.1,0.1,0.1,0.1,0.05,ok,"
                    f"100,99,{acc},,0.4,0.3,0.3"
                )
            results = tmp_path / "results.csv"
            results.write_text("\n".join(lines) + "\n")
            out = tmp_path / "report"
            assert main(
                [
                    "report", "--results", str(results), "--out", str(out),
                    "--no-figures",
                ]
            ) == 0
            summary = read_csv_rows(
                out / "summary.csv", "mvtsk-results-summary"
            )
            mean = float(summary[0]["accuracy_mean"])
            assert round(100.0 * mean, 2) == 98.97
            assert "98.97" in (out / "summary.txt").read_text()

            library_mean = aggregate(
                read_csv_rows(results, "mvtsk-results")
            )[0].mean
            assert library_mean == mean


class TestCriterion8RealDataSmoke:
    def test_optional_real_corpus(self, tmp_path):
        with criterion(8, "real-data smoke run"):
            raw = os.environ.get("MVTSK_CHBMIT_RAW")
            if not raw:
                pytest.skip(
                    "set MVTSK_CHBMIT_RAW to a directory of record CSVs "
                    "to run the real-data smoke test"
                )
            feats = tmp_path / "features"
            assert main(
                ["extract", "--raw", raw, "--out", str(feats)]
            ) == 0
            ids = sorted(
                {p.name.split(".")[0] for p in feats.glob("*.time.csv")}
            )
            assert len(ids) >= 2, "need at least two dataset ids"
            out = tmp_path / "run"
            assert main(
                [
                    "transfer", "--features", str(feats),
                    "--tasks", f"{ids[0]}:{ids[1]}",
                    "--folds", "2", "--label-fraction", "0.2",
                    "--out", str(out),
                ]
            ) == 0
            assert (out / "results.csv").exists()
