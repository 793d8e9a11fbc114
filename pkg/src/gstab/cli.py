"""Command-line interface: metrics | validate | drift | transform | steer.

Exit codes: 0 success, 1 failed validation checks, 2 input or runtime error
(reported as a single machine-parseable line on stderr).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import matrixio
from .errors import (
    GstabError,
    LabelRequiredError,
    ReferenceRequiredError,
    SpecParseError,
    UnknownMetricError,
)
from .drift import DRIFT_METRICS, build_drift_series, drift_score
from .inference import (
    bootstrap_ci,
    detection_threshold,
    early_warning_compare,
    false_alarm_rate,
    roc_auc,
    sensitivity_at_fpr,
)
from .parallel import available_workers
from .rng import RandomStream
from .similarity import (
    debiased_cka,
    effective_rank,
    eigenspectrum_similarity,
    linear_cka,
    mmd_rbf,
    participation_ratio,
    procrustes_similarity,
    pwcka_effective_rank,
    rdm_pearson,
    rsa_spearman,
    sliced_wasserstein,
    subspace_overlap,
)
from .stability import (
    StabilityConfig,
    anisotropy,
    class_separation_ratio,
    feature_split_stability,
    fisher_discriminant,
    label_conditioned_stability,
    lda_direction_stability,
    sample_split_stability,
    silhouette_score,
    supervised_rdm_alignment,
    trial_split_stability,
    variance_ratio,
    whitened_trial_split,
    zscore_variance_ratio,
)
from .steering import (
    DEFAULT_ALPHAS,
    random_direction_drops,
    shuffled_label_control,
    steering_direction,
    steering_sweep,
    train_linear_probe,
)
from .suites import SUITES, run_suite
from .synthetic import EncoderTransform, apply_encoder

DEFAULT_SEED = 320


def _default_seed() -> int:
    env = os.environ.get("GSTB_SEED")
    return int(env) if env else DEFAULT_SEED


def _stability_config(args) -> StabilityConfig:
    return StabilityConfig(
        n_splits=args.splits,
        distance=args.distance,
        max_samples=args.max_samples,
        seed=args.seed,
    )


# metric id -> (kind, callable); kind selects the required inputs.
# unsupervised: f(x, cfg, stream); supervised: f(x, y, cfg, stream);
# reference: f(x, ref, cfg, stream). Each returns (value, extras).
def _registry():
    def plain(fn):
        return lambda x, cfg, stream: (fn(x), {})

    def split_score(fn):
        def run(x, cfg, stream):
            score = fn(x, cfg)
            return score.value, {
                "per_split": list(score.per_split),
                "aux": {"degenerate_splits": score.degenerate_splits},
            }

        return run

    unsupervised = {
        "feature_split": split_score(feature_split_stability),
        "sample_split": split_score(sample_split_stability),
        "anisotropy": plain(anisotropy),
        "participation_ratio": plain(participation_ratio),
        "effective_rank": plain(effective_rank),
    }

    def sup_split(fn):
        def run(x, y, cfg, stream):
            score = fn(x, y, cfg)
            return score.value, {
                "per_split": list(score.per_split),
                "aux": {"degenerate_splits": score.degenerate_splits},
            }

        return run

    supervised = {
        "label_conditioned": sup_split(label_conditioned_stability),
        "supervised_rdm": lambda x, y, cfg, stream: (
            supervised_rdm_alignment(x, y, cfg.distance),
            {},
        ),
        "variance_ratio": lambda x, y, cfg, stream: (variance_ratio(x, y), {}),
        "zscore_variance": lambda x, y, cfg, stream: (zscore_variance_ratio(x, y), {}),
        "class_separation": lambda x, y, cfg, stream: (
            class_separation_ratio(x, y, stream=stream),
            {},
        ),
        "lda_stability": lambda x, y, cfg, stream: (
            lda_direction_stability(x, y, stream=stream),
            {},
        ),
        "trial_split": lambda x, y, cfg, stream: (
            trial_split_stability(x, y, cfg.distance),
            {},
        ),
        "whitened_trial_split": lambda x, y, cfg, stream: (whitened_trial_split(x, y), {}),
        "fisher": lambda x, y, cfg, stream: (fisher_discriminant(x, y), {}),
        "silhouette": lambda x, y, cfg, stream: (silhouette_score(x, y), {}),
    }

    reference = {
        "linear_cka": lambda x, r, cfg, stream: (linear_cka(x, r), {}),
        "cka": lambda x, r, cfg, stream: (debiased_cka(x, r), {}),
        "pwcka": lambda x, r, cfg, stream: (
            pwcka_effective_rank(x, r).value,
            {"aux": pwcka_effective_rank(x, r).aux},
        ),
        "procrustes": lambda x, r, cfg, stream: (procrustes_similarity(x, r), {}),
        "rdm_spearman": lambda x, r, cfg, stream: (rsa_spearman(x, r, cfg.distance), {}),
        "rdm_pearson": lambda x, r, cfg, stream: (rdm_pearson(x, r, cfg.distance), {}),
        "wasserstein": lambda x, r, cfg, stream: (
            sliced_wasserstein(x, r, stream=stream),
            {},
        ),
        "mmd": lambda x, r, cfg, stream: (mmd_rbf(x, r), {}),
        "subspace_overlap": lambda x, r, cfg, stream: (subspace_overlap(x, r, k=10), {}),
        "eigenspectrum": lambda x, r, cfg, stream: (eigenspectrum_similarity(x, r), {}),
    }
    return unsupervised, supervised, reference


def _parse_metric_list(raw: list[str]) -> list[str]:
    names = []
    for chunk in raw:
        names.extend(m.strip() for m in chunk.split(",") if m.strip())
    return names


def _emit(args, report: dict, start: float) -> None:
    if args.timing:
        report["timing"] = {"wall_seconds": time.time() - start}
    text = matrixio.dump_report(report)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_metrics(args) -> int:
    start = time.time()
    unsup, sup, ref = _registry()
    names = _parse_metric_list(args.metric)
    if not names:
        raise UnknownMetricError("no metric requested")
    x, header = matrixio.read_matrix_with_header(args.input)
    labels = None
    if args.label_col:
        x, labels = matrixio.split_label_column(x, header, args.label_col)
    elif args.labels:
        labels = matrixio.read_labels(args.labels)
    reference = matrixio.read_matrix(args.reference) if args.reference else None

    cfg = _stability_config(args)
    stream = RandomStream(args.seed)
    results = []
    warnings: list[str] = []
    for i, name in enumerate(names):
        if name in unsup:
            runner = lambda data, nm=name: unsup[nm](data, cfg, stream.derive(i))
            data = x
        elif name in sup:
            if labels is None:
                raise LabelRequiredError(f"metric {name!r} requires --labels or --label-col")
            runner = lambda data, nm=name: sup[nm](
                data[:, :-1], data[:, -1].astype(np.int64), cfg, stream.derive(i)
            )
            data = np.column_stack([x, labels.astype(np.float64)])
        elif name in ref:
            if reference is None:
                raise ReferenceRequiredError(f"metric {name!r} requires --reference")
            if reference.shape[0] != x.shape[0]:
                raise ReferenceRequiredError("reference must be row-aligned with the input")
            runner = lambda data, nm=name: ref[nm](
                data[:, : x.shape[1]], data[:, x.shape[1] :], cfg, stream.derive(i)
            )
            data = np.column_stack([x, reference])
        else:
            raise UnknownMetricError(f"unknown metric {name!r}")

        value, extras = runner(data)
        entry = {"metric": name, "value": value}
        entry.update(extras)
        if args.bootstrap:
            def statistic(rows, run=runner):
                try:
                    return run(rows)[0]
                except GstabError:
                    return float("nan")

            boot = bootstrap_ci(
                data,
                statistic,
                iterations=args.bootstrap,
                stream=stream.derive(1000 + i),
            )
            entry["ci"] = {
                "low": boot.ci_low,
                "high": boot.ci_high,
                "iterations": boot.iterations,
                "dropped": boot.dropped,
            }
            if boot.warned:
                warnings.append(f"{name}: dropped more than 5% of bootstrap replicates")
        results.append(entry)

    params = {
        "input": args.input,
        "labels": args.labels,
        "label_col": args.label_col,
        "reference": args.reference,
        "metrics": names,
        "splits": cfg.n_splits,
        "distance": cfg.distance,
        "max_samples": cfg.max_samples,
        "bootstrap": args.bootstrap,
        "workers": args.workers,
    }
    report = matrixio.build_report(
        ["metrics"] + names, args.seed, params, results, warnings
    )
    _emit(args, report, start)
    return 0


def cmd_validate(args) -> int:
    start = time.time()
    result = run_suite(args.suite, seed=args.seed, workers=args.workers)
    results = [
        {
            "metric": c.name,
            "value": c.observed,
            "aux": {"requirement": c.requirement, "passed": c.passed},
        }
        for c in result.checks
    ]
    report = matrixio.build_report(
        ["validate", args.suite],
        args.seed,
        {"suite": args.suite, "workers": args.workers},
        results,
    )
    report["values"] = matrixio._jsonable(result.values)
    for c in result.checks:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.observed:.6g} ({c.requirement})")
    if args.output:
        matrixio.write_report(args.output, report)
    return 0 if result.passed else 1


def _parse_sweep(raw: str) -> list[float]:
    if ":" not in raw:
        raise SpecParseError("sweep must look like noise:0.01,0.05,0.1")
    kind, _, levels = raw.partition(":")
    if kind != "noise":
        raise SpecParseError(f"unknown sweep family {kind!r}")
    try:
        values = [float(v) for v in levels.split(",") if v.strip()]
    except ValueError as exc:
        raise SpecParseError(f"bad sweep level: {exc}") from exc
    if not values:
        raise SpecParseError("sweep needs at least one level")
    return values


def cmd_drift(args) -> int:
    start = time.time()
    baseline = matrixio.read_matrix(args.baseline)
    metrics = _parse_metric_list(args.metrics) or list(DRIFT_METRICS)
    stream = RandomStream(args.seed)
    results = []
    warnings: list[str] = []
    values: dict = {}

    if args.current:
        current = matrixio.read_matrix(args.current)
        for m in metrics:
            results.append(
                {"metric": m, "value": drift_score(baseline, current, m, stream=stream)}
            )
    elif args.sweep:
        levels = _parse_sweep(args.sweep)
        accuracy = None
        if args.accuracy:
            acc_col = matrixio.read_matrix(args.accuracy)
            if acc_col.shape[1] != 1 or acc_col.shape[0] != len(levels):
                raise SpecParseError("accuracy file must hold one value per sweep level")
            accuracy = acc_col[:, 0]
        series = build_drift_series(baseline, levels, metrics, stream=stream)
        if accuracy is not None:
            from .inference import DriftSeries

            series = DriftSeries(series.levels, series.metrics, tuple(accuracy))
        values["levels"] = list(series.levels)
        for m in metrics:
            drifts = series.metric(m)
            values[m] = drifts.tolist()
            thresh = detection_threshold(series, m, args.threshold)
            entry = {
                "metric": m,
                "value": float(drifts[-1]),
                "aux": {"detection_threshold": thresh},
            }
            if series.accuracy is not None:
                drops = np.asarray(series.accuracy[0]) - np.asarray(series.accuracy)
                truth = drops > 0.01
                if truth.any() and not truth.all():
                    entry["aux"]["roc_auc"] = roc_auc(drifts, truth)
                    entry["aux"]["sensitivity_at_fpr05"] = sensitivity_at_fpr(drifts, truth)
                else:
                    warnings.append(f"{m}: accuracy drops are single-class; ROC skipped")
                try:
                    entry["aux"]["false_alarm_rate"] = false_alarm_rate(series, m, args.threshold)
                except GstabError as exc:
                    warnings.append(f"{m}: {exc}")
            results.append(entry)
        if len(metrics) >= 2:
            first = {}
            for i, a in enumerate(metrics):
                for b in metrics[i + 1 :]:
                    first[f"{a}_vs_{b}"] = early_warning_compare(series, a, b, threshold=args.threshold)
            values["early_warning"] = first
    else:
        raise SpecParseError("drift requires --current or --sweep")

    params = {
        "baseline": args.baseline,
        "current": args.current,
        "sweep": args.sweep,
        "metrics": metrics,
        "threshold": args.threshold,
        "workers": args.workers,
    }
    report = matrixio.build_report(["drift"], args.seed, params, results, warnings)
    if values:
        report["values"] = matrixio._jsonable(values)
    _emit(args, report, start)
    return 0


def _parse_encoder(spec: str, seed: int) -> EncoderTransform:
    parts = spec.split(":")
    kind = parts[0].strip()
    params: dict = {"seed": seed}
    for part in parts[1:]:
        if "=" not in part:
            raise SpecParseError(f"encoder parameter {part!r} must look like name=value")
        key, _, value = part.partition("=")
        key = key.strip()
        try:
            if key == "k":
                params["k"] = int(value)
            elif key == "sigma":
                params["sigma"] = float(value)
            elif key == "seed":
                params["seed"] = int(value)
            else:
                raise SpecParseError(f"unknown encoder parameter {key!r}")
        except ValueError as exc:
            raise SpecParseError(f"bad encoder parameter {part!r}: {exc}") from exc
    try:
        return EncoderTransform(kind, **params)
    except ValueError as exc:
        raise SpecParseError(str(exc)) from exc


def cmd_transform(args) -> int:
    data = Path(args.input).read_bytes()
    binary_in = data[:4] == matrixio.BINARY_MAGIC
    x, header = matrixio.read_matrix_with_header(args.input)
    transform = _parse_encoder(args.encoder, args.seed)
    out = apply_encoder(x, transform)
    out_path = args.output or (args.input + ".out")
    if binary_in:
        matrixio.write_matrix_binary(out_path, out)
    else:
        matrixio.write_matrix_csv(out_path, out)
    sidecar = {
        "encoder": transform.kind,
        "k": transform.k,
        "sigma": transform.sigma,
        "seed": transform.seed,
        "input": args.input,
        "output": str(out_path),
        "shape": list(out.shape),
    }
    Path(str(out_path) + ".params.json").write_text(
        json.dumps(sidecar, indent=2) + "\n", encoding="utf-8"
    )
    return 0


def _read_pair(raw: str) -> tuple[np.ndarray, np.ndarray]:
    if "," not in raw:
        raise SpecParseError("expected matrix.csv,labels.csv")
    x_path, _, y_path = raw.partition(",")
    return matrixio.read_matrix(x_path.strip()), matrixio.read_labels(y_path.strip())


def cmd_steer(args) -> int:
    start = time.time()
    x_train, y_train = _read_pair(args.train)
    x_test, y_test = _read_pair(args.test)
    alphas = (
        [float(a) for a in args.alphas.split(",")] if args.alphas else list(DEFAULT_ALPHAS)
    )
    stream = RandomStream(args.seed)
    probe = train_linear_probe(x_train, y_train)
    direction = steering_direction(probe)
    sweep = steering_sweep(probe, x_test, y_test, direction, alphas)
    results = [
        {"metric": "baseline_accuracy", "value": sweep.baseline_accuracy},
        {"metric": "max_drop", "value": sweep.max_drop},
    ]
    warnings = [] if probe.converged else ["probe did not reach the gradient tolerance"]
    values: dict = {"alphas": list(sweep.alphas), "accuracies": list(sweep.accuracies)}

    controls = [c.strip() for c in (args.controls or "").split(",") if c.strip()]
    for control in controls:
        if control == "shuffled":
            shuffled = {}
            shuffled["supervised_rdm"] = shuffled_label_control(
                x_train, y_train, supervised_rdm_alignment, stream.derive(1)
            )
            shuffled["variance_ratio"] = shuffled_label_control(
                x_train, y_train, variance_ratio, stream.derive(2)
            )
            if int(np.max(y_train)) + 1 >= 3:
                cfg = _stability_config(args)
                shuffled["label_conditioned"] = shuffled_label_control(
                    x_train,
                    y_train,
                    lambda xx, yy: label_conditioned_stability(xx, yy, cfg).value,
                    stream.derive(3),
                )
            for name, value in shuffled.items():
                results.append({"metric": f"shuffled_{name}", "value": value})
        elif control.startswith("random"):
            m = int(control.partition(":")[2] or 20)
            rand_drop = random_direction_drops(
                probe, x_test, y_test, n_directions=m, stream=stream.derive(4), alphas=alphas
            )
            results.append({"metric": "random_direction_drop", "value": rand_drop})
            ratio = sweep.max_drop / rand_drop if rand_drop > 0 else float("inf")
            results.append({"metric": "true_vs_random_ratio", "value": ratio})
        else:
            raise SpecParseError(f"unknown control {control!r}")

    params = {
        "train": args.train,
        "test": args.test,
        "alphas": alphas,
        "controls": controls,
        "l2_penalty": 1.0,
    }
    report = matrixio.build_report(["steer"], args.seed, params, results, warnings)
    report["values"] = matrixio._jsonable(values)
    _emit(args, report, start)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gstab",
        description="Geometric stability analysis for representation matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=_default_seed())
        p.add_argument("--splits", type=int, default=30)
        p.add_argument("--distance", choices=("cosine", "correlation", "euclidean"), default="cosine")
        p.add_argument("--max-samples", type=int, default=1600, dest="max_samples")
        p.add_argument("--workers", type=int, default=available_workers())
        p.add_argument("--output", default=None)
        p.add_argument("--timing", action="store_true")

    p = sub.add_parser("metrics", help="compute metrics on a matrix file")
    p.add_argument("--input", required=True)
    p.add_argument("--labels", default=None)
    p.add_argument("--label-col", default=None, dest="label_col")
    p.add_argument("--reference", default=None)
    p.add_argument("--metric", action="append", default=[], required=True)
    p.add_argument("--bootstrap", type=int, default=0)
    common(p)
    p.set_defaults(fn=cmd_metrics)

    p = sub.add_parser("validate", help="run a validation suite")
    p.add_argument("--suite", required=True, choices=sorted(SUITES))
    common(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("drift", help="score drift between snapshots or over a sweep")
    p.add_argument("--baseline", required=True)
    p.add_argument("--current", default=None)
    p.add_argument("--sweep", default=None)
    p.add_argument("--metrics", action="append", default=[])
    p.add_argument("--accuracy", default=None)
    p.add_argument("--threshold", type=float, default=0.05)
    common(p)
    p.set_defaults(fn=cmd_drift)

    p = sub.add_parser("transform", help="apply an encoder transformation")
    p.add_argument("--input", required=True)
    p.add_argument("--encoder", required=True)
    common(p)
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("steer", help="train a probe and run a steering sweep")
    p.add_argument("--train", required=True, help="matrix.csv,labels.csv")
    p.add_argument("--test", required=True, help="matrix.csv,labels.csv")
    p.add_argument("--alphas", default=None)
    p.add_argument("--controls", default=None, help="shuffled,random:20")
    common(p)
    p.set_defaults(fn=cmd_steer)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except GstabError as exc:
        print(f"error: {type(exc).code()}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: IO: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
