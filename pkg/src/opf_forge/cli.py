"""Command-line pipeline: synth / extract / dict / quantize / compress / train / predict / eval / bench."""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import OrderedDict
from pathlib import Path

import numpy as np

from . import classify, persist, rbm as rbm_mod
from .bench import BenchConfig, bench_dictionaries
from .dictionary import (
    Dictionary,
    LayerSchedule,
    dict_dopf,
    dict_flat_opf,
    dict_hopf,
    quantize,
    train_deep_forest,
)
from .cluster import kmeans_cluster
from .evaluation import ExperimentConfig, holdout_experiment, report_table
from .signals import (
    SignalFormatError,
    SynthParams,
    extract_descriptors,
    generate_synthetic_cohort,
    parse_signal_file,
    write_signal_csv,
)


class CliError(Exception):
    pass


def _apply_thread_cap():
    cap = os.environ.get("OPF_FORGE_THREADS")
    if cap:
        try:
            n = max(1, int(cap))
        except ValueError:
            raise CliError(f"OPF_FORGE_THREADS={cap!r} is not an integer") from None
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _parse_schedule(spec: str) -> LayerSchedule:
    """'100,0.01,0.1,0.1' -> layer-1 k_max 100, then per-layer fractions."""
    parts = [p for p in spec.split(",") if p]
    if not parts:
        raise CliError(f"empty schedule {spec!r}")
    try:
        layer1 = int(parts[0])
        fractions = tuple(float(p) for p in parts[1:])
    except ValueError:
        raise CliError(f"bad schedule {spec!r}; expected e.g. 100,0.01,0.1,0.1") from None
    return LayerSchedule(n_layers=len(parts), layer1_kmax=layer1, fractions=fractions)


def _load_signals(paths: list[str]):
    files = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            files.extend(sorted(path.glob("*.csv")))
        else:
            files.append(path)
    if not files:
        raise CliError(f"no signal CSV files under {paths}")
    signals = []
    for f in files:
        try:
            signals.append(parse_signal_file(f.read_bytes()))
        except SignalFormatError as e:
            raise CliError(f"{f}: {e}") from None
    return signals


def _descriptor_groups(path):
    """Descriptor CSV -> ordered {subject: (label, matrix)}."""
    dim, rows = persist.load_descriptor_csv(path)
    groups = OrderedDict()
    for subject, label, _window, vec in rows:
        groups.setdefault(subject, (label, []))[1].append(vec)
    return dim, OrderedDict(
        (s, (label, np.stack(vecs))) for s, (label, vecs) in groups.items()
    )


def cmd_synth(args) -> str:
    params = SynthParams(
        n_subjects_per_class=args.subjects,
        duration_s=args.duration,
        sample_rate_hz=args.rate,
        tremor_freq_range_hz=(args.tremor_freq[0], args.tremor_freq[1]),
        tremor_amplitude=args.tremor_amplitude,
        noise_std=args.noise_std,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    signals = generate_synthetic_cohort(params)
    files = []
    for s in signals:
        name = f"{s.subject_id}.csv"
        (out / name).write_bytes(write_signal_csv(s))
        files.append(name)
    manifest = {
        "version": persist.SCHEMA_VERSION,
        "kind": "manifest",
        "files": files,
        "params": {
            "n_subjects_per_class": params.n_subjects_per_class,
            "duration_s": params.duration_s,
            "sample_rate_hz": params.sample_rate_hz,
            "tremor_freq_range_hz": list(params.tremor_freq_range_hz),
            "tremor_amplitude": params.tremor_amplitude,
            "noise_std": params.noise_std,
            "seed": params.seed,
        },
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    return f"synth: wrote {len(files)} signals to {out}"


def cmd_extract(args) -> str:
    signals = _load_signals(args.signals)
    rows = []
    for s in signals:
        for d in extract_descriptors(s, args.window_ms, args.stride_ms):
            rows.append((s.subject_id, s.label, d.window_index, d.values))
    persist.save_descriptor_csv(args.out, rows)
    return f"extract: {len(rows)} descriptors of dimension {rows[0][3].size} -> {args.out}"


def cmd_dict(args) -> str:
    _dim, groups = _descriptor_groups(args.descriptors)
    data = np.concatenate([mat for _label, mat in groups.values()])
    if args.method == "opf":
        d = dict_flat_opf(data, min(args.kmax, data.shape[0] - 1))
    elif args.method in ("dopf", "hopf"):
        df = train_deep_forest(data, _parse_schedule(args.schedule))
        d = dict_dopf(df) if args.method == "dopf" else dict_hopf(df)
    elif args.method == "kmeans":
        model = kmeans_cluster(data, min(args.k, data.shape[0]), seed=args.seed)
        d = Dictionary(words=model.centroids, method="kmeans")
    else:  # argparse choices prevent this
        raise CliError(f"unknown method {args.method!r}")
    persist.save_dictionary(args.out, d)
    return f"dict: {d.method} dictionary with {d.size} words of dimension {d.dim} -> {args.out}"


def cmd_quantize(args) -> str:
    dim, groups = _descriptor_groups(args.descriptors)
    dictionary = persist.load_dictionary(args.dictionary)
    if dim != dictionary.dim:
        raise CliError(
            f"descriptor dimension {dim} does not match dictionary dimension {dictionary.dim}"
        )
    hists = [
        quantize(mat, dictionary, subject_id=s, label=label)
        for s, (label, mat) in groups.items()
    ]
    persist.save_histograms(args.out, hists)
    return f"quantize: {len(hists)} histograms of {dictionary.size} bins -> {args.out}"


def cmd_compress(args) -> str:
    hists = persist.load_histograms(args.histograms)
    counts = np.stack([h.counts for h in hists]).astype(np.float64)
    model = rbm_mod.train_rbm(
        counts,
        args.ratio,
        rbm_mod.RbmHyper(lr=args.lr, epochs=args.epochs, batch=args.batch, seed=args.seed),
        allow_any_ratio=args.allow_any_ratio,
    )
    persist.save_rbm(args.out, model)
    return (
        f"compress: RBM {model.visible_dim}->{model.hidden_dim} "
        f"(ratio {args.ratio}) -> {args.out}"
    )


def _histogram_features(hist_path, rbm_path, normalize):
    hists = persist.load_histograms(hist_path)
    x = np.stack([h.counts for h in hists]).astype(np.float64)
    labels = [h.label for h in hists]
    subjects = [h.subject_id for h in hists]
    if rbm_path is not None or normalize:
        x = rbm_mod.normalize_histograms(x)
    if rbm_path is not None:
        model = persist.load_rbm(rbm_path)
        if x.shape[1] != model.visible_dim:
            raise CliError(
                f"histogram dimension {x.shape[1]} does not match "
                f"RBM visible dimension {model.visible_dim}"
            )
        x = rbm_mod.compress(model, x)
    return subjects, labels, x


def cmd_train(args) -> str:
    _subjects, labels, x = _histogram_features(args.histograms, args.rbm, args.normalize)
    if args.classifier == "sopf":
        persist.save_sopf(args.out, classify.train_sopf(x, labels))
    else:
        persist.save_bayes(args.out, classify.train_bayes(x, labels))
    return f"train: {args.classifier} model on {x.shape[0]} samples -> {args.out}"


def cmd_predict(args) -> str:
    subjects, _labels, x = _histogram_features(args.histograms, args.rbm, args.normalize)
    doc = json.loads(Path(args.model).read_text())
    kind = doc.get("kind")
    if kind == "sopf_model":
        model = persist.load_sopf(args.model)
        if x.shape[1] != model.vectors.shape[1]:
            raise CliError(
                f"feature dimension {x.shape[1]} does not match "
                f"model dimension {model.vectors.shape[1]}"
            )
        preds = [
            {"subject": s, "label": lbl, "cost": cost}
            for s, (lbl, cost) in zip(subjects, (classify.predict_sopf(model, v) for v in x))
        ]
    elif kind == "bayes_model":
        model = persist.load_bayes(args.model)
        if x.shape[1] != model.means.shape[1]:
            raise CliError(
                f"feature dimension {x.shape[1]} does not match "
                f"model dimension {model.means.shape[1]}"
            )
        preds = [
            {"subject": s, "label": classify.predict_bayes(model, v)}
            for s, v in zip(subjects, x)
        ]
    else:
        raise CliError(f"{args.model}: field 'kind' is {kind!r}, not a classifier model")
    out = {"version": persist.SCHEMA_VERSION, "kind": "predictions", "items": preds}
    Path(args.out).write_text(json.dumps(out, sort_keys=True, indent=1) + "\n")
    return f"predict: {len(preds)} predictions -> {args.out}"


def cmd_eval(args) -> str:
    signals = _load_signals(args.signals)
    config = ExperimentConfig(
        window_ms=args.window_ms,
        stride_ms=args.stride_ms,
        dict_method=args.dict_method,
        flat_kmax=args.kmax,
        schedule=_parse_schedule(args.schedule),
        kmeans_k=args.k,
        classifier=args.classifier,
        rbm_ratio=args.rbm_ratio,
        normalize_histograms=args.normalize,
        shuffle_labels=args.shuffle_labels,
    )
    report = holdout_experiment(
        signals, config, n_runs=args.n_runs, split=args.split, seed=args.seed
    )
    persist.save_report(args.out, report)
    if args.table:
        Path(args.table).write_text(report_table(report) + "\n")
    return (
        f"eval: [{args.dict_method}, {args.classifier}] balanced accuracy "
        f"{100 * report.mean:.2f} +/- {100 * report.std:.2f} over {report.n_runs} runs "
        f"-> {args.out}"
    )


def _parse_bench_config(spec: str) -> BenchConfig:
    """'opf:1500' | 'dopf:100,0.01,0.1,0.1' | 'kmeans:68' | 'kmeans:auto'."""
    method, _, rest = spec.partition(":")
    if method == "opf":
        return BenchConfig(method="opf", kmax=int(rest))
    if method == "dopf":
        return BenchConfig(method="dopf", schedule=_parse_schedule(rest))
    if method == "kmeans":
        k = None if rest in ("", "auto") else int(rest)
        return BenchConfig(method="kmeans", k=k)
    raise CliError(f"bad bench config {spec!r}")


def cmd_bench(args) -> str:
    _dim, groups = _descriptor_groups(args.descriptors)
    data = np.concatenate([mat for _label, mat in groups.values()])
    configs = [_parse_bench_config(s) for s in args.configs]
    entries = bench_dictionaries(data, configs)
    doc = {
        "version": persist.SCHEMA_VERSION,
        "kind": "bench_report",
        "n_descriptors": int(data.shape[0]),
        "dim": int(data.shape[1]),
        "entries": [
            {"method": e.method, "seconds": e.seconds, "n_words": e.n_words, "params": e.params}
            for e in entries
        ],
    }
    Path(args.out).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    summary = ", ".join(f"{e.method}={e.seconds:.3f}s" for e in entries)
    return f"bench: {data.shape[0]} descriptors: {summary} -> {args.out}"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opf-forge", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic labeled cohort")
    s.add_argument("--subjects", type=int, required=True, help="subjects per class")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--duration", type=float, default=4.0)
    s.add_argument("--rate", type=float, default=100.0)
    s.add_argument("--tremor-freq", type=float, nargs=2, default=(4.0, 6.0))
    s.add_argument("--tremor-amplitude", type=float, default=1.0)
    s.add_argument("--noise-std", type=float, default=0.2)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("extract", help="sliding-window DWT descriptors from signal CSVs")
    s.add_argument("--signals", nargs="+", required=True, help="signal CSV files or directories")
    s.add_argument("--window-ms", type=float, default=150.0)
    s.add_argument("--stride-ms", type=float, default=100.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("dict", help="learn a visual dictionary")
    s.add_argument("--descriptors", required=True)
    s.add_argument("--method", choices=["opf", "dopf", "hopf", "kmeans"], required=True)
    s.add_argument("--kmax", type=int, default=100, help="flat OPF k_max")
    s.add_argument("--schedule", default="100,0.01,0.1,0.1", help="dOPF/hOPF layer schedule")
    s.add_argument("--k", type=int, default=32, help="k-means cluster count")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_dict)

    s = sub.add_parser("quantize", help="histograms of nearest dictionary words")
    s.add_argument("--descriptors", required=True)
    s.add_argument("--dictionary", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_quantize)

    s = sub.add_parser("compress", help="train an RBM compressor on histograms")
    s.add_argument("--histograms", required=True)
    s.add_argument("--ratio", type=float, required=True)
    s.add_argument("--lr", type=float, default=0.1)
    s.add_argument("--epochs", type=int, default=100)
    s.add_argument("--batch", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--allow-any-ratio", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_compress)

    s = sub.add_parser("train", help="train a classifier on histograms")
    s.add_argument("--histograms", required=True)
    s.add_argument("--classifier", choices=["sopf", "bayes"], required=True)
    s.add_argument("--rbm", help="optional RBM model for feature compression")
    s.add_argument("--normalize", action="store_true", help="L1-normalize histograms")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", help="classify histograms with a trained model")
    s.add_argument("--model", required=True)
    s.add_argument("--histograms", required=True)
    s.add_argument("--rbm")
    s.add_argument("--normalize", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("eval", help="end-to-end hold-out evaluation from signals")
    s.add_argument("--signals", nargs="+", required=True)
    s.add_argument("--window-ms", type=float, default=150.0)
    s.add_argument("--stride-ms", type=float, default=100.0)
    s.add_argument("--dict-method", choices=["opf", "dopf", "hopf", "kmeans"], default="hopf")
    s.add_argument("--kmax", type=int, default=50)
    s.add_argument("--schedule", default="3,0.5")
    s.add_argument("--k", type=int, default=None, help="k-means size (default: dOPF-derived)")
    s.add_argument("--classifier", choices=["sopf", "bayes"], default="sopf")
    s.add_argument("--rbm-ratio", type=float, default=None)
    s.add_argument("--normalize", action="store_true")
    s.add_argument("--shuffle-labels", action="store_true")
    s.add_argument("--n-runs", type=int, default=15)
    s.add_argument("--split", type=float, default=0.5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--table", help="also write an aligned text table here")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("bench", help="time dictionary learners on one descriptor set")
    s.add_argument("--descriptors", required=True)
    s.add_argument(
        "--configs", nargs="+", required=True,
        help="e.g. dopf:100,0.01,0.1,0.1 opf:1500 kmeans:auto",
    )
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_thread_cap()
        print(args.func(args))
    except (CliError, persist.ArtifactError, SignalFormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
