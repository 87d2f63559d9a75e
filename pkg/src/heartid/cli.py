"""Command-line front end: synth, extract, train, eval, project, report.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal failure.
Option precedence is flags > --config JSON file > built-in defaults; the
config file maps subcommand names to option dictionaries, e.g.
``{"extract": {"k_prime": 16}}``.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from . import cepstrum, classify, cohort, dataio, embedding, radar
from .errors import PipelineError

PALETTE = [
    "#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377",
    "#bbbbbb", "#000000",
]


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage problems; this pipeline reserves 2 for
    # data errors, so remap usage to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def _gamma_arg(text: str):
    if text == "scale":
        return text
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heartid", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None, help="JSON file of per-subcommand defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--cohort", default="default", choices=sorted(cohort.COHORT_PRESETS))
    p.add_argument("--days", type=int, default=5)
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--duration", type=float, default=60.0)
    p.add_argument("--fs", type=float, default=100.0)
    p.add_argument("--snr-db", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", default="baseband", choices=("baseband", "cube"))
    p.add_argument("--dataset-id", default="cohort")

    p = sub.add_parser("extract", help="compute feature vectors from a dataset")
    p.add_argument("--data", required=True, help="dataset directory (with manifest)")
    p.add_argument("--out", required=True, help="output feature CSV")
    p.add_argument("--kind", default="prop", choices=cepstrum.FEATURE_KINDS)
    p.add_argument("--segment", type=float, default=None, help="pre-split into segments (s)")
    p.add_argument("--k-prime", type=int, default=24)
    p.add_argument("--n-filters", type=int, default=64)
    p.add_argument("--f-ref", type=float, default=5.0)
    p.add_argument("--f-prime", type=float, default=1000.0)
    p.add_argument("--window", type=float, default=2.0)
    p.add_argument("--hop", type=float, default=0.1)
    p.add_argument("--log-energies", action="store_true")

    p = sub.add_parser("train", help="fit a multiclass SVM on a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="output model JSON")
    p.add_argument("--kernel", default="rbf", choices=classify.KERNELS)
    p.add_argument("--C", type=float, default=10.0)
    p.add_argument("--gamma", type=_gamma_arg, default="scale")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-passes", type=int, default=10)

    p = sub.add_parser("eval", help="session-grouped cross-validation report")
    p.add_argument("--features", required=True)
    p.add_argument("--report", required=True, help="output report JSON")
    p.add_argument("--confusion", default=None, help="output confusion CSV")
    p.add_argument("--kernel", default="rbf", choices=classify.KERNELS)
    p.add_argument("--C", type=float, default=10.0)
    p.add_argument("--gamma", type=_gamma_arg, default="scale")
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--max-passes", type=int, default=10)
    p.add_argument("--timestamp", action="store_true",
                   help="stamp the report with wall-clock time (breaks byte determinism)")

    p = sub.add_parser("project", help="2-D projection of a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="output projection CSV")
    p.add_argument("--method", default="pca", choices=("pca", "tsne"))
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--svg", default=None, help="optional SVG scatter plot")

    p = sub.add_parser("report", help="combine eval reports into one summary")
    p.add_argument("reports", nargs="+", help="eval report JSON files")
    p.add_argument("--out", default=None, help="output summary JSON")
    p.add_argument("--csv", default=None, help="output summary CSV")

    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    pre = _Parser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    config = {}
    if known.config:
        try:
            with open(known.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise PipelineError(f"cannot read config {known.config}: {exc}") from exc
    if config and argv:
        for action in parser._subparsers._group_actions:  # noqa: SLF001
            for name, sp in action.choices.items():
                if name in config:
                    sp.set_defaults(**config[name])
    return parser.parse_args(argv)


# --- subcommand bodies ------------------------------------------------------

def cmd_synth(args) -> int:
    profiles = cohort.COHORT_PRESETS[args.cohort]()
    schedule = cohort.Schedule(days=args.days, repetitions=args.repetitions)
    radar_cfg = radar.RadarConfig(fs_slow=args.fs)
    measurements = cohort.generate_cohort(
        profiles,
        schedule,
        snr_db=args.snr_db,
        seed=args.seed,
        mode=args.mode,
        duration=args.duration,
        fs=args.fs,
        radar=radar_cfg,
    )
    dataio.save_dataset(
        args.out,
        measurements,
        profiles,
        fs=args.fs,
        duration=args.duration,
        mode=args.mode,
        seed=args.seed,
        snr_db=args.snr_db,
        radar=radar_cfg if args.mode == "cube" else None,
        dataset_id=args.dataset_id,
    )
    by_class = Counter(m.label for m in measurements)
    by_session = Counter(m.session_id for m in measurements)
    print(f"wrote {len(measurements)} measurements to {args.out}")
    print(f"  classes : {dict(sorted(by_class.items()))}")
    print(f"  sessions: {dict(sorted(by_session.items()))}")
    return 0


def _measurement_series(m, manifest) -> "object":
    if m.is_cube:
        return radar.extract_slow_time(m.signal).series
    return m.signal


def cmd_extract(args) -> int:
    manifest = dataio.load_manifest(args.data)
    cfg = cepstrum.MelBankConfig(
        n_filters=args.n_filters,
        f_ref=args.f_ref,
        f_prime=args.f_prime,
        fs=manifest["fs"],
    )
    rows = []
    n_values = None
    for record in manifest["records"]:
        measurement = dataio.load_record(args.data, manifest, record)
        base_id = f"{record['label']}_{record['session_id']}_r{record['repetition']}"
        pieces = (
            cohort.segment(measurement, args.segment)
            if args.segment
            else [measurement]
        )
        for seg_idx, piece in enumerate(pieces):
            series = _measurement_series(piece, manifest)
            try:
                vec = (
                    cepstrum.extract_all(
                        series, cfg, args.k_prime, args.window, args.hop,
                        args.log_energies,
                    )["prop"]
                    if args.kind == "prop"
                    else cepstrum.extract_features(
                        series, cfg, args.k_prime, args.kind, args.window,
                        args.hop, args.log_energies,
                    )
                )
            except PipelineError as exc:
                raise PipelineError(f"sample {base_id} segment {seg_idx}: {exc}") from exc
            rows.append(
                {
                    "sample_id": f"{base_id}_s{seg_idx}",
                    "label": record["label"],
                    "session_id": record["session_id"],
                    "segment_index": seg_idx,
                    "kind": args.kind,
                    "values": vec.values,
                }
            )
            n_values = len(vec)
    dataio.write_features(args.out, rows, n_values)
    print(f"wrote {len(rows)} x {n_values} feature rows ({args.kind}) to {args.out}")
    return 0


def cmd_train(args) -> int:
    table = dataio.read_features(args.features)
    model = classify.train_multiclass(
        table.values,
        table.labels,
        kernel=args.kernel,
        C=args.C,
        gamma=args.gamma,
        tol=args.tol,
        max_passes=args.max_passes,
    )
    classify.save_model(model, args.out, manifest_hash=dataio.file_sha256(args.features))
    n_sv = sum(m.support_vectors.shape[0] for m in model.machines)
    print(
        f"trained {len(model.classes)}-class model on {table.n_rows} rows "
        f"({n_sv} support vectors) -> {args.out}"
    )
    return 0


def cmd_eval(args) -> int:
    table = dataio.read_features(args.features)
    data = classify.LabeledDataset(table.values, table.labels, table.sessions)
    report = classify.session_grouped_cv(
        data,
        kernel=args.kernel,
        C=args.C,
        gamma=args.gamma,
        tol=args.tol,
        max_passes=args.max_passes,
    )
    report.params["kind"] = table.kind
    timestamp = None
    if args.timestamp:
        from datetime import datetime, timezone

        timestamp = datetime.now(timezone.utc).isoformat()
    report.save_json(args.report, timestamp=timestamp)
    if args.confusion:
        report.save_confusion_csv(args.confusion)
    print(
        f"{table.kind}: accuracy {report.accuracy:.2f}% | "
        f"macro AUC {report.macro_auc:.4f} | {len(report.per_fold)} folds"
    )
    for fold in report.per_fold:
        print(
            f"  fold {fold['session']}: {fold['accuracy_pct']:.2f}% "
            f"({fold['n_train']}/{fold['n_val']} train/val)"
        )
    return 0


def _write_svg(path, proj: embedding.Projection2D) -> None:
    pts = proj.points
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    width, height, margin = 640, 480, 30
    classes = (
        sorted(set(proj.labels.tolist())) if proj.labels is not None else [""]
    )
    color = {c: PALETTE[i % len(PALETTE)] for i, c in enumerate(classes)}
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    labels = proj.labels if proj.labels is not None else [""] * len(pts)
    for (x, y), lab in zip(pts, labels):
        px = margin + (x - lo[0]) / span[0] * (width - 2 * margin)
        py = height - margin - (y - lo[1]) / span[1] * (height - 2 * margin)
        lines.append(
            f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="{color[lab]}" '
            f'fill-opacity="0.8"/>'
        )
    for i, c in enumerate(classes):
        if c == "":
            continue
        lines.append(
            f'<circle cx="{width - 90}" cy="{20 + 16 * i}" r="4" fill="{color[c]}"/>'
            f'<text x="{width - 80}" y="{24 + 16 * i}" font-size="12">{c}</text>'
        )
    lines.append("</svg>")
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_project(args) -> int:
    table = dataio.read_features(args.features)
    if args.method == "pca":
        proj = embedding.pca2(table.values, labels=table.labels)
    else:
        proj = embedding.tsne2(
            table.values,
            perplexity=args.perplexity,
            iterations=args.iterations,
            seed=args.seed,
            labels=table.labels,
        )
    proj.to_csv(args.out, sample_ids=table.sample_ids)
    if args.svg:
        _write_svg(args.svg, proj)
    extra = f", kl={proj.params['kl']:.4f}" if proj.method == "tsne" else ""
    print(f"projected {table.n_rows} rows with {proj.method}{extra} -> {args.out}")
    return 0


def cmd_report(args) -> int:
    entries = []
    for path in args.reports:
        try:
            with open(path) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise PipelineError(f"cannot read report {path}: {exc}") from exc
        entries.append(
            {
                "kind": payload.get("params", {}).get("kind", Path(path).stem),
                "accuracy_pct": payload["accuracy_pct"],
                "macro_auc": payload["macro_auc"],
                "file": str(path),
            }
        )
    header = f"{'method':<8} {'accuracy (%)':>12} {'AUC':>8}"
    print(header)
    print("-" * len(header))
    for e in entries:
        print(f"{e['kind']:<8} {e['accuracy_pct']:>12.2f} {e['macro_auc']:>8.4f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"methods": entries}, fh, indent=2)
            fh.write("\n")
    if args.csv:
        import csv as _csv

        with open(args.csv, "w", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["method", "accuracy_pct", "macro_auc"])
            for e in entries:
                writer.writerow(
                    [e["kind"], f"{e['accuracy_pct']:.4f}", f"{e['macro_auc']:.6f}"]
                )
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "train": cmd_train,
    "eval": cmd_eval,
    "project": cmd_project,
    "report": cmd_report,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:  # argparse: usage error (1) or --help (0)
        return int(exc.code or 0)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except (PipelineError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal invariant violation
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
