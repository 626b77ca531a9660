"""Command-line front end: synth, fit, generate, metrics, analysis, recognition.

Every command takes a seed where randomness is involved, writes
machine-readable JSON/CSV artifacts, and drops a ``manifest.json``
recording the command, arguments, seed, package versions, and input
digests, so any run can be reproduced from its manifest alone. Exit
codes: 0 success, 1 runtime error (single-line message on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    EquationSignificance,
    SignificanceReport,
    rank_and_select,
    sensor_channels,
    significance_report,
    tolerance_intervals,
)
from .equations import build_system
from .exchange import (
    bundle_from_trained,
    load_bundle,
    one_step_predictions,
    save_bundle,
    validate_against_topology,
)
from .generation import generate_from_bundle, metrics as forecast_metrics
from .kalman import KfConfig, fit_reference
from .motion import (
    MovementDataset,
    PostureSequence,
    load_motion_csv,
    read_raw_csv,
    save_motion_csv,
)
from .recognition import evaluate_f1
from .synth import load_spec, synth_generate
from .topology import default_topology, load_topology


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace, inputs) -> None:
    manifest = {
        "command": command,
        "arguments": {
            k: (str(v) if isinstance(v, Path) else v)
            for k, v in sorted(vars(args).items())
            if k != "func"
        },
        "seed": getattr(args, "seed", None),
        "versions": {"gomkit": __version__, "numpy": np.__version__},
        "inputs": {str(p): _sha256(p) for p in sorted(map(str, inputs))},
    }
    _write_json(out_dir / "manifest.json", manifest)


def _make_out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_topology_arg(args) -> tuple:
    if getattr(args, "topology", None):
        return load_topology(args.topology), [args.topology]
    return default_topology(), []


def _load_dataset(data_args, topology) -> tuple[MovementDataset, list[str]]:
    paths: list[Path] = []
    for item in data_args:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(p.glob("*.csv")))
        else:
            paths.append(p)
    if not paths:
        raise FileNotFoundError(f"no motion CSV files found in {data_args}")
    sequences = [load_motion_csv(p, topology) for p in paths]
    return MovementDataset(sequences=sequences, topology=topology), [str(p) for p in paths]


def _raw_sequence(path, channel_names) -> np.ndarray:
    """Frames of a CSV permuted to the given channel order."""
    header, values, _ = read_raw_csv(path)
    missing = [c for c in channel_names if c not in header]
    if missing:
        raise ValueError(f"{path}: missing channel {missing[0]!r}")
    order = [header.index(c) for c in channel_names]
    return values[:, order]


# -- subcommand handlers ------------------------------------------------------


def _cmd_synth(args) -> int:
    topology, topo_inputs = _load_topology_arg(args)
    spec = load_spec(args.spec)
    dataset, truths = synth_generate(spec, topology, seed=args.seed)
    out = _make_out_dir(args.out)
    topology.save(out / "topology.json")
    rep_index: dict[str, int] = {}
    for seq in dataset.sequences:
        i = rep_index.get(seq.class_label, 0)
        rep_index[seq.class_label] = i + 1
        save_motion_csv(seq, out / f"{seq.class_label}_{i:02d}.csv")
    truth_doc = {
        label: {
            "channel_names": list(t.channel_names),
            "alpha": t.alpha.tolist(),
            "beta": [
                {"dst": t.channel_names[i], "src": t.channel_names[j], "value": t.beta[i, j]}
                for i, j in zip(*np.nonzero(t.beta))
            ],
        }
        for label, t in truths.items()
    }
    _write_json(out / "ground_truth.json", truth_doc)
    _write_manifest(out, "synth", args, [args.spec, *topo_inputs])
    return 0


def _kf_config(args) -> KfConfig:
    return KfConfig(
        process_noise_q=args.q0,
        obs_noise_r=args.r0,
        max_iters=args.max_iters,
        restarts=args.restarts,
        seed=args.seed,
    )


def _cmd_fit(args) -> int:
    if args.method != "kf":
        raise ValueError(f"unsupported fit method {args.method!r}")
    topology, topo_inputs = _load_topology_arg(args)
    dataset, data_inputs = _load_dataset(args.data, topology)
    system = build_system(topology)
    trained = fit_reference(
        system, dataset, args.class_label, _kf_config(args), workers=args.workers
    )
    out = _make_out_dir(args.out)
    bundle = bundle_from_trained(
        trained,
        topology.channel_names,
        frame_rate_hz=dataset.of_class(args.class_label)[0].frame_rate_hz,
        class_label=args.class_label,
    )
    save_bundle(bundle, out / "coefficients.json")
    _write_json(
        out / "fit_summary.json",
        {
            "class_label": args.class_label,
            "equations": [
                {
                    "target": t.equation.target,
                    "loglik": t.loglik,
                    "theta_q": float(np.mean(t.theta[0])),
                    "theta_r": t.theta[1],
                }
                for t in trained
            ],
        },
    )
    _write_manifest(out, "fit", args, [*data_inputs, *topo_inputs])
    return 0


def _cmd_generate(args) -> int:
    bundle = load_bundle(args.model)
    frames = _raw_sequence(args.seed_frames, bundle.channel_names)
    if frames.shape[0] < 2:
        raise ValueError("seed-frames file must contain at least two frames")
    generated = generate_from_bundle(bundle, frames[:2], args.length)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_motion_csv(generated, out_path)
    _write_manifest(out_path.parent, "generate", args, [args.model, args.seed_frames])
    return 0


def _cmd_metrics(args) -> int:
    header_a, frames_a, meta_a = read_raw_csv(args.generated)
    frames_b = _raw_sequence(args.truth, header_a)
    if frames_a.shape != frames_b.shape:
        raise ValueError(
            f"shape mismatch: {frames_a.shape} vs {frames_b.shape}"
        )
    names = tuple(header_a)
    gen = PostureSequence(frames=frames_a, channel_names=names)
    truth = PostureSequence(frames=frames_b, channel_names=names)
    m = forecast_metrics(gen, truth)
    doc = {
        "mae": m.mae,
        "rmse": m.rmse,
        "u1": m.u1,
        "per_channel": {
            c: {
                "mae": float(m.per_channel_mae[i]),
                "rmse": float(m.per_channel_rmse[i]),
                "u1": float(m.per_channel_u1[i]),
            }
            for i, c in enumerate(names)
        },
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.out:
        _write_json(args.out, doc)
    return 0


def _significance_doc(report: SignificanceReport) -> dict:
    return {
        "level": report.level,
        "equations": [
            {
                "target": e.target,
                "coefficients": [
                    {
                        "name": e.coefficient_names[i],
                        "channel": e.channels[i],
                        "assumption": e.assumptions[i],
                        "sig_fraction": float(e.sig_fraction[i]),
                        "significant": bool(e.significant[i]),
                    }
                    for i in range(e.n_coefficients)
                ],
            }
            for e in report.entries
        ],
    }


def _cmd_analyze(args) -> int:
    bundle = load_bundle(args.model)
    for eq in bundle.equations:
        if eq.var is None:
            raise ValueError(
                f"{eq.target}: no posterior variances stored; significance "
                "analysis needs a variance-bearing fit"
            )
    report = significance_report(list(bundle.equations), level=args.level)
    out = _make_out_dir(args.out)
    _write_json(out / "significance.json", _significance_doc(report))
    with open(out / "p_values.csv", "w") as fh:
        fh.write("target,coefficient,assumption,t,p\n")
        for e in report.entries:
            for i in range(e.n_coefficients):
                for t in range(e.p_values.shape[0]):
                    fh.write(
                        f"{e.target},{e.coefficient_names[i]},{e.assumptions[i]},"
                        f"{t},{float(e.p_values[t, i])!r}\n"
                    )
    _write_manifest(out, "analyze", args, [args.model])
    return 0


def _entries_from_doc(doc) -> list[EquationSignificance]:
    entries = []
    for edoc in doc["equations"]:
        coeffs = edoc["coefficients"]
        entries.append(
            EquationSignificance(
                target=edoc["target"],
                coefficient_names=tuple(c["name"] for c in coeffs),
                channels=tuple(c["channel"] for c in coeffs),
                assumptions=tuple(c["assumption"] for c in coeffs),
                p_values=np.zeros((0, len(coeffs))),
                sig_fraction=np.array([c["sig_fraction"] for c in coeffs]),
                significant=np.array([c["significant"] for c in coeffs], dtype=bool),
            )
        )
    return entries


def _cmd_select_sensors(args) -> int:
    topology, topo_inputs = _load_topology_arg(args)
    entries = []
    for path in args.analysis:
        with open(path) as fh:
            entries.extend(_entries_from_doc(json.load(fh)))
    ranking = rank_and_select(
        SignificanceReport(entries=tuple(entries)),
        topology,
        top_k_channels=args.top_k,
    )
    doc = {
        "top_k_channels": ranking.top_k_channels,
        "counts": {c: ranking.counts[c] for c in sorted(ranking.counts)},
        "ranked_channels": list(ranking.ranked_channels),
        "selected_channels": list(ranking.selected_channels),
        "selected_sensors": list(ranking.selected_sensors),
    }
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    _write_json(out_path, doc)
    _write_manifest(out_path.parent, "select-sensors", args, [*args.analysis, *topo_inputs])
    return 0


def _cmd_tolerance(args) -> int:
    bundles = [load_bundle(p) for p in args.models]
    targets = [eq.target for eq in bundles[0].equations]
    out = _make_out_dir(args.out)
    with open(out / "tolerance_bands.csv", "w") as fh:
        fh.write("target,coefficient,t,mean,std,lower,upper\n")
        for target in targets:
            models = [b.by_target()[target] for b in bundles]
            band = tolerance_intervals(models, k_sigma=args.k_sigma)
            for i, name in enumerate(band.coefficient_names):
                for t in range(band.mean.shape[0]):
                    fh.write(
                        f"{target},{name},{t},{float(band.mean[t, i])!r},"
                        f"{float(band.std[t, i])!r},{float(band.lower[t, i])!r},"
                        f"{float(band.upper[t, i])!r}\n"
                    )
    _write_manifest(out, "tolerance", args, list(args.models))
    return 0


def _cmd_recognize(args) -> int:
    topology, topo_inputs = _load_topology_arg(args)
    dataset, data_inputs = _load_dataset(args.data, topology)
    inputs = [*data_inputs, *topo_inputs]
    if args.sensors:
        with open(args.sensors) as fh:
            sensors = json.load(fh)["selected_sensors"]
        channels = sensor_channels(topology, sensors)
        inputs.append(args.sensors)
    elif args.channels:
        channels = tuple(c.strip() for c in args.channels.split(","))
    else:
        channels = topology.channel_names
    report = evaluate_f1(
        dataset, channels, n_states=args.states, folds=args.folds, seed=args.seed
    )
    doc = {
        "f1_macro": report.f1_macro,
        "channels": list(channels),
        "states": args.states,
        "folds": args.folds,
        "per_class": {
            label: {
                "precision": float(report.precision[i]),
                "recall": float(report.recall[i]),
                "f1": float(report.f1_per_class[i]),
            }
            for i, label in enumerate(report.labels)
        },
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.out:
        out_path = Path(args.out)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        _write_json(out_path, doc)
        _write_manifest(out_path.parent, "recognize", args, inputs)
    return 0


def _cmd_import_coeffs(args) -> int:
    bundle = load_bundle(args.model)
    inputs = [args.model]
    if args.topology:
        topology = load_topology(args.topology)
        validate_against_topology(bundle, topology)
        inputs.append(args.topology)
    if args.data:
        frames = _raw_sequence(args.data, bundle.channel_names)
        preds = one_step_predictions(bundle, frames)
        pred_seq = PostureSequence(
            frames=preds,
            channel_names=bundle.channel_names,
            frame_rate_hz=bundle.frame_rate_hz,
            class_label="one-step-predictions",
        )
        if args.predictions:
            save_motion_csv(pred_seq, args.predictions)
        inputs.append(args.data)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_bundle(bundle, out_path)
    _write_manifest(out_path.parent, "import-coeffs", args, inputs)
    return 0


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gomkit",
        description="Explainable movement modeling: train, analyze, generate, recognize.",
    )
    parser.add_argument("--version", action="version", version=f"gomkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset from a spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--topology")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("fit", help="fit coefficient trajectories on a class reference")
    p.add_argument("--data", nargs="+", required=True, help="CSV files or directories")
    p.add_argument("--topology")
    p.add_argument("--class-label", required=True)
    p.add_argument("--method", default="kf", choices=["kf"])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-iters", type=int, default=300)
    p.add_argument("--restarts", type=int, default=2)
    p.add_argument("--q0", type=float, default=1e-4)
    p.add_argument("--r0", type=float, default=1.0)
    p.add_argument(
        "--workers",
        type=int,
        default=None,
        help="parallel equation fits (default: GOMKIT_WORKERS or 1)",
    )
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("generate", help="closed-loop rollout from a coefficient file")
    p.add_argument("--model", required=True)
    p.add_argument("--seed-frames", required=True, dest="seed_frames")
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("metrics", help="MAE/RMSE/U1 between two movement CSVs")
    p.add_argument("generated")
    p.add_argument("truth")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("analyze", help="coefficient significance report")
    p.add_argument("--model", required=True)
    p.add_argument("--level", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("select-sensors", help="pick sensors from significance reports")
    p.add_argument("--analysis", nargs="+", required=True)
    p.add_argument("--topology")
    p.add_argument("--top-k", type=int, default=12)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_select_sensors)

    p = sub.add_parser("tolerance", help="coefficient tolerance bands over repetitions")
    p.add_argument("--models", nargs="+", required=True)
    p.add_argument("--k-sigma", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_tolerance)

    p = sub.add_parser("recognize", help="cross-validated HMM recognition F1")
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--topology")
    p.add_argument("--channels", help="comma-separated channel list")
    p.add_argument("--sensors", help="sensor-set JSON from select-sensors")
    p.add_argument("--states", type=int, default=6)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_recognize)

    p = sub.add_parser("import-coeffs", help="validate and normalize a coefficient file")
    p.add_argument("--model", required=True)
    p.add_argument("--topology")
    p.add_argument("--data", help="movement CSV for one-step predictions")
    p.add_argument("--predictions", help="where to write the prediction CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_import_coeffs)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # single-line machine-parsable diagnostics
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
