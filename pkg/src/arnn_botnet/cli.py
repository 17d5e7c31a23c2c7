"""Command-line front end.

Every subcommand writes into ``--out`` and leaves a ``manifest.json`` there
holding the effective parameters and the SHA-256 of each input file.
``arnn-botnet --from-manifest DIR/manifest.json --out NEW`` repeats the run.

Exit codes: 0 success, 2 usage or parameter error, 3 data error, 4 numeric
error (non-convergence or singular system).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import load as load_checkpoint, save as save_checkpoint
from .core import ArnnModel, DEFAULT_TOTAL_RATE
from .errors import DataError, InvalidParameterError, NumericError
from .experiments import (
    ARNN_OFFLINE_EPOCHS, ARNN_ONLINE_EPOCHS, DEFAULT_GAMMA, MLP_OFFLINE_EPOCHS, MLP_ONLINE_EPOCHS,
    ONLINE_WINDOW, arnn_scores, offline_arnn, offline_mlp, online_arnn, online_mlp,
)
from .learn import TrainConfig
from .metrics import gamma_sweep, per_node_metrics
from .report import emit_comparison, emit_report, write_gamma_sweep
from .synth import SynthConfig, synthesize_botnet_trace, write_schedule
from .traffic import (
    DEFAULT_HALF_WIDTH, DEFAULT_TAU, DEFAULT_THETA, features_from_packets, parse_packets,
    read_features, select_train_window, stack, write_features, write_packets,
)

log = logging.getLogger("arnn_botnet")

DECISION_HEADER = ("slot", "node", "score", "Z", "G")
DEFAULT_GAMMAS = "0.96,0.97,0.98,0.99,1.0"
# arguments naming input files, hashed into the manifest
INPUT_ARGS = ("packets", "features", "checkpoint", "decisions")


def _fmt(v) -> str:
    return "" if v is None or (isinstance(v, float) and np.isnan(v)) else repr(float(v))


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _features(path):
    features, registry = read_features(path)
    if not features:
        raise DataError(f"{path}: no feature rows")
    return features, registry


def write_decisions(path, slots, score, Z, G, ids):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DECISION_HEADER)
        for k, slot in enumerate(slots):
            for i, node in enumerate(ids):
                w.writerow((slot, node, _fmt(score[k, i]), int(Z[k, i]), int(G[k, i])))


def read_decisions(path):
    """Returns ``(slots, score, Z, G, ids)`` as slot-by-node matrices."""
    rows: dict[int, dict[str, tuple]] = {}
    ids: list[str] = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != DECISION_HEADER:
            raise DataError(f"{path}: expected header {','.join(DECISION_HEADER)}")
        for row in reader:
            if len(row) != 5:
                raise DataError(f"{path}:{reader.line_num}: expected 5 fields")
            try:
                slot, node = int(row[0]), row[1]
                s = float(row[2]) if row[2] else np.nan
                z, g = int(row[3]), int(row[4])
            except ValueError as exc:
                raise DataError(f"{path}:{reader.line_num}: {exc}") from None
            if node not in rows.get(slot, {}) and node not in ids:
                ids.append(node)
            rows.setdefault(slot, {})[node] = (s, z, g)
    slots = sorted(rows)
    if not slots:
        raise DataError(f"{path}: no decision rows")
    try:
        M = np.array([[rows[l][i] for i in ids] for l in slots], dtype=float)
    except KeyError as exc:
        raise DataError(f"{path}: missing row for node {exc}") from None
    return slots, M[..., 0], M[..., 1].astype(np.int8), M[..., 2].astype(np.int8), ids


def write_trace(path, trace):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("epoch", "cost", "skipped"))
        for r in trace:
            w.writerow((r.epoch, _fmt(r.cost), r.skipped))


def _train_cfg(args, epochs):
    return TrainConfig(eta=args.eta, epochs=epochs, gamma=args.gamma)


def _offline(args, features, model_name):
    if model_name == "arnn":
        epochs = ARNN_OFFLINE_EPOCHS if args.epochs is None else args.epochs
        return offline_arnn(features, total_rate=args.total_rate, cfg=_train_cfg(args, epochs),
                            half_width=args.half_width)
    epochs = MLP_OFFLINE_EPOCHS if args.mlp_epochs is None else args.mlp_epochs
    return offline_mlp(features, seed=args.seed, eta=args.eta, epochs=epochs, theta=args.theta,
                       half_width=args.half_width)


def _write_run(out: Path, res, ids):
    save_checkpoint(res.model, out / "model.ckpt")
    write_decisions(out / "decisions.csv", res.slots, res.score, res.Z, res.G, ids)
    return emit_report(res.metrics, out / "report", ids, title=res.model_name)


# subcommands -----------------------------------------------------------------

def cmd_ingest(args, out: Path):
    records, registry = parse_packets(args.packets)
    if not records:
        raise DataError(f"{args.packets}: no packets")
    features = features_from_packets(records, registry, args.tau, args.theta)
    write_features(out / "features.csv", features, registry)
    log.info("%d slots, %d nodes", len(features), len(registry))


def cmd_synth(args, out: Path):
    cfg = SynthConfig(
        seed=args.seed, n_nodes=args.nodes, tau=args.tau, n_slots=args.slots,
        initial_compromised=tuple(args.initial), packets_per_slot=args.packets_per_slot,
        infection_threshold=args.infection_threshold, attack_fraction=args.attack_fraction,
        attack_rate_factor=args.attack_rate_factor, onset_slot=args.onset_slot,
        benign_skew=args.benign_skew, susceptible_fraction=args.susceptible_fraction,
    )
    records, schedule = synthesize_botnet_trace(cfg)
    write_packets(out / "packets.csv", records)
    write_schedule(out / "schedule.csv", schedule)


def cmd_train_offline(args, out: Path):
    features, registry = _features(args.features)
    res = _offline(args, features, args.model)
    write_trace(out / "cost_trace.csv", res.trace)
    summary = _write_run(out, res, registry.ids)
    log.info("l*=%s, median accuracy %s", res.l_star, summary["macro_median_accuracy"])


def cmd_train_online(args, out: Path):
    features, registry = _features(args.features)
    if args.model == "arnn":
        epochs = ARNN_ONLINE_EPOCHS if args.epochs is None else args.epochs
        res = online_arnn(features, total_rate=args.total_rate, window=args.window, epochs=epochs,
                          eta=args.eta, gamma=args.gamma)
    else:
        epochs = MLP_ONLINE_EPOCHS if args.mlp_epochs is None else args.mlp_epochs
        res = online_mlp(features, seed=args.seed, window=args.window, epochs=epochs, eta=args.eta,
                         theta=args.theta)
    trained = set(res.training_events)
    failed = set(res.failed_slots)
    with (out / "online_log.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("slot", "event"))
        for slot in res.slots:
            w.writerow((slot, "no-decision" if slot in failed else "decide"))
            if slot in trained:
                w.writerow((slot, "train"))
    _write_run(out, res, registry.ids)


def cmd_compare(args, out: Path):
    features, registry = _features(args.features)
    results = {}
    for name in ("arnn", "mlp"):
        res = _offline(args, features, name)
        sub = out / name
        sub.mkdir(exist_ok=True)
        write_trace(sub / "cost_trace.csv", res.trace)
        _write_run(sub, res, registry.ids)
        results[res.model_name] = res.metrics
    emit_comparison(results, out / "comparison")


def cmd_sweep_gamma(args, out: Path):
    features, _ = _features(args.features)
    model = load_checkpoint(args.checkpoint)
    if not isinstance(model, ArnnModel):
        raise DataError(f"{args.checkpoint}: gamma sweeps need an ARNN checkpoint")
    if args.half_width is not None:
        _, features, _ = select_train_window(features, args.half_width)
    try:
        gammas = [float(g) for g in args.gammas.split(",")]
    except ValueError:
        raise InvalidParameterError(f"bad gamma list {args.gammas!r}") from None
    L, _, _ = arnn_scores(model, features, 1.0)
    write_gamma_sweep(out / "gamma_sweep.csv", gamma_sweep(L, stack(features)[2], gammas))


def cmd_report(args, out: Path):
    slots, _, Z, G, ids = read_decisions(args.decisions)
    emit_report(per_node_metrics(G, Z), out, ids, title=args.title)


COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "train-offline": cmd_train_offline,
    "train-online": cmd_train_online,
    "compare": cmd_compare,
    "sweep-gamma": cmd_sweep_gamma,
    "report": cmd_report,
}


# parser ----------------------------------------------------------------------

def _training_flags(p, online=False):
    p.add_argument("--features", required=True, help="features CSV from `ingest`")
    p.add_argument("--total-rate", type=float, default=DEFAULT_TOTAL_RATE, help="W")
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=None, help="ARNN epochs (protocol default)")
    p.add_argument("--mlp-epochs", type=int, default=None, help="MLP epochs (protocol default)")
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    p.add_argument("--theta", type=float, default=DEFAULT_THETA, help="MLP decision threshold")
    p.add_argument("--seed", type=int, default=1, help="MLP initialisation seed")
    if online:
        p.add_argument("--window", type=int, default=ONLINE_WINDOW)
    else:
        p.add_argument("--half-width", type=int, default=DEFAULT_HALF_WIDTH)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="arnn-botnet", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--from-manifest", metavar="PATH", help="repeat the run recorded in a manifest")
    ap.add_argument("--out", help="output directory (required unless --from-manifest is given)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("ingest", help="packet CSV to per-slot features")
    p.add_argument("--packets", required=True)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU, help="slot length in seconds")
    p.add_argument("--theta", type=float, default=DEFAULT_THETA, help="ground-truth threshold")

    p = sub.add_parser("synth", help="seeded synthetic botnet trace")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--nodes", type=int, default=20)
    p.add_argument("--slots", type=int, default=200)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p.add_argument("--initial", type=int, nargs="+", default=[0, 1, 2], help="initially compromised indices")
    p.add_argument("--packets-per-slot", type=float, default=10.0)
    p.add_argument("--infection-threshold", type=float, default=0.3)
    p.add_argument("--attack-fraction", type=float, default=1.0)
    p.add_argument("--attack-rate-factor", type=float, default=3.0)
    p.add_argument("--onset-slot", type=int, default=1)
    p.add_argument("--benign-skew", type=float, default=0.0)
    p.add_argument("--susceptible-fraction", type=float, default=1.0)

    p = sub.add_parser("train-offline", help="fixed training window around the first compromise")
    p.add_argument("--model", choices=("arnn", "mlp"), default="arnn")
    _training_flags(p)

    p = sub.add_parser("train-online", help="prequential predict-then-train")
    p.add_argument("--model", choices=("arnn", "mlp"), default="arnn")
    _training_flags(p, online=True)

    p = sub.add_parser("compare", help="ARNN and MLP under the offline protocol")
    _training_flags(p)

    p = sub.add_parser("sweep-gamma", help="re-threshold a trained ARNN over several gammas")
    p.add_argument("--features", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--gammas", default=DEFAULT_GAMMAS, help="comma-separated list")
    p.add_argument("--half-width", type=int, default=DEFAULT_HALF_WIDTH,
                   help="evaluate outside this training window")

    p = sub.add_parser("report", help="metrics and figures from a decisions CSV")
    p.add_argument("--decisions", required=True)
    p.add_argument("--title", default="")
    return ap


# manifests -------------------------------------------------------------------

def _params(args) -> dict:
    skip = {"from_manifest", "out", "verbose", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def write_manifest(out: Path, args):
    params = _params(args)
    inputs = {k: {"path": str(params[k]), "sha256": sha256(params[k])}
              for k in INPUT_ARGS if params.get(k) is not None}
    doc = {"tool": "arnn-botnet", "version": __version__, "command": args.command,
           "params": params, "inputs": inputs}
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def args_from_manifest(path, parser) -> argparse.Namespace:
    try:
        doc = json.loads(Path(path).read_text())
        command, params = doc["command"], doc["params"]
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"{path}: unreadable manifest ({exc})") from None
    if command not in COMMANDS:
        raise DataError(f"{path}: unknown command {command!r}")
    for key, rec in doc.get("inputs", {}).items():
        if sha256(rec["path"]) != rec["sha256"]:
            raise DataError(f"{rec['path']}: contents differ from the manifest digest")
    # start from current defaults so manifests from older versions still load
    defaults = vars(parser.parse_args(["--out", ".", command] + _required_stub(command)))
    defaults.update(params)
    defaults["command"] = command
    return argparse.Namespace(**defaults)


def _required_stub(command):
    stub = {
        "ingest": ["--packets", "-"],
        "synth": ["--seed", "0"],
        "train-offline": ["--features", "-"],
        "train-online": ["--features", "-"],
        "compare": ["--features", "-"],
        "sweep-gamma": ["--features", "-", "--checkpoint", "-"],
        "report": ["--decisions", "-"],
    }
    return stub[command]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.from_manifest:
            out_dir = args.out or str(Path(args.from_manifest).parent)
            args = args_from_manifest(args.from_manifest, parser)
            args.out = out_dir
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 2
        if not args.out:
            parser.error("--out is required")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, out)
        write_manifest(out, args)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
