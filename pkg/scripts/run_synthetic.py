"""Synthesize the outbreak scenario and run every subcommand on it.

Usage: python3 scripts/run_synthetic.py [OUT_DIR]
"""

import sys
from pathlib import Path

from arnn_botnet.cli import main
from arnn_botnet.scenarios import OUTBREAK as c


def run(*argv):
    code = main([str(a) for a in argv])
    if code:
        sys.exit(code)


def go(out: Path):
    run("--out", out / "synth", "synth", "--seed", c.seed, "--nodes", c.n_nodes, "--slots", c.n_slots,
        "--tau", c.tau, "--initial", *c.initial_compromised, "--packets-per-slot", c.packets_per_slot,
        "--infection-threshold", c.infection_threshold, "--attack-fraction", c.attack_fraction,
        "--attack-rate-factor", c.attack_rate_factor, "--onset-slot", c.onset_slot,
        "--benign-skew", c.benign_skew, "--susceptible-fraction", c.susceptible_fraction)
    run("--out", out / "features", "ingest", "--packets", out / "synth" / "packets.csv")
    feats = out / "features" / "features.csv"
    run("--out", out / "compare", "compare", "--features", feats)
    run("--out", out / "online", "train-online", "--features", feats)
    run("--out", out / "sweep", "sweep-gamma", "--features", feats,
        "--checkpoint", out / "compare" / "arnn" / "model.ckpt")
    print((out / "compare" / "comparison" / "comparison.csv").read_text())


if __name__ == "__main__":
    go(Path(sys.argv[1] if len(sys.argv) > 1 else "runs/synthetic"))
