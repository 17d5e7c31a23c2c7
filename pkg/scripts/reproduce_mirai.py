"""Offline ARNN vs MLP comparison and gamma sweep on a labelled packet CSV.

The CSV must have columns ``t,src,dst,label`` (seconds, node ids, 0/1),
one row per packet, e.g. flattened from the Kitsune Mirai capture.

Usage: python3 scripts/reproduce_mirai.py PACKETS_CSV [OUT_DIR]
"""

import sys
from pathlib import Path

from arnn_botnet.cli import main


def run(*argv):
    code = main([str(a) for a in argv])
    if code:
        sys.exit(code)


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    packets = Path(sys.argv[1])
    out = Path(sys.argv[2] if len(sys.argv) > 2 else "runs/mirai")
    run("-v", "--out", out / "features", "ingest", "--packets", packets, "--tau", 10, "--theta", 0.3)
    feats = out / "features" / "features.csv"
    run("-v", "--out", out / "compare", "compare", "--features", feats)
    run("--out", out / "sweep", "sweep-gamma", "--features", feats,
        "--checkpoint", out / "compare" / "arnn" / "model.ckpt", "--gammas", "0.96,0.97,0.98,0.99,1.0")
    print((out / "sweep" / "gamma_sweep.csv").read_text())
