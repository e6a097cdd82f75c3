"""Run the standard experiment suite through the CLI and collect reports in results/.

Usage: python3 scripts/run_experiments.py [--quick] [--out results]
"""

import argparse
import json
import sys
import time
from pathlib import Path

from conclab import cli

EXPERIMENTS = {
    "hw_identity20": ["hw-tail", "--matrix", "identity:20", "--dist", "gaussian", "--t", "1:40:20"],
    "hw_gaussian30_rademacher": ["hw-tail", "--matrix", "gaussian:30,30:1", "--dist", "rademacher",
                                 "--t", "1:120:24"],
    "concentration_identity100": ["concentration", "--matrix", "identity:100", "--t", "0.25:3:12"],
    "concentration_uniform": ["concentration", "--matrix", "identity:100", "--dist", "uniform",
                              "--t", "0.25:3:12"],
    "small_ball_identity20": ["small-ball", "--matrix", "identity:20", "--y", "zero", "--t", "auto"],
    "subspace_10_4": ["subspace-dist", "--basis", "gaussian:10,4:2", "--t", "0.1:3:15"],
    "matrix_norm_200_50": ["matrix-norm", "--B", "identity:200", "--n", "50", "--draws", "200"],
    "decoupling": ["decoupling-check", "--n", "10", "--trials", "20", "--seed", "1"],
    "mgf": ["mgf-check", "--samples", "1000000"],
    "complexify": ["complexify-check", "--trials", "100"],
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--quick", action="store_true", help="use 10^4 samples per curve")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    index = {}
    for name, cmd in EXPERIMENTS.items():
        extra = ["--seed", str(args.seed), "--out", str(out / name)]
        if args.quick and cmd[0] in ("hw-tail", "concentration", "small-ball", "subspace-dist"):
            extra += ["--samples", "10000"]
        t0 = time.perf_counter()
        code = cli.main([*cmd, *extra])
        index[name] = {"argv": cmd + extra, "exit": code, "seconds": time.perf_counter() - t0}
        if code == cli.EXIT_OK:
            # feed every curve through the calibrator as well
            if cmd[0] in ("hw-tail", "concentration", "small-ball", "subspace-dist"):
                cal = cli.main(["calibrate", "--curve", str(out / f"{name}.json"),
                                "--safety", "0.9", "--out", str(out / f"{name}_calibrated")])
                index[name]["calibrate_exit"] = cal
    (out / "index.json").write_text(json.dumps(index, indent=2))
    bad = [k for k, v in index.items() if v["exit"] == cli.EXIT_ERROR]
    print(f"{len(index) - len(bad)}/{len(index)} experiments ran; index at {out / 'index.json'}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
