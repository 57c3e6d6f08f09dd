#!/usr/bin/env python3
"""Coarse sensitivity sweeps of the critical ages and the optimal mix.

Writes one CSV per panel into an output directory (default ./sweep_out) and
prints a direction summary.  Grids are deliberately small; raise `steps`
below for smoother surfaces.
"""
import json
import sys
import tempfile
from pathlib import Path

from penmix.cli import main as cli_main

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"

PANELS = [
    # (name, param1, param2, target)
    ("zh_rho_mu", ("demo.rho", -0.015, 0.005, 4), ("market.mu", 0.07, 0.13, 4), "zeta_hat"),
    ("zh_rho_gamma", ("demo.rho", -0.015, 0.005, 4), ("market.gamma", 0.012, 0.028, 4), "zeta_hat"),
    ("zh_rho_delta", ("demo.rho", -0.015, 0.005, 4), ("mortality.delta", 0.4, 1.0, 4), "zeta_hat"),
    ("zt_rho_alpha", ("demo.rho", -0.015, 0.005, 4), ("market.alpha", 0.05, 0.07, 4), "zeta_tilde"),
    ("theta_rho_gamma", ("demo.rho", -0.01, 0.0, 3), ("market.gamma", 0.015, 0.025, 3), "theta_star"),
]


def main() -> int:
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("sweep_out")
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario = str(SCENARIOS / "scenario_us.json")
    for name, p1, p2, target in PANELS:
        spec = {
            "param1": {"path": p1[0], "lo": p1[1], "hi": p1[2], "steps": p1[3]},
            "param2": {"path": p2[0], "lo": p2[1], "hi": p2[2], "steps": p2[3]},
            "target": target,
        }
        with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
            json.dump(spec, fh)
            spec_path = fh.name
        out = out_dir / f"{name}.csv"
        code = cli_main(["sweep", scenario, "--spec", spec_path,
                         "--step", "0.25", "--out", str(out)])
        if code != 0:
            return code
        print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
