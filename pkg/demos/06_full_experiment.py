"""Run the end-to-end experiment protocol at demo scale and show the report."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gridcf.pipeline import run_experiment

config = {
    "case": "case30_ieee",
    "n_samples": 2000,
    "seed": 7,
    "max_instances": 40,
    "ffnn": {"epochs": 100},
    "timing_repeats": 1,
}

out = Path("/tmp/gridcf_demo_experiment")
report = run_experiment(config, out_dir=out, progress=print)

print("\n" + (out / "report.md").read_text())
print(f"artifacts in {out}: report.json (deterministic), report.md, "
      f"histogram.csv, timing.csv, dataset/")
