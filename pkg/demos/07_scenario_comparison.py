"""Run a scaled-down version of the five-scenario comparison.

Scenarios: full supervision, half supervision, half + K random
pseudo-labelled cases, the same with CRF cleanup, and half + K
best-in-class cases ranked by the curve QC classifier. Sizes here are
reduced so the whole script finishes in a few minutes; the acceptance
suite runs the bigger seeded benchmark.
"""

import time
from pathlib import Path

from qcseg.benchmark import generate_desk_benchmark
from qcseg.harness.runstore import save_run
from qcseg.pipeline import compare, run_scenario

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

bench = generate_desk_benchmark(
    OUT / "mini_benchmark",
    seed=5,
    n_labelled=24,
    n_unlabelled=16,
    n_test=10,
    n_qc=50,
    frames_T=16,
    k_select=5,
    epochs=50,
)
print("benchmark cohorts written under", bench.root)

records = []
for name in ("full", "half", "ssl_random", "ssl_random_crf", "semiqcseg"):
    t0 = time.monotonic()
    rec = run_scenario(bench.scenario_configs[name])
    records.append(rec)
    save_run(rec, OUT / "runs" / name)
    print(
        f"{name:>15}: pooled Dice {rec.report.pooled_mean:.4f} "
        f"(sd {rec.report.pooled_sd:.4f})  census {rec.census[-1]['subjects']} subjects / "
        f"{rec.census[-1]['images']} images  [{time.monotonic()-t0:.0f}s]"
    )

result = compare(records, reference="semiqcseg")
print("\nDice summary (paired-t p-values vs semiqcseg):")
for row in result["summary"]:
    p = row["p_vs_reference"]
    stars = " *" if (row["run_id"] != "semiqcseg" and isinstance(p, float) and p < 0.05) else ""
    print(f"  {row['run_id']:>15}: {row['mean_dice']:.4f} ({row['sd_dice']:.4f}){stars}")
print("\nclinical means (predicted):")
for row in result["summary"]:
    print(f"  {row['run_id']:>15}: LVEDV {row['lvedv_mean']:.2f}  LVEF {row['lvef_mean']:.1f}  "
          f"RVEDV {row['rvedv_mean']:.2f}  RVEF {row['rvef_mean']:.1f}")
