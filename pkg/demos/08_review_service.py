"""Spin up the human-review service against a freshly generated cohort.

The service exposes:
  GET  /cases                      ids + labeled status + progress
  GET  /cases/{id}/curves          per-structure volume/area series
  GET  /cases/{id}/frames/{t}      PNG frame with segmentation contours
  POST /cases/{id}/label           {"verdict": "good"|"erroneous"}
  GET  /export/qc-dataset          QC dataset JSONL for qc-train

Run, then open http://127.0.0.1:8765/ui (when the frontend is built) or
poke the endpoints with curl. Ctrl-C to stop.
"""

from pathlib import Path

from qcseg import CohortSpec, generate_cohort, store
from qcseg.harness.review import serve_review

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

cohort_dir = OUT / "review_cohort"
if not cohort_dir.exists():
    cohort = generate_cohort(
        CohortSpec(n_subjects=12, task="sax", frames_T=20, slices_S=1,
                   height=64, width=64, noise_level=0.08, seed=77)
    )
    store.save_cohort(cohort, cohort_dir)
    print(f"wrote review cohort to {cohort_dir}")

frontend = Path(__file__).resolve().parents[1] / "frontend" / "dist"
print("labels will be appended to", cohort_dir / "review_labels.jsonl")
print("serving on http://127.0.0.1:8765  (API at /cases, UI at /ui if built)")
serve_review(cohort_dir, port=8765, static_dir=frontend if frontend.exists() else None)
