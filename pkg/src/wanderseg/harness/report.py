"""Reporting: per-scene and aggregate metric CSVs plus JSON curves
(mIoU vs annotation index, mIoU vs explored fraction, annotations vs
steps). File contents are deterministic for fixed logs.
"""

import csv
import json
import math
import os

from .episode import EpisodeLog
from .metrics import (
    explored_fraction,
    metric_annots,
    metric_dA_per_annot,
    metric_dA_per_step,
    metric_miou_window,
)

CSV_COLUMNS = [
    "scene_id", "agent", "setup", "episode_index",
    "annotations", "motion_steps", "total_steps",
    "explored_m2", "total_navigable_m2", "explored_fraction",
    "dA_per_annot", "dA_per_step",
    "miou_1_50", "miou_51_100", "miou_final",
    "terminated_by",
]


def _fmt(x):
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.6f}"
    return str(x)


def metrics_row(log: EpisodeLog, episode_index: int) -> dict:
    return {
        "scene_id": log.scene_id,
        "agent": log.agent,
        "setup": log.setup,
        "episode_index": episode_index,
        "annotations": metric_annots(log),
        "motion_steps": log.motion_steps,
        "total_steps": len(log.steps),
        "explored_m2": log.final_explored_m2,
        "total_navigable_m2": log.total_navigable_m2,
        "explored_fraction": explored_fraction(log),
        "dA_per_annot": metric_dA_per_annot(log),
        "dA_per_step": metric_dA_per_step(log),
        "miou_1_50": metric_miou_window(log, 1, 50),
        "miou_51_100": metric_miou_window(log, 51, 100),
        "miou_final": log.miou_final,
        "terminated_by": log.terminated_by,
    }


_NUMERIC = [
    "annotations", "motion_steps", "total_steps", "explored_m2",
    "total_navigable_m2", "explored_fraction", "dA_per_annot",
    "dA_per_step", "miou_1_50", "miou_51_100", "miou_final",
]


def aggregate_row(rows: list) -> dict:
    """Arithmetic mean of the numeric columns; NaN entries are skipped
    column-wise (all-NaN stays NaN)."""
    agg = {
        "scene_id": "aggregate", "agent": rows[0]["agent"] if rows else "",
        "setup": rows[0]["setup"] if rows else "", "episode_index": "",
        "terminated_by": "",
    }
    for col in _NUMERIC:
        vals = [float(r[col]) for r in rows if not math.isnan(float(r[col]))]
        agg[col] = sum(vals) / len(vals) if vals else math.nan
    return agg


def curves(logs: list) -> dict:
    """Curve data in the shape of the evaluation plots."""
    out = {"miou_vs_annotation": {}, "miou_vs_explored_fraction": {},
           "annotations_vs_steps": {}}
    for log in logs:
        key = f"{log.scene_id}/{log.setup}"
        ann_areas = [s.explored_m2 for s in log.steps if s.annotated]
        total = log.total_navigable_m2 or math.nan
        out["miou_vs_annotation"][key] = [
            [i + 1, v] for i, v in enumerate(log.miou_checkpoints)
        ]
        out["miou_vs_explored_fraction"][key] = [
            [a / total, v] for a, v in zip(ann_areas, log.miou_checkpoints)
        ]
        cum = 0
        series = []
        for s in log.steps:
            cum += 1 if s.annotated else 0
            series.append([s.step_index, cum])
        out["annotations_vs_steps"][key] = series
    return out


def write_report(logs: list, out_dir: str) -> dict:
    """Write metrics.csv, curves.json and episode logs; returns paths."""
    os.makedirs(out_dir, exist_ok=True)
    rows = [metrics_row(log, i) for i, log in enumerate(logs)]

    csv_path = os.path.join(out_dir, "metrics.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
        if rows:
            agg = aggregate_row(rows)
            writer.writerow([_fmt(agg[c]) for c in CSV_COLUMNS])

    curves_path = os.path.join(out_dir, "curves.json")
    with open(curves_path, "w") as fh:
        json.dump(curves(logs), fh, sort_keys=True, indent=1)

    logs_path = os.path.join(out_dir, "episodes.json")
    with open(logs_path, "w") as fh:
        json.dump([log.to_dict() for log in logs], fh, sort_keys=True)

    return {"csv": csv_path, "curves": curves_path, "episodes": logs_path}


def read_metrics_csv(path: str) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
