"""Axis error metrics and the batch evaluation harness."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ArtimeshError
from .geometry import Line

ROTATING = ("revolute", "continuous")


class EvaluationError(ArtimeshError):
    pass


def axis_angle_error(pred: Line, gt: Line) -> float:
    """Angle in degrees between the two axis directions, ignoring sign."""
    c = abs(float(np.dot(pred.direction, gt.direction)))
    return math.degrees(math.acos(min(c, 1.0)))


def axis_position_error(pred: Line, gt: Line) -> float:
    """Minimum distance between the two infinite lines."""
    w = gt.origin - pred.origin
    n = np.cross(pred.direction, gt.direction)
    nn = float(np.linalg.norm(n))
    if nn > 1e-12:
        return abs(float(np.dot(w, n))) / nn
    # parallel: distance of gt origin from the predicted line
    return float(np.linalg.norm(w - np.dot(w, pred.direction) * pred.direction))


@dataclass
class JointPrediction:
    joint_id: str
    pred: Line
    gt: Line
    joint_type: str
    object_name: str = ""
    raw_scale: float = 1.0  # raw units per normalized unit


@dataclass
class EvalRow:
    object_name: str
    joint_id: str
    joint_type: str
    angle_error: float
    position_error: float | None
    position_error_raw: float | None


def _mean(xs) -> float | None:
    xs = [x for x in xs if x is not None]
    return float(np.mean(xs)) if xs else None


def evaluate_run(predictions: Sequence[JointPrediction]) -> dict:
    """Mean angle and position errors, overall and per joint type.

    Position error is averaged over revolute and continuous joints only.
    """
    if not predictions:
        raise EvaluationError("nothing to evaluate")
    rows = []
    for p in predictions:
        ang = axis_angle_error(p.pred, p.gt)
        pos = axis_position_error(p.pred, p.gt) if p.joint_type in ROTATING else None
        rows.append(EvalRow(p.object_name, p.joint_id, p.joint_type, ang, pos,
                            None if pos is None else pos * p.raw_scale))
    per_type = {}
    for t in sorted({r.joint_type for r in rows}):
        sub = [r for r in rows if r.joint_type == t]
        per_type[t] = {"count": len(sub), "mean_angle_error": _mean(r.angle_error for r in sub),
                       "mean_position_error": _mean(r.position_error for r in sub),
                       "mean_position_error_raw": _mean(r.position_error_raw for r in sub)}
    return {
        "count": len(rows),
        "mean_angle_error": _mean(r.angle_error for r in rows),
        "mean_position_error": _mean(r.position_error for r in rows),
        "mean_position_error_raw": _mean(r.position_error_raw for r in rows),
        "per_type": per_type,
        "rows": [r.__dict__ for r in rows],
    }


def _fmt(v, spec=".4f") -> str:
    return "-" if v is None else format(v, spec)


def report_table(report: dict) -> str:
    """Plain-text table of per-joint rows and aggregates."""
    head = f"{'object':<18} {'joint':<18} {'type':<11} {'angle(deg)':>11} {'pos(norm)':>11} {'pos(raw)':>11}"
    lines = [head, "-" * len(head)]
    for r in report["rows"]:
        lines.append(f"{r['object_name']:<18} {r['joint_id']:<18} {r['joint_type']:<11} "
                     f"{_fmt(r['angle_error']):>11} {_fmt(r['position_error'], '.6f'):>11} "
                     f"{_fmt(r['position_error_raw'], '.6f'):>11}")
    lines.append("-" * len(head))
    for t, agg in report["per_type"].items():
        lines.append(f"{'mean':<18} {'':<18} {t:<11} {_fmt(agg['mean_angle_error']):>11} "
                     f"{_fmt(agg['mean_position_error'], '.6f'):>11} {_fmt(agg['mean_position_error_raw'], '.6f'):>11}")
    lines.append(f"{'mean':<18} {'':<18} {'all':<11} {_fmt(report['mean_angle_error']):>11} "
                 f"{_fmt(report['mean_position_error'], '.6f'):>11} {_fmt(report['mean_position_error_raw'], '.6f'):>11}")
    return "\n".join(lines) + "\n"


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    fields = ["object_name", "joint_id", "joint_type", "angle_error", "position_error", "position_error_raw"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in report["rows"]:
        w.writerow({k: ("" if r[k] is None else r[k]) for k in fields})
    return buf.getvalue()


def write_report(report: dict, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"json": out / "eval_report.json", "table": out / "eval_report.txt", "csv": out / "eval_rows.csv"}
    paths["json"].write_text(json.dumps(report, indent=2), encoding="utf-8")
    paths["table"].write_text(report_table(report), encoding="utf-8")
    paths["csv"].write_text(report_csv(report), encoding="utf-8")
    return paths


# ---------------------------------------------------------------- JSON records


def _record_lines(data: dict) -> dict[str, tuple[Line, str]]:
    out = {}
    for j in data.get("joints", []):
        jid = str(j.get("id", j.get("name")))
        out[jid] = (Line(j["origin"], j["direction"]), j["type"])
    return out


def pair_records(pred: dict, gt: dict, object_name: str | None = None) -> list[JointPrediction]:
    """Match prediction and ground-truth joint records by id."""
    p, g = _record_lines(pred), _record_lines(gt)
    if set(p) != set(g):
        raise EvaluationError(f"joint ids differ: predicted {sorted(p)} vs ground truth {sorted(g)}")
    name = object_name or gt.get("fixture") or gt.get("object_name") or pred.get("object", "")
    scale = float(gt.get("raw_scale", 1.0))
    return [JointPrediction(jid, p[jid][0], g[jid][0], g[jid][1], name, scale) for jid in sorted(g)]


def load_pairs(pred_path: str | Path, gt_path: str | Path) -> list[JointPrediction]:
    """Pairs from two JSON files, or from two directories of per-object records.

    In directory mode every ``<name>/truth.json`` under ``gt_path`` is matched
    with ``<name>/predictions.json`` under ``pred_path``.
    """
    pred_path, gt_path = Path(pred_path), Path(gt_path)
    if gt_path.is_dir():
        if not pred_path.is_dir():
            raise EvaluationError("ground truth is a directory but predictions are not")
        pairs = []
        for truth in sorted(gt_path.glob("*/truth.json")):
            name = truth.parent.name
            pred = pred_path / name / "predictions.json"
            if not pred.exists():
                raise EvaluationError(f"no predictions for {name!r} (expected {pred})")
            pairs += pair_records(json.loads(pred.read_text()), json.loads(truth.read_text()), name)
        if not pairs:
            raise EvaluationError(f"no */truth.json records under {gt_path}")
        return pairs
    return pair_records(json.loads(pred_path.read_text()), json.loads(gt_path.read_text()))
