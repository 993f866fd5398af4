"""Sensitivity, specificity and ROC sweeps against a reference mask."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import PixelMap
from .errors import EmptyReference, FullReference, IoFailure


def _bools(pm) -> np.ndarray:
    return pm.as_bool() if isinstance(pm, PixelMap) else np.asarray(pm).astype(bool)


def sensitivity(mask, ref) -> float:
    """|mask & ref| / |ref|."""
    m, r = _bools(mask), _bools(ref)
    pos = int(r.sum())
    if pos == 0:
        raise EmptyReference("reference has no positive pixel")
    return int((m & r).sum()) / pos


def specificity(mask, ref) -> float:
    """|~mask & ~ref| / |~ref|."""
    m, r = _bools(mask), _bools(ref)
    neg = int((~r).sum())
    if neg == 0:
        raise FullReference("reference has no negative pixel")
    return int((~m & ~r).sum()) / neg


def sweep_thresholds(t_start: float = 0.1, t_end: float = 1.0, t_step: float = 0.05) -> np.ndarray:
    if not t_step > 0:
        raise ValueError("t_step must be positive")
    if t_start > t_end:
        raise ValueError("t_start must not exceed t_end")
    n = int(np.floor((t_end - t_start) / t_step + 1e-9)) + 1
    return np.round(t_start + t_step * np.arange(n), 10)


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float, float], ...]  # (threshold, sensitivity, specificity)
    auc: float

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def sensitivities(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @property
    def specificities(self) -> np.ndarray:
        return np.array([p[2] for p in self.points])


def auc_trapezoid(fpr, tpr) -> float:
    """Area under (fpr, tpr) points anchored at (0, 0) and (1, 1).

    Duplicate points are dropped; ties in fpr are ordered by tpr.
    """
    pts = {(float(x), float(y)) for x, y in zip(fpr, tpr)} | {(0.0, 0.0), (1.0, 1.0)}
    xy = np.array(sorted(pts))
    x, y = xy[:, 0], xy[:, 1]
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def roc_curve(pm: PixelMap, ref, t_start: float = 0.1, t_end: float = 1.0, t_step: float = 0.05) -> RocCurve:
    """Threshold ``pm`` across the sweep and score each mask against ``ref``.

    Masks follow ``threshold_map`` (inclusive); thresholds may leave [0, 1]
    so the sweep also works on rescaled maps.
    """
    r = _bools(ref)
    if not r.any():
        raise EmptyReference("reference has no positive pixel")
    if r.all():
        raise FullReference("reference has no negative pixel")
    points = []
    for t in sweep_thresholds(t_start, t_end, t_step):
        mask = pm.values >= t
        points.append((float(t), sensitivity(mask, r), specificity(mask, r)))
    auc = auc_trapezoid([1.0 - p[2] for p in points], [p[1] for p in points])
    return RocCurve(tuple(points), auc)


def write_roc_csv(curve: RocCurve, path) -> None:
    lines = ["threshold,sensitivity,specificity"]
    lines += [f"{t!r},{se!r},{sp!r}" for t, se, sp in curve.points]
    lines.append(f"# auc={curve.auc!r}")
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_roc_csv(path) -> RocCurve:
    points, auc = [], None
    for line in Path(path).read_text(encoding="utf-8").splitlines()[1:]:
        if line.startswith("# auc="):
            auc = float(line.split("=", 1)[1])
        elif line.strip():
            t, se, sp = (float(x) for x in line.split(","))
            points.append((t, se, sp))
    if auc is None:
        raise IoFailure(f"{path}: missing '# auc=' line")
    return RocCurve(tuple(points), auc)
