"""Detection error trade-off, equal error rate and minimum detection cost."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import FormatError, LengthMismatch, SingleClassOnly, ValidationError

__all__ = [
    "Trial",
    "TrialSet",
    "DetCurve",
    "DcfParams",
    "det_curve",
    "roc_convex_hull",
    "eer",
    "min_dcf",
    "export_det",
    "read_det",
    "read_trials",
    "write_trials",
    "read_scores",
    "write_scores",
]


@dataclass(frozen=True)
class Trial:
    model_id: str
    test_id: str
    is_target: bool


@dataclass(frozen=True)
class TrialSet:
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise ValidationError("trial set is empty")

    @classmethod
    def from_labels(cls, labels) -> "TrialSet":
        """Anonymous trials from a boolean target mask."""
        return cls(tuple(Trial(f"m{i}", f"t{i}", bool(lab)) for i, lab in enumerate(labels)))

    @property
    def labels(self) -> np.ndarray:
        return np.array([t.is_target for t in self.entries], dtype=bool)

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class DetCurve:
    """Operating points sorted by increasing threshold.

    A trial is accepted when its score is >= the threshold.
    """

    thresholds: np.ndarray = field(repr=False)
    false_alarm: np.ndarray = field(repr=False)
    miss: np.ndarray = field(repr=False)

    def points(self):
        return list(zip(self.thresholds.tolist(), self.false_alarm.tolist(), self.miss.tolist()))


@dataclass(frozen=True)
class DcfParams:
    c_miss: float = 10.0
    c_fa: float = 1.0
    p_target: float = 0.01

    def __post_init__(self):
        if not (self.c_miss > 0 and self.c_fa > 0 and 0 < self.p_target < 1):
            raise ValidationError("need c_miss > 0, c_fa > 0 and 0 < p_target < 1")


def _split(trials: TrialSet, scores):
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (len(trials),):
        raise LengthMismatch(f"{scores.size} scores for {len(trials)} trials")
    if not np.all(np.isfinite(scores)):
        raise ValidationError("scores must be finite")
    labels = trials.labels
    if labels.all() or not labels.any():
        raise SingleClassOnly("need at least one target and one impostor trial")
    return scores[labels], scores[~labels]


def det_curve(trials: TrialSet, scores) -> DetCurve:
    tgt, imp = _split(trials, scores)
    thresholds = np.concatenate([[-np.inf], np.unique(np.concatenate([tgt, imp])), [np.inf]])
    tgt, imp = np.sort(tgt), np.sort(imp)
    # accepted impostors: score >= threshold; missed targets: score < threshold
    fa = (imp.size - np.searchsorted(imp, thresholds, side="left")) / imp.size
    miss = np.searchsorted(tgt, thresholds, side="left") / tgt.size
    return DetCurve(thresholds, fa, miss)


def roc_convex_hull(curve: DetCurve):
    """Vertices of the lower-left convex hull of the (false alarm, miss) points.

    Returned in order of increasing false-alarm rate.
    """
    pts = sorted(set(zip(curve.false_alarm.tolist(), curve.miss.tolist())))
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # keep only counter-clockwise turns (lower hull)
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def eer(curve: DetCurve) -> float:
    """Equal error rate in percent.

    The crossing of ``false alarm == miss`` is interpolated linearly between
    the bracketing vertices of the ROC convex hull.
    """
    hull = roc_convex_hull(curve)
    for (fa0, m0), (fa1, m1) in zip(hull, hull[1:]):
        d0, d1 = m0 - fa0, m1 - fa1
        if d0 == 0:
            return 100.0 * fa0
        if d0 > 0 >= d1:
            t = d0 / (d0 - d1)
            return 100.0 * (fa0 + t * (fa1 - fa0))
    fa, m = hull[-1]
    return 100.0 * fa if fa == m else 100.0 * min(fa, m)


def min_dcf(trials: TrialSet, scores, params: DcfParams | None = None) -> float:
    """Minimum over thresholds of ``c_miss*p*P_miss + c_fa*(1-p)*P_fa`` (not normalised)."""
    params = params or DcfParams()
    curve = det_curve(trials, scores)
    cost = (
        params.c_miss * params.p_target * curve.miss
        + params.c_fa * (1 - params.p_target) * curve.false_alarm
    )
    return float(cost.min())


def _probit(rate: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.clip(norm.ppf(rate), -5.0, 5.0)


def export_det(curve: DetCurve, path) -> None:
    """CSV ``threshold,far,frr,probit_far,probit_frr``; probits clamped to +-5."""
    pfa, pmiss = _probit(curve.false_alarm), _probit(curve.miss)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "far", "frr", "probit_far", "probit_frr"])
        for row in zip(curve.thresholds, curve.false_alarm, curve.miss, pfa, pmiss):
            writer.writerow([repr(float(v)) for v in row])


def read_det(path) -> DetCurve:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        cols = {k: np.array([float(r[k]) for r in rows]) for k in ("threshold", "far", "frr")}
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: not a DET CSV ({exc})") from exc
    return DetCurve(cols["threshold"], cols["far"], cols["frr"])


def read_trials(path) -> TrialSet:
    """Tab-separated ``model_id  test_id  target|impostor`` lines."""
    entries = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3 or parts[2] not in ("target", "impostor"):
                raise FormatError(f"{path}:{lineno}: expected model<TAB>test<TAB>target|impostor")
            entries.append(Trial(parts[0], parts[1], parts[2] == "target"))
    return TrialSet(entries)


def write_trials(trials: TrialSet, path) -> None:
    with open(path, "w") as fh:
        for t in trials.entries:
            fh.write(f"{t.model_id}\t{t.test_id}\t{'target' if t.is_target else 'impostor'}\n")


def read_scores(path) -> np.ndarray:
    with open(path) as fh:
        try:
            return np.array([float(line) for line in fh if line.strip()])
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from exc


def write_scores(scores, path) -> None:
    with open(path, "w") as fh:
        for s in scores:
            fh.write(f"{float(s)!r}\n")
