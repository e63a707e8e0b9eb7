"""Segmentation scoring over probability maps.

Predictions binarize with a strict `value > T` rule. Dataset-level scores
micro-average: confusion counts are summed over all image pairs before any
ratio is taken. Any 0/0 ratio is 1 when the corresponding class is absent
from both prediction and ground truth, else 0; this makes every metric a
total function.

The focal-dice loss mirrors the training objective as a pure scorer: a
focal-weighted cross entropy averaged over pixels plus one minus the
F-measure computed from soft (probability-mass) counts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core_data import BinaryMask, ProbabilityMap

THRESHOLD_GRID = tuple(i / 100.0 for i in range(100))


@dataclass(frozen=True)
class ConfusionCounts:
    """Pixel tallies with crack as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


@dataclass(frozen=True)
class MetricReport:
    """The six dataset metrics at one threshold."""

    threshold: float
    g: float
    c: float
    miou: float
    p: float
    r: float
    f: float


@dataclass(frozen=True)
class LossParams:
    alpha: float = 0.5
    gamma: float = 3.33
    beta: float = 1.0
    eps: float = 1e-7

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.gamma <= 0 or self.beta <= 0 or self.eps <= 0:
            raise ValueError("gamma, beta and eps must be positive")


def binarize(pmap: ProbabilityMap, threshold: float) -> BinaryMask:
    """Pixel = 1 iff its value is strictly greater than the threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    return BinaryMask((pmap.data > threshold).astype(np.uint8))


def confusion(pred: BinaryMask, gt: BinaryMask) -> ConfusionCounts:
    """Per-pixel confusion tally; raises on mismatched dimensions."""
    if pred.data.shape != gt.data.shape:
        raise ValueError(
            f"dimension mismatch: pred {pred.data.shape} vs gt {gt.data.shape}"
        )
    p = pred.data != 0
    g = gt.data != 0
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    tn = int(np.count_nonzero(~p & ~g))
    return ConfusionCounts(tp, fp, fn, tn)


def _ratio(num: int, den: int, absent_in_both: bool) -> float:
    if den > 0:
        return num / den
    return 1.0 if absent_in_both else 0.0


def metrics(counts: ConfusionCounts, threshold: float = 0.5) -> MetricReport:
    """Global accuracy, class-average accuracy, mean IoU, precision, recall, F.

    G = (tp+tn)/N; C averages crack recall and background recall; mIoU
    averages tp/(tp+fp+fn) and tn/(tn+fn+fp); P, R, F are the usual
    crack-class ratios. 0/0 cases resolve by the absent-class convention.
    """
    tp, fp, fn, tn = counts.tp, counts.fp, counts.fn, counts.tn
    if counts.total <= 0:
        raise ValueError("empty confusion counts")
    crack_absent = tp + fp == 0 and tp + fn == 0
    bg_absent = tn + fn == 0 and tn + fp == 0
    g = (tp + tn) / counts.total
    crack_recall = _ratio(tp, tp + fn, fp == 0)  # gt has no crack: 1 iff pred has none
    bg_recall = _ratio(tn, tn + fp, fn == 0)
    c = 0.5 * (crack_recall + bg_recall)
    iou_crack = _ratio(tp, tp + fp + fn, crack_absent)
    iou_bg = _ratio(tn, tn + fn + fp, bg_absent)
    miou = 0.5 * (iou_crack + iou_bg)
    p = _ratio(tp, tp + fp, fn == 0)  # pred has no crack: 1 iff gt has none
    r = crack_recall
    f = 2.0 * p * r / (p + r) if p + r > 0 else 0.0
    return MetricReport(threshold, g, c, miou, p, r, f)


Pairs = Sequence[tuple[ProbabilityMap, BinaryMask]]


def _summed_confusion(pairs: Pairs, threshold: float) -> ConfusionCounts:
    if not pairs:
        raise ValueError("no prediction/ground-truth pairs")
    total = ConfusionCounts(0, 0, 0, 0)
    for i, (pmap, gt) in enumerate(pairs):
        if pmap.data.shape != gt.data.shape:
            raise ValueError(
                f"dimension mismatch in pair {i}: "
                f"pred {pmap.data.shape} vs gt {gt.data.shape}"
            )
        total = total + confusion(binarize(pmap, threshold), gt)
    return total


def evaluate_set(pairs: Pairs, threshold: float) -> MetricReport:
    """Micro-averaged metrics: counts summed over all pairs, then ratios."""
    return metrics(_summed_confusion(pairs, threshold), threshold)


def grid_search_threshold(pairs: Pairs) -> tuple[float, MetricReport]:
    """Best-F threshold over the 100-point grid {0.00, 0.01, ..., 0.99}.

    Ties break toward the smallest threshold.
    """
    best: tuple[float, MetricReport] | None = None
    for t in THRESHOLD_GRID:
        report = evaluate_set(pairs, t)
        if best is None or report.f > best[1].f:
            best = (t, report)
    assert best is not None
    return best


def curve_points(pairs: Pairs, kind: str) -> list[tuple[float, float, float]]:
    """ROC or PR points over the threshold grid, ascending in T.

    roc rows are (T, FPR, TPR); pr rows are (T, P, R). Conventions follow
    `metrics`; an undefined FPR (no background in gt) is reported as 0.
    """
    if kind not in ("roc", "pr"):
        raise ValueError(f"unknown curve kind {kind!r}")
    rows = []
    for t in THRESHOLD_GRID:
        counts = _summed_confusion(pairs, t)
        report = metrics(counts, t)
        if kind == "roc":
            fpr = counts.fp / (counts.fp + counts.tn) if counts.fp + counts.tn > 0 else 0.0
            rows.append((t, fpr, report.r))
        else:
            rows.append((t, report.p, report.r))
    return rows


def write_curve_csv(rows: Iterable[tuple[float, float, float]], kind: str, path: str | Path) -> None:
    """Write curve points with the header matching the curve kind."""
    header = ("T", "FPR", "TPR") if kind == "roc" else ("T", "P", "R")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t, a, b in rows:
            writer.writerow([f"{t:.2f}", repr(a), repr(b)])


def write_metrics_csv(rows: Iterable[tuple[str, MetricReport]], path: str | Path) -> None:
    """Write `dataset,T,G,C,mIoU,P,R,F` rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_metrics_csv(rows))


def format_metrics_csv(rows: Iterable[tuple[str, MetricReport]]) -> str:
    lines = ["dataset,T,G,C,mIoU,P,R,F"]
    for name, m in rows:
        lines.append(
            f"{name},{m.threshold:.2f},{repr(m.g)},{repr(m.c)},{repr(m.miou)},"
            f"{repr(m.p)},{repr(m.r)},{repr(m.f)}"
        )
    return "".join(line + "\n" for line in lines)


def focal_dice_loss(
    gt: BinaryMask, pred: ProbabilityMap, params: LossParams = LossParams()
) -> tuple[float, float, float]:
    """(focal, dice, total) loss of a probability map against a binary mask.

    The focal term is the pixel mean of
    -G*alpha*(1-P)^gamma*log(P) - (1-G)*alpha*P^gamma*log(1-P) with P clipped
    to [eps, 1-eps]. The dice term uses soft counts tp = sum(G*P),
    fp = sum((1-G)*P), fn = sum(G*(1-P)) and is
    1 - (1+beta^2)*p*r/(beta^2*p + r); when both the raw prediction mass and
    the ground truth are empty, p = r = 1 (perfect-emptiness), otherwise 0/0
    ratios are 0 and an all-zero denominator yields a dice term of 1.
    """
    if gt.data.shape != pred.data.shape:
        raise ValueError(
            f"dimension mismatch: gt {gt.data.shape} vs pred {pred.data.shape}"
        )
    g = gt.data.astype(np.float64)
    raw = pred.data
    p = np.clip(raw, params.eps, 1.0 - params.eps)
    focal = float(
        np.mean(
            -g * params.alpha * (1.0 - p) ** params.gamma * np.log(p)
            - (1.0 - g) * params.alpha * p**params.gamma * np.log1p(-p)
        )
    )
    tp = float((g * p).sum())
    fp = float(((1.0 - g) * p).sum())
    fn = float((g * (1.0 - p)).sum())
    if g.sum() == 0.0 and float(raw.sum()) == 0.0:
        precision = recall = 1.0
    else:
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    beta_sq = params.beta**2
    denom = beta_sq * precision + recall
    dice = 1.0 - (1.0 + beta_sq) * precision * recall / denom if denom > 0 else 1.0
    return focal, dice, focal + dice
