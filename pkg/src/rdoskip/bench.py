"""Benchmark harness: rate/quality curves, BD-rate, and effort deltas.

Anchor and test encodes run on identical inputs; the anchor never uses
skip criteria.  Effort is reported primarily as RDO mode-evaluation and
recursion counts (deterministic); wall time is informational only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .codec import Frame
from .criteria import CriteriaBundle
from .pipeline import DEFAULT_QPS, SequenceResult, encode_sequence

# Full-scale reference result for context: the Turing HEVC codec with the
# JCT-VC test set reached -42.1% encoding time at +0.7% Y BD-rate.
REFERENCE_TIME_DELTA_PCT = -42.1
REFERENCE_BD_RATE_PCT = 0.7


def psnr_from_ssd(ssd: int, pixels: int, peak: int = 255) -> float:
    if pixels <= 0:
        raise ValueError("pixel count must be positive")
    if ssd < 0:
        raise ValueError("SSD must be non-negative")
    if ssd == 0:
        raise ValueError("PSNR undefined for a lossless encode (SSD == 0)")
    return 10.0 * math.log10(peak * peak * pixels / ssd)


@dataclass(frozen=True)
class RdPoint:
    rate: float    # total bits of the encode
    quality: float  # PSNR-like score, dB
    qp: int

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if not math.isfinite(self.quality):
            raise ValueError("quality must be finite")


def bd_rate(anchor: list[RdPoint], test: list[RdPoint]) -> float:
    """Average rate difference (%) between two RD curves; positive means
    the test encoder spends more bits for the same quality.

    Cubic fit of log-rate as a function of quality, integrated over the
    overlapping quality interval (the conventional formulation).
    """
    log_anchor, q_anchor = _curve(anchor)
    log_test, q_test = _curve(test)
    lo = max(q_anchor.min(), q_test.min())
    hi = min(q_anchor.max(), q_test.max())
    if not lo < hi:
        raise ValueError("quality ranges do not overlap")
    poly_anchor = np.polyfit(q_anchor, log_anchor, 3)
    poly_test = np.polyfit(q_test, log_test, 3)
    int_anchor = np.polyint(poly_anchor)
    int_test = np.polyint(poly_test)
    area_anchor = np.polyval(int_anchor, hi) - np.polyval(int_anchor, lo)
    area_test = np.polyval(int_test, hi) - np.polyval(int_test, lo)
    avg_log_diff = (area_test - area_anchor) / (hi - lo)
    return (math.exp(avg_log_diff) - 1.0) * 100.0


def _curve(points: list[RdPoint]) -> tuple[np.ndarray, np.ndarray]:
    if len(points) < 4:
        raise ValueError("need at least 4 RD points for the cubic fit")
    ordered = sorted(points, key=lambda p: p.quality)
    quality = np.array([p.quality for p in ordered])
    log_rate = np.array([math.log(p.rate) for p in ordered])
    if np.any(np.diff(quality) <= 0) or np.any(np.diff(log_rate) <= 0):
        raise ValueError("RD points must be strictly monotone "
                         "(quality rising with log-rate)")
    return log_rate, quality


@dataclass
class BenchRow:
    sequence_id: str
    bd_rate_pct: float
    mode_eval_delta_pct: float
    recursion_delta_pct: float
    wall_time_delta_pct: float
    skip_events: int


@dataclass
class BenchReport:
    qps: tuple[int, ...]
    rows: list[BenchRow]
    average: BenchRow
    anchor_runs: list[SequenceResult] = field(default_factory=list)
    test_runs: list[SequenceResult] = field(default_factory=list)


def _delta_pct(test: float, anchor: float) -> float:
    if anchor == 0:
        return 0.0
    return (test - anchor) / anchor * 100.0


def run_benchmark(sequences: list[tuple[str, list[Frame]]],
                  bundle: CriteriaBundle | None = None,
                  qps: tuple[int, ...] = DEFAULT_QPS) -> BenchReport:
    """Anchor (criteria-absent) vs. test (bundle-enabled) on each sequence.

    Sequences that appear in the bundle's training provenance are refused:
    held-out content only.
    """
    if not sequences:
        raise ValueError("no sequences given")
    bundle = bundle if bundle is not None else CriteriaBundle.empty()
    overlap = set(bundle.training_sequences) & {sid for sid, _ in sequences}
    if overlap:
        raise ValueError(
            f"benchmark sequences overlap the training set: "
            f"{sorted(overlap)}")

    rows: list[BenchRow] = []
    anchor_runs: list[SequenceResult] = []
    test_runs: list[SequenceResult] = []
    for sequence_id, frames in sequences:
        anchor_points, test_points = [], []
        anchor_evals = anchor_recursions = 0
        test_evals = test_recursions = 0
        anchor_time = test_time = 0.0
        skip_events = 0
        for qp in qps:
            anchor = encode_sequence(sequence_id, frames, qp)
            test = encode_sequence(sequence_id, frames, qp, criteria=bundle)
            anchor_runs.append(anchor)
            test_runs.append(test)
            anchor_points.append(RdPoint(
                float(anchor.bits),
                psnr_from_ssd(anchor.distortion, anchor.pixels), qp))
            test_points.append(RdPoint(
                float(test.bits),
                psnr_from_ssd(test.distortion, test.pixels), qp))
            anchor_evals += anchor.rdo.mode_evaluations
            test_evals += test.rdo.mode_evaluations
            anchor_recursions += anchor.rdo.recursions_entered
            test_recursions += test.rdo.recursions_entered
            anchor_time += anchor.wall_time
            test_time += test.wall_time
            skip_events += test.rdo.skip_events
        rows.append(BenchRow(
            sequence_id=sequence_id,
            bd_rate_pct=bd_rate(anchor_points, test_points),
            mode_eval_delta_pct=_delta_pct(test_evals, anchor_evals),
            recursion_delta_pct=_delta_pct(test_recursions,
                                           anchor_recursions),
            wall_time_delta_pct=_delta_pct(test_time, anchor_time),
            skip_events=skip_events))

    average = BenchRow(
        sequence_id="average",
        bd_rate_pct=float(np.mean([r.bd_rate_pct for r in rows])),
        mode_eval_delta_pct=float(
            np.mean([r.mode_eval_delta_pct for r in rows])),
        recursion_delta_pct=float(
            np.mean([r.recursion_delta_pct for r in rows])),
        wall_time_delta_pct=float(
            np.mean([r.wall_time_delta_pct for r in rows])),
        skip_events=sum(r.skip_events for r in rows))
    return BenchReport(qps=tuple(qps), rows=rows, average=average,
                       anchor_runs=anchor_runs, test_runs=test_runs)


def render_report(report: BenchReport, include_wall_time: bool = True) -> str:
    header = (f"{'Sequence':<16}{'Y BD Rate':>12}{'Mode Evals':>12}"
              f"{'Recursions':>12}")
    if include_wall_time:
        header += f"{'Wall Time':>12}"
    lines = [
        f"Benchmark at QPs {', '.join(str(q) for q in report.qps)}",
        header,
    ]
    for row in report.rows + [report.average]:
        line = (f"{row.sequence_id:<16}{row.bd_rate_pct:>+11.3f}%"
                f"{row.mode_eval_delta_pct:>+11.2f}%"
                f"{row.recursion_delta_pct:>+11.2f}%")
        if include_wall_time:
            line += f"{row.wall_time_delta_pct:>+11.2f}%"
        lines.append(line)
    lines.append(
        f"Full-scale reference (Turing HEVC, JCT-VC set): "
        f"Enc. time {REFERENCE_TIME_DELTA_PCT:+.1f}%, "
        f"Y BD rate {REFERENCE_BD_RATE_PCT:+.1f}%")
    return "\n".join(lines) + "\n"


def write_report_csv(report: BenchReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sequence", "bd_rate_pct", "mode_eval_delta_pct",
                         "recursion_delta_pct", "skip_events"])
        for row in report.rows + [report.average]:
            writer.writerow([row.sequence_id, repr(row.bd_rate_pct),
                             repr(row.mode_eval_delta_pct),
                             repr(row.recursion_delta_pct),
                             row.skip_events])


def write_points_csv(report: BenchReport, path) -> None:
    """Per-(sequence, QP, configuration) detail grid."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sequence", "qp", "configuration", "bits",
                         "distortion", "pixels", "mode_evaluations",
                         "recursions_entered", "skip_events"])
        for label, runs in (("anchor", report.anchor_runs),
                            ("test", report.test_runs)):
            for run in runs:
                writer.writerow([
                    run.sequence_id, run.base_qp, label, run.bits,
                    run.distortion, run.pixels, run.rdo.mode_evaluations,
                    run.rdo.recursions_entered, run.rdo.skip_events])
