"""Toy quad-tree block encoder with exhaustive Lagrangian RDO.

Frames are tiled into 64x64 CTUs; each CTU is recursively partitioned into
square CUs (64 down to 8 pixels, depths 0..3).  Every CU is first probed
with the cheap merge/skip test and a whole-CU inter test, then - unless a
skip criterion fires - the 4-way split is evaluated recursively and the
cheaper configuration wins.  All decisions minimise J = D + lambda * R.

The model is deliberately small: integer-pel motion over a tiny search
window, residuals quantised directly (no transform), and a bit model made
of per-mode headers plus per-coefficient magnitude costs.  It is enough to
make split vs. non-split a genuine trade-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .criteria import CriteriaBundle, apply_skip
from .features import FeatureVector, average_neighbour_depth, extract_sample

CTU_SIZE = 64
MAX_DEPTH = 3
MIN_CU_SIZE = 8
SEARCH_RANGE = 2  # integer-pel displacement search window, +-2 px

# Bit model: header costs per candidate kind, split flag, and residual
# coefficient costs (base + 2 bits per magnitude bit).
SKIP_HEADER_BITS = 2
MERGE_HEADER_BITS = 3  # merge flag + candidate index + CBF flag
INTER_MODE_BITS = 3
SPLIT_FLAG_BITS = 1
COEFF_BASE_BITS = 4

LAMBDA_ANCHOR = 0.57  # lambda at QP 12; doubles every 3 QP steps
QSTEP_ANCHOR_QP = 4   # quantiser step is 1.0 here; doubles every 6 steps

MODE_MERGE_SKIP = "merge_skip"
MODE_INTER_WHOLE = "inter_whole"


def rd_cost(distortion: float, bits: float, lam: float) -> float:
    """Lagrangian cost J = D + lambda * R."""
    if distortion < 0 or bits < 0:
        raise ValueError("distortion and bits must be non-negative")
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return distortion + lam * bits


def lambda_from_qp(qp: int) -> float:
    """Rate/distortion exchange rate for a QP; doubles every 3 QP steps.

    Written as an exact power-of-two scaling of the fractional part so that
    ratios across QP gaps divisible by 3 are exact in floating point.
    """
    if not 0 <= qp <= 51:
        raise ValueError(f"qp out of [0, 51]: {qp}")
    steps = qp - 12
    return LAMBDA_ANCHOR * 2.0 ** (steps % 3 / 3) * 2.0 ** (steps // 3)


def quant_step_from_qp(qp: int) -> float:
    """Residual quantiser step; doubles every 6 QP steps."""
    if not 0 <= qp <= 51:
        raise ValueError(f"qp out of [0, 51]: {qp}")
    steps = qp - QSTEP_ANCHOR_QP
    return 2.0 ** (steps % 6 / 6) * 2.0 ** (steps // 6)


@dataclass
class Frame:
    """One luma plane plus its position and QP offset within the sequence."""

    luma: np.ndarray  # 2-D uint8, dimensions multiples of 64
    frame_index: int = 0
    qp_offset: int = 1

    def __post_init__(self):
        self.luma = np.asarray(self.luma)
        if self.luma.ndim != 2:
            raise ValueError("luma must be a 2-D array")
        if self.luma.dtype != np.uint8:
            if self.luma.min() < 0 or self.luma.max() > 255:
                raise ValueError("luma samples must lie in [0, 255]")
            self.luma = self.luma.astype(np.uint8)
        h, w = self.luma.shape
        if w % CTU_SIZE or h % CTU_SIZE:
            raise ValueError(
                f"frame dimensions must be multiples of {CTU_SIZE}, "
                f"got {w}x{h}")
        if self.qp_offset not in (1, 2, 3, 4):
            raise ValueError(f"qp_offset out of [1, 4]: {self.qp_offset}")

    @property
    def width(self) -> int:
        return self.luma.shape[1]

    @property
    def height(self) -> int:
        return self.luma.shape[0]


@dataclass(frozen=True)
class CodingUnit:
    x: int
    y: int
    depth: int

    def __post_init__(self):
        if not 0 <= self.depth <= MAX_DEPTH:
            raise ValueError(f"depth out of [0, {MAX_DEPTH}]: {self.depth}")
        if self.x % self.size or self.y % self.size:
            raise ValueError(
                f"origin ({self.x}, {self.y}) not aligned to size {self.size}")

    @property
    def size(self) -> int:
        return CTU_SIZE >> self.depth

    def children(self) -> tuple["CodingUnit", ...]:
        if self.depth >= MAX_DEPTH:
            raise ValueError("8x8 CUs are never split")
        h = self.size // 2
        return (
            CodingUnit(self.x, self.y, self.depth + 1),
            CodingUnit(self.x + h, self.y, self.depth + 1),
            CodingUnit(self.x, self.y + h, self.depth + 1),
            CodingUnit(self.x + h, self.y + h, self.depth + 1),
        )


@dataclass(frozen=True)
class ModeResult:
    """Outcome of encoding a CU whole with one candidate mode."""

    mode_kind: str
    pm: int            # 0 = 2Nx2N, 1 = 2NxN, 2 = Nx2N
    distortion: int
    bits: int
    rd_cost: float
    cbf: bool
    skip_flag: bool
    motion: tuple[tuple[int, int], ...]  # displacement per partition part

    def __post_init__(self):
        if self.skip_flag and self.cbf:
            raise ValueError("skip_flag implies cbf == false")
        if self.mode_kind == MODE_MERGE_SKIP and self.pm != 0:
            raise ValueError("merge/skip is whole-CU only (pm must be 0)")


@dataclass
class CuTree:
    """A node of the chosen quad-tree partition, with aggregate RD totals."""

    unit: CodingUnit
    split: bool
    children: tuple["CuTree", ...] = ()
    chosen_mode: ModeResult | None = None
    distortion: int = 0
    bits: int = 0
    cost: float = 0.0

    def __post_init__(self):
        if self.split and len(self.children) != 4:
            raise ValueError("a split node must have exactly 4 children")
        if not self.split and self.children:
            raise ValueError("an unsplit node has no children")
        if self.split and self.unit.depth >= MAX_DEPTH:
            raise ValueError("8x8 CUs are never split")

    def leaves(self) -> Iterator["CuTree"]:
        if self.split:
            for child in self.children:
                yield from child.leaves()
        else:
            yield self


@dataclass
class EncoderConfig:
    base_qp: int = 27
    lambda_rule: Callable[[int], float] = lambda_from_qp
    rng_seed: int = 0  # forwarded to synthetic generation when config-driven

    def effective_qp(self, frame: Frame) -> int:
        return self.base_qp + frame.qp_offset

    def lam(self, frame: Frame) -> float:
        value = self.lambda_rule(self.effective_qp(frame))
        if value <= 0:
            raise ValueError("lambda rule must be positive")
        return value

    def quant_step(self, frame: Frame) -> float:
        return quant_step_from_qp(self.effective_qp(frame))


@dataclass
class RdoStats:
    """Effort counters: candidate encodes, search points, recursion."""

    mode_evaluations: int = 0
    search_points: int = 0
    merge_tests: int = 0
    inter_tests: int = 0
    recursions_entered: int = 0
    skip_events: int = 0
    cus_evaluated: int = 0

    def add(self, other: "RdoStats") -> None:
        self.mode_evaluations += other.mode_evaluations
        self.search_points += other.search_points
        self.merge_tests += other.merge_tests
        self.inter_tests += other.inter_tests
        self.recursions_entered += other.recursions_entered
        self.skip_events += other.skip_events
        self.cus_evaluated += other.cus_evaluated


@dataclass
class FrameStats:
    rd_cost: float = 0.0
    bits: int = 0
    distortion: int = 0
    pixels: int = 0
    rdo: RdoStats = field(default_factory=RdoStats)


class NeighbourContext:
    """Leaf depth and motion of already-committed CUs, at 8-px granularity.

    Cells are committed per finalised CTU in raster order; samples inside
    the CTU currently being decided read as absent.
    """

    def __init__(self, width: int, height: int):
        self.depth_map = np.full(
            (height // MIN_CU_SIZE, width // MIN_CU_SIZE), -1, dtype=np.int8)
        self.motion_map = np.zeros(
            (height // MIN_CU_SIZE, width // MIN_CU_SIZE, 2), dtype=np.int16)

    def _leaf_depth_at(self, px: int, py: int) -> int | None:
        if px < 0 or py < 0:
            return None
        d = int(self.depth_map[py // MIN_CU_SIZE, px // MIN_CU_SIZE])
        return d if d >= 0 else None

    def above_depth(self, cu: CodingUnit) -> int | None:
        return self._leaf_depth_at(cu.x, cu.y - 1)

    def left_depth(self, cu: CodingUnit) -> int | None:
        return self._leaf_depth_at(cu.x - 1, cu.y)

    def merge_displacement(self, cu: CodingUnit) -> tuple[int, int]:
        """Inherited motion: left neighbour first, then above, else zero."""
        for px, py in ((cu.x - 1, cu.y), (cu.x, cu.y - 1)):
            if self._leaf_depth_at(px, py) is not None:
                dy, dx = py // MIN_CU_SIZE, px // MIN_CU_SIZE
                mv = self.motion_map[dy, dx]
                return int(mv[0]), int(mv[1])
        return 0, 0

    def commit(self, tree: CuTree) -> None:
        for leaf in tree.leaves():
            unit = leaf.unit
            y0, x0 = unit.y // MIN_CU_SIZE, unit.x // MIN_CU_SIZE
            n = unit.size // MIN_CU_SIZE
            self.depth_map[y0:y0 + n, x0:x0 + n] = unit.depth
            mode = leaf.chosen_mode
            for (dx, dy), (px, py, pw, ph) in zip(
                    mode.motion, part_rects(unit, mode.pm)):
                cy, cx = py // MIN_CU_SIZE, px // MIN_CU_SIZE
                self.motion_map[cy:cy + max(1, ph // MIN_CU_SIZE),
                                cx:cx + max(1, pw // MIN_CU_SIZE)] = (dx, dy)


def part_rects(cu: CodingUnit, pm: int) -> tuple[tuple[int, int, int, int], ...]:
    """Partition rectangles (x, y, w, h) for a whole-CU prediction mode."""
    s = cu.size
    if pm == 0:
        return ((cu.x, cu.y, s, s),)
    if pm == 1:  # 2NxN: top / bottom
        return ((cu.x, cu.y, s, s // 2), (cu.x, cu.y + s // 2, s, s // 2))
    if pm == 2:  # Nx2N: left / right
        return ((cu.x, cu.y, s // 2, s), (cu.x + s // 2, cu.y, s // 2, s))
    raise ValueError(f"pm out of {{0, 1, 2}}: {pm}")


# Motion vector cost: 2 bits overhead + 2 bits per magnitude bit and axis.
def _mv_bits(dx: int, dy: int) -> int:
    return 2 + 2 * int(abs(dx)).bit_length() + 2 * int(abs(dy)).bit_length()


_MV_BITS_GRID = np.array(
    [[_mv_bits(dx, dy) for dx in range(-SEARCH_RANGE, SEARCH_RANGE + 1)]
     for dy in range(-SEARCH_RANGE, SEARCH_RANGE + 1)], dtype=np.int64)


def _inter_header_bits(pm: int) -> int:
    return INTER_MODE_BITS + (1 if pm == 0 else 2)


def _residual_bits(q: np.ndarray) -> int:
    nz = np.abs(q[q != 0])
    if nz.size == 0:
        return 0
    # frexp exponent == bit length for exact integer magnitudes
    _, exponents = np.frexp(nz.astype(np.float64))
    return int(COEFF_BASE_BITS * nz.size + 2 * int(exponents.sum()))


def _code_residual(orig: np.ndarray, pred: np.ndarray, step: float
                   ) -> tuple[int, int, bool]:
    """Quantise orig-pred; returns (distortion, residual bits, cbf)."""
    residual = orig.astype(np.int32) - pred.astype(np.int32)
    q = np.rint(residual / step).astype(np.int32)
    recon = pred.astype(np.int32) + np.rint(q * step).astype(np.int32)
    np.clip(recon, 0, 255, out=recon)
    diff = orig.astype(np.int64) - recon
    distortion = int((diff * diff).sum())
    cbf = bool(np.any(q))
    return distortion, _residual_bits(q), cbf


def _ssd(a: np.ndarray, b: np.ndarray) -> int:
    diff = a.astype(np.int64) - b.astype(np.int64)
    return int((diff * diff).sum())


class _Encode:
    """Per-frame encoding state shared by the recursive partition search."""

    def __init__(self, frame: Frame, reference: Frame, config: EncoderConfig,
                 context: NeighbourContext | None = None,
                 criteria: CriteriaBundle | None = None,
                 collector: list | None = None,
                 skip_log: list | None = None,
                 sequence_id: str = "", stats: RdoStats | None = None):
        if frame.luma.shape != reference.luma.shape:
            raise ValueError("frame and reference dimensions differ")
        if collector is not None and criteria is not None and len(criteria):
            raise ValueError(
                "feature collection requires a full-RDO encode; run data "
                "collection and skip-enabled encodes separately")
        self.frame = frame
        self.reference = reference
        self.config = config
        self.qp = config.effective_qp(frame)
        self.lam = config.lam(frame)
        self.step = config.quant_step(frame)
        self.context = context if context is not None else NeighbourContext(
            frame.width, frame.height)
        self.criteria = criteria
        self.collector = collector
        self.skip_log = skip_log
        self.sequence_id = sequence_id
        self.stats = stats if stats is not None else RdoStats()
        self.ref_pad = np.pad(reference.luma, SEARCH_RANGE, mode="edge")
        self._window_views: dict[tuple[int, int], np.ndarray] = {}

    def window_view(self, h: int, w: int) -> np.ndarray:
        view = self._window_views.get((h, w))
        if view is None:
            view = np.lib.stride_tricks.sliding_window_view(
                self.ref_pad, (h, w))
            self._window_views[(h, w)] = view
        return view

    def orig_block(self, x: int, y: int, w: int, h: int) -> np.ndarray:
        return self.frame.luma[y:y + h, x:x + w]

    def pred_block(self, x: int, y: int, w: int, h: int,
                   dx: int, dy: int) -> np.ndarray:
        px, py = x + dx + SEARCH_RANGE, y + dy + SEARCH_RANGE
        return self.ref_pad[py:py + h, px:px + w]

    def check_bounds(self, cu: CodingUnit) -> None:
        if (cu.x + cu.size > self.frame.width
                or cu.y + cu.size > self.frame.height):
            raise ValueError(
                f"CU at ({cu.x}, {cu.y}) size {cu.size} exceeds frame "
                f"{self.frame.width}x{self.frame.height}")


@dataclass
class CuProbe:
    """Post-test state of one CU: everything feature extraction needs."""

    depth: int
    x: int
    y: int
    qp: int
    lam: float
    qpo: int
    merge: ModeResult | None = None
    whole: ModeResult | None = None
    above_depth: int | None = None
    left_depth: int | None = None

    def feature_vector(self) -> FeatureVector:
        return FeatureVector(
            sf=self.merge.skip_flag,
            cbf=self.merge.cbf,
            rdc=self.merge.rd_cost,
            bits=float(self.merge.bits),
            and_depth=average_neighbour_depth(
                self.above_depth, self.left_depth, default=self.depth),
            qp=self.qp,
            lam=self.lam,
            qpo=self.qpo,
            pm=self.whole.pm,
        )


def _merge_skip(cu: CodingUnit, enc: _Encode) -> ModeResult:
    enc.check_bounds(cu)
    enc.stats.merge_tests += 1
    dx, dy = enc.context.merge_displacement(cu)
    s = cu.size
    orig = enc.orig_block(cu.x, cu.y, s, s)
    pred = enc.pred_block(cu.x, cu.y, s, s, dx, dy)

    # Candidate 1: skip - prediction only, no residual sent.
    skip_d = _ssd(orig, pred)
    skip_bits = SKIP_HEADER_BITS
    skip = ModeResult(
        MODE_MERGE_SKIP, 0, skip_d, skip_bits,
        rd_cost(skip_d, skip_bits, enc.lam), cbf=False, skip_flag=True,
        motion=((dx, dy),))

    # Candidate 2: merge with coded residual.
    res_d, res_bits, cbf = _code_residual(orig, pred, enc.step)
    merge_bits = MERGE_HEADER_BITS + res_bits
    merge = ModeResult(
        MODE_MERGE_SKIP, 0, res_d, merge_bits,
        rd_cost(res_d, merge_bits, enc.lam), cbf=cbf, skip_flag=False,
        motion=((dx, dy),))

    enc.stats.mode_evaluations += 2
    return merge if merge.rd_cost < skip.rd_cost else skip


def _search_displacement(enc: _Encode, x: int, y: int, w: int, h: int
                         ) -> tuple[int, int]:
    """Best integer displacement in the window by SSD + lambda * mv bits."""
    r = SEARCH_RANGE
    span = 2 * r + 1
    orig = enc.orig_block(x, y, w, h).astype(np.int16)
    # All candidate windows at once: a (span, span, h, w) view of ref_pad.
    windows = enc.window_view(h, w)[y:y + span, x:x + span]
    diff = windows.astype(np.int16) - orig[None, None]
    ssd = np.einsum("abhw,abhw->ab", diff, diff, dtype=np.int64)
    cost = ssd + enc.lam * _MV_BITS_GRID
    enc.stats.search_points += span * span
    flat = int(np.argmin(cost))  # first minimum in (dy, dx) scan order
    return flat % span - r, flat // span - r


def _inter_candidate(cu: CodingUnit, enc: _Encode, pm: int) -> ModeResult:
    total_d = 0
    total_bits = _inter_header_bits(pm)
    cbf = False
    motion = []
    for (px, py, pw, ph) in part_rects(cu, pm):
        dx, dy = _search_displacement(enc, px, py, pw, ph)
        orig = enc.orig_block(px, py, pw, ph)
        pred = enc.pred_block(px, py, pw, ph, dx, dy)
        d_coded, res_bits, part_cbf = _code_residual(orig, pred, enc.step)
        # Per-part RD choice: code the residual or send none (CBF = 0).
        d_plain = _ssd(orig, pred)
        if d_plain <= d_coded + enc.lam * res_bits:
            d_coded, res_bits, part_cbf = d_plain, 0, False
        total_d += d_coded
        total_bits += _mv_bits(dx, dy) + 1 + res_bits  # +1 for the CBF flag
        cbf = cbf or part_cbf
        motion.append((dx, dy))
    enc.stats.mode_evaluations += 1
    return ModeResult(
        MODE_INTER_WHOLE, pm, total_d, total_bits,
        rd_cost(total_d, total_bits, enc.lam), cbf=cbf, skip_flag=False,
        motion=tuple(motion))


def _inter_candidates(cu: CodingUnit, enc: _Encode) -> list[ModeResult]:
    enc.check_bounds(cu)
    enc.stats.inter_tests += 1
    return [_inter_candidate(cu, enc, pm) for pm in (0, 1, 2)]


def _whole_cu_inter(cu: CodingUnit, enc: _Encode) -> ModeResult:
    best = None
    for cand in _inter_candidates(cu, enc):
        if best is None or cand.rd_cost < best.rd_cost:
            best = cand
    return best


def _partition(cu: CodingUnit, enc: _Encode) -> CuTree:
    enc.stats.cus_evaluated += 1
    merge = _merge_skip(cu, enc)
    whole = _whole_cu_inter(cu, enc)
    best_mode = merge if merge.rd_cost <= whole.rd_cost else whole

    probe = CuProbe(
        depth=cu.depth, x=cu.x, y=cu.y, qp=enc.qp, lam=enc.lam,
        qpo=enc.frame.qp_offset, merge=merge, whole=whole,
        above_depth=enc.context.above_depth(cu),
        left_depth=enc.context.left_depth(cu))

    if cu.depth >= MAX_DEPTH:
        # Terminal by structure: no split flag, no decision sample.
        return CuTree(cu, split=False, chosen_mode=best_mode,
                      distortion=best_mode.distortion, bits=best_mode.bits,
                      cost=rd_cost(best_mode.distortion, best_mode.bits,
                                   enc.lam))

    if enc.criteria is not None and enc.criteria.for_depth(cu.depth):
        fv = probe.feature_vector()
        if apply_skip(cu.depth, fv, enc.criteria):
            enc.stats.skip_events += 1
            if enc.skip_log is not None:
                enc.skip_log.append((cu, fv))
            bits = best_mode.bits + SPLIT_FLAG_BITS
            return CuTree(cu, split=False, chosen_mode=best_mode,
                          distortion=best_mode.distortion, bits=bits,
                          cost=rd_cost(best_mode.distortion, bits, enc.lam))

    children = []
    for child_cu in cu.children():
        enc.stats.recursions_entered += 1
        children.append(_partition(child_cu, enc))

    whole_bits = best_mode.bits + SPLIT_FLAG_BITS
    whole_cost = rd_cost(best_mode.distortion, whole_bits, enc.lam)
    split_d = sum(c.distortion for c in children)
    split_bits = sum(c.bits for c in children) + SPLIT_FLAG_BITS
    split_cost = rd_cost(split_d, split_bits, enc.lam)

    split_chosen = split_cost < whole_cost  # tie keeps the CU whole
    if enc.collector is not None:
        enc.collector.append(extract_sample(
            probe, split_chosen, sequence_id=enc.sequence_id,
            frame_index=enc.frame.frame_index))

    if split_chosen:
        return CuTree(cu, split=True, children=tuple(children),
                      distortion=split_d, bits=split_bits, cost=split_cost)
    return CuTree(cu, split=False, chosen_mode=best_mode,
                  distortion=best_mode.distortion, bits=whole_bits,
                  cost=whole_cost)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def merge_skip_test(cu: CodingUnit, frame: Frame, reference: Frame,
                    context: NeighbourContext | None = None,
                    config: EncoderConfig | None = None) -> ModeResult:
    """Cheap whole-CU test: neighbour-inherited motion, skip vs. residual."""
    enc = _Encode(frame, reference, config or EncoderConfig(), context)
    return _merge_skip(cu, enc)


def whole_cu_inter_test(cu: CodingUnit, frame: Frame, reference: Frame,
                        config: EncoderConfig | None = None) -> ModeResult:
    """Best whole-CU inter candidate over partition modes 2Nx2N/2NxN/Nx2N."""
    enc = _Encode(frame, reference, config or EncoderConfig())
    return _whole_cu_inter(cu, enc)


def inter_candidates(cu: CodingUnit, frame: Frame, reference: Frame,
                     config: EncoderConfig | None = None) -> list[ModeResult]:
    """All three whole-CU inter candidates (pm 0, 1, 2), unreduced."""
    enc = _Encode(frame, reference, config or EncoderConfig())
    return _inter_candidates(cu, enc)


def partition_cu(cu: CodingUnit, frame: Frame, reference: Frame,
                 context: NeighbourContext | None = None,
                 config: EncoderConfig | None = None,
                 criteria: CriteriaBundle | None = None,
                 collector: list | None = None,
                 skip_log: list | None = None,
                 sequence_id: str = "") -> tuple[CuTree, RdoStats]:
    """Exhaustive RDO partition of one CU, honouring skip criteria if given.

    Returns the chosen subtree and the effort counters accumulated while
    deciding it.  `collector`, when given, receives one labelled Sample per
    CU carrying a split decision (depths 0..2); this requires a full-RDO
    encode (no active criteria).
    """
    enc = _Encode(frame, reference, config or EncoderConfig(), context,
                  criteria=criteria, collector=collector, skip_log=skip_log,
                  sequence_id=sequence_id)
    tree = _partition(cu, enc)
    return tree, enc.stats


def encode_frame(frame: Frame, reference: Frame,
                 config: EncoderConfig | None = None,
                 criteria: CriteriaBundle | None = None,
                 collector: list | None = None,
                 skip_log: list | None = None,
                 sequence_id: str = "") -> tuple[list[CuTree], FrameStats]:
    """Encode every 64x64 CTU of the frame in raster order.

    Neighbour context (leaf depths, motion) is committed per finalised CTU,
    so later CTUs see the final state of earlier ones.  Deterministic for
    fixed inputs.
    """
    config = config or EncoderConfig()
    enc = _Encode(frame, reference, config, criteria=criteria,
                  collector=collector, skip_log=skip_log,
                  sequence_id=sequence_id)
    trees: list[CuTree] = []
    stats = FrameStats(pixels=frame.width * frame.height)
    for y in range(0, frame.height, CTU_SIZE):
        for x in range(0, frame.width, CTU_SIZE):
            tree = _partition(CodingUnit(x, y, 0), enc)
            enc.context.commit(tree)
            trees.append(tree)
            stats.rd_cost += tree.cost
            stats.bits += tree.bits
            stats.distortion += tree.distortion
    stats.rdo = enc.stats
    return trees, stats
