"""Deterministic synthetic test sequences and the raw luma file format.

Four content archetypes cover the behaviours the partition search has to
discriminate: flat (static, skippable), moving_texture (uniform motion,
mergeable once the displacement propagates), noise (residual-heavy), and
mixed (flat background, a scrolling texture band, a noise patch and moving
objects, so both split and non-split CUs occur).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .codec import CTU_SIZE, Frame

ARCHETYPES = ("flat", "moving_texture", "noise", "mixed")


@dataclass(frozen=True)
class SequenceSpec:
    name: str
    archetype: str
    width: int
    height: int
    frames: int
    seed: int

    def __post_init__(self):
        if self.archetype not in ARCHETYPES:
            raise ValueError(
                f"archetype must be one of {ARCHETYPES}, got "
                f"{self.archetype!r}")
        if self.frames < 1:
            raise ValueError("frame count must be at least 1")
        if self.width % CTU_SIZE or self.height % CTU_SIZE:
            raise ValueError(
                f"dimensions must be multiples of {CTU_SIZE}, got "
                f"{self.width}x{self.height}")


def parse_sequence_spec(path) -> SequenceSpec:
    """Read a key = value spec file (archetype, width, height, frames, seed)."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            values[key.strip().lower()] = value.strip()
    try:
        name = values.get("name") or _stem(path)
        return SequenceSpec(
            name=name,
            archetype=values["archetype"],
            width=int(values["width"]),
            height=int(values["height"]),
            frames=int(values["frames"]),
            seed=int(values.get("seed", "0")),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing required key {exc}") from exc


def _stem(path) -> str:
    name = str(path).replace("\\", "/").rsplit("/", 1)[-1]
    return name.rsplit(".", 1)[0]


def qp_offset_for(frame_index: int) -> int:
    """Cyclic 1..4 offsets over the frames following the leading frame."""
    if frame_index == 0:
        return 1
    return (frame_index - 1) % 4 + 1


def generate_sequence(spec: SequenceSpec, seed: int | None = None
                      ) -> list[Frame]:
    """Render the sequence; identical (spec, seed) gives identical pixels."""
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    renderers = {
        "flat": _render_flat,
        "moving_texture": _render_moving_texture,
        "noise": _render_noise,
        "mixed": _render_mixed,
    }
    planes = renderers[spec.archetype](spec, rng)
    return [
        Frame(plane, frame_index=i, qp_offset=qp_offset_for(i))
        for i, plane in enumerate(planes)
    ]


def _smooth_noise(rng: np.random.Generator, h: int, w: int, scale: int = 16,
                  lo: int = 32, hi: int = 224) -> np.ndarray:
    """Band-limited texture: coarse uniform grid, bilinearly upsampled."""
    grid = rng.uniform(0.0, 1.0, (h // scale + 2, w // scale + 2))
    ys, xs = np.arange(h) / scale, np.arange(w) / scale
    y0, x0 = ys.astype(int), xs.astype(int)
    fy, fx = (ys - y0)[:, None], (xs - x0)[None, :]
    a = grid[np.ix_(y0, x0)]
    b = grid[np.ix_(y0, x0 + 1)]
    c = grid[np.ix_(y0 + 1, x0)]
    d = grid[np.ix_(y0 + 1, x0 + 1)]
    v = (a * (1 - fy) * (1 - fx) + b * (1 - fy) * fx
         + c * fy * (1 - fx) + d * fy * fx)
    return (lo + v * (hi - lo)).astype(np.uint8)


def _render_flat(spec: SequenceSpec, rng) -> list[np.ndarray]:
    value = int(rng.integers(96, 160))
    plane = np.full((spec.height, spec.width), value, dtype=np.uint8)
    return [plane.copy() for _ in range(spec.frames)]


def _render_noise(spec: SequenceSpec, rng) -> list[np.ndarray]:
    return [
        rng.integers(0, 256, (spec.height, spec.width)).astype(np.uint8)
        for _ in range(spec.frames)
    ]


def _render_moving_texture(spec: SequenceSpec, rng) -> list[np.ndarray]:
    vx = int(rng.integers(1, 3))
    vy = int(rng.integers(0, 3))
    span_x = spec.width + vx * spec.frames
    span_y = spec.height + vy * spec.frames
    base = _smooth_noise(rng, span_y, span_x)
    return [
        base[i * vy:i * vy + spec.height, i * vx:i * vx + spec.width].copy()
        for i in range(spec.frames)
    ]


def _object_texture(rng: np.random.Generator, shape: tuple,
                    background: int) -> np.ndarray:
    """Two-tone texture straddling the background level; visible motion
    without making a mispredicted edge catastrophically expensive."""
    texture = rng.integers(0, 256, shape)
    lo, hi = background - 55, background + 55
    return np.where(texture > 128, hi, lo).astype(np.uint8)


def _bounce(start: int, velocity: int, i: int, lo: int, hi: int) -> int:
    """Position after i steps, reflecting at [lo, hi]."""
    span = hi - lo
    if span <= 0:
        return lo
    t = (start - lo + velocity * i) % (2 * span)
    return lo + (t if t <= span else 2 * span - t)


def _render_mixed(spec: SequenceSpec, rng) -> list[np.ndarray]:
    """Flat background with a sweeping textured bar on the left; on the
    right a uniformly panning texture band, a shearing texture (16-px row
    bands moving at 0/1/2 px per frame, so large CUs must split while
    16x16 CUs track a single velocity), and one static high-detail patch."""
    h, w = spec.height, spec.width
    background = int(rng.integers(100, 156))
    left_w = max(CTU_SIZE, (w // 2 // CTU_SIZE) * CTU_SIZE)
    right_w = w - left_w

    band_h = min(CTU_SIZE, h)
    band_vx, band_vy = 2, 1
    band = _smooth_noise(rng, band_h + band_vy * spec.frames,
                         max(1, right_w + band_vx * spec.frames), scale=8)

    shear_h = h - band_h
    shear = _smooth_noise(rng, max(1, shear_h),
                          max(1, right_w + 2 * spec.frames), scale=8)
    shear_v = (np.arange(max(1, shear_h)) // 16) % 3

    # A full-height two-tone bar sweeping the flat area: its edges are
    # purely vertical, so CUs on the boundary are always representable by
    # an Nx2N partition (no corner cases at any depth).
    bar_w = 48
    bar = _object_texture(rng, (h, bar_w), background)
    bar_x = int(rng.integers(0, max(1, left_w - bar_w)))
    bar_span = (0, left_w - bar_w)

    # Static high-frequency detail patch: hard to code, trivial to predict.
    detail = rng.integers(0, 256, (CTU_SIZE, CTU_SIZE)).astype(np.uint8)

    # Unpredictable inflow at the right frame edge, like content entering
    # the view: every sequence carries some never-skippable CUs.
    strip_w = 16 if w >= 2 * CTU_SIZE else 0

    planes = []
    cols = np.arange(right_w)
    for i in range(spec.frames):
        plane = np.full((h, w), background, dtype=np.uint8)
        if right_w:
            plane[0:band_h, left_w:w] = band[
                i * band_vy:i * band_vy + band_h,
                i * band_vx:i * band_vx + right_w]
            if shear_h > 0:
                offsets = (i * shear_v[:shear_h])[:, None]
                plane[band_h:h, left_w:w] = shear[
                    np.arange(shear_h)[:, None], offsets + cols[None, :]]
        x = _bounce(bar_x, 2, i, bar_span[0], bar_span[1])
        plane[:, x:x + bar_w] = bar
        if w >= 2 * CTU_SIZE and h >= 2 * CTU_SIZE:
            plane[h - CTU_SIZE:h, w - CTU_SIZE:w] = detail
        if strip_w:
            plane[:, w - strip_w:w] = rng.integers(
                0, 256, (h, strip_w)).astype(np.uint8)
        planes.append(plane)
    return planes


# ---------------------------------------------------------------------------
# Raw luma files: one ASCII header line, then planar 8-bit frames
# ---------------------------------------------------------------------------

_HEADER_RE = re.compile(
    rb"^luma8 width=(\d+) height=(\d+) frames=(\d+) qpo=([\d,]+)\n$")


def write_sequence(path, frames: list[Frame]) -> None:
    if not frames:
        raise ValueError("cannot write an empty sequence")
    h, w = frames[0].luma.shape
    qpo = ",".join(str(f.qp_offset) for f in frames)
    with open(path, "wb") as fh:
        fh.write(
            f"luma8 width={w} height={h} frames={len(frames)} "
            f"qpo={qpo}\n".encode())
        for frame in frames:
            if frame.luma.shape != (h, w):
                raise ValueError("all frames must share dimensions")
            fh.write(frame.luma.tobytes())


def read_sequence(path) -> list[Frame]:
    """Read a raw luma file; dimensions are padded up to multiples of 64.

    Padding replicates the right/bottom edge so padded CTUs stay cheap.
    """
    with open(path, "rb") as fh:
        header = fh.readline()
        m = _HEADER_RE.match(header)
        if not m:
            raise ValueError(f"{path}: bad luma8 header line")
        w, h, n = int(m.group(1)), int(m.group(2)), int(m.group(3))
        offsets = [int(v) for v in m.group(4).decode().split(",")]
        if len(offsets) != n:
            raise ValueError(f"{path}: qpo list length != frame count")
        raw = fh.read()
    if len(raw) != w * h * n:
        raise ValueError(
            f"{path}: expected {w * h * n} luma bytes, got {len(raw)}")
    frames = []
    for i in range(n):
        plane = np.frombuffer(
            raw, dtype=np.uint8, count=w * h, offset=i * w * h).reshape(h, w)
        frames.append(
            Frame(_pad_to_ctu(plane), frame_index=i, qp_offset=offsets[i]))
    return frames


def _pad_to_ctu(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    ph = (-h) % CTU_SIZE
    pw = (-w) % CTU_SIZE
    if not ph and not pw:
        return plane.copy()
    return np.pad(plane, ((0, ph), (0, pw)), mode="edge")
