"""Synthetic HDR scenes and simple tone-mapping operators for tests and demos.

Every scene has minimum radiance 1 and maximum ``dynamic_range``; all three
channels are identical. Randomness comes from a PCG64 generator seeded with
the scene's integer seed, so renders are reproducible across platforms.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, LevelTooHigh
from .image_io import HdrImage, LdrImage

SCENE_KINDS = ("gaussian_bump", "step_edge", "bright_line", "dark_line", "mixed_grid")
TMO_NAMES = ("clip", "gamma", "log_norm", "reinhard_global")


@dataclass(frozen=True)
class SyntheticScene:
    kind: str
    width: int = 64
    height: int = 64
    dynamic_range: float = 1000.0
    seed: int = 0
    noise: float = 0.0  # std of log-radiance noise, as a fraction of log(dynamic_range)

    def __post_init__(self):
        if self.kind not in SCENE_KINDS:
            raise InvalidParameter(f"unknown scene kind {self.kind!r}; choose from {SCENE_KINDS}")
        if not self.dynamic_range >= 1:
            raise InvalidParameter("dynamic_range must be >= 1")
        if self.noise < 0:
            raise InvalidParameter("noise must be >= 0")


def _unit_to_radiance(s: np.ndarray, dynamic_range: float) -> np.ndarray:
    """Map a field onto [1, dynamic_range] geometrically, min to 1 and max to the top."""
    lo, hi = s.min(), s.max()
    if hi == lo:
        return np.ones_like(s)
    return dynamic_range ** ((s - lo) / (hi - lo))


def _gaussian_bump(h, w, rng):
    y, x = np.mgrid[0:h, 0:w]
    sigma = min(h, w) / 6.0
    return np.exp(-((y - h // 2) ** 2 + (x - w // 2) ** 2) / (2 * sigma ** 2))


def _step_edge(h, w, dr):
    # The centre column and the wrap-around column hold the midpoint value so
    # that both edges (the image is periodic) are centred on a pixel.
    img = np.ones((h, w))
    img[:, w // 2:] = dr
    img[:, 0] = img[:, w // 2] = (1.0 + dr) / 2.0
    return img


def _line(h, w, dr, bright):
    img = np.full((h, w), 1.0 if bright else dr)
    img[h // 2, :] = dr if bright else 1.0
    return img


def _mixed_grid(h, w, rng):
    """Smooth random blobs plus a lattice of thin lines and soft steps, in log units."""
    y, x = np.mgrid[0:h, 0:w].astype(np.float64)
    field = np.zeros((h, w))
    for _ in range(6):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        sigma = rng.uniform(0.08, 0.25) * min(h, w)
        amp = rng.uniform(-1.0, 1.0)
        field += amp * np.exp(-((y - cy) ** 2 + (x - cx) ** 2) / (2 * sigma ** 2))
    # smooth ramp so quantization has gradients to band
    angle = rng.uniform(0, 2 * np.pi)
    field += 0.8 * (np.cos(angle) * x / w + np.sin(angle) * y / h)
    cells = int(rng.integers(3, 5))
    for k in range(1, cells):
        row = k * h // cells
        col = k * w // cells
        field[row, :] += rng.choice([-0.6, 0.6])
        field[:, col] += rng.choice([-0.6, 0.6])
    edge_x = rng.uniform(0.3, 0.7) * w
    field += 0.4 * np.tanh((x - edge_x) / 1.5)
    return field


def render_scene(s: SyntheticScene) -> HdrImage:
    """Render ``s`` as a gray HDR image with max/min radiance equal to its dynamic range."""
    h, w, dr = s.height, s.width, float(s.dynamic_range)
    rng = np.random.Generator(np.random.PCG64(s.seed))
    if s.kind == "gaussian_bump":
        img = _unit_to_radiance(_gaussian_bump(h, w, rng), dr)
    elif s.kind == "step_edge":
        img = _step_edge(h, w, dr)
    elif s.kind == "bright_line":
        img = _line(h, w, dr, bright=True)
    elif s.kind == "dark_line":
        img = _line(h, w, dr, bright=False)
    else:
        img = _unit_to_radiance(_mixed_grid(h, w, rng), dr)
    if s.noise > 0 and dr > 1:
        logs = np.log(img) / np.log(dr) + s.noise * rng.standard_normal(img.shape)
        img = _unit_to_radiance(logs, dr)
    name = f"synthetic:{s.kind}:{w}x{h}:dr{dr:g}:seed{s.seed}"
    return HdrImage(np.repeat(img[:, :, None], 3, axis=2), source_path=name)


def tone_map(h: HdrImage, op: str = "gamma", gamma: float = 2.2) -> LdrImage:
    """Map linear HDR radiance to [0, 1] with a simple global operator.

    op : ``clip`` ``min(x / max, 1)``; ``gamma`` ``(x / max) ** (1 / gamma)``;
        ``log_norm`` ``ln(1 + x) / ln(1 + max)``; ``reinhard_global``
        ``x / (1 + x)`` rescaled so the brightest sample is 1.
    ``max`` is taken over all three channels. ``op`` may also be written
    ``"gamma:2.4"``.
    """
    if ":" in op:
        op, arg = op.split(":", 1)
        gamma = float(arg)
    if h.domain != "linear":
        raise ValueError("tone_map expects a linear-radiance HdrImage")
    x = h.data
    peak = x.max()
    if op not in TMO_NAMES:
        raise InvalidParameter(f"unknown tone-mapping operator {op!r}; choose from {TMO_NAMES}")
    if peak == 0:
        out = np.zeros_like(x)
    elif op == "clip":
        out = np.minimum(x / peak, 1.0)
    elif op == "gamma":
        if gamma <= 0:
            raise InvalidParameter("gamma must be > 0")
        out = (x / peak) ** (1.0 / gamma)
    elif op == "log_norm":
        out = np.log1p(x) / np.log1p(peak)
    else:
        y = x / (1.0 + x)
        out = y / y.max()
    src = f"{h.source_path}|{op}" if h.source_path else op
    return LdrImage(np.clip(out, 0.0, 1.0), source_path=src)


MAX_LEVEL = 7


def degrade(l: LdrImage, level: int) -> LdrImage:
    """Posterize to ``256 / 2**level`` levels; level 0 returns ``l`` unchanged.

    Samples are rounded to 8-bit codes and the low ``level`` bits are
    cleared, so coarser levels nest inside finer ones.
    """
    level = int(level)
    if level < 0:
        raise ValueError("level must be >= 0")
    if level > MAX_LEVEL:
        raise LevelTooHigh(f"level {level} leaves fewer than 2 quantization levels")
    if level == 0:
        return l
    codes = np.round(l.data * 255.0).astype(np.int64)
    codes = (codes >> level) << level
    src = f"{l.source_path}|poster{level}" if l.source_path else f"poster{level}"
    return LdrImage(codes / 255.0, source_path=src)
