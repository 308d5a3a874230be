"""Deterministic MRI preprocessing: binarize, clean, locate the largest
component's extreme points, crop, bicubic resize, and the x8 augmentation
orbit (quarter-turn rotations x optional horizontal flip)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import EmptyMask

LUMA_WEIGHTS = (0.299, 0.587, 0.114)  # ITU-R BT.601


@dataclass
class GrayImage:
    pixels: np.ndarray  # (height, width) uint8

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.ndim != 2 or self.pixels.size == 0:
            raise ValueError("image must be a non-empty 2-D array")
        self.pixels = self.pixels.astype(np.uint8)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass
class BinaryMask:
    bits: np.ndarray  # (height, width) bool

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.ndim != 2:
            raise ValueError("mask must be 2-D")

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True)
class ExtremePoints:
    top: tuple[int, int]  # (x, y)
    bottom: tuple[int, int]
    left: tuple[int, int]
    right: tuple[int, int]


@dataclass(frozen=True)
class AugmentPolicy:
    rotations: tuple[int, ...] = (0, 90, 180, 270)
    hflip: bool = True

    def __post_init__(self):
        if not self.rotations:
            raise ValueError("rotation set must be non-empty")
        if any(r not in (0, 90, 180, 270) for r in self.rotations):
            raise ValueError("rotations must be quarter turns")

    def labels(self) -> list[str]:
        out = []
        for rot in sorted(set(self.rotations)):
            out.append(f"rot{rot:03d}")
            if self.hflip:
                out.append(f"rot{rot:03d}_hflip")
        return out


def _gaussian_kernel(radius: int, sigma: float) -> np.ndarray:
    offs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(offs**2) / (2.0 * sigma * sigma))
    return k / k.sum()


def _blur(img: np.ndarray, radius: int, sigma: float) -> np.ndarray:
    if radius == 0:
        return img.astype(np.float64)
    k = _gaussian_kernel(radius, sigma)
    padded = np.pad(img.astype(np.float64), radius, mode="edge")
    # separable pass over rows then columns
    rows = sum(k[i] * padded[:, i : i + img.shape[1]] for i in range(2 * radius + 1))
    out = sum(k[i] * rows[i : i + img.shape[0], :] for i in range(2 * radius + 1))
    return out


def _shift_or(bits: np.ndarray) -> np.ndarray:
    padded = np.pad(bits, 1, mode="constant", constant_values=False)
    h, w = bits.shape
    out = np.zeros_like(bits)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            out |= padded[dy : dy + h, dx : dx + w]
    return out


def _shift_and(bits: np.ndarray) -> np.ndarray:
    padded = np.pad(bits, 1, mode="constant", constant_values=False)
    h, w = bits.shape
    out = np.ones_like(bits)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            out &= padded[dy : dy + h, dx : dx + w]
    return out


def binarize_and_clean(
    img: GrayImage, threshold: int, blur_radius: int = 2, morph_iters: int = 2,
    blur_sigma: float = 1.0,
) -> BinaryMask:
    """Blur, threshold (strictly greater), then close: dilate morph_iters
    times followed by the same number of erosions, 3x3 square element."""
    if not 0 <= threshold <= 255:
        raise ValueError("threshold must be in [0, 255]")
    blurred = _blur(img.pixels, blur_radius, blur_sigma)
    bits = blurred > threshold
    for _ in range(morph_iters):
        bits = _shift_or(bits)
    for _ in range(morph_iters):
        bits = _shift_and(bits)
    return BinaryMask(bits)


def _components(bits: np.ndarray) -> np.ndarray:
    """8-connected component labels (-1 background), flood fill in scan
    order so labels are deterministic."""
    labels = np.full(bits.shape, -1, dtype=np.int32)
    current = 0
    remaining = bits.copy()
    while remaining.any():
        seed = np.unravel_index(np.argmax(remaining), bits.shape)
        frontier = np.zeros_like(bits)
        frontier[seed] = True
        comp = np.zeros_like(bits)
        while frontier.any():
            comp |= frontier
            frontier = _shift_or(frontier) & remaining & ~comp
        labels[comp] = current
        remaining &= ~comp
        current += 1
    return labels


def find_extreme_points(mask: BinaryMask) -> ExtremePoints:
    """Extremes of the largest 8-connected component.  Pixel ties break to
    the smaller x, then the smaller y; component-size ties go to the one
    seen first in scan order."""
    if not mask.bits.any():
        raise EmptyMask("mask has no set pixels")
    labels = _components(mask.bits)
    sizes = np.bincount(labels[labels >= 0].ravel())
    biggest = int(np.argmax(sizes))
    ys, xs = np.nonzero(labels == biggest)

    def pick(sel_idx):
        return int(xs[sel_idx]), int(ys[sel_idx])

    def argbest(primary, secondary):
        best = np.flatnonzero(primary == primary.min())
        return best[np.argmin(secondary[best])]

    top = pick(argbest(ys, xs))
    bottom = pick(argbest(-ys, xs))
    left = pick(argbest(xs, ys))
    right = pick(argbest(-xs, ys))
    return ExtremePoints(top=top, bottom=bottom, left=left, right=right)


def crop_to_extremes(img: GrayImage, ep: ExtremePoints) -> GrayImage:
    """Axis-aligned sub-image [left.x..right.x] x [top.y..bottom.y],
    inclusive."""
    x0, x1 = ep.left[0], ep.right[0]
    y0, y1 = ep.top[1], ep.bottom[1]
    if not (0 <= x0 <= x1 < img.width and 0 <= y0 <= y1 < img.height):
        raise ValueError("extreme points not inside the image")
    return GrayImage(img.pixels[y0 : y1 + 1, x0 : x1 + 1].copy())


def _catmull_rom(t: np.ndarray, a: float = -0.5) -> np.ndarray:
    x = np.abs(t)
    near = (a + 2.0) * x**3 - (a + 3.0) * x**2 + 1.0
    far = a * (x**3 - 5.0 * x**2 + 8.0 * x - 4.0)
    return np.where(x <= 1.0, near, np.where(x < 2.0, far, 0.0))


def _resample_axis(length_in: int, length_out: int):
    """Per-output-pixel tap indices (clamped) and Catmull-Rom weights."""
    scale = length_in / length_out
    centers = (np.arange(length_out) + 0.5) * scale - 0.5
    base = np.floor(centers).astype(np.int64)
    t = centers - base
    taps = np.stack([base - 1, base, base + 1, base + 2], axis=1)
    offsets = np.stack([t + 1.0, t, 1.0 - t, 2.0 - t], axis=1)  # |tap - center|
    return np.clip(taps, 0, length_in - 1), _catmull_rom(offsets)


def resize_bicubic(img: GrayImage, target_w: int, target_h: int) -> GrayImage:
    """Catmull-Rom (a = -0.5) resampling with replicated edges; the result
    is rounded half-up and clamped to [0, 255]."""
    if target_w < 1 or target_h < 1:
        raise ValueError("target dimensions must be >= 1")
    src = img.pixels.astype(np.float64)
    xi, xw = _resample_axis(img.width, target_w)
    yi, yw = _resample_axis(img.height, target_h)
    # horizontal pass: (h_in, w_out), then vertical: (h_out, w_out)
    horiz = np.einsum("hwt,wt->hw", src[:, xi], xw, optimize=True)
    out = np.einsum("htw,ht->hw", horiz[yi], yw, optimize=True)
    out = np.clip(np.floor(out + 0.5), 0.0, 255.0)
    return GrayImage(out.astype(np.uint8))


def _quarter_turn(pixels: np.ndarray, degrees: int) -> np.ndarray:
    return np.rot90(pixels, k=degrees // 90)  # counter-clockwise


def augment(images: list[GrayImage], policy: AugmentPolicy | None = None) -> list[GrayImage]:
    """Deterministic expansion: input order, then rotations ascending, then
    no-flip before flip.  The default policy yields 8 variants per image."""
    policy = policy or AugmentPolicy()
    out = []
    for img in images:
        for rot in sorted(set(policy.rotations)):
            rotated = _quarter_turn(img.pixels, rot)
            out.append(GrayImage(rotated.copy()))
            if policy.hflip:
                out.append(GrayImage(np.fliplr(rotated).copy()))
    return out


def read_png(path) -> GrayImage:
    """Load an 8-bit grayscale PNG; color inputs collapse through the BT.601
    luma weights, rounded half-up."""
    with Image.open(path) as im:
        if im.mode == "L":
            return GrayImage(np.asarray(im))
        rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
        luma = rgb @ np.array(LUMA_WEIGHTS)
        return GrayImage(np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8))


def write_png(img: GrayImage, path) -> None:
    Image.fromarray(img.pixels, mode="L").save(path, format="PNG")
