"""Fixation pre-filtering, first-fixation density maps, stabilized KL
divergence against salience maps, and left/right salience-mass splits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d


class EmptyDensityError(ValueError):
    """No fixations available to build a density map."""


class GridMismatchError(ValueError):
    """Grids have incompatible dimensions."""


class DegenerateSeriesError(ValueError):
    """A correlation is undefined because one series has zero variance."""


@dataclass(frozen=True)
class Fixation:
    subject_id: int
    image_id: int
    x: float                  # degrees, image coordinates
    y: float
    duration: float           # ms
    latency_from_onset: float  # ms
    ordinal: int              # 1-based fixation index within the trial

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("fixation duration must be positive")
        if self.ordinal < 1:
            raise ValueError("fixation ordinal is 1-based")


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in grid/bin coordinates, [x0, x0+w) x [y0, y0+h)."""
    x0: int
    y0: int
    w: int
    h: int

    def overlaps(self, other: "Rect") -> bool:
        return not (self.x0 + self.w <= other.x0 or other.x0 + other.w <= self.x0
                    or self.y0 + self.h <= other.y0 or other.y0 + other.h <= self.y0)


@dataclass
class SalienceGrid:
    """2-D nonnegative map with a physical scale (degrees per bin)."""

    values: np.ndarray     # shape (height_bins, width_bins)
    deg_per_bin: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("grid values must be 2-D")
        if (self.values < 0).any():
            raise ValueError("grid values must be nonnegative")
        if self.deg_per_bin <= 0:
            raise ValueError("deg_per_bin must be positive")

    @property
    def height_bins(self) -> int:
        return self.values.shape[0]

    @property
    def width_bins(self) -> int:
        return self.values.shape[1]

    def normalized(self) -> "SalienceGrid":
        total = self.values.sum()
        if total <= 0:
            raise ValueError("cannot normalize an all-zero grid")
        return SalienceGrid(self.values / total, self.deg_per_bin)


@dataclass(frozen=True)
class MassSplit:
    m_left: float
    m_right: float


@dataclass
class FilterReport:
    anticipatory: int = 0
    too_short: int = 0
    too_long: int = 0
    outside_image: int = 0
    kept: int = 0
    duration_mean: float = field(default=float("nan"))
    duration_sd: float = field(default=float("nan"))


def filter_fixations(fixations: list[Fixation], min_dur: float = 50.0,
                     anticipatory_latency: float = 80.0,
                     regions: list[Rect] | None = None,
                     deg_per_bin: float = 1.0
                     ) -> tuple[list[Fixation], FilterReport]:
    """Discard anticipatory, too-short, too-long and off-image fixations.

    The upper duration bound is mean + 2 SD of all input durations
    (strict >; the boundary value is kept). Each discarded fixation is
    counted under the first matching reason, in the order anticipatory,
    too short, too long, outside image. Region membership is tested on
    the bin holding the fixation, against rectangles in bin coordinates.
    """
    report = FilterReport()
    if not fixations:
        return [], report
    durations = np.array([f.duration for f in fixations])
    mu = float(durations.mean())
    sd = float(durations.std(ddof=0))
    report.duration_mean = mu
    report.duration_sd = sd
    upper = mu + 2.0 * sd

    kept = []
    for f in fixations:
        if f.latency_from_onset < anticipatory_latency:
            report.anticipatory += 1
        elif f.duration < min_dur:
            report.too_short += 1
        elif f.duration > upper:
            report.too_long += 1
        elif regions is not None and not _inside_any(f, regions, deg_per_bin):
            report.outside_image += 1
        else:
            kept.append(f)
    report.kept = len(kept)
    return kept, report


def _inside_any(f: Fixation, regions: list[Rect], deg_per_bin: float) -> bool:
    bx = int(np.floor(f.x / deg_per_bin))
    by = int(np.floor(f.y / deg_per_bin))
    return any(r.x0 <= bx < r.x0 + r.w and r.y0 <= by < r.y0 + r.h
               for r in regions)


def gaussian_kernel(sigma_bins: float, truncate: float = 3.0) -> np.ndarray:
    """2-D Gaussian truncated at `truncate` sigma, renormalized to sum 1."""
    radius = int(np.ceil(truncate * sigma_bins))
    ax = np.arange(-radius, radius + 1)
    xx, yy = np.meshgrid(ax, ax)
    k = np.exp(-(xx ** 2 + yy ** 2) / (2.0 * sigma_bins ** 2))
    return k / k.sum()


def fixation_density(fixations: list[Fixation], width_bins: int,
                     height_bins: int, deg_per_bin: float = 1.0,
                     smooth_sigma_deg: float = 1.0) -> SalienceGrid:
    """First-fixation histogram smoothed with a Gaussian and normalized
    to a probability distribution.

    Bins are deg_per_bin wide; the kernel sigma is one degree, truncated
    at 3 sigma with zero padding at the borders, after which the whole
    grid is renormalized.
    """
    if not fixations:
        raise EmptyDensityError("no fixations to build a density from")
    hist = np.zeros((height_bins, width_bins))
    for f in fixations:
        bx = int(np.floor(f.x / deg_per_bin))
        by = int(np.floor(f.y / deg_per_bin))
        bx = min(max(bx, 0), width_bins - 1)
        by = min(max(by, 0), height_bins - 1)
        hist[by, bx] += 1.0
    kernel = gaussian_kernel(smooth_sigma_deg / deg_per_bin)
    smoothed = convolve2d(hist, kernel, mode="same", boundary="fill")
    return SalienceGrid(smoothed, deg_per_bin).normalized()


def kld(F: SalienceGrid, S: SalienceGrid, eps: float = 1e-12) -> float:
    """Epsilon-stabilized KL divergence sum F log(F / (S + eps) + eps)."""
    if F.values.shape != S.values.shape:
        raise GridMismatchError(
            f"grid shapes differ: {F.values.shape} vs {S.values.shape}")
    f = F.values
    s = S.values
    ratio = np.zeros_like(f)
    nz = f > 0
    ratio[nz] = f[nz] / (s[nz] + eps)
    out = np.zeros_like(f)
    out[nz] = f[nz] * np.log(ratio[nz] + eps)
    return float(out.sum())


def salience_mass(grid: SalienceGrid, left: Rect, right: Rect) -> MassSplit:
    """Fractions of a normalized stimulus map inside the left and right
    image regions."""
    if left.overlaps(right):
        raise ValueError("left and right regions overlap")
    for r in (left, right):
        if (r.x0 < 0 or r.y0 < 0 or r.x0 + r.w > grid.width_bins
                or r.y0 + r.h > grid.height_bins):
            raise ValueError("region extends outside the grid")
    v = grid.values
    m_left = float(v[left.y0:left.y0 + left.h, left.x0:left.x0 + left.w].sum())
    m_right = float(v[right.y0:right.y0 + right.h, right.x0:right.x0 + right.w].sum())
    return MassSplit(m_left=m_left, m_right=m_right)


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("Pearson correlation needs two equal-length vectors")
    da = a - a.mean()
    db = b - b.mean()
    denom = np.sqrt((da @ da) * (db @ db))
    if denom == 0:
        raise DegenerateSeriesError("zero variance in a correlated series")
    return float((da @ db) / denom)


def delta_series(delta_gs, delta_mass) -> tuple[float, int]:
    """Pearson correlation between per-trial global-salience differences
    and salience-mass differences; returns (r, number of pairs)."""
    delta_gs = np.asarray(delta_gs, dtype=float)
    delta_mass = np.asarray(delta_mass, dtype=float)
    if delta_gs.shape != delta_mass.shape:
        raise ValueError("series lengths differ")
    if delta_gs.size < 2:
        raise ValueError("need at least two pairs to correlate")
    return pearson(delta_gs, delta_mass), int(delta_gs.size)
