"""Population-receptive-field prediction of voxel responses, image
identification by correlation, confidence scores and RDM-based
representational similarity analysis."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .fixmaps import DegenerateSeriesError, pearson

AREAS = ("V1", "V2", "V3", "hV4", "LO12", "V3AB")

# stimulus geometry: a 538-pixel square spans an 11-degree field
STIMULUS_PIXELS = 538
FIELD_DIAMETER_DEG = 11.0


class EmptyVoxelSetError(ValueError):
    """All voxels were rejected by the inclusion filters."""


@dataclass(frozen=True)
class PRFVoxel:
    x_c: float                 # receptive-field center, degrees
    y_c: float
    sigma: float               # receptive-field size, degrees
    t_value: float
    variance_explained: float
    area: str = "V1"

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("pRF size sigma must be positive")

    @property
    def eccentricity(self) -> float:
        return float(np.hypot(self.x_c, self.y_c))


@dataclass
class FeatureMap:
    """Nonnegative feature values over the square stimulus area."""

    values: np.ndarray
    field_diameter_deg: float = FIELD_DIAMETER_DEG

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError("feature map must be a square 2-D grid")
        if (self.values < 0).any():
            raise ValueError("feature values must be nonnegative")

    @property
    def n_pixels(self) -> int:
        return self.values.shape[0]

    @property
    def px_per_deg(self) -> float:
        return self.n_pixels / self.field_diameter_deg

    def pixel_degrees(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-pixel (x, y) coordinates in degrees, origin at the center."""
        n = self.n_pixels
        coords = (np.arange(n) - (n - 1) / 2.0) / self.px_per_deg
        return np.meshgrid(coords, coords)

    def disc_mask(self) -> np.ndarray:
        """Pixels inside the circular stimulus aperture."""
        xs, ys = self.pixel_degrees()
        return np.hypot(xs, ys) <= self.field_diameter_deg / 2.0

    def normalized(self) -> "FeatureMap":
        total = self.values.sum()
        if total <= 0:
            raise ValueError("cannot normalize an all-zero feature map")
        return FeatureMap(self.values / total, self.field_diameter_deg)


def filter_voxels(voxels: list[PRFVoxel],
                  ecc_range: tuple[float, float] = (0.5, 4.5),
                  min_variance_explained: float = 0.55) -> list[PRFVoxel]:
    """Keep voxels with positive t-value, eccentricity in the closed
    interval and variance explained strictly above the threshold."""
    lo, hi = ecc_range
    kept = [v for v in voxels
            if v.t_value > 0
            and lo <= v.eccentricity <= hi
            and v.variance_explained > min_variance_explained]
    if not kept:
        raise EmptyVoxelSetError("no voxel passed the inclusion filters")
    return kept


def prf_weight(voxel: PRFVoxel, x_deg: float, y_deg: float) -> float:
    """Gaussian receptive-field weight at a visual-field location."""
    d2 = (x_deg - voxel.x_c) ** 2 + (y_deg - voxel.y_c) ** 2
    return float(np.exp(-d2 / (2.0 * voxel.sigma ** 2)))


def predict_profile(feature_map: FeatureMap, voxels: list[PRFVoxel],
                    window_sigmas: float = 2.0) -> np.ndarray:
    """Predicted response of each voxel to a normalized feature map.

    Per voxel: the receptive-field-weighted sum of feature values over
    the window (pixels within window_sigmas * sigma of the pRF center,
    clipped to the stimulus disc), divided by the total receptive-field
    volume over the whole stimulus area.
    """
    xs, ys = feature_map.pixel_degrees()
    disc = feature_map.disc_mask()
    S = feature_map.values
    out = np.empty(len(voxels))
    for i, v in enumerate(voxels):
        d2 = (xs - v.x_c) ** 2 + (ys - v.y_c) ** 2
        w = np.exp(-d2 / (2.0 * v.sigma ** 2))
        window = disc & (d2 <= (window_sigmas * v.sigma) ** 2)
        out[i] = (w[window] * S[window]).sum() / w[disc].sum()
    return out


def correlation_matrix(measured: np.ndarray, predicted: np.ndarray) -> np.ndarray:
    """Entry (k, l): Pearson correlation between the measured profile of
    image k and the predicted profile of image l. Zero-variance profiles
    give NaN entries."""
    measured = np.atleast_2d(np.asarray(measured, dtype=float))
    predicted = np.atleast_2d(np.asarray(predicted, dtype=float))
    if measured.shape != predicted.shape:
        raise ValueError("measured and predicted profile sets differ in shape")
    K = measured.shape[0]
    corr = np.empty((K, K))
    for k in range(K):
        for l in range(K):
            try:
                corr[k, l] = pearson(measured[k], predicted[l])
            except DegenerateSeriesError:
                corr[k, l] = np.nan
    return corr


def identify(corr: np.ndarray) -> tuple[float, np.ndarray]:
    """Image k is identified correctly iff its diagonal correlation
    strictly exceeds every other entry in its row (ties fail)."""
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise ValueError("correlation matrix must be square")
    K = corr.shape[0]
    flags = np.zeros(K, dtype=bool)
    for k in range(K):
        row = corr[k]
        off = np.delete(row, k)
        flags[k] = np.isfinite(row[k]) and bool(np.all(row[k] > off))
    return float(flags.mean()), flags


def confidence(corr: np.ndarray) -> np.ndarray:
    """Diagonal correlation minus the row mean (diagonal included)."""
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise ValueError("correlation matrix must be square")
    return np.diag(corr) - corr.mean(axis=1)


def rdm(profiles: np.ndarray) -> np.ndarray:
    """Representational dissimilarity matrix: 1 - Pearson correlation
    between profiles; symmetric with a zero diagonal."""
    profiles = np.atleast_2d(np.asarray(profiles, dtype=float))
    K = profiles.shape[0]
    out = np.zeros((K, K))
    for k in range(K):
        for l in range(k + 1, K):
            d = 1.0 - pearson(profiles[k], profiles[l])
            out[k, l] = out[l, k] = d
    return out


def upper_triangle(matrix: np.ndarray) -> np.ndarray:
    """Vectorized strict upper triangle, row-major."""
    matrix = np.asarray(matrix)
    iu = np.triu_indices(matrix.shape[0], k=1)
    return matrix[iu]


def kendall_tau(a, b) -> float:
    """Kendall tau-a: (concordant - discordant) / (n(n-1)/2); pairs tied
    in either vector contribute zero to the numerator."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("kendall_tau needs two equal-length vectors")
    n = a.size
    if n < 2:
        raise ValueError("need at least two observations")
    sa = np.sign(a[:, None] - a[None, :])
    sb = np.sign(b[:, None] - b[None, :])
    iu = np.triu_indices(n, k=1)
    return float((sa[iu] * sb[iu]).sum() / (n * (n - 1) / 2.0))


def rsa_kendall(measured_profiles: np.ndarray,
                predicted_profiles: np.ndarray) -> float:
    """Kendall correlation between the upper triangles of the measured
    and predicted RDMs."""
    return kendall_tau(upper_triangle(rdm(measured_profiles)),
                       upper_triangle(rdm(predicted_profiles)))


def rms_contrast_map(luminance: np.ndarray, window_radius: int = 5,
                     field_diameter_deg: float = FIELD_DIAMETER_DEG) -> FeatureMap:
    """Local root-mean-square contrast of a luminance image in [0, 1].

    Per pixel: the RMS deviation from the local mean within a square
    window of half-width window_radius, using only pixels inside the
    circular stimulus aperture; the faded surround is excluded from the
    statistics and zeroed in the output.
    """
    lum = np.asarray(luminance, dtype=float)
    if lum.ndim != 2 or lum.shape[0] != lum.shape[1]:
        raise ValueError("luminance image must be square")
    if (lum < 0).any() or (lum > 1).any():
        raise ValueError("luminance values must lie in [0, 1]")
    size = 2 * window_radius + 1
    if size > lum.shape[0]:
        raise ValueError("window larger than the image")

    fmap = FeatureMap(np.zeros_like(lum), field_diameter_deg)
    mask = fmap.disc_mask().astype(float)
    # masked windowed moments: mean and mean-square over in-disc pixels only
    cnt = uniform_filter(mask, size=size, mode="constant")
    s1 = uniform_filter(lum * mask, size=size, mode="constant")
    s2 = uniform_filter(lum ** 2 * mask, size=size, mode="constant")
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = s1 / cnt
        var = np.maximum(s2 / cnt - mean ** 2, 0.0)
    out = np.sqrt(np.where(cnt > 0, var, 0.0))
    out[mask == 0] = 0.0
    return FeatureMap(out, field_diameter_deg)
