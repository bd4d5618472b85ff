"""Chest slice processing: threshold, ROI, texture and shape features.

The chain is deliberately simple: pick a global threshold by iterating
the two-class mean rule, keep the largest bright connected component as
the region of interest, build a gray-level co-occurrence matrix over it
and summarize region shape plus texture into eight scalar features.  A
small linear SVM decides whether an extracted region is usable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import gcd
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ValidationError

FEATURE_ORDER = (
    "area",
    "convex_area",
    "equivalent_diameter",
    "solidity",
    "energy",
    "contrast",
    "homogeneity",
    "eccentricity",
)


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Row-major 8-bit style grayscale raster (values in [0, 255])."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValidationError("image must be a nonempty 2-D array")
        if not np.isfinite(arr).all():
            raise ValidationError("image intensities must be finite")
        if arr.min() < 0 or arr.max() > 255:
            raise ValidationError("image intensities must lie in [0, 255]")
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def pixel_count(self) -> int:
        return self.pixels.size


@dataclass(frozen=True, eq=False)
class RoiMask:
    """Binary region membership, same frame as the source image."""

    mask: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.mask, dtype=bool)
        if arr.ndim != 2 or arr.size == 0:
            raise ValidationError("mask must be a nonempty 2-D array")
        if not arr.any():
            raise ValidationError("mask must contain at least one pixel")
        object.__setattr__(self, "mask", arr)

    @property
    def area(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True)
class ThresholdResult:
    threshold: float
    degenerate: bool
    iterations: int


def iterative_threshold(img: GrayImage, eps: float = 1e-6, max_iter: int = 256) -> ThresholdResult:
    """Two-class mean threshold: T' = (mean(<=T) + mean(>T)) / 2.

    Starts from the global mean and iterates to a fixed point.  A
    constant image has no second class; it comes back flagged
    degenerate with the global mean as threshold.
    """
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    values = img.pixels.ravel()
    t = float(values.mean())
    if values.min() == values.max():
        return ThresholdResult(threshold=t, degenerate=True, iterations=0)
    for iteration in range(1, max_iter + 1):
        low = values[values <= t]
        high = values[values > t]
        t_next = (float(low.mean()) + float(high.mean())) / 2.0
        if abs(t_next - t) < eps:
            return ThresholdResult(threshold=t_next, degenerate=False, iterations=iteration)
        t = t_next
    return ThresholdResult(threshold=t, degenerate=False, iterations=max_iter)


def segment_roi(img: GrayImage, threshold: float, connectivity: int = 4) -> RoiMask:
    """Largest bright connected component above the threshold."""
    if connectivity not in (4, 8):
        raise ValidationError(f"connectivity must be 4 or 8, got {connectivity}")
    bright = img.pixels > threshold
    if not bright.any():
        raise ValidationError("empty ROI: no pixel above threshold")
    if connectivity == 4:
        structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
    else:
        structure = np.ones((3, 3), dtype=bool)
    labels, count = ndimage.label(bright, structure=structure)
    sizes = ndimage.sum_labels(bright, labels, index=np.arange(1, count + 1))
    winner = int(np.argmax(sizes)) + 1  # ties: first label wins, deterministic
    return RoiMask(mask=labels == winner)


@dataclass(frozen=True, eq=False)
class Glcm:
    """Normalized gray-level co-occurrence matrix."""

    levels: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.matrix, dtype=np.float64)
        if arr.shape != (self.levels, self.levels):
            raise ValidationError("co-occurrence matrix must be levels x levels")
        if (arr < 0).any():
            raise ValidationError("co-occurrence entries must be non-negative")
        if abs(float(arr.sum()) - 1.0) > 1e-9:
            raise ValidationError("co-occurrence matrix must sum to 1")
        object.__setattr__(self, "matrix", arr)

    # the three texture sums use fsum so the result is the correctly
    # rounded total, independent of any accumulation order

    @property
    def energy(self) -> float:
        return math.fsum(float(v) * float(v) for v in self.matrix.ravel())

    @property
    def contrast(self) -> float:
        return math.fsum(
            (i - j) ** 2 * float(self.matrix[i, j])
            for i in range(self.levels)
            for j in range(self.levels)
        )

    @property
    def homogeneity(self) -> float:
        return math.fsum(
            float(self.matrix[i, j]) / (1.0 + abs(i - j))
            for i in range(self.levels)
            for j in range(self.levels)
        )


def quantize(img: GrayImage, levels: int) -> np.ndarray:
    """Bin intensities into uniform levels: floor(v * levels / 256)."""
    if levels < 2:
        raise ValidationError(f"levels must be >= 2, got {levels}")
    q = np.floor(img.pixels * levels / 256.0).astype(np.int64)
    return np.clip(q, 0, levels - 1)


def glcm(
    img: GrayImage,
    roi: RoiMask,
    levels: int = 8,
    offset: tuple[int, int] = (1, 0),
    symmetric: bool = False,
) -> Glcm:
    """Count intensity pairs (p, p + offset) with both pixels in the ROI.

    ``offset`` is (dx, dy): dx columns right, dy rows down.  Counts are
    normalized to probabilities.
    """
    dx, dy = offset
    if dx == 0 and dy == 0:
        raise ValidationError("offset must be nonzero")
    if roi.mask.shape != img.pixels.shape:
        raise ValidationError("mask frame does not match image frame")
    q = quantize(img, levels)
    h, w = q.shape
    r0, r1 = max(0, -dy), h - max(0, dy)
    c0, c1 = max(0, -dx), w - max(0, dx)
    counts = np.zeros((levels, levels), dtype=np.float64)
    if r1 > r0 and c1 > c0:
        src = (slice(r0, r1), slice(c0, c1))
        dst = (slice(r0 + dy, r1 + dy), slice(c0 + dx, c1 + dx))
        valid = roi.mask[src] & roi.mask[dst]
        i = q[src][valid]
        j = q[dst][valid]
        np.add.at(counts, (i, j), 1.0)
        if symmetric:
            np.add.at(counts, (j, i), 1.0)
    total = counts.sum()
    if total == 0:
        raise ValidationError("glcm undefined: no valid pixel pair for this offset")
    return Glcm(levels=levels, matrix=counts / total)


def _convex_hull(points: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Monotone chain; returns CCW vertices, collinear points dropped."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def build(seq):
        out: list[tuple[int, int]] = []
        for p in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = build(pts)
    upper = build(reversed(pts))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:  # every point collinear
        return [pts[0], pts[-1]]
    return hull


def _lattice_points_in_hull(hull: list[tuple[int, int]]) -> int:
    """Lattice points inside or on a lattice polygon, via Pick's theorem."""
    if len(hull) == 1:
        return 1
    if len(hull) == 2:
        (x0, y0), (x1, y1) = hull
        return gcd(abs(x1 - x0), abs(y1 - y0)) + 1
    doubled_area = 0
    boundary = 0
    for k in range(len(hull)):
        x0, y0 = hull[k]
        x1, y1 = hull[(k + 1) % len(hull)]
        doubled_area += x0 * y1 - x1 * y0
        boundary += gcd(abs(x1 - x0), abs(y1 - y0))
    doubled_area = abs(doubled_area)
    # interior + boundary = area + boundary/2 + 1 (Pick), kept in integers
    return (doubled_area + boundary) // 2 + 1


def convex_area(roi: RoiMask) -> int:
    """Pixel centers inside or on the convex hull of the mask, boundary inclusive."""
    ys, xs = np.nonzero(roi.mask)
    points = [(int(x), int(y)) for x, y in zip(xs, ys)]
    return _lattice_points_in_hull(_convex_hull(points))


def _eccentricity(roi: RoiMask) -> float:
    """Inertia-ellipse eccentricity from second central moments.

    Moment numerators stay in exact integer arithmetic; translation
    terms cancel exactly, so a shifted region gets bit-identical output.
    """
    ys, xs = np.nonzero(roi.mask)
    n = int(xs.size)
    sx, sy = int(xs.sum()), int(ys.sum())
    sxx = int((xs * xs).sum())
    syy = int((ys * ys).sum())
    sxy = int((xs * ys).sum())
    mu20 = (n * sxx - sx * sx) / n
    mu02 = (n * syy - sy * sy) / n
    mu11 = (n * sxy - sx * sy) / n
    spread = math.hypot(2.0 * mu11, mu20 - mu02)
    lam_max = (mu20 + mu02 + spread) / 2.0
    lam_min = (mu20 + mu02 - spread) / 2.0
    if lam_max <= 0:
        return 0.0
    return math.sqrt(max(0.0, 1.0 - lam_min / lam_max))


@dataclass(frozen=True)
class ImagingFeatures:
    area: float
    convex_area: float
    equivalent_diameter: float
    solidity: float
    energy: float
    contrast: float
    homogeneity: float
    eccentricity: float

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_ORDER], dtype=np.float64)

    def unit_scaled(self, *, image_pixels: int, levels: int) -> np.ndarray:
        """Scale to [0, 1] by fixed reference maxima.

        Area terms divide by the frame size, equivalent diameter by the
        diameter of a frame-sized region, contrast by its ceiling
        (levels - 1)^2; the remaining features are ratios already.
        """
        if image_pixels <= 0:
            raise ValidationError("image_pixels must be positive")
        if levels < 2:
            raise ValidationError("levels must be >= 2")
        ed_max = math.sqrt(4.0 * image_pixels / math.pi)
        return np.array(
            [
                self.area / image_pixels,
                self.convex_area / image_pixels,
                self.equivalent_diameter / ed_max,
                self.solidity,
                self.energy,
                self.contrast / (levels - 1) ** 2,
                self.homogeneity,
                self.eccentricity,
            ],
            dtype=np.float64,
        )

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in FEATURE_ORDER}


def roi_features(roi: RoiMask, g: Glcm) -> ImagingFeatures:
    """All eight region features from a mask and its co-occurrence matrix."""
    area = roi.area
    hull_count = convex_area(roi)
    return ImagingFeatures(
        area=float(area),
        convex_area=float(hull_count),
        equivalent_diameter=math.sqrt(4.0 * area / math.pi),
        solidity=area / hull_count,
        energy=g.energy,
        contrast=g.contrast,
        homogeneity=g.homogeneity,
        eccentricity=_eccentricity(roi),
    )


@dataclass(frozen=True)
class FeatureExtraction:
    """Feature vector plus the intermediates that produced it."""

    features: ImagingFeatures
    threshold: ThresholdResult
    roi: RoiMask
    glcm: Glcm
    image_pixels: int
    levels: int

    def unit_scaled(self) -> np.ndarray:
        return self.features.unit_scaled(image_pixels=self.image_pixels, levels=self.levels)


def extract_features(
    img: GrayImage,
    levels: int = 8,
    offset: tuple[int, int] = (1, 0),
    connectivity: int = 4,
    eps: float = 1e-6,
) -> FeatureExtraction:
    """Full chain: threshold, largest bright region, texture, shape."""
    thr = iterative_threshold(img, eps=eps)
    if thr.degenerate:
        raise ValidationError("image is constant: no region separates from background")
    roi = segment_roi(img, thr.threshold, connectivity=connectivity)
    g = glcm(img, roi, levels=levels, offset=offset)
    return FeatureExtraction(
        features=roi_features(roi, g),
        threshold=thr,
        roi=roi,
        glcm=g,
        image_pixels=img.pixel_count,
        levels=levels,
    )


@dataclass(frozen=True, eq=False)
class LinearSvmModel:
    weights: np.ndarray
    bias: float
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    training_accuracy: float


def _as_feature_vector(sample) -> np.ndarray:
    if hasattr(sample, "as_vector"):
        return sample.as_vector()
    return np.asarray(sample, dtype=np.float64)


def svm_train(samples, lam: float = 0.01, epochs: int = 100) -> LinearSvmModel:
    """Hinge-loss subgradient descent on standardized features.

    Deterministic: cyclic sample order, zero init, 1/(lam*t) step.
    """
    if lam <= 0 or epochs <= 0:
        raise ValidationError("lam and epochs must be positive")
    pairs = list(samples)
    if not pairs:
        raise ValidationError("no training samples")
    labels = np.array([label for _, label in pairs], dtype=np.float64)
    if not set(np.unique(labels)) <= {-1.0, 1.0}:
        raise ValidationError("labels must be -1 or +1")
    if len(set(labels.tolist())) < 2:
        raise ValidationError("training needs both labels present")
    x = np.stack([_as_feature_vector(f) for f, _ in pairs])
    mean = x.mean(axis=0)
    scale = x.std(axis=0)
    scale[scale == 0] = 1.0
    z = (x - mean) / scale

    w = np.zeros(z.shape[1], dtype=np.float64)
    b = 0.0
    t = 0
    for _ in range(epochs):
        for i in range(len(z)):
            t += 1
            eta = 1.0 / (lam * t)
            if labels[i] * (z[i] @ w + b) < 1.0:
                w = (1.0 - eta * lam) * w + eta * labels[i] * z[i]
                b += eta * labels[i]
            else:
                w = (1.0 - eta * lam) * w
    margins = z @ w + b
    predicted = np.where(margins >= 0, 1.0, -1.0)
    accuracy = float((predicted == labels).mean())
    return LinearSvmModel(
        weights=w, bias=b, feature_mean=mean, feature_scale=scale, training_accuracy=accuracy
    )


def svm_classify(model: LinearSvmModel, sample) -> tuple[int, float]:
    """Label in {-1, +1} plus the raw margin w.x + b."""
    z = (_as_feature_vector(sample) - model.feature_mean) / model.feature_scale
    margin = float(z @ model.weights + model.bias)
    return (1 if margin >= 0 else -1), margin


def read_pgm(path: str | Path) -> GrayImage:
    """Binary (P5) PGM reader; header comments allowed, maxval <= 255."""
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        if pos >= len(data):
            raise ValidationError(f"truncated PGM header in {path}")
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace():
                pos += 1
            fields.append(data[start:pos])
    if fields[0] != b"P5":
        raise ValidationError(f"not a binary PGM file: {path}")
    width, height, maxval = (int(f) for f in fields[1:])
    if not (0 < maxval <= 255):
        raise ValidationError(f"unsupported PGM maxval {maxval}")
    pos += 1  # single whitespace after maxval
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise ValidationError(f"truncated PGM raster in {path}")
    arr = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    return GrayImage(pixels=arr)


def write_pgm(img: GrayImage, path: str | Path) -> None:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    body = np.round(img.pixels).astype(np.uint8).tobytes()
    Path(path).write_bytes(header + body)


def read_image(path: str | Path) -> GrayImage:
    """Load a grayscale image: PGM parsed directly, PNG via Pillow."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return read_pgm(path)
    if suffix == ".png":
        from PIL import Image

        with Image.open(path) as im:
            return GrayImage(pixels=np.asarray(im.convert("L"), dtype=np.float64))
    raise ValidationError(f"unsupported image format {suffix!r} (use .pgm or .png)")
