"""Circle-valued statistics: polar coordinates, the Fréchet mean, a Kolmogorov
goodness-of-fit test for angular uniformity, and a one-dimensional sign test.

Angles live in [-pi, pi); every function wraps its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptySampleError, InsufficientSampleError, InvalidInputError

__all__ = [
    "wrap_angle",
    "PolarSample",
    "to_polar",
    "angular_distance",
    "frechet_mean",
    "center_angles",
    "ks_statistic",
    "kolmogorov_sf",
    "KsTestResult",
    "ks_uniformity_test",
    "normal_cdf",
    "SignTestResult",
    "sign_test",
]

MIN_TEST_SAMPLE = 5
ZERO_RADIUS = 1e-12


def wrap_angle(angle):
    """Wrap angle(s) into [-pi, pi)."""
    return (np.asarray(angle, dtype=np.float64) + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class PolarSample:
    """Radii and wrapped angles of a 2D sample; origin points are excluded."""

    radii: np.ndarray
    angles: np.ndarray
    n_excluded: int = 0

    @property
    def k(self) -> int:
        return len(self.angles)


def to_polar(points2d) -> PolarSample:
    """Polar coordinates of 2D points; drops points with radius < 1e-12."""
    pts = np.asarray(points2d, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidInputError(f"expected (n, 2) points, got {pts.shape}")
    if len(pts) == 0:
        raise InvalidInputError("empty input")
    r = np.hypot(pts[:, 0], pts[:, 1])
    keep = r >= ZERO_RADIUS
    if not keep.any():
        raise EmptySampleError("all points are at the origin; angles undefined")
    phi = wrap_angle(np.arctan2(pts[keep, 1], pts[keep, 0]))
    return PolarSample(radii=r[keep], angles=phi, n_excluded=int((~keep).sum()))


def angular_distance(psi1, psi2):
    """Arclength distance on the unit circle, in [0, pi]."""
    d = np.abs(wrap_angle(psi1) - wrap_angle(psi2))
    return np.minimum(d, 2.0 * np.pi - d)


def frechet_mean(angles) -> float:
    """Minimizer of the summed squared angular distance to the sample.

    The circular Fréchet mean is the ordinary mean of the angles unwrapped at
    some cut point; every cut at a data point is tried and the best candidate
    is kept. Ties go to the smallest wrapped candidate.
    """
    a = np.atleast_1d(wrap_angle(angles))
    if a.size == 0:
        raise InvalidInputError("empty angle list")
    s = np.sort(a)
    k = len(s)
    j = np.arange(k)
    candidates = wrap_angle((s.sum() + 2.0 * np.pi * j) / k)
    d = angular_distance(s[None, :], candidates[:, None])
    objective = (d * d).sum(axis=1)
    best = objective.min()
    return float(candidates[objective == best].min())


def center_angles(angles) -> np.ndarray:
    """Rotate the sample so its Fréchet mean sits at 0."""
    a = np.atleast_1d(wrap_angle(angles))
    return wrap_angle(a - frechet_mean(a))


def ks_statistic(angles) -> float:
    """Sup-distance between the sample ECDF and the uniform CDF on [-pi, pi)."""
    a = np.sort(np.atleast_1d(wrap_angle(angles)))
    k = len(a)
    if k == 0:
        raise InvalidInputError("empty angle list")
    f0 = (a + np.pi) / (2.0 * np.pi)
    i = np.arange(1, k + 1)
    return float(max(np.max(i / k - f0), np.max(f0 - (i - 1) / k)))


def kolmogorov_sf(lam: float) -> float:
    """Asymptotic Kolmogorov survival function Q(lam) = 2 sum (-1)^{j-1} e^{-2 j^2 lam^2}.

    Below lam = 1.18 the equivalent Jacobi-theta form of the CDF is used; the
    direct alternating series loses monotonicity to round-off there.
    """
    if lam <= 0.0:
        return 1.0
    if lam < 1.18:
        # Q = 1 - sqrt(2 pi)/lam * sum_{j odd} exp(-j^2 pi^2 / (8 lam^2))
        factor = math.pi * math.pi / (8.0 * lam * lam)
        cdf = 0.0
        for j in range(1, 50, 2):
            term = math.exp(-j * j * factor)
            cdf += term
            if term < 1e-18:
                break
        cdf *= math.sqrt(2.0 * math.pi) / lam
        return min(1.0, max(0.0, 1.0 - cdf))
    total = 0.0
    for j in range(1, 1000):
        term = math.exp(-2.0 * j * j * lam * lam)
        total += term if j % 2 == 1 else -term
        if term < 1e-12:
            break
    return min(1.0, max(0.0, 2.0 * total))


@dataclass(frozen=True)
class KsTestResult:
    statistic: float  # sup |F_k - F0|, in [0, 1]
    p_value: float
    sample_size: int


def ks_uniformity_test(angles) -> KsTestResult:
    """Kolmogorov test of angular uniformity on [-pi, pi).

    The p-value uses the asymptotic Kolmogorov distribution with the Stephens
    finite-sample correction lam = (sqrt(k) + 0.12 + 0.11/sqrt(k)) * A_k.
    """
    a = np.atleast_1d(wrap_angle(angles))
    k = len(a)
    if k < MIN_TEST_SAMPLE:
        raise InsufficientSampleError(f"need at least {MIN_TEST_SAMPLE} angles, got {k}")
    stat = ks_statistic(a)
    sk = math.sqrt(k)
    lam = (sk + 0.12 + 0.11 / sk) * stat
    return KsTestResult(statistic=stat, p_value=kolmogorov_sf(lam), sample_size=k)


def normal_cdf(x: float) -> float:
    """Standard normal CDF."""
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


@dataclass(frozen=True)
class SignTestResult:
    k_plus: int  # count of values >= 0
    statistic: float  # (2 k_plus - k) / sqrt(k)
    p_value: float


def sign_test(values) -> SignTestResult:
    """Two-sided sign test of symmetry around 0; zeros count as positive."""
    v = np.atleast_1d(np.asarray(values, dtype=np.float64))
    k = len(v)
    if k < MIN_TEST_SAMPLE:
        raise InsufficientSampleError(f"need at least {MIN_TEST_SAMPLE} values, got {k}")
    k_plus = int((v >= 0.0).sum())
    stat = (2.0 * k_plus - k) / math.sqrt(k)
    p = 2.0 * (1.0 - normal_cdf(abs(stat)))
    return SignTestResult(k_plus=k_plus, statistic=stat, p_value=min(1.0, max(0.0, p)))
