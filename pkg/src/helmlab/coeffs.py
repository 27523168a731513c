"""Piecewise-C1 coefficient functions on a symmetric interval [-L, L].

A coefficient is a strictly positive function with a finite partition
-L = z_0 < ... < z_N = L such that on every open subinterval the derivative
is one-signed (either > 0 throughout, or <= 0 throughout).  The class tracks
one-sided limits at partition points, jumps, the total variation, and the
monotone envelope obtained by freezing every non-increasing piece at its
left limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .quadrature import adaptive_gauss

_SIGN_TAGS = ("positive", "nonpositive", "zero")
_NPROBE = 64  # Chebyshev sign probes per smooth segment


class CoefficientError(ValueError):
    """Invalid coefficient data (ordering, positivity, or sign tags)."""


@dataclass(frozen=True)
class Constant:
    """Segment with a single value; derivative is identically zero."""

    value: float


@dataclass(frozen=True)
class Linear:
    """Affine segment given by its one-sided limits at the segment ends."""

    left: float
    right: float


@dataclass(frozen=True)
class Smooth:
    """C1 segment given by evaluators for the function and its derivative.

    `sign` declares the one-signed derivative branch: "positive" for g' > 0
    on the open segment, "nonpositive" for g' <= 0, "zero" for exactly flat.
    Both callables must accept numpy arrays.
    """

    func: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    sign: str


Segment = Union[Constant, Linear, Smooth]


def _seg_values(seg: Segment, x0: float, x1: float, x: np.ndarray) -> np.ndarray:
    if isinstance(seg, Constant):
        return np.full_like(x, seg.value, dtype=float)
    if isinstance(seg, Linear):
        t = (x - x0) / (x1 - x0)
        return seg.left + t * (seg.right - seg.left)
    return np.asarray(seg.func(x), dtype=float)


def _seg_deriv(seg: Segment, x0: float, x1: float, x: np.ndarray) -> np.ndarray:
    if isinstance(seg, Constant):
        return np.zeros_like(x, dtype=float)
    if isinstance(seg, Linear):
        return np.full_like(x, (seg.right - seg.left) / (x1 - x0), dtype=float)
    return np.asarray(seg.deriv(x), dtype=float)


def _seg_left(seg: Segment, x0: float, x1: float) -> float:
    """One-sided limit from the right at the segment's left endpoint."""
    if isinstance(seg, Constant):
        return seg.value
    if isinstance(seg, Linear):
        return seg.left
    return float(seg.func(np.asarray([x0]))[0])


def _seg_right(seg: Segment, x0: float, x1: float) -> float:
    if isinstance(seg, Constant):
        return seg.value
    if isinstance(seg, Linear):
        return seg.right
    return float(seg.func(np.asarray([x1]))[0])


def _seg_increasing(seg: Segment) -> bool:
    """True on the g' > 0 branch; False on the g' <= 0 branch."""
    if isinstance(seg, Constant):
        return False
    if isinstance(seg, Linear):
        return seg.right > seg.left
    return seg.sign == "positive"


def _chebyshev(x0: float, x1: float, n: int = _NPROBE) -> np.ndarray:
    theta = (2.0 * np.arange(1, n + 1) - 1.0) * np.pi / (2.0 * n)
    return 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * np.cos(theta)


@dataclass(frozen=True)
class PiecewiseCoefficient:
    """Strictly positive piecewise-C1 function with certified bounds.

    Parameters
    ----------
    breakpoints : array, z_0 < ... < z_N with z_0 = -L and z_N = L.
    segments : one Segment per subinterval (z_{j-1}, z_j).
    g_min, g_max : certified pointwise bounds, 0 < g_min <= g <= g_max.
    """

    breakpoints: np.ndarray
    segments: tuple
    g_min: float
    g_max: float

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        bp.flags.writeable = False
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "segments", tuple(self.segments))
        if bp.ndim != 1 or len(bp) < 2:
            raise CoefficientError("need at least two breakpoints")
        if not np.all(np.diff(bp) > 0.0):
            raise CoefficientError("breakpoints must be strictly increasing")
        if len(self.segments) != len(bp) - 1:
            raise CoefficientError(
                f"{len(bp) - 1} subintervals but {len(self.segments)} segments")
        if not (0.0 < self.g_min <= self.g_max):
            raise CoefficientError("bounds must satisfy 0 < g_min <= g_max")
        self._validate_segments()

    def _validate_segments(self):
        slack = 1e-12 * self.g_max
        lo, hi = self.g_min - slack, self.g_max + slack
        for j, seg in enumerate(self.segments):
            x0, x1 = self.breakpoints[j], self.breakpoints[j + 1]
            ends = np.array([_seg_left(seg, x0, x1), _seg_right(seg, x0, x1)])
            probes = ends
            if isinstance(seg, Smooth):
                if seg.sign not in _SIGN_TAGS:
                    raise CoefficientError(f"unknown sign tag {seg.sign!r}")
                xs = _chebyshev(x0, x1)
                d = _seg_deriv(seg, x0, x1, xs)
                dtol = 1e-12 * (1.0 + np.max(np.abs(d)))
                if seg.sign == "positive" and np.any(d <= 0.0):
                    raise CoefficientError(
                        f"segment {j}: tagged positive but derivative probe <= 0")
                if seg.sign == "nonpositive" and np.any(d > dtol):
                    raise CoefficientError(
                        f"segment {j}: tagged nonpositive but derivative probe > 0")
                if seg.sign == "zero" and np.any(np.abs(d) > dtol):
                    raise CoefficientError(
                        f"segment {j}: tagged zero but derivative probe is not")
                probes = np.concatenate([ends, _seg_values(seg, x0, x1, xs)])
            if np.any(probes < lo) or np.any(probes > hi):
                raise CoefficientError(
                    f"segment {j}: values escape the certified bounds "
                    f"[{self.g_min}, {self.g_max}]")

    # -- basic queries ----------------------------------------------------

    @property
    def half_length(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    def segment_index(self, x, side: str = "right") -> np.ndarray:
        """Index of the subinterval owning x; `side` resolves breakpoints."""
        idx = np.searchsorted(self.breakpoints, x, side=side) - 1
        return np.clip(idx, 0, self.n_segments - 1)

    def eval(self, x: float, side: str = "right") -> float:
        """One-sided value g^-(x) (side="left") or g^+(x) (side="right").

        Both sides agree at interior points of a segment.
        """
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        if not (self.breakpoints[0] <= x <= self.breakpoints[-1]):
            raise CoefficientError(f"x={x} outside [{self.breakpoints[0]}, "
                                   f"{self.breakpoints[-1]}]")
        j = int(self.segment_index(x, side))
        return float(_seg_values(self.segments[j], self.breakpoints[j],
                                 self.breakpoints[j + 1], np.asarray([x]))[0])

    def values(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized evaluation; at breakpoints returns the right limit."""
        xs = np.asarray(xs, dtype=float)
        idx = self.segment_index(xs.ravel())
        out = np.empty(idx.shape, dtype=float)
        for j in np.unique(idx):
            mask = idx == j
            out[mask] = _seg_values(self.segments[j], self.breakpoints[j],
                                    self.breakpoints[j + 1], xs.ravel()[mask])
        return out.reshape(xs.shape)

    def derivatives(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized regular part of the derivative (right limit at breaks)."""
        xs = np.asarray(xs, dtype=float)
        idx = self.segment_index(xs.ravel())
        out = np.empty(idx.shape, dtype=float)
        for j in np.unique(idx):
            mask = idx == j
            out[mask] = _seg_deriv(self.segments[j], self.breakpoints[j],
                                   self.breakpoints[j + 1], xs.ravel()[mask])
        return out.reshape(xs.shape)

    def left_limit(self, j: int) -> float:
        """g^-(z_j), defined for 1 <= j <= N."""
        return _seg_right(self.segments[j - 1], self.breakpoints[j - 1],
                          self.breakpoints[j])

    def right_limit(self, j: int) -> float:
        """g^+(z_j), defined for 0 <= j <= N-1."""
        return _seg_left(self.segments[j], self.breakpoints[j],
                         self.breakpoints[j + 1])

    # -- jumps and variation ----------------------------------------------

    def jump(self, j: int) -> float:
        """Left-to-right jump at breakpoint j.

        Interior j: g^-(z_j) - g^+(z_j); j=0 gives -g^+(-L); j=N gives g^-(L).
        """
        n = self.n_segments
        if not (0 <= j <= n):
            raise IndexError(f"breakpoint index {j} out of range 0..{n}")
        if j == 0:
            return -self.right_limit(0)
        if j == n:
            return self.left_limit(n)
        return self.left_limit(j) - self.right_limit(j)

    def variation(self, smooth_rtol: float = 1e-10) -> float:
        """Total variation: sum of interior |jumps| plus the integral of |g'|.

        The derivative integral is exact for constant and linear segments and
        uses adaptive Gauss-Legendre panels for smooth ones.
        """
        var = sum(abs(self.jump(j)) for j in range(1, self.n_segments))
        for j, seg in enumerate(self.segments):
            x0, x1 = self.breakpoints[j], self.breakpoints[j + 1]
            if isinstance(seg, Constant):
                continue
            if isinstance(seg, Linear):
                var += abs(seg.right - seg.left)
            else:
                var += adaptive_gauss(
                    lambda x, s=seg: np.abs(s.deriv(x)), x0, x1, rtol=smooth_rtol)
        return var

    # -- monotone envelope --------------------------------------------------

    def tilde(self) -> "PiecewiseCoefficient":
        """Monotone envelope: keep increasing pieces, freeze the rest.

        On segments with g' > 0 the function is unchanged; on segments with
        g' <= 0 it is replaced by the constant g^+(z_{j-1}).  The result is
        right continuous at each interior breakpoint and left continuous at
        z_N, stays within [g_min, g_max], and is nondecreasing per segment.
        """
        out = []
        for j, seg in enumerate(self.segments):
            if _seg_increasing(seg):
                out.append(seg)
            else:
                out.append(Constant(self.right_limit(j)))
        return PiecewiseCoefficient(self.breakpoints, tuple(out),
                                    self.g_min, self.g_max)

    def reversed(self) -> "PiecewiseCoefficient":
        """The coefficient reflected about x = 0 (for symmetry checks)."""
        bp = -self.breakpoints[::-1].copy()
        segs = []
        for j, seg in enumerate(reversed(self.segments)):
            if isinstance(seg, Constant):
                segs.append(seg)
            elif isinstance(seg, Linear):
                segs.append(Linear(seg.right, seg.left))
            else:
                f, d = seg.func, seg.deriv
                flipped = "positive" if seg.sign == "nonpositive" else (
                    "nonpositive" if seg.sign == "positive" else "zero")
                segs.append(Smooth(lambda x, f=f: f(-x),
                                   lambda x, d=d: -d(-x), flipped))
        return PiecewiseCoefficient(bp, tuple(segs), self.g_min, self.g_max)


# -- constructors ----------------------------------------------------------

def constant(value: float, half_length: float = 1.0) -> PiecewiseCoefficient:
    """Constant coefficient on [-L, L]."""
    return PiecewiseCoefficient(
        np.array([-half_length, half_length]), (Constant(value),), value, value)


def piecewise_constant(breakpoints: Sequence[float],
                       values: Sequence[float]) -> PiecewiseCoefficient:
    """Piecewise-constant coefficient from breakpoints and per-cell values."""
    values = np.asarray(values, dtype=float)
    segs = tuple(Constant(float(v)) for v in values)
    return PiecewiseCoefficient(np.asarray(breakpoints, dtype=float), segs,
                                float(values.min()), float(values.max()))


def from_segments(breakpoints: Sequence[float], segments: Sequence[Segment],
                  g_min: float | None = None,
                  g_max: float | None = None) -> PiecewiseCoefficient:
    """Build a coefficient, sampling bounds when they are not supplied.

    Bounds are exact for constant/linear segments; smooth segments are
    sampled at Chebyshev points plus endpoints, so certified bounds for those
    should be passed explicitly when available.
    """
    bp = np.asarray(breakpoints, dtype=float)
    lo, hi = np.inf, -np.inf
    for j, seg in enumerate(segments):
        x0, x1 = bp[j], bp[j + 1]
        vals = [_seg_left(seg, x0, x1), _seg_right(seg, x0, x1)]
        if isinstance(seg, Smooth):
            vals.extend(_seg_values(seg, x0, x1, _chebyshev(x0, x1)))
        lo = min(lo, min(vals))
        hi = max(hi, max(vals))
    if g_min is None:
        g_min = lo
    if g_max is None:
        g_max = hi
    return PiecewiseCoefficient(bp, tuple(segments), float(g_min), float(g_max))


# -- partitions --------------------------------------------------------------

def common_partition(a: PiecewiseCoefficient,
                     c: PiecewiseCoefficient) -> np.ndarray:
    """Union of the two breakpoint sets (a refinement of either partition)."""
    if a.breakpoints[0] != c.breakpoints[0] or a.breakpoints[-1] != c.breakpoints[-1]:
        raise CoefficientError("coefficients live on different intervals")
    return np.unique(np.concatenate([a.breakpoints, c.breakpoints]))


def refine(coeff: PiecewiseCoefficient,
           breakpoints: np.ndarray) -> PiecewiseCoefficient:
    """Re-express the coefficient on a refinement of its own partition."""
    bp = np.asarray(breakpoints, dtype=float)
    if not set(np.asarray(coeff.breakpoints).tolist()) <= set(bp.tolist()):
        raise CoefficientError("refinement must contain the original breakpoints")
    segs = []
    for j in range(len(bp) - 1):
        x0, x1 = bp[j], bp[j + 1]
        k = int(coeff.segment_index(0.5 * (x0 + x1)))
        seg = coeff.segments[k]
        if isinstance(seg, Linear):
            y0, y1 = coeff.breakpoints[k], coeff.breakpoints[k + 1]
            t0 = (x0 - y0) / (y1 - y0)
            t1 = (x1 - y0) / (y1 - y0)
            segs.append(Linear(seg.left + t0 * (seg.right - seg.left),
                               seg.left + t1 * (seg.right - seg.left)))
        else:
            # constants and smooth segments restrict as they are
            segs.append(seg)
    return PiecewiseCoefficient(bp, tuple(segs), coeff.g_min, coeff.g_max)


def on_common_partition(a: PiecewiseCoefficient, c: PiecewiseCoefficient):
    """Both coefficients re-expressed on the union of their breakpoints."""
    bp = common_partition(a, c)
    return refine(a, bp), refine(c, bp)


# -- derived variations ------------------------------------------------------

def variation_of_square(coeff: PiecewiseCoefficient,
                        smooth_rtol: float = 1e-10) -> float:
    """Total variation of g^2 for a positive coefficient g.

    Exact for constant/linear segments (g^2 is monotone there since g > 0 and
    g' is one-signed); adaptive quadrature of |2 g g'| for smooth segments.
    """
    var = 0.0
    for j in range(1, coeff.n_segments):
        var += abs(coeff.left_limit(j) ** 2 - coeff.right_limit(j) ** 2)
    for j, seg in enumerate(coeff.segments):
        x0, x1 = coeff.breakpoints[j], coeff.breakpoints[j + 1]
        if isinstance(seg, Constant):
            continue
        if isinstance(seg, Linear):
            var += abs(seg.right ** 2 - seg.left ** 2)
        else:
            var += adaptive_gauss(
                lambda x, s=seg: np.abs(2.0 * s.func(x) * s.deriv(x)),
                x0, x1, rtol=smooth_rtol)
    return var
