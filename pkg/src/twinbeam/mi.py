"""Histogram mutual information and the delay-scanned MI curve.

The estimator bins each trace into equal-width bins over its own [min, max]
range, forms the joint 2-D histogram, and evaluates

    I = sum P(i,j) log2( P(i,j) / (P(i) P(j)) )

with marginals taken from the joint histogram, which guarantees I >= 0 and
finiteness (0 log 0 = 0).  ``mi_delay_scan`` is the hot path: bin indices are
computed once per trace and each integer-sample shift is reduced with a fused
histogram+MI kernel (numba when available, numpy otherwise).

Scan conventions:

* shifts are restricted to integer sample counts (0.5 ns at 2 GS/s is one
  sample), so histograms never interpolate;
* positive delay means arm ``a`` retarded relative to arm ``b``;
* bin edges come from each trace's guard-stripped record as a whole, not per
  overlap window, so MI values are comparable across shifts;
* arm ``a`` contributes a fixed central window while ``b`` slides, which
  makes the curve exactly shift-equivariant: delaying ``b`` by k samples
  translates the curve by k grid points.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    DegenerateRange,
    EmptyHistogram,
    GridMismatch,
    InvalidParams,
    NonpositiveReference,
    NoPeak,
    StepNotSampleAligned,
)
from .trace import MICurve, Trace, TracePair, validate_pair

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    _HAVE_NUMBA = False

__all__ = [
    "JointHistogram",
    "histogram2d",
    "mi_from_hist",
    "mi_delay_scan",
    "average_curves",
    "normalize_curve",
    "fwhm",
    "miller_madow_correction",
]


@dataclass(frozen=True)
class JointHistogram:
    """2-D histogram of paired samples with its bin edges."""

    counts: np.ndarray
    edges_a: np.ndarray
    edges_b: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2:
            raise InvalidParams("counts must be 2-d")
        if np.any(counts < 0):
            raise InvalidParams("counts must be nonnegative")
        if len(self.edges_a) != counts.shape[0] + 1 or len(self.edges_b) != counts.shape[1] + 1:
            raise InvalidParams("edges must have one more entry than bins")
        object.__setattr__(self, "counts", np.ascontiguousarray(counts, dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def _as_samples(x: Union[Trace, np.ndarray]) -> np.ndarray:
    if isinstance(x, Trace):
        return x.valid()
    return np.asarray(x, dtype=np.float64)


def _bin_indices(v: np.ndarray, n_bins: int) -> np.ndarray:
    """Equal-width bin index of every sample over the array's own range.

    The top edge closes the last bin, so every finite sample lands in
    exactly one of the n_bins cells.
    """
    lo = float(v.min())
    hi = float(v.max())
    if not hi > lo:
        raise DegenerateRange("trace has zero dynamic range; cannot bin")
    scale = n_bins / (hi - lo)
    idx = ((v - lo) * scale).astype(np.int64)
    np.clip(idx, 0, n_bins - 1, out=idx)
    return idx


def _edges(v: np.ndarray, n_bins: int) -> np.ndarray:
    return np.linspace(float(v.min()), float(v.max()), n_bins + 1)


def histogram2d(a, b, n_bins_a: int = 100, n_bins_b: int = 100) -> JointHistogram:
    """Joint histogram of two aligned records.

    Bin ranges span [min, max] of each record independently; every sample
    pair lands in exactly one cell.
    """
    if n_bins_a < 2 or n_bins_b < 2:
        raise InvalidParams("need at least 2 bins per axis")
    va, vb = _as_samples(a), _as_samples(b)
    if len(va) != len(vb):
        raise InvalidParams(f"records differ in length: {len(va)} vs {len(vb)}")
    if len(va) == 0:
        raise EmptyHistogram("no samples to histogram")
    ia = _bin_indices(va, n_bins_a)
    ib = _bin_indices(vb, n_bins_b)
    flat = np.bincount(ia * n_bins_b + ib, minlength=n_bins_a * n_bins_b)
    return JointHistogram(
        counts=flat.reshape(n_bins_a, n_bins_b),
        edges_a=_edges(va, n_bins_a),
        edges_b=_edges(vb, n_bins_b),
    )


def mi_from_hist(h: JointHistogram) -> float:
    """Mutual information in bits from a joint histogram.

    Marginals are derived from the joint, zero cells contribute zero, and the
    per-cell count ratios are formed in exact integer arithmetic so an exactly
    factorizable histogram yields exactly 0.0.  Terms are accumulated with
    math.fsum, making the result independent of cell order (hence exactly
    symmetric under transposition and bin permutations).
    """
    counts = h.counts
    total = h.total
    if total <= 0:
        raise EmptyHistogram("histogram holds no samples")
    row = counts.sum(axis=1)
    col = counts.sum(axis=0)
    ii, jj = np.nonzero(counts)
    c = counts[ii, jj]
    num = c * total          # int64, exact for total <= ~3e9 at 100x100 bins
    den = row[ii] * col[jj]
    terms = (c / total) * (np.log2(num) - np.log2(den))
    return max(0.0, math.fsum(terms))


def miller_madow_correction(h: JointHistogram) -> float:
    """Miller-Madow bias estimate in bits (subtract from the naive MI).

    (K_joint - K_a - K_b + 1) / (2 N ln 2) with K the occupied-cell counts;
    for independent inputs this approximates the naive estimator's bias floor.
    """
    total = h.total
    if total <= 0:
        raise EmptyHistogram("histogram holds no samples")
    k_joint = int(np.count_nonzero(h.counts))
    k_a = int(np.count_nonzero(h.counts.sum(axis=1)))
    k_b = int(np.count_nonzero(h.counts.sum(axis=0)))
    return (k_joint - k_a - k_b + 1) / (2.0 * total * math.log(2.0))


# ---------------------------------------------------------------------------
# delay scan kernels
# ---------------------------------------------------------------------------

if _HAVE_NUMBA:

    @numba.njit(cache=True, parallel=True)
    def _scan_kernel(ia, ib, b_starts, n_win, m):
        """MI per shift; ia is the fixed window, ib the full index array.

        For shift s, pairs are (ia[i], ib[b_starts[s] + i]) for i < n_win.
        Returns MI in bits per shift.
        """
        n_shifts = b_starts.shape[0]
        out = np.empty(n_shifts, dtype=np.float64)
        for s in numba.prange(n_shifts):
            hist = np.zeros(m * m, dtype=np.int64)
            b0 = b_starts[s]
            for i in range(n_win):
                hist[ia[i] * m + ib[b0 + i]] += 1
            row = np.zeros(m, dtype=np.int64)
            col = np.zeros(m, dtype=np.int64)
            for r in range(m):
                base = r * m
                for cidx in range(m):
                    v = hist[base + cidx]
                    row[r] += v
                    col[cidx] += v
            total = float(n_win)
            acc = 0.0
            for r in range(m):
                base = r * m
                rv = float(row[r])
                if rv == 0.0:
                    continue
                for cidx in range(m):
                    v = hist[base + cidx]
                    if v > 0:
                        p = v / total
                        acc += p * np.log2(v * total / (rv * float(col[cidx])))
            out[s] = acc if acc > 0.0 else 0.0
        return out

else:  # pragma: no cover - exercised only without numba

    def _scan_kernel(ia, ib, b_starts, n_win, m):
        ia100 = ia.astype(np.int64) * m
        out = np.empty(len(b_starts), dtype=np.float64)
        for s, b0 in enumerate(b_starts):
            flat = np.bincount(ia100 + ib[b0 : b0 + n_win], minlength=m * m)
            counts = flat.reshape(m, m)
            row = counts.sum(axis=1)
            col = counts.sum(axis=0)
            ii, jj = np.nonzero(counts)
            c = counts[ii, jj].astype(np.float64)
            terms = (c / n_win) * np.log2(c * n_win / (row[ii] * col[jj]))
            out[s] = max(0.0, float(terms.sum()))
        return out


def _resolve_step_samples(step: float, sample_rate: float) -> int:
    ratio = step * sample_rate
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-6:
        raise StepNotSampleAligned(
            f"step {step:g} s is not an integer multiple of the sample period "
            f"{1.0 / sample_rate:g} s"
        )
    return k


def mi_delay_scan(
    pair: TracePair,
    step: float = 0.5e-9,
    range_: float = 300e-9,
    n_bins: int = 100,
    workers: Optional[int] = None,
) -> MICurve:
    """MI versus relative delay over [-range_, +range_].

    Each shift is an independent histogram over the overlap of the two
    guard-stripped records; shifts are computed in parallel (numba threads).
    ``workers`` limits the thread count (None uses the numba default).
    """
    validate_pair(pair.a, pair.b)
    fs = pair.a.spec.sample_rate
    n = pair.a.spec.n_samples
    step_samples = _resolve_step_samples(step, fs)
    n_steps = int(np.floor(range_ / step + 1e-9))
    if n_steps < 1:
        raise InvalidParams("delay range must cover at least one step")
    max_shift = n_steps * step_samples
    if range_ > 0.25 * pair.a.spec.duration:
        raise InvalidParams("delay range must be small compared with the trace duration")

    # Fixed window on a; b slides by the shift.  Window bounds keep every
    # b index inside b's guard-stripped region for all shifts.
    margin = max(pair.a.guard, pair.b.guard + max_shift)
    lo, hi = margin, n - margin
    if hi - lo < 16 * n_bins:
        raise InvalidParams("guards and delay range leave too few samples to bin")

    va = pair.a.samples[pair.a.guard : n - pair.a.guard]
    vb = pair.b.samples[pair.b.guard : n - pair.b.guard]
    ia_full = _bin_indices(va, n_bins)
    ib_full = _bin_indices(vb, n_bins)
    ia = np.ascontiguousarray(ia_full[lo - pair.a.guard : hi - pair.a.guard], dtype=np.int16)
    ib = np.ascontiguousarray(ib_full, dtype=np.int16)

    # positive delay d: a retarded, so pair a[i] with b[i - d].
    shifts = np.arange(-n_steps, n_steps + 1, dtype=np.int64) * step_samples
    b_starts = (lo - pair.b.guard) - shifts
    n_win = hi - lo

    if _HAVE_NUMBA and workers is not None:
        old = numba.get_num_threads()
        numba.set_num_threads(max(1, min(int(workers), old)))
        try:
            mi = _scan_kernel(ia, ib, b_starts, n_win, n_bins)
        finally:
            numba.set_num_threads(old)
    else:
        mi = _scan_kernel(ia, ib, b_starts, n_win, n_bins)

    delays = shifts.astype(np.float64) / fs
    return MICurve(delays=delays, mi=mi, spread=None, n_repeats=1, normalized=False)


def average_curves(curves: Sequence[MICurve]) -> MICurve:
    """Pointwise mean and one-standard-deviation spread over repeats."""
    if not curves:
        raise InvalidParams("need at least one curve")
    ref = curves[0]
    for c in curves[1:]:
        if len(c.delays) != len(ref.delays) or not np.array_equal(c.delays, ref.delays):
            raise GridMismatch("curves are on different delay grids")
    stack = np.vstack([c.mi for c in curves])
    mean = stack.mean(axis=0)
    if len(curves) > 1:
        spread = stack.std(axis=0, ddof=1)
    else:
        spread = np.zeros_like(mean)
    return MICurve(
        delays=ref.delays.copy(),
        mi=mean,
        spread=spread,
        n_repeats=len(curves),
        normalized=all(c.normalized for c in curves),
    )


def normalize_curve(curve: MICurve, reference_peak: float) -> MICurve:
    """Divide MI and spread by a reference peak height."""
    if not reference_peak > 0:
        raise NonpositiveReference(f"reference peak must be > 0, got {reference_peak}")
    spread = None if curve.spread is None else curve.spread / reference_peak
    return MICurve(
        delays=curve.delays.copy(),
        mi=curve.mi / reference_peak,
        spread=spread,
        n_repeats=curve.n_repeats,
        normalized=True,
    )


def fwhm(curve: MICurve) -> float:
    """Full width at half maximum of a delay curve, in seconds.

    The half level is half the grid maximum; crossings are located by linear
    interpolation between adjacent grid points.  If the curve crosses the half
    level more than twice (side structure), the outermost pair is used and a
    warning is emitted.
    """
    m = curve.mi
    i_pk = int(np.argmax(m))
    if i_pk == 0 or i_pk == len(m) - 1:
        raise NoPeak("curve maximum lies on the delay-range edge")
    half = 0.5 * m[i_pk]
    above = m >= half
    if above[0] or above[-1]:
        raise NoPeak("half level is not crossed inside the delay range")
    n_crossings = int(np.count_nonzero(np.diff(above.astype(np.int8)) != 0))
    if n_crossings > 2:
        warnings.warn(
            f"curve crosses its half level {n_crossings} times; "
            "using the outermost pair",
            stacklevel=2,
        )
    d = curve.delays
    idx = np.nonzero(above)[0]
    lo, hi = int(idx[0]), int(idx[-1])
    x1 = d[lo - 1] + (half - m[lo - 1]) / (m[lo] - m[lo - 1]) * (d[lo] - d[lo - 1])
    x2 = d[hi] + (half - m[hi]) / (m[hi + 1] - m[hi]) * (d[hi + 1] - d[hi])
    return float(x2 - x1)
