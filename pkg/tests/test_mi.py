import numpy as np
import pytest

from twinbeam.errors import (
    DegenerateRange,
    EmptyHistogram,
    GridMismatch,
    NonpositiveReference,
    NoPeak,
    StepNotSampleAligned,
)
from twinbeam.mi import (
    JointHistogram,
    average_curves,
    fwhm,
    histogram2d,
    mi_delay_scan,
    mi_from_hist,
    miller_madow_correction,
    normalize_curve,
)
from twinbeam.model import GAUSSIAN_FWHM_FACTOR, gaussian_g
from twinbeam.trace import MICurve, TracePair

from conftest import gaussian_pair, make_trace


def hist_from_counts(counts):
    counts = np.asarray(counts, dtype=np.int64)
    return JointHistogram(
        counts=counts,
        edges_a=np.arange(counts.shape[0] + 1, dtype=float),
        edges_b=np.arange(counts.shape[1] + 1, dtype=float),
    )


class TestHistogram2d:
    def test_constant_trace_degenerate(self):
        rng = np.random.default_rng(0)
        with pytest.raises(DegenerateRange):
            histogram2d(rng.standard_normal(1000), np.zeros(1000))

    def test_total_equals_sample_count(self):
        x, y = gaussian_pair(0.5, 50_000, seed=1)
        h = histogram2d(x, y, 100, 100)
        assert h.total == 50_000

    def test_every_sample_lands_once_including_extremes(self):
        x = np.linspace(-1.0, 1.0, 1001)
        h = histogram2d(x, x[::-1], 10, 10)
        assert h.total == 1001

    def test_uniform_independent_cell_occupancy(self):
        rng = np.random.default_rng(42)
        n, m = 1_000_000, 10
        h = histogram2d(rng.uniform(size=n), rng.uniform(size=n), m, m)
        expected = n / m ** 2
        # chi-square consistency: normalized statistic near 1
        chi2 = float(((h.counts - expected) ** 2 / expected).sum())
        dof = m * m - 1
        assert abs(chi2 - dof) < 5.0 * np.sqrt(2 * dof)


class TestMiFromHist:
    def test_product_histogram_exactly_zero(self):
        r = np.array([5, 17, 100, 3])
        c = np.array([11, 2, 40])
        h = hist_from_counts(np.outer(r, c))
        assert mi_from_hist(h) == 0.0

    def test_diagonal_is_log2_bins(self):
        h = hist_from_counts(np.diag(np.full(100, 7)))
        assert mi_from_hist(h) == pytest.approx(np.log2(100), abs=1e-12)

    def test_empty_histogram(self):
        with pytest.raises(EmptyHistogram):
            mi_from_hist(hist_from_counts(np.zeros((4, 4))))

    def test_gaussian_oracle_rho_09(self):
        # analytic MI of a bivariate Gaussian: -log2(1 - rho^2)/2
        x, y = gaussian_pair(0.9, 500_000, seed=2)
        est = mi_from_hist(histogram2d(x, y, 100, 100))
        assert est == pytest.approx(-0.5 * np.log2(1 - 0.81), abs=0.05)

    def test_nonnegative_on_random_histograms(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            shape = rng.integers(2, 12, size=2)
            counts = rng.integers(0, 30, size=shape)
            if counts.sum() == 0:
                counts[0, 0] = 1
            assert mi_from_hist(hist_from_counts(counts)) >= 0.0

    def test_transpose_symmetry_exact(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            counts = rng.integers(0, 50, size=(13, 7))
            counts[0, 0] += 1
            a = mi_from_hist(hist_from_counts(counts))
            b = mi_from_hist(hist_from_counts(counts.T))
            assert a == b

    def test_bin_permutation_invariance_exact(self):
        rng = np.random.default_rng(5)
        counts = rng.integers(0, 50, size=(9, 9))
        counts[1, 2] += 3
        base = mi_from_hist(hist_from_counts(counts))
        for _ in range(10):
            pr = rng.permutation(9)
            pc = rng.permutation(9)
            assert mi_from_hist(hist_from_counts(counts[pr][:, pc])) == base

    def test_affine_map_invariance_exact(self):
        # dyadic affine map: bin indices identical, hence MI bit-identical
        x, y = gaussian_pair(0.6, 100_000, seed=6)
        a = mi_from_hist(histogram2d(x, y, 64, 64))
        b = mi_from_hist(histogram2d(4.0 * x + 3.0, y, 64, 64))
        assert a == b

    def test_miller_madow_floor(self):
        x, y = gaussian_pair(0.0, 1_000_000, seed=7)
        h = histogram2d(x, y, 100, 100)
        naive = mi_from_hist(h)
        corr = miller_madow_correction(h)
        # naive estimate on independent data is close to the bias estimate
        assert naive == pytest.approx(corr, rel=0.6)
        assert abs(naive - corr) < 2e-3


def _scan_pair(x, y, guard=0, **kw):
    a = make_trace(x, guard=guard)
    b = make_trace(y, guard=guard)
    return TracePair(a=a, b=b)


class TestDelayScan:
    def test_positive_delay_means_a_retarded(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal(2 ** 16)
        k = 24
        a = np.roll(x, k)      # a lags: a[i] = x[i - k]
        pair = _scan_pair(a, x, guard=64)
        curve = mi_delay_scan(pair, step=0.5e-9, range_=40e-9)
        assert curve.peak_delay == pytest.approx(k * 0.5e-9, abs=1e-15)

    def test_shift_equivariance_exact(self):
        rng = np.random.default_rng(9)
        n = 2 ** 16
        x = rng.standard_normal(n)
        y = 0.8 * x + 0.6 * rng.standard_normal(n)
        # pin both bin ranges with interior sentinels so edges are identical
        # for the rolled copy and equality is exact, not just statistical
        y[n // 2], y[n // 2 + 1] = 9.0, -9.0
        k = 10
        base = mi_delay_scan(_scan_pair(x, y, guard=128), range_=30e-9)
        rolled = mi_delay_scan(_scan_pair(x, np.roll(y, k), guard=128), range_=30e-9)
        # delaying b by k samples translates the curve by k grid points
        assert np.array_equal(rolled.mi[:-k], base.mi[k:])
        assert rolled.peak_delay == pytest.approx(base.peak_delay - k * 0.5e-9,
                                                  abs=1e-15)

    def test_step_must_be_sample_aligned(self):
        x, y = gaussian_pair(0.5, 2 ** 14, seed=10)
        with pytest.raises(StepNotSampleAligned):
            mi_delay_scan(_scan_pair(x, y), step=0.75e-9, range_=10e-9)

    def test_matches_public_estimator(self):
        # the fused kernel must agree with histogram2d + mi_from_hist
        rng = np.random.default_rng(11)
        n = 2 ** 15
        x = rng.standard_normal(n)
        y = 0.7 * x + rng.standard_normal(n)
        # sentinels keep whole-trace and window bin edges identical
        x[n // 2], x[n // 2 + 1] = 8.0, -8.0
        y[n // 2 + 2], y[n // 2 + 3] = 8.0, -8.0
        curve = mi_delay_scan(_scan_pair(x, y), step=0.5e-9, range_=2e-9)
        i0 = len(curve.mi) // 2  # zero delay
        # the scan window drops max_shift samples at each end
        ref = mi_from_hist(histogram2d(x[4:-4], y[4:-4], 100, 100))
        assert curve.mi[i0] == pytest.approx(ref, abs=1e-12)

    def test_workers_parameter_deterministic(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal(2 ** 15)
        y = 0.7 * x + rng.standard_normal(2 ** 15)
        c1 = mi_delay_scan(_scan_pair(x, y), range_=10e-9, workers=1)
        c2 = mi_delay_scan(_scan_pair(x, y), range_=10e-9, workers=2)
        assert np.array_equal(c1.mi, c2.mi)


class TestCurveOps:
    def _curve(self, values, step=0.5e-9):
        n = len(values)
        delays = (np.arange(n) - n // 2) * step
        return MICurve(delays=delays, mi=np.asarray(values, float))

    def test_average_identical_curves(self):
        c = self._curve(gaussian_g(np.linspace(-3, 3, 101), 1.0))
        avg = average_curves([c] * 10)
        assert np.allclose(avg.mi, c.mi, rtol=1e-15, atol=0)
        assert np.all(avg.spread <= 1e-15)
        assert avg.n_repeats == 10

    def test_average_two_known_curves(self):
        c1 = self._curve([0.0, 1.0, 0.0])
        c2 = self._curve([0.2, 0.6, 0.2])
        avg = average_curves([c1, c2])
        assert np.allclose(avg.mi, [0.1, 0.8, 0.1])
        # sample standard deviation (ddof=1) of two points: |x1-x2|/sqrt(2)
        assert np.allclose(avg.spread, np.array([0.2, 0.4, 0.2]) / np.sqrt(2))

    def test_grid_mismatch(self):
        c1 = self._curve([0.0, 1.0, 0.0])
        c2 = self._curve([0.0, 1.0, 0.0], step=1e-9)
        with pytest.raises(GridMismatch):
            average_curves([c1, c2])

    def test_normalize_by_own_peak(self):
        c = self._curve([0.1, 2.0, 0.3])
        n = normalize_curve(c, c.peak)
        assert n.peak == 1.0
        assert n.normalized

    def test_normalize_linear(self):
        c = self._curve([0.1, 2.0, 0.3])
        n1 = normalize_curve(c, 1.0)
        n2 = normalize_curve(c, 2.0)
        assert np.allclose(n1.mi, 2.0 * n2.mi)

    def test_normalize_rejects_nonpositive(self):
        c = self._curve([0.1, 2.0, 0.3])
        with pytest.raises(NonpositiveReference):
            normalize_curve(c, 0.0)


class TestFwhm:
    def test_exact_gaussian(self):
        d = np.arange(-600, 601) * 0.5e-9
        c = MICurve(delays=d, mi=gaussian_g(d, 32.1e-9))
        w = fwhm(c)
        assert w == pytest.approx(GAUSSIAN_FWHM_FACTOR * 32.1e-9, abs=0.2e-9)

    def test_triangle_analytic(self):
        # triangle peak 1 at 0, reaching 0 at +/-100 ns: FWHM = 100 ns
        d = np.arange(-300, 301) * 0.5e-9
        tri = np.maximum(0.0, 1.0 - np.abs(d) / 100e-9)
        w = fwhm(MICurve(delays=d, mi=tri))
        assert w == pytest.approx(100e-9, rel=1e-9)

    def test_peak_on_edge_raises(self):
        d = np.arange(0, 100) * 0.5e-9
        with pytest.raises(NoPeak):
            fwhm(MICurve(delays=d, mi=np.linspace(0, 1, 100)))

    def test_multimodal_warns_and_uses_outermost(self):
        d = np.arange(-200, 201) * 0.5e-9
        main = gaussian_g(d, 10e-9)
        side = 0.7 * gaussian_g(d - 60e-9, 5e-9)
        with pytest.warns(UserWarning, match="outermost"):
            w = fwhm(MICurve(delays=d, mi=main + side))
        assert w > 60e-9  # spans out to the side lobe
