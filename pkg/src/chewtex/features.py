"""Length-invariant features for audio segments (chews or fixed windows).

Each segment is summarized by log-compressed energies in log-spaced frequency
bands, the Katz fractal dimension, the log10 condition number of its
autocorrelation Toeplitz matrix, and standardized third/fourth moments.  The
descriptor dimension depends only on the band plan, never on segment length.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, signal

from .errors import ConfigError, SegmentTooShortError

logger = logging.getLogger(__name__)

MIN_SEGMENT_SAMPLES = 64
STFT_WINDOW_S = 0.064  # Hann analysis window, 50% overlap
BAND_LOG_EPS = 1e-12  # band energies mapped through log(1 + power / eps)
CN_LOG10_CAP = 12.0
DEFAULT_ORDER_P = 10
DEFAULT_WINDOW_S = 0.5
DEFAULT_STEP_S = 0.1

# Eleven octave-spaced bands ending at 2 kHz plus the two added top bands.
DEFAULT_BAND_EDGES_HZ = tuple(2000.0 / 2**i for i in range(11, 0, -1)) + (
    2000.0,
    4000.0,
    8000.0,
)


@dataclass(frozen=True)
class BandPlan:
    edges_hz: tuple

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges_hz)
        if len(edges) < 2:
            raise ConfigError("band plan needs at least two edges")
        if any(hi <= lo for lo, hi in zip(edges, edges[1:])):
            raise ConfigError("band edges must be strictly increasing")
        if edges[0] <= 0:
            raise ConfigError("band edges must be positive")
        object.__setattr__(self, "edges_hz", edges)

    @property
    def count(self) -> int:
        return len(self.edges_hz) - 1

    def bands(self) -> list:
        return list(zip(self.edges_hz, self.edges_hz[1:]))

    def for_rate(self, sample_rate: float) -> "BandPlan":
        """Drop bands whose top edge exceeds the Nyquist frequency."""
        nyquist = sample_rate / 2
        edges = [self.edges_hz[0]]
        for hi in self.edges_hz[1:]:
            if hi <= nyquist + 1e-9:
                edges.append(hi)
        if len(edges) < 2:
            raise ConfigError(f"no usable band below Nyquist ({nyquist} Hz)")
        return BandPlan(tuple(edges))


def default_band_plan(sample_rate: float | None = None) -> BandPlan:
    plan = BandPlan(DEFAULT_BAND_EDGES_HZ)
    return plan if sample_rate is None else plan.for_rate(sample_rate)


@dataclass(frozen=True)
class FeatureVector:
    band_energies: np.ndarray
    fd: float
    cn: float
    m3: float
    m4: float

    def as_array(self) -> np.ndarray:
        return np.concatenate(
            [np.asarray(self.band_energies, dtype=np.float64),
             [self.fd, self.cn, self.m3, self.m4]]
        )

    @property
    def dimension(self) -> int:
        return len(self.band_energies) + 4


def feature_names(plan: BandPlan) -> list:
    names = [f"logE_{lo:g}_{hi:g}Hz" for lo, hi in plan.bands()]
    return names + ["fd", "cn_log10", "m3", "m4"]


def band_energies(segment, fs: float, plan: BandPlan) -> np.ndarray:
    """Per-band signal power from an averaged short-time periodogram.

    Power in a band is the integral of the one-sided Welch density over the
    band's bins, so the sum over all bands estimates the segment's total
    power (Parseval).  Each band is log-compressed as log(1 + p / eps).
    """
    x = np.asarray(segment, dtype=np.float64)
    if len(x) < MIN_SEGMENT_SAMPLES:
        raise SegmentTooShortError(
            f"segment of {len(x)} samples is shorter than {MIN_SEGMENT_SAMPLES}"
        )
    if plan.edges_hz[-1] > fs / 2 + 1e-9:
        raise ConfigError(
            f"band plan top edge {plan.edges_hz[-1]} Hz exceeds Nyquist ({fs / 2} Hz); "
            "resolve the plan with BandPlan.for_rate first"
        )
    nperseg = min(int(round(STFT_WINDOW_S * fs)), len(x))
    freqs, psd = signal.welch(
        x,
        fs=fs,
        window="hann",
        nperseg=nperseg,
        noverlap=nperseg // 2,
        detrend=False,
        scaling="density",
    )
    df = freqs[1] - freqs[0]
    powers = np.empty(plan.count)
    for i, (lo, hi) in enumerate(plan.bands()):
        mask = (freqs >= lo) & (freqs < hi)
        powers[i] = psd[mask].sum() * df
    return np.log1p(powers / BAND_LOG_EPS)


def band_powers(segment, fs: float, plan: BandPlan) -> np.ndarray:
    """Pre-log per-band powers (exposed for spectral sanity checks)."""
    return np.expm1(band_energies(segment, fs, plan)) * BAND_LOG_EPS


def fractal_dimension(segment) -> float:
    """Katz fractal dimension of the sample polyline.

    FD = log10(n) / (log10(n) + log10(d / L)) with n the number of steps,
    L the summed absolute first differences, and d the maximum deviation
    from the first sample.  Constant segments map to exactly 1.0.
    """
    x = np.asarray(segment, dtype=np.float64)
    if len(x) < 3:
        raise SegmentTooShortError(f"fractal dimension needs >= 3 samples, got {len(x)}")
    length = np.sum(np.abs(np.diff(x)))
    extent = np.max(np.abs(x - x[0]))
    if length == 0.0 or extent == 0.0:
        return 1.0
    n_steps = len(x) - 1
    return float(np.log10(n_steps) / (np.log10(n_steps) + np.log10(extent / length)))


def condition_number(segment, order_p: int = DEFAULT_ORDER_P) -> float:
    """log10 condition number of the order-p autocorrelation Toeplitz matrix.

    Uses biased autocorrelation lags of the zero-mean segment.  Numerically
    singular matrices (and ratios beyond 1e12) are capped at 12.0.
    """
    if order_p < 2:
        raise ConfigError(f"autocorrelation order must be >= 2, got {order_p}")
    x = np.asarray(segment, dtype=np.float64)
    n = len(x)
    if n <= order_p:
        raise SegmentTooShortError(
            f"condition number of order {order_p} needs more than {order_p} samples, got {n}"
        )
    x = x - x.mean()
    lags = np.array([np.dot(x[: n - m], x[m:]) / n for m in range(order_p)])
    toeplitz = linalg.toeplitz(lags)
    svals = np.linalg.svd(toeplitz, compute_uv=False)
    smax, smin = svals[0], svals[-1]
    if smax <= 0.0 or smin <= smax * 1e-15:
        return CN_LOG10_CAP
    return float(min(np.log10(smax / smin), CN_LOG10_CAP))


def higher_moments(segment) -> tuple:
    """Standardized third and fourth central moments (skewness, kurtosis).

    Segments with (numerically) zero variance return (0.0, 0.0).
    """
    x = np.asarray(segment, dtype=np.float64)
    if len(x) < 4:
        raise SegmentTooShortError(f"moments need >= 4 samples, got {len(x)}")
    centered = x - x.mean()
    var = np.mean(centered**2)
    if var <= 1e-30:
        return 0.0, 0.0
    std = np.sqrt(var)
    m3 = float(np.mean(centered**3) / std**3)
    m4 = float(np.mean(centered**4) / std**4)
    return m3, m4


def extract_segment_features(
    segment, fs: float, plan: BandPlan, order_p: int = DEFAULT_ORDER_P
) -> FeatureVector:
    """Concatenated descriptor [band log-energies | fd | cn | m3 | m4]."""
    energies = band_energies(segment, fs, plan)
    fd = fractal_dimension(segment)
    cn = condition_number(segment, order_p)
    m3, m4 = higher_moments(segment)
    return FeatureVector(band_energies=energies, fd=fd, cn=cn, m3=m3, m4=m4)


def extract_matrix(segments, fs: float, plan: BandPlan, order_p: int = DEFAULT_ORDER_P):
    """Feature matrix with one row per segment."""
    rows = [extract_segment_features(seg, fs, plan, order_p).as_array() for seg in segments]
    return np.asarray(rows)


def window_bout(
    samples,
    fs: float,
    win_s: float = DEFAULT_WINDOW_S,
    step_s: float = DEFAULT_STEP_S,
) -> list:
    """Slice a bout into overlapping fixed-length windows, in temporal order.

    Bouts shorter than one window yield a single whole-bout window so that
    every annotated bout stays usable in evaluation.
    """
    if win_s <= 0 or step_s <= 0:
        raise ConfigError("window and step must be positive")
    x = np.asarray(samples, dtype=np.float64)
    win_n = int(round(win_s * fs))
    step_n = int(round(step_s * fs))
    if len(x) < win_n:
        logger.debug("bout of %d samples shorter than one %d-sample window", len(x), win_n)
        return [x]
    count = (len(x) - win_n) // step_n + 1
    return [x[i * step_n : i * step_n + win_n] for i in range(count)]
