"""Feature detectors: pilot-period cross-products, cyclic-prefix metrics, PSD features.

Each detector returns a raw metric whose units depend on the feature (V^4 for
the pilot-period cross-product, V^2 for the CP metrics, dimensionless for the
PSD features).  ``dic_normalize`` divides a raw metric by the estimated total
power raised to the matching exponent, which removes the noise level from the
null distribution entirely; thresholds can then be dimensionless constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .core import IqBuffer


@dataclass(frozen=True)
class WelchConfig:
    """Averaged-periodogram settings: DFT size m, segment shift d, window kind.

    Only the rectangular window is supported; it gives the sharpest frequency
    resolution, which the narrowband peak features rely on.
    """

    m: int = 256
    d: int = 128
    window: str = "rectangular"

    def __post_init__(self):
        if self.m < 2 or (self.m & (self.m - 1)) != 0:
            raise ValueError("m must be a power of two")
        if not 0 < self.d <= self.m:
            raise ValueError("d must satisfy 0 < d <= m")
        if self.window != "rectangular":
            raise ValueError("only the rectangular window is supported")


@dataclass(frozen=True)
class WmThresholds:
    """Decision levels for the narrowband (wireless microphone) test.

    phi: minimum PSD peak-to-average ratio.
    psi: maximum sparsity fraction (share of bins above the relative level).
    rho: relative level; a bin counts as occupied when >= (1+rho) * mean.
    """

    phi: float = 2.0
    psi: float = 0.2
    rho: float = 0.2

    def __post_init__(self):
        if not self.phi > 1:
            raise ValueError("phi must exceed 1")
        if not 0 < self.psi <= 1:
            raise ValueError("psi must lie in (0, 1]")
        if not self.rho > 0:
            raise ValueError("rho must be positive")


@dataclass(frozen=True)
class Psd:
    """Estimated PSD bins in FFT order (bin 0 = DC) plus an exclusion set.

    Excluded bins (known receiver spurs) are ignored by the peak and sparsity
    features but keep their index positions so bin <-> frequency mapping stays
    trivial.
    """

    bins: np.ndarray
    excluded: frozenset[int] = frozenset()

    def __post_init__(self):
        arr = np.asarray(self.bins, dtype=np.float64)
        object.__setattr__(self, "bins", arr)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("bins must be a non-empty 1-d sequence")
        if np.any(arr < 0):
            raise ValueError("PSD bins must be non-negative")
        if any(not 0 <= b < arr.size for b in self.excluded):
            raise ValueError("excluded bin index out of range")

    def with_excluded(self, bins: frozenset[int] | set[int]) -> "Psd":
        return Psd(self.bins, frozenset(self.excluded) | frozenset(bins))

    def active_values(self) -> np.ndarray:
        if not self.excluded:
            return self.bins
        mask = np.ones(self.bins.size, dtype=bool)
        mask[list(self.excluded)] = False
        return self.bins[mask]


def lag_autocorr(buf: IqBuffer, lag: int, upper: int) -> np.ndarray:
    """r[n] = y[n] * conj(y[n + lag]) for n = 0 .. upper-1."""
    if lag < 1:
        raise ValueError("lag must be >= 1")
    if upper < 1 or upper + lag > len(buf):
        raise ValueError("upper + lag must not exceed the buffer length")
    y = buf.samples
    return y[:upper] * np.conj(y[lag : lag + upper])


def tdsc_mrc_metric(buf: IqBuffer, period_len: int, n_periods: int, j: int) -> float:
    """Cross-product detector for a repeating pilot structure of period L samples.

    For each lag multiple k = 1 .. j+1 it forms
        R_k = (1/sqrt(L)) * sum_{n=0}^{(n_periods-k)*L - 1} y[n] conj(y[n+kL])
    and returns |sum_{k=1}^{j} R_k conj(R_{k+1})|.  Only a structure that
    repeats every L samples survives in all the R_k coherently, so the metric
    separates pilot-bearing OFDM from anything else.
    """
    L, n_p = period_len, n_periods
    if L < 1 or n_p < 3:
        raise ValueError("need period_len >= 1 and n_periods >= 3")
    if not 1 <= j <= n_p - 2:
        raise ValueError("j must lie in [1, n_periods - 2]")
    y = buf.samples
    if len(y) < n_p * L:
        raise ValueError("buffer shorter than n_periods * period_len")
    sqrt_l = np.sqrt(L)
    R = np.empty(j + 1, dtype=np.complex128)
    for k in range(1, j + 2):
        m = (n_p - k) * L
        # vdot conjugates its first argument; conj() flips to sum y[n] y*[n+kL]
        R[k - 1] = np.conj(np.vdot(y[:m], y[k * L : k * L + m])) / sqrt_l
    return float(np.abs(np.sum(R[:-1] * np.conj(R[1:]))))


def symbol_align(r: np.ndarray, n_dft: int, n_cp: int, n_total: int | None = None) -> np.ndarray:
    """Fold a lag-n_dft autocorrelation onto one OFDM symbol period.

    Returns R[n] = sum_l r[n + l*(n_dft+n_cp)] for n = 0 .. n_dft+n_cp-1, with
    l running over floor((n_total - n_dft + 1) / (n_dft + n_cp)) periods.
    ``n_total`` is the sample count of the buffer r came from and defaults to
    len(r) + n_dft; when the last fold would index one element past the end of
    r (exact-divisibility corner) that single missing term is omitted.
    """
    r = np.asarray(r)
    sym = n_dft + n_cp
    if n_total is None:
        n_total = len(r) + n_dft
    l_count = (n_total - n_dft + 1) // sym
    if l_count < 1:
        raise ValueError("not even one full symbol period within bounds")
    if len(r) < l_count * sym - 1:
        raise ValueError("r too short for the requested n_total")
    out = np.zeros(sym, dtype=np.complex128)
    for l in range(l_count):
        seg = r[l * sym : l * sym + sym]
        out[: len(seg)] += seg
    return out


def frame_prealign(r: np.ndarray, frame_len: int) -> np.ndarray:
    """Fold r modulo frame_len, summing all complete and partial frames.

    Used ahead of ``symbol_align`` when CP lengths vary inside a periodic
    frame (e.g. a longer CP on the first symbol of a slot): folding on the
    frame period first makes the per-symbol CP peaks add coherently.
    """
    r = np.asarray(r)
    if len(r) < frame_len:
        raise ValueError("r shorter than one frame")
    out = np.zeros(frame_len, dtype=np.complex128)
    for start in range(0, len(r), frame_len):
        seg = r[start : start + frame_len]
        out[: len(seg)] += seg
    return out


def cp_sw_metric(R: np.ndarray, n_cp: int) -> float:
    """Maximum magnitude of a CP-length sliding window over the cyclically extended R.

    R is one folded symbol period; the window sum peaks where the CP copies
    line up, wherever the symbol boundary happens to sit.
    """
    R = np.asarray(R)
    n = len(R)
    if not 0 < n_cp < n:
        raise ValueError("n_cp must be positive and smaller than len(R)")
    ext = np.concatenate([R, R[: n_cp - 1]]) if n_cp > 1 else R
    win = np.convolve(ext, np.ones(n_cp), mode="valid")
    return float(np.abs(win).max())


def cp_sum_metric(buf: IqBuffer, n_dft: int) -> float:
    """Coherent sum of the lag-n_dft autocorrelation, normalized by sqrt(N - n_dft + 1).

    Burst-timing agnostic: the CP contribution is phase-aligned at this lag no
    matter where symbols or bursts start, so plain summation accumulates it.
    """
    y = buf.samples
    n = len(y)
    if n <= n_dft:
        raise ValueError("buffer must be longer than n_dft")
    m = n - n_dft
    s = np.conj(np.vdot(y[:m], y[n_dft:]))
    return float(np.abs(s) / np.sqrt(n - n_dft + 1))


def estimate_psd_welch(buf: IqBuffer, cfg: WelchConfig) -> Psd:
    """Averaged periodogram over rectangular segments shifted by cfg.d.

    Uses K = floor((N - m) / d) + 1 segments; a tail too short for a full
    segment is dropped.  With the rectangular window the normalization is m,
    so white noise of power p produces bins near p and a unit tone on bin
    center produces m.
    """
    y = buf.samples
    n, m, d = len(y), cfg.m, cfg.d
    if n < m:
        raise ValueError("buffer shorter than one DFT segment")
    segs = np.lib.stride_tricks.sliding_window_view(y, m)[::d]
    spec = sfft.fft(segs, axis=1)
    bins = (spec.real**2 + spec.imag**2).mean(axis=0) / m
    return Psd(bins=bins)


def psd_par(psd: Psd) -> float:
    """Peak-to-average ratio over the non-excluded bins."""
    act = psd.active_values()
    if act.size == 0:
        raise ValueError("no non-excluded bins")
    mean = act.mean()
    if not mean > 0:
        raise ValueError("zero-mean PSD")
    return float(act.max() / mean)


def psd_ds(psd: Psd, rho: float) -> float:
    """Sparsity fraction: share of bins at or above (1 + rho) times the mean.

    The count runs over non-excluded bins; the denominator is the full bin
    count so the fraction stays comparable across exclusion sets.
    """
    act = psd.active_values()
    if act.size == 0:
        raise ValueError("no non-excluded bins")
    mean = act.mean()
    if not mean > 0:
        raise ValueError("zero-mean PSD")
    return float(np.count_nonzero(act >= (1.0 + rho) * mean) / psd.bins.size)


def wm_detect(psd: Psd, th: WmThresholds) -> bool:
    """True when the PSD is peaky AND occupies few bins: the narrowband signature.

    The sparsity condition rejects wideband signals whose frequency-selective
    fading produces a high peak but spreads occupancy over many bins.
    """
    return psd_par(psd) >= th.phi and psd_ds(psd, th.rho) <= th.psi


def dic_normalize(raw_metric: float, est_power: float, alpha: int) -> float:
    """Divide a raw metric by (estimated power)^alpha to cancel its dimension.

    alpha = 2 for V^4 metrics (TDSC-MRC), alpha = 1 for V^2 metrics (CP-SW,
    CP-SUM).  The result is invariant under amplitude scaling of the input
    buffer, which removes any dependence on the unknown noise level.
    """
    if alpha not in (1, 2):
        raise ValueError("alpha must be 1 or 2")
    if not est_power > 0:
        raise ValueError("estimated power must be positive")
    return raw_metric / est_power**alpha
