"""Channel and receiver-imperfection models: AWGN, SNR mixing, noise
uncertainty, spurs, unflat noise floor, multipath.

These are the knobs of the synthetic (M1) and replay (M2) evaluation paths;
all of them are pure and seedable so trials parallelize trivially.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .core import IqBuffer, estimate_power


class WorstCase(enum.Enum):
    """Which end of the noise-uncertainty interval a trial should realize.

    The upper power limit governs false alarms, the lower limit governs
    missed detections; thresholds are always computed from the nominal power.
    """

    FOR_PFA = "for-pfa"
    FOR_PMD = "for-pmd"


@dataclass(frozen=True)
class ImpairmentConfig:
    """Receiver/channel imperfections applied to a trial.

    nu_db is the peak deviation of the true noise power around nominal.
    spur_power_db is measured relative to the per-bin noise floor of the
    narrowband analyzer's PSD display (an M-bin averaged periodogram), i.e.
    a "+20 dB spur" sticks 20 dB out of the displayed floor.
    floor_shape holds per-bin amplitude gains in ascending-frequency order.
    multipath is a sequence of (delay_samples, complex gain) taps.
    """

    nu_db: float = 0.0
    spur_offsets_hz: tuple[float, ...] = ()
    spur_power_db: float = 0.0
    floor_shape: tuple[float, ...] | None = None
    multipath: tuple[tuple[int, complex], ...] | None = None

    def __post_init__(self):
        if self.nu_db < 0:
            raise ValueError("nu_db must be non-negative")
        if self.floor_shape is not None and any(g <= 0 for g in self.floor_shape):
            raise ValueError("floor_shape gains must be strictly positive")


def gen_awgn(
    n: int, power: float, seed: int | np.random.Generator, rate_hz: float = 12.5e6
) -> IqBuffer:
    """Circularly-symmetric complex Gaussian noise, total variance = power.

    Variance splits equally between real and imaginary parts.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if power < 0:
        raise ValueError("power must be non-negative")
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    w = rng.standard_normal(2 * n)
    samples = w.view(np.complex128)  # interleaved pairs become (I, Q), no copy
    samples *= np.sqrt(power / 2.0)
    return IqBuffer(samples, rate_hz)


def mix_at_snr(signal: IqBuffer, noise: IqBuffer, snr_db: float) -> IqBuffer:
    """a * signal + noise with a chosen so the realized SNR equals snr_db.

    Both powers are measured empirically from the buffers themselves, so
    replayed hardware noise captures work the same as synthetic noise.
    """
    if len(signal) != len(noise):
        raise ValueError("signal and noise lengths differ")
    if signal.sample_rate_hz != noise.sample_rate_hz:
        raise ValueError("signal and noise sample rates differ")
    p_sig = estimate_power(signal)
    if not p_sig > 0:
        raise ValueError("zero-power signal")
    p_noise = estimate_power(noise)
    if not p_noise > 0:
        raise ValueError("undefined SNR: zero-power noise")
    a = np.sqrt(10.0 ** (snr_db / 10.0) * p_noise / p_sig)
    return IqBuffer(a * signal.samples + noise.samples, signal.sample_rate_hz)


def apply_noise_uncertainty(nominal_power: float, nu_db: float, worst_case: WorstCase) -> float:
    """Map a nominal noise power to the interval endpoint the trial realizes."""
    if not nominal_power > 0:
        raise ValueError("nominal_power must be positive")
    if nu_db < 0:
        raise ValueError("nu_db must be non-negative")
    sign = 1.0 if worst_case is WorstCase.FOR_PFA else -1.0
    return nominal_power * 10.0 ** (sign * nu_db / 10.0)


def inject_spurs(
    buf: IqBuffer,
    offsets_hz: tuple[float, ...] | list[float],
    power_db_rel: float,
    noise_floor_power: float,
    seed: int | np.random.Generator = 0,
) -> IqBuffer:
    """Add one complex tone per offset, power = noise_floor_power * 10^(dB/10).

    Each tone gets a random but fixed phase (hardware spurs are coherent
    within a capture).  An empty offset list is the identity.
    """
    if not noise_floor_power > 0:
        raise ValueError("noise_floor_power must be positive")
    if not offsets_hz:
        return buf
    rate = buf.sample_rate_hz
    for f in offsets_hz:
        if abs(f) >= rate / 2.0:
            raise ValueError(f"spur offset {f} Hz outside the Nyquist band")
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    amp = np.sqrt(noise_floor_power * 10.0 ** (power_db_rel / 10.0))
    n = np.arange(len(buf))
    out = buf.samples.copy()
    for f in offsets_hz:
        phase = rng.uniform(0.0, 2.0 * np.pi)
        out += amp * np.exp(1j * (2.0 * np.pi * f / rate * n + phase))
    return IqBuffer(out, rate)


def shape_noise_floor(buf: IqBuffer, gains: np.ndarray | list[float]) -> IqBuffer:
    """Apply a per-bin amplitude gain profile as a filter over the buffer.

    gains[i] is the amplitude at frequency (i - K/2) * rate / K (ascending
    frequency order).  The filter is built by frequency sampling, so the
    realized response is exact at those K frequencies; white noise in gives a
    PSD proportional to gains**2 out.  Output length equals input length
    (group delay trimmed).
    """
    g = np.asarray(gains, dtype=np.float64)
    if g.ndim != 1 or g.size < 2:
        raise ValueError("gains must be a 1-d sequence of length >= 2")
    if np.any(g <= 0):
        raise ValueError("gains must be strictly positive")
    k = g.size
    h = np.fft.ifft(np.fft.ifftshift(g))
    h = np.roll(h, k // 2)  # linear phase, integer group delay k//2
    out = sps.oaconvolve(buf.samples, h, mode="full")[k // 2 : k // 2 + len(buf)]
    return IqBuffer(out, buf.sample_rate_hz)


def apply_multipath(buf: IqBuffer, taps: tuple[tuple[int, complex], ...]) -> IqBuffer:
    """FIR channel given as (delay_samples, complex gain) taps, power preserving.

    The output is rescaled so its average power matches the input's, keeping
    SNR accounting downstream unchanged.
    """
    if not taps:
        raise ValueError("empty tap set")
    delays = [d for d, _ in taps]
    if min(delays) < 0:
        raise ValueError("delays must be non-negative")
    if max(delays) >= len(buf):
        raise ValueError("max delay must be far smaller than the buffer")
    h = np.zeros(max(delays) + 1, dtype=np.complex128)
    for d, gain in taps:
        h[d] += gain
    out = sps.oaconvolve(buf.samples, h, mode="full")[: len(buf)]
    p_in = estimate_power(buf)
    p_out = float(np.mean(out.real**2 + out.imag**2))
    if p_out > 0:
        out *= np.sqrt(p_in / p_out)
    return IqBuffer(out, buf.sample_rate_hz)


def tilt_gains(n_bins: int, tilt_db: float) -> np.ndarray:
    """Linear-in-dB amplitude ramp across the band, total power tilt = tilt_db."""
    edge = tilt_db / 2.0
    db = np.linspace(-edge, edge, n_bins)
    return 10.0 ** (db / 20.0)
