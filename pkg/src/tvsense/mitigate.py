"""Receiver-imperfection countermeasures.

Fixed-frequency spurs are notched out of the time-domain detector paths with
linear-phase band-stop FIR filters, and excluded bin-wise from the narrowband
detector's PSD.  An unflat noise floor is equalized out of the PSD with a
pre-estimated noise spectrum; the autocorrelation detectors do not need that
(they are insensitive to floor shape).
"""

from __future__ import annotations

import configparser

import numpy as np
from scipy import signal as sps

from .core import IqBuffer
from .detect import Psd, WelchConfig, estimate_psd_welch


def design_bandstop(
    rate_hz: float,
    stop_centers_hz: list[float] | tuple[float, ...],
    stop_width_hz: float = 50e3,
    atten_db: float = 80.0,
) -> np.ndarray:
    """Linear-phase FIR band-stop with one notch per listed center frequency.

    Guarantees <= -atten_db across each [center - width/2, center + width/2]
    and passband flat within +/-0.5 dB at distances beyond twice the stop
    width from any center.  Built as identity minus a Kaiser low-pass
    modulated to each (complex) center frequency, so the depth of every notch
    equals the low-pass design ripple.

    A tone that survives a band-stop still sums coherently over the whole
    observation in the CP detectors (sqrt(N) gain), so attenuation well
    beyond the naive spur excess is the useful regime; 40 dB is the floor.
    """
    if atten_db < 40:
        raise ValueError("atten_db must be at least 40")
    if not stop_centers_hz:
        return np.ones(1, dtype=np.complex128)
    nyq = rate_hz / 2.0
    for f in stop_centers_hz:
        if abs(f) + stop_width_hz / 2.0 >= nyq:
            raise ValueError(f"stopband at {f} Hz falls outside the Nyquist band")
    trans_hz = 1.5 * stop_width_hz
    covered = len(stop_centers_hz) * (stop_width_hz + 2 * trans_hz)
    if covered >= rate_hz:
        raise ValueError("stopbands and transitions cover the whole band")

    numtaps, beta = sps.kaiserord(atten_db + 3.0, trans_hz / nyq)
    if numtaps % 2 == 0:
        numtaps += 1
    cutoff = stop_width_hz / 2.0 + trans_hz / 2.0
    lowpass = sps.firwin(numtaps, cutoff / nyq, window=("kaiser", beta))
    n = np.arange(numtaps) - (numtaps - 1) / 2.0
    taps = np.zeros(numtaps, dtype=np.complex128)
    taps[(numtaps - 1) // 2] = 1.0
    for f in stop_centers_hz:
        taps -= lowpass * np.exp(2j * np.pi * f / rate_hz * n)
    return taps


def apply_filter(buf: IqBuffer, coeffs: np.ndarray) -> IqBuffer:
    """Convolve with an odd-length linear-phase FIR, output same length.

    The group delay (half the filter length) is trimmed so the output stays
    time-aligned with the input; edge samples carry the usual transient.
    """
    h = np.asarray(coeffs)
    if h.size == 0:
        raise ValueError("empty filter")
    if h.size % 2 == 0:
        raise ValueError("filter length must be odd for integer group delay")
    gd = (h.size - 1) // 2
    out = sps.oaconvolve(buf.samples, h, mode="full")[gd : gd + len(buf)]
    return IqBuffer(out, buf.sample_rate_hz)


def estimate_noise_psd(noise_bufs: list[IqBuffer], cfg: WelchConfig) -> Psd:
    """Average the PSD estimate over noise-only captures.

    Per-capture estimates are weighted by their segment counts, which equals
    estimating over the concatenated segments.  Needs at least 100 * m total
    samples for a usable floor reference.
    """
    if not noise_bufs:
        raise ValueError("no noise captures given")
    total = sum(len(b) for b in noise_bufs)
    if total < 100 * cfg.m:
        raise ValueError(f"insufficient data: need >= {100 * cfg.m} samples, got {total}")
    acc = np.zeros(cfg.m)
    k_total = 0
    for b in noise_bufs:
        k = (len(b) - cfg.m) // cfg.d + 1
        acc += k * estimate_psd_welch(b, cfg).bins
        k_total += k
    return Psd(acc / k_total)


def equalize_psd(y_psd: Psd, w_psd: Psd) -> Psd:
    """Bin-wise quotient of a signal PSD by the noise-floor reference.

    Exclusion sets are unioned.  A zero reference bin outside the exclusions
    is an error: it would manufacture infinite equalized power.
    """
    if y_psd.bins.size != w_psd.bins.size:
        raise ValueError("PSD lengths differ")
    excluded = frozenset(y_psd.excluded) | frozenset(w_psd.excluded)
    w = w_psd.bins
    bad = np.flatnonzero(w <= 0)
    if any(int(i) not in excluded for i in bad):
        raise ValueError("noise reference has a zero bin outside the exclusion set")
    safe = np.where(w > 0, w, 1.0)
    return Psd(y_psd.bins / safe, excluded)


def save_noise_psd(path: str, psd: Psd) -> None:
    """Persist a noise-floor reference in the same key-value format as
    threshold files, so calibration and sensing runs can share it."""
    cp = configparser.ConfigParser()
    cp["noise-psd"] = {
        "bins": ",".join(repr(float(b)) for b in psd.bins),
        "excluded": ",".join(str(i) for i in sorted(psd.excluded)),
    }
    with open(path, "w") as fh:
        cp.write(fh)


def load_noise_psd(path: str) -> Psd:
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    sec = cp["noise-psd"]
    bins = np.array([float(x) for x in sec["bins"].split(",")])
    excl_text = sec.get("excluded", "")
    excluded = frozenset(int(x) for x in excl_text.split(",") if x.strip())
    return Psd(bins, excluded)


def spur_exclusion_bins(
    offsets_hz: list[float] | tuple[float, ...], rate_hz: float, m: int, widen: int = 1
) -> frozenset[int]:
    """PSD bin indices (FFT order) to exclude for known spur frequencies.

    Each spur maps to its nearest bin plus `widen` neighbors on each side to
    absorb leakage from off-grid spur frequencies.
    """
    bins: set[int] = set()
    for f in offsets_hz:
        center = int(round(f / rate_hz * m))
        for k in range(center - widen, center + widen + 1):
            bins.add(k % m)
    return frozenset(bins)
