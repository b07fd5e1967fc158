"""Receiver imperfections and their countermeasures.

Part 1: a fixed-frequency spur 20 dB above the displayed noise floor makes
pure noise look like a narrowband (microphone-like) occupant, and its
coherent autocorrelation also trips the CP detectors.  Excluding the spur's
PSD bins fixes the narrowband path; a deep band-stop fixes the time-domain
paths.

Part 2: a 3 dB tilted noise floor makes narrowband detection depend on where
the carrier sits; dividing the PSD by a pre-estimated floor evens it out.

Runs in about a minute.
"""

import numpy as np

import tvsense as tv
from tvsense.detect import WelchConfig, WmThresholds

RATE = 12.5e6
N = 125_000  # 10 ms
M = 256
SPURS = (0.0, 2.5e6)
wc, wt = WelchConfig(), WmThresholds()

print("--- spurs ---")
per_bin_floor = 1.0 / M
tone_db = 20.0
trials = 150

taps = tv.design_bandstop(RATE, list(SPURS), stop_width_hz=50e3, atten_db=80.0)
excl = tv.spur_exclusion_bins(SPURS, RATE, M, widen=2)
gamma = tv.analytic_threshold_cpsum(0.01)

wm_plain = wm_excl = sum_plain = sum_stop = 0
for t in range(trials):
    noise = tv.gen_awgn(N, 1.0, seed=1000 + t)
    spurred = tv.inject_spurs(noise, SPURS, tone_db, per_bin_floor, seed=2000 + t)
    psd = tv.estimate_psd_welch(spurred, wc)
    wm_plain += tv.wm_detect(psd, wt)
    wm_excl += tv.wm_detect(psd.with_excluded(excl), wt)
    lam = tv.cp_sum_metric(spurred, 2048) / tv.estimate_power(spurred)
    sum_plain += lam > gamma
    filtered = tv.apply_filter(spurred, taps)
    lam = tv.cp_sum_metric(filtered, 2048) / tv.estimate_power(filtered)
    sum_stop += lam > gamma

print(f"narrowband false verdicts:  raw PSD {wm_plain/trials:.2f}   bins excluded {wm_excl/trials:.2f}")
print(f"cp-sum false alarms:        raw {sum_plain/trials:.2f}   band-stopped {sum_stop/trials:.2f}")

print("\n--- tilted noise floor ---")
gains = tv.tilt_gains(M, 3.0)
w_ref = tv.estimate_noise_psd(
    [tv.shape_noise_floor(tv.gen_awgn(250_000, 1.0, seed=50 + i), gains) for i in range(3)], wc
)
snr_fullband = 10 * np.log10(200e3 / RATE)  # 0 dB referenced to 200 kHz

for offset in (-3.515625e6, 3.515625e6):
    plain = eq = 0
    for t in range(trials):
        sig = tv.gen_fm_wm(tv.WmParams(carrier_offset_hz=offset), 0.0101, RATE, 3000 + t)
        sig = tv.IqBuffer(sig.samples[:N], RATE)
        noise = tv.gen_awgn(N, 1.0, seed=4000 + t)
        shaped = tv.shape_noise_floor(tv.mix_at_snr(sig, noise, snr_fullband), gains)
        psd = tv.estimate_psd_welch(shaped, wc)
        plain += tv.wm_detect(psd, wt)
        eq += tv.wm_detect(tv.equalize_psd(psd, w_ref), wt)
    side = "low-floor edge " if offset < 0 else "high-floor edge"
    print(f"{side} ({offset/1e6:+.2f} MHz): P(detect) raw {plain/trials:.2f}  equalized {eq/trials:.2f}")
