"""Why divide by the measured power: bounded noise uncertainty vs thresholds.

The closed-form thresholds for the pilot cross-product and coherent CP-sum
metrics carry the noise power explicitly, so a receiver that misjudges its
noise floor by just 1 dB sees its false-alarm rate blow up.  Dividing the
metric by (measured total power)^alpha cancels that dependence exactly: the
same table below shows the power-cancelled rates do not move at all when the
true noise power shifts.

About two minutes at the default trial count.
"""

import tvsense as tv

TRIALS = 3000
PFA = 0.01
DVBT_RATE = 64e6 / 7.0
WRAN_RATE = 9.136e6


def tdsc_rates(nu_db):
    n = int(0.01 * DVBT_RATE)
    L = 4 * (2048 + 512)
    n_p, j = n // L, n // L - 2
    gamma = tv.analytic_threshold_tdsc(n_p, j, PFA)
    raw = dic = 0
    power = 10.0 ** (nu_db / 10.0)  # true noise sits at the upper NU limit
    for t in range(TRIALS):
        noise = tv.gen_awgn(n, power, seed=10_000 + t, rate_hz=DVBT_RATE)
        lam = tv.tdsc_mrc_metric(noise, L, n_p, j)
        raw += lam > gamma  # receiver assumed nominal (unit) noise power
        dic += lam / tv.estimate_power(noise) ** 2 > gamma
    return raw / TRIALS, dic / TRIALS


def cpsum_rates(nu_db):
    n = int(0.01 * WRAN_RATE)
    gamma = tv.analytic_threshold_cpsum(PFA)
    raw = dic = 0
    power = 10.0 ** (nu_db / 10.0)
    for t in range(TRIALS):
        noise = tv.gen_awgn(n, power, seed=20_000 + t, rate_hz=WRAN_RATE)
        lam = tv.cp_sum_metric(noise, 2048)
        raw += lam > gamma
        dic += lam / tv.estimate_power(noise) > gamma
    return raw / TRIALS, dic / TRIALS


print(f"Noise-only exceedance rates, target PFA {PFA}, {TRIALS} trials, 10 ms:\n")
print(f"{'detector':<10} {'NU':>5} {'raw metric':>12} {'power-cancelled':>16}")
for nu in (0.0, 0.5, 1.0):
    raw, dic = cpsum_rates(nu)
    print(f"{'cp-sum':<10} {nu:>4.1f}dB {raw:>12.4f} {dic:>16.4f}")
for nu in (0.0, 0.5, 1.0):
    raw, dic = tdsc_rates(nu)
    print(f"{'tdsc-mrc':<10} {nu:>4.1f}dB {raw:>12.4f} {dic:>16.4f}")

print(
    "\nNote the tdsc-mrc closed form sits near 3x the target even without any\n"
    "noise uncertainty: with few cross-product terms its null distribution is\n"
    "heavier-tailed than the Gaussian approximation behind the formula.  The\n"
    "power-cancelled column is nevertheless identical across NU rows, which is\n"
    "the property the cancellation buys."
)
