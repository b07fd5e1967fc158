"""Walk through the five signal classes and the detector bank's view of them.

Generates one capture per class at 10 dB SNR, runs every detector branch,
and prints the normalized ratio table the decision rules operate on.  The
matched branch should dominate; unmatched branches should look like noise.

Runs in roughly a minute.
"""

import tvsense as tv
from tvsense.classify import BankConfig, WmBranchConfig, build_branches, decide, run_bank
from tvsense.core import SignalClass
from tvsense.harness import ExperimentConfig, run_trial

table = tv.default_presets()
branches = build_branches(table)

print("Calibrating thresholds (PFA 5% demo profile; use 1% / 10^4 runs for real work) ...")
thresholds = tv.calibrate_bank(branches, pfa=0.05, trials=2000, seed=1, observation_s=0.02)
bank = BankConfig(ofdm=branches, wm=WmBranchConfig(), thresholds=thresholds)

cfg = ExperimentConfig(
    classes_under_test=(
        SignalClass.DVBT,
        SignalClass.LTE_DL,
        SignalClass.WRAN,
        SignalClass.ECMA392,
        SignalClass.WIRELESS_MIC,
        SignalClass.NOISE_ONLY,
    ),
    snr_grid_db=(10.0,),
    trials_per_point=1,
    observation_s=0.02,
    seed=2024,
)

print("\nOne trial per class at 10 dB SNR:")
for cls in cfg.classes_under_test:
    res = run_trial(cfg, bank, cls, 10.0, trial_index=0)
    print(f"  truth: {cls.value:<8} (mode {res.mode:<16}) -> verdict: {res.verdict.label}")

print("\nDetailed branch ratios for one DVB-T capture at 10 dB:")
from scipy.signal import resample_poly

_, preset = table["dvbt-2k-cp1/4"]
native = tv.gen_pilot_ofdm(preset, 0.0205, seed=7)
sig = tv.IqBuffer(resample_poly(native.samples, 175, 128)[:250_000], 12.5e6)
capture = tv.mix_at_snr(sig, tv.gen_awgn(250_000, 1.0, seed=8), 10.0)
reports = run_bank(capture, bank)
for r in sorted(reports, key=lambda r: -r.ratio):
    flag = "  <- WM flag" if r.wm_flag else ""
    print(f"  {r.branch:<18} {r.detector_id.value:<9} {r.ratio:8.2f}{flag}")
print(f"verdict: {decide(reports).label}")
