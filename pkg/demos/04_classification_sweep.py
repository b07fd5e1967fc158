"""A desk-scale Monte-Carlo sweep: per-class classification rates vs SNR.

Uses a reduced grid and trial count so it finishes in a few minutes; the
acceptance suite runs the full-size version.  Writes sweep.csv next to this
script with one row per (class, mode, SNR) cell.
"""

import os

import tvsense as tv
from tvsense.classify import BankConfig, WmBranchConfig, build_branches
from tvsense.core import SignalClass
from tvsense.harness import ExperimentConfig, run_sweep

table = tv.default_presets()
branches = build_branches(table)
print("Calibrating thresholds (PFA 5% demo profile, ~2-3 minutes) ...")
thresholds = tv.calibrate_bank(branches, pfa=0.05, trials=2000, seed=3, observation_s=0.02)
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
    snr_grid_db=(-15.0, -10.0, -5.0, 0.0, 10.0),
    trials_per_point=40,
    observation_s=0.02,
    seed=99,
)

out = os.path.join(os.path.dirname(__file__), "sweep.csv")
print(f"Running {len(cfg.classes_under_test) * len(cfg.snr_grid_db) * cfg.trials_per_point} trials ...")
summary = run_sweep(cfg, bank, csv_path=out)

print(f"\nwrote {out}\n")
print(f"{'class':<9}" + "".join(f"{s:>9.0f}dB" for s in cfg.snr_grid_db))
for cls in cfg.classes_under_test:
    if cls is SignalClass.NOISE_ONLY:
        continue
    row = [summary.class_pcc(cls.value, s) for s in cfg.snr_grid_db]
    print(f"{cls.value:<9}" + "".join(f"{p:>11.2f}" for p in row))
pfa = summary.pfa_measured
print(f"\nnoise-only false-occupancy rate: {pfa:.3f}")
print(
    "(noise occupancy compounds the 5% demo calibration target across all\n"
    " twelve branches, plus the pilot branches' closed-form thresholds\n"
    " under-calling their tails; the per-class columns above are unaffected.\n"
    " calibrate at pfa=0.01 with 10^4 trials for the production operating point)"
)
