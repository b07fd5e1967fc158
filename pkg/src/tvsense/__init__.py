"""tvsense: classify which TV-band wireless system occupies a channel.

A bank of feature detectors (pilot-period cross-products, cyclic-prefix
correlation metrics, PSD peak/sparsity features) runs in parallel over one
complex baseband capture.  Dividing each metric by the measured total power
raised to its dimension exponent makes the thresholds independent of the
noise level, so bounded noise uncertainty cannot move the operating point.
Synthetic generators, impairment models and a seeded Monte-Carlo harness
reproduce the detection and classification curves at desk scale.
"""

from .calib import (
    ThresholdEntry,
    ThresholdSet,
    analytic_threshold_cpsum,
    analytic_threshold_tdsc,
    calibrate_bank,
    empirical_threshold,
    load_thresholds,
    save_thresholds,
)
from .classify import (
    BankConfig,
    Mitigation,
    OfdmBranch,
    WmBranchConfig,
    build_branches,
    condition,
    decide,
    run_bank,
)
from .core import (
    ClassDecision,
    DetectorId,
    DetectorReport,
    IqBuffer,
    SignalClass,
    Verdict,
    estimate_power,
    scale,
)
from .detect import (
    Psd,
    WelchConfig,
    WmThresholds,
    cp_sum_metric,
    cp_sw_metric,
    dic_normalize,
    estimate_psd_welch,
    frame_prealign,
    lag_autocorr,
    psd_ds,
    psd_par,
    symbol_align,
    tdsc_mrc_metric,
    wm_detect,
)
from .harness import CSV_HEADER, ExperimentConfig, MetricsSummary, TrialResult, run_sweep, run_trial
from .impair import (
    ImpairmentConfig,
    WorstCase,
    apply_multipath,
    apply_noise_uncertainty,
    gen_awgn,
    inject_spurs,
    mix_at_snr,
    shape_noise_floor,
    tilt_gains,
)
from .iqfile import IqFileError, read_iq, write_iq
from .mitigate import (
    apply_filter,
    design_bandstop,
    equalize_psd,
    estimate_noise_psd,
    load_noise_psd,
    save_noise_psd,
    spur_exclusion_bins,
)
from .siggen import (
    OfdmPreset,
    WmParams,
    default_presets,
    gen_burst_ofdm,
    gen_fm_wm,
    gen_lte_slots,
    gen_pilot_ofdm,
    load_presets,
    presets_for_class,
    save_presets,
)

__version__ = "0.1.0"
