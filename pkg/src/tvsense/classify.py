"""Per-branch front-end conditioning, parallel detector execution, decision rules.

A bank holds one OFDM branch per (class, mode) preset plus a single
narrowband (wireless microphone) branch.  Each OFDM branch sees the capture
band-stop filtered (when configured) and resampled to its preset's native
rate; the narrowband branch works on the raw capture since it needs the whole
channel.  Branch outcomes are combined by fixed rules: the narrowband verdict
wins outright, otherwise the largest normalized ratio at or above 1 names the
occupant, otherwise the channel is vacant.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal as sps

from .calib import ThresholdSet
from .core import ClassDecision, DetectorId, DetectorReport, IqBuffer, SignalClass, Verdict, estimate_power
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
    psd_par,
    symbol_align,
    tdsc_mrc_metric,
    wm_detect,
)
from .mitigate import apply_filter, equalize_psd
from .siggen import OfdmPreset

_CLASS_DETECTOR = {
    SignalClass.DVBT: DetectorId.TDSC_MRC,
    SignalClass.LTE_DL: DetectorId.CP_SW,
    SignalClass.WRAN: DetectorId.CP_SUM,
    SignalClass.ECMA392: DetectorId.CP_SUM,
}


@dataclass(frozen=True)
class OfdmBranch:
    """One detector branch: a class/mode preset and its matched detector."""

    name: str
    signal_class: SignalClass
    preset: OfdmPreset
    detector: DetectorId

    def __post_init__(self):
        expected = _CLASS_DETECTOR.get(self.signal_class)
        if expected is None:
            raise ValueError(f"{self.signal_class} has no OFDM detector branch")
        if self.detector is not expected:
            raise ValueError(
                f"branch {self.name}: {self.signal_class.value} requires {expected.value}"
            )
        if self.detector is DetectorId.TDSC_MRC and self.preset.pilot_period is None:
            raise ValueError("TDSC-MRC branch needs a pilot_period")
        if self.detector is DetectorId.CP_SW and self.preset.frame_len is None:
            raise ValueError("CP-SW branch needs a frame_len")

    @property
    def alpha(self) -> int:
        """Dimension exponent of the branch metric: 2 for V^4, 1 for V^2."""
        return 2 if self.detector is DetectorId.TDSC_MRC else 1


@dataclass(frozen=True)
class WmBranchConfig:
    welch: WelchConfig = WelchConfig()
    thresholds: WmThresholds = WmThresholds()
    excluded_bins: frozenset[int] = frozenset()


@dataclass(frozen=True)
class Mitigation:
    """Optional countermeasures: a band-stop FIR for the time-domain branches
    and a noise-floor PSD reference for equalizing the narrowband branch."""

    bandstop_taps: np.ndarray | None = None
    wm_noise_psd: Psd | None = None


@dataclass(frozen=True)
class BankConfig:
    ofdm: tuple[OfdmBranch, ...]
    wm: WmBranchConfig
    thresholds: ThresholdSet
    mitigation: Mitigation | None = None
    dic_enabled: bool = True
    nominal_noise_power: float = 1.0

    def __post_init__(self):
        if not self.ofdm:
            raise ValueError("bank needs at least one OFDM branch")
        names = [b.name for b in self.ofdm]
        if len(set(names)) != len(names):
            raise ValueError("branch names must be unique")
        missing = [n for n in names if n not in self.thresholds.entries]
        if missing:
            raise ValueError(f"no thresholds for branches: {missing}")
        if not self.nominal_noise_power > 0:
            raise ValueError("nominal_noise_power must be positive")

    def branch_class(self, name: str) -> SignalClass:
        for b in self.ofdm:
            if b.name == name:
                return b.signal_class
        raise KeyError(name)


@lru_cache(maxsize=32)
def _resample_taps(up: int, down: int, quality: int = 6) -> np.ndarray:
    """Kaiser anti-alias FIR for a (up, down) polyphase resample, cached.

    quality scales the filter length (half-length = quality * max(up, down)).
    6 keeps the transition inside ~25% of the band edge, plenty for the
    detector lags while halving the cost of the library default.
    """
    max_rate = max(up, down)
    half_len = quality * max_rate
    return sps.firwin(2 * half_len + 1, 1.0 / max_rate, window=("kaiser", 5.0))


def condition(
    buf: IqBuffer, preset: OfdmPreset, mitigation: Mitigation | None = None
) -> IqBuffer:
    """Band-stop (when configured) then rational resampling to the preset's rate.

    The resampling ratio must reduce to an exact small rational of the two
    rates; the polyphase filter doubles as the anti-alias low-pass.
    """
    if buf.sample_rate_hz < preset.native_rate_hz:
        raise ValueError("capture rate below the branch's native rate")
    if mitigation is not None and mitigation.bandstop_taps is not None:
        buf = apply_filter(buf, mitigation.bandstop_taps)
    if buf.sample_rate_hz == preset.native_rate_hz:
        return buf
    frac = preset.rate_fraction(buf.sample_rate_hz)
    taps = _resample_taps(frac.numerator, frac.denominator)
    out = sps.resample_poly(buf.samples, frac.numerator, frac.denominator, window=taps)
    return IqBuffer(out, preset.native_rate_hz)


def ofdm_branch_raw_metric(buf_native: IqBuffer, branch: OfdmBranch) -> float:
    """Run one branch's detector on an already-conditioned buffer."""
    p = branch.preset
    n = len(buf_native)
    if branch.detector is DetectorId.TDSC_MRC:
        n_p = n // p.pilot_period
        if n_p < 3:
            raise ValueError(f"branch {branch.name}: need >= 3 pilot periods, got {n_p}")
        return tdsc_mrc_metric(buf_native, p.pilot_period, n_p, n_p - 2)
    if branch.detector is DetectorId.CP_SW:
        r = lag_autocorr(buf_native, p.n_dft, n - p.n_dft)
        r = frame_prealign(r, p.frame_len)
        folded = symbol_align(r, p.n_dft, p.n_cp)
        return cp_sw_metric(folded, p.n_cp)
    if branch.detector is DetectorId.CP_SUM:
        return cp_sum_metric(buf_native, p.n_dft)
    raise ValueError(f"not an OFDM detector: {branch.detector}")


def run_bank(buf: IqBuffer, cfg: BankConfig) -> list[DetectorReport]:
    """Evaluate every branch on one capture; any branch error fails the call.

    Branches are pure and independent, so the report list does not depend on
    evaluation order; presets sharing a native rate share one conditioning
    pass.
    """
    if len(buf) == 0:
        raise ValueError("empty input")
    # pilot-branch thresholds encode the period count of the calibrated
    # observation length; a different capture length silently invalidates them
    expected = cfg.thresholds.observation_s * cfg.thresholds.capture_rate_hz
    if abs(len(buf) - expected) > 0.05 * expected:
        raise ValueError(
            f"capture length {len(buf)} does not match the calibrated observation "
            f"({expected:.0f} samples); recalibrate the threshold set"
        )
    reports: list[DetectorReport] = []
    conditioned: dict[float, IqBuffer] = {}
    powers: dict[float, float] = {}
    for br in cfg.ofdm:
        rate = br.preset.native_rate_hz
        if rate not in conditioned:
            conditioned[rate] = condition(buf, br.preset, cfg.mitigation)
            powers[rate] = estimate_power(conditioned[rate])
        y = conditioned[rate]
        lam = ofdm_branch_raw_metric(y, br)
        gamma = cfg.thresholds.gamma(br.name)
        if cfg.dic_enabled:
            p_hat = powers[rate]
            if not p_hat > 0:
                raise ValueError("zero-power buffer breaks power cancellation")
            eff = dic_normalize(lam, p_hat, br.alpha)
            thr = gamma
        else:
            eff = lam
            thr = gamma * cfg.nominal_noise_power**br.alpha
        reports.append(
            DetectorReport(
                branch=br.name,
                detector_id=br.detector,
                raw_metric=lam,
                dic_metric=eff,
                threshold=thr,
            )
        )

    psd = estimate_psd_welch(buf, cfg.wm.welch).with_excluded(cfg.wm.excluded_bins)
    if cfg.mitigation is not None and cfg.mitigation.wm_noise_psd is not None:
        psd = equalize_psd(psd, cfg.mitigation.wm_noise_psd)
    th = cfg.wm.thresholds
    phi = psd_par(psd)
    reports.append(
        DetectorReport(
            branch="wm",
            detector_id=DetectorId.WM_PAR_DS,
            raw_metric=phi,
            dic_metric=phi,
            threshold=th.phi,
            wm_flag=wm_detect(psd, th),
        )
    )
    return reports


def decide(reports: list[DetectorReport]) -> ClassDecision:
    """Combine branch reports into a single verdict.

    The narrowband flag wins unconditionally.  Otherwise the OFDM branch with
    the largest normalized ratio wins if that ratio reaches 1 (ties broken by
    declaration order); with no branch at threshold the channel is vacant.
    """
    wm_reports = [r for r in reports if r.detector_id is DetectorId.WM_PAR_DS]
    if len(wm_reports) != 1:
        raise ValueError("exactly one narrowband report required")
    ofdm = [r for r in reports if r.detector_id is not DetectorId.WM_PAR_DS]
    if not ofdm:
        raise ValueError("at least one OFDM report required")
    if wm_reports[0].wm_flag:
        return ClassDecision(Verdict.WM)
    best_idx = max(range(len(ofdm)), key=lambda i: ofdm[i].ratio)
    best = ofdm[best_idx]
    if best.ratio >= 1.0:
        return ClassDecision(Verdict.OFDM, branch_index=best_idx, branch=best.branch)
    return ClassDecision(Verdict.VACANT)


def build_branches(preset_table: dict[str, tuple[SignalClass, OfdmPreset]]) -> tuple[OfdmBranch, ...]:
    """One branch per OFDM preset, detector chosen by class."""
    branches = []
    for name, (cls, preset) in preset_table.items():
        if cls in _CLASS_DETECTOR:
            branches.append(OfdmBranch(name, cls, preset, _CLASS_DETECTOR[cls]))
    return tuple(branches)
