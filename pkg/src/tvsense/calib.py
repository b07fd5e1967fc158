"""Detection thresholds: closed forms where a null distribution is tractable,
empirical quantiles where it is not.

All thresholds are stored in the dimensionless (power-cancelled) domain.  Raw
thresholds for the no-cancellation ablation are recovered by multiplying with
the assumed noise power raised to the detector's dimension exponent.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass

import numpy as np


def _check_pfa(pfa: float) -> None:
    if not 0.0 < pfa < 1.0:
        raise ValueError("pfa must lie strictly between 0 and 1")


def analytic_threshold_tdsc(n_p: int, j: int, pfa: float) -> float:
    """Gaussian-approximation threshold for the pilot-period cross-product metric.

    Under noise only, the metric's second moment is
    sum_{k=1}^{j} (n_p-k)(n_p-k-1) in power-cancelled units; treating the
    cross-product sum as complex Gaussian gives a Rayleigh tail and the
    threshold sqrt(-V * ln pfa).

    Caution: with few product terms the true tail is heavier than Rayleigh,
    so the realized false-alarm rate at this threshold exceeds the target
    (about 3x at n_p = 8).  Use an empirical quantile when the target must
    be met tightly.
    """
    if n_p < 3:
        raise ValueError("n_p must be at least 3")
    if not 1 <= j <= n_p - 2:
        raise ValueError("j must lie in [1, n_p - 2]")
    _check_pfa(pfa)
    v = sum((n_p - k) * (n_p - k - 1) for k in range(1, j + 1))
    return math.sqrt(-v * math.log(pfa))


def analytic_threshold_cpsum(pfa: float) -> float:
    """Threshold for the normalized coherent CP sum: sqrt(-ln pfa).

    The sum runs over ~N weakly dependent products, so its Gaussian
    approximation (hence the Rayleigh tail) is excellent at any practical
    buffer length.
    """
    _check_pfa(pfa)
    return math.sqrt(-math.log(pfa))


def empirical_threshold(metric_samples, pfa: float) -> float:
    """Upper (1 - pfa) quantile of noise-only metric samples.

    Uses the conservative order statistic: 1-based index
    floor(n * (1 - pfa)) + 1 of the ascending sort, so the measured
    false-alarm rate at the returned threshold is at most the target.
    Requires at least ceil(1/pfa) samples to resolve the tail at all; for a
    stable quantile use >= 100/pfa.
    """
    _check_pfa(pfa)
    x = np.sort(np.asarray(metric_samples, dtype=np.float64))
    n = x.size
    need = int(math.ceil(1.0 / pfa - 1e-9))
    if n < need:
        raise ValueError(f"insufficient samples: need at least {need}, got {n}")
    # tiny epsilon keeps exact-boundary products like 0.99 * 100 from
    # rounding down through float representation of pfa
    k = min(n, int(math.floor(n * (1.0 - pfa) + 1e-9)) + 1)
    return float(x[k - 1])


@dataclass(frozen=True)
class ThresholdEntry:
    gamma: float
    provenance: str  # "analytic" or "empirical"
    trials_used: int | None = None
    n_p: int | None = None
    j: int | None = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("threshold must be positive")
        if self.provenance not in ("analytic", "empirical"):
            raise ValueError("provenance must be 'analytic' or 'empirical'")


@dataclass(frozen=True)
class ThresholdSet:
    """Per-branch dimensionless thresholds with their provenance.

    Keys are branch names.  observation_s and capture_rate_hz record the
    conditions the set was computed for; a bank run under different
    conditions must be recalibrated.
    """

    pfa_target: float
    entries: dict[str, ThresholdEntry]
    master_seed: int = 0
    observation_s: float = 0.02
    capture_rate_hz: float = 12.5e6

    def __post_init__(self):
        _check_pfa(self.pfa_target)

    def gamma(self, branch: str) -> float:
        return self.entries[branch].gamma


def save_thresholds(path: str, ts: ThresholdSet) -> None:
    cp = configparser.ConfigParser()
    cp["meta"] = {
        "pfa_target": repr(ts.pfa_target),
        "master_seed": str(ts.master_seed),
        "observation_s": repr(ts.observation_s),
        "capture_rate_hz": repr(ts.capture_rate_hz),
    }
    for name, e in ts.entries.items():
        sec = {"gamma": repr(e.gamma), "provenance": e.provenance}
        if e.trials_used is not None:
            sec["trials_used"] = str(e.trials_used)
        if e.n_p is not None:
            sec["n_p"] = str(e.n_p)
        if e.j is not None:
            sec["j"] = str(e.j)
        cp[f"branch:{name}"] = sec
    with open(path, "w") as fh:
        cp.write(fh)


def load_thresholds(path: str) -> ThresholdSet:
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    meta = cp["meta"]
    entries: dict[str, ThresholdEntry] = {}
    for sec_name in cp.sections():
        if not sec_name.startswith("branch:"):
            continue
        sec = cp[sec_name]
        entries[sec_name[len("branch:") :]] = ThresholdEntry(
            gamma=sec.getfloat("gamma"),
            provenance=sec["provenance"],
            trials_used=sec.getint("trials_used", fallback=None),
            n_p=sec.getint("n_p", fallback=None),
            j=sec.getint("j", fallback=None),
        )
    return ThresholdSet(
        pfa_target=meta.getfloat("pfa_target"),
        entries=entries,
        master_seed=meta.getint("master_seed"),
        observation_s=meta.getfloat("observation_s"),
        capture_rate_hz=meta.getfloat("capture_rate_hz"),
    )


# stream tag separating calibration draws from trial draws under one master seed
_CAL_STREAM = 0xCA11B


def calibrate_bank(
    branches,
    pfa: float,
    trials: int,
    seed: int,
    observation_s: float = 0.02,
    capture_rate_hz: float = 12.5e6,
    mitigation=None,
    tdsc_provenance: str = "analytic",
    threads: int = 1,
) -> ThresholdSet:
    """Produce the dimensionless threshold for every OFDM branch of a bank.

    The pilot cross-product and coherent-CP-sum branches get their closed
    forms; the sliding-window branches, whose null distribution has no closed
    form, are calibrated empirically from `trials` noise-only runs through
    the full conditioning path (band-stop filter, resampling, power
    cancellation).  Per-trial noise streams derive from (seed, branch, trial)
    so results do not depend on evaluation order or worker count.

    tdsc_provenance="empirical" additionally replaces the pilot-branch closed
    form with a measured quantile; the default keeps the closed form.
    """
    from .core import DetectorId

    _check_pfa(pfa)
    min_trials = int(math.ceil(100.0 / pfa - 1e-9))
    if trials < min_trials:
        raise ValueError(f"trials must be at least {min_trials} for pfa={pfa}")
    if tdsc_provenance not in ("analytic", "empirical"):
        raise ValueError("tdsc_provenance must be 'analytic' or 'empirical'")

    n_capture = int(round(observation_s * capture_rate_hz))
    entries: dict[str, ThresholdEntry] = {}
    for b_idx, br in enumerate(branches):
        if br.detector is DetectorId.CP_SUM:
            entries[br.name] = ThresholdEntry(analytic_threshold_cpsum(pfa), "analytic")
            continue
        if br.detector is DetectorId.TDSC_MRC and tdsc_provenance == "analytic":
            n_native = _conditioned_length(n_capture, br.preset, capture_rate_hz)
            n_p = n_native // br.preset.pilot_period
            if n_p < 3:
                raise ValueError(f"branch {br.name}: observation too short for calibration")
            j = n_p - 2
            entries[br.name] = ThresholdEntry(
                analytic_threshold_tdsc(n_p, j, pfa), "analytic", n_p=n_p, j=j
            )
            continue
        # empirical path: CP-SW always, TDSC on request
        tasks = [
            (seed, b_idx, t, br, n_capture, capture_rate_hz, mitigation) for t in range(trials)
        ]
        samples = np.fromiter(
            run_parallel(_h0_branch_metric, tasks, threads), dtype=np.float64, count=trials
        )
        entries[br.name] = ThresholdEntry(
            empirical_threshold(samples, pfa), "empirical", trials_used=trials
        )
    return ThresholdSet(
        pfa_target=pfa,
        entries=entries,
        master_seed=seed,
        observation_s=observation_s,
        capture_rate_hz=capture_rate_hz,
    )


def _h0_branch_metric(task) -> float:
    """One noise-only run through a branch's full conditioning path."""
    from .classify import condition, ofdm_branch_raw_metric
    from .core import estimate_power
    from .impair import gen_awgn

    seed, b_idx, t, br, n_capture, capture_rate_hz, mitigation = task
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFF, _CAL_STREAM, b_idx, t]))
    noise = gen_awgn(n_capture, 1.0, rng, rate_hz=capture_rate_hz)
    cond = condition(noise, br.preset, mitigation)
    lam = ofdm_branch_raw_metric(cond, br)
    return lam / estimate_power(cond) ** br.alpha


def run_parallel(fn, tasks, workers: int):
    """Map fn over tasks, in order, optionally across worker processes.

    Results must be a pure function of each task (every task carries its own
    seed material), so the worker count cannot change the output sequence.
    """
    if workers <= 1 or len(tasks) < 4:
        return [fn(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(tasks) // (workers * 8))
        return list(pool.map(fn, tasks, chunksize=chunk))


def _conditioned_length(n_capture: int, preset, capture_rate_hz: float) -> int:
    frac = preset.rate_fraction(capture_rate_hz)
    return -(-n_capture * frac.numerator // frac.denominator)  # ceil
