"""Shared domain types and elementary buffer math.

Samples are complex baseband volts; powers are mean-square magnitudes in V^2.
Every value type here is treated as immutable, so buffers and reports are safe
to share across threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class SignalClass(enum.Enum):
    """Signal families the classifier can report (plus the empty-channel truth)."""

    DVBT = "dvbt"
    LTE_DL = "lte"
    WRAN = "wran"
    ECMA392 = "ecma392"
    WIRELESS_MIC = "wm"
    NOISE_ONLY = "noise"


class DetectorId(enum.Enum):
    """Which feature detector produced a report."""

    TDSC_MRC = "tdsc-mrc"
    CP_SW = "cp-sw"
    CP_SUM = "cp-sum"
    WM_PAR_DS = "wm-par-ds"


class Verdict(enum.Enum):
    OFDM = "ofdm"
    WM = "wm"
    VACANT = "vacant"


@dataclass(frozen=True, eq=False)
class IqBuffer:
    """A run of complex baseband samples with its sample rate.

    The sample array is converted to complex128 on construction and must be
    treated as read-only; operations return new buffers rather than mutating.
    Zero-length buffers are representable (file inspection needs them) but are
    rejected by every detector input check.
    """

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        object.__setattr__(self, "samples", arr)
        if not self.sample_rate_hz > 0:
            raise ValueError("sample_rate_hz must be positive")

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz


@dataclass(frozen=True)
class DetectorReport:
    """One detector branch's outcome on a buffer.

    ``raw_metric`` keeps the detector's physical units (V^4 for TDSC-MRC, V^2
    for the CP metrics, dimensionless for the WM features).  ``dic_metric`` is
    the dimensionless thresholded quantity: raw metric divided by the
    estimated total power raised to the detector's dimension exponent, or the
    raw metric itself when dimension cancellation is disabled.  ``ratio`` is
    always ``dic_metric / threshold``.
    """

    branch: str
    detector_id: DetectorId
    raw_metric: float
    dic_metric: float
    threshold: float
    ratio: float = field(default=None)  # type: ignore[assignment]
    wm_flag: bool = False

    def __post_init__(self):
        if self.raw_metric < 0:
            raise ValueError("raw_metric must be non-negative")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if self.ratio is None:
            object.__setattr__(self, "ratio", self.dic_metric / self.threshold)
        elif self.ratio != self.dic_metric / self.threshold:
            raise ValueError("ratio must equal dic_metric / threshold")


@dataclass(frozen=True)
class ClassDecision:
    """Classifier verdict: one OFDM branch, a wireless microphone, or vacant."""

    verdict: Verdict
    branch_index: int | None = None
    branch: str | None = None

    def __post_init__(self):
        if self.verdict is Verdict.OFDM and (self.branch_index is None or self.branch is None):
            raise ValueError("OFDM decisions must name the winning branch")

    @property
    def label(self) -> str:
        """Stable text identifier: the winning branch name, 'wm', or 'vacant'."""
        if self.verdict is Verdict.OFDM:
            return self.branch  # type: ignore[return-value]
        return self.verdict.value


def estimate_power(buf: IqBuffer) -> float:
    """Mean squared magnitude of the buffer, i.e. total power in V^2.

    Computed as vdot(s, s)/N: one fused pass whose all-positive partial sums
    keep the relative error near 1e-11 even for quarter-million-sample
    captures, well inside the 1e-9 budget.
    """
    if len(buf) == 0:
        raise ValueError("empty input")
    s = buf.samples
    return float(np.vdot(s, s).real) / len(buf)


def scale(buf: IqBuffer, c: float) -> IqBuffer:
    """Return a copy of the buffer with every sample multiplied by c > 0."""
    if not c > 0:
        raise ValueError("scale factor must be positive")
    return IqBuffer(buf.samples * c, buf.sample_rate_hz)
