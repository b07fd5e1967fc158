"""Seedable generators for the five signal classes under test.

The generators are feature-faithful rather than standard-compliant: data
subcarriers are i.i.d. QPSK and pilots are fixed boosted BPSK at fixed
indices.  That reproduces exactly the structure the detectors exploit
(pilot-pattern periodicity, cyclic-prefix correlation at the DFT lag, slot
framing, burst duty cycle, narrowband FM occupancy) without channel coding,
scrambling or MAC framing.

Every generator is a pure function of (parameters, seed).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import fft as sfft

from .core import IqBuffer, SignalClass

CAPTURE_RATE_HZ = 12.5e6

# Fixed pilot pattern shared by every DVB-T-like instance (standard-determined,
# not part of the user seed): boosted BPSK values and the continual-pilot set.
_PILOT_RNG_SEED = 0x5D17
_PILOT_BOOST = 4.0 / 3.0
_N_CONTINUAL = 45
_SCATTER_SPACING = 12
_SCATTER_STEP = 3


@dataclass(frozen=True)
class OfdmPreset:
    """Structural parameters of one OFDM mode.

    n_cp_first is set when the first symbol of a frame carries a longer CP
    than the rest (LTE normal CP).  pilot_period is the sample period of the
    repeating pilot pattern (DVB-T: four symbols).  native_rate is kept as an
    exact rational so resampling ratios against the capture rate are exact.
    """

    name: str
    n_dft: int
    n_cp: int
    native_rate_hz: float
    n_cp_first: int | None = None
    frame_len: int | None = None
    pilot_period: int | None = None
    duty_cycle: float = 1.0
    active_carriers: int | None = None

    def __post_init__(self):
        if not 0 < self.n_cp < self.n_dft:
            raise ValueError("need 0 < n_cp < n_dft")
        if not self.native_rate_hz > 0:
            raise ValueError("native_rate_hz must be positive")
        if not 0 < self.duty_cycle <= 1:
            raise ValueError("duty_cycle must lie in (0, 1]")
        sym = self.n_dft + self.n_cp
        if self.pilot_period is not None and self.pilot_period % sym != 0:
            raise ValueError("pilot_period must be a multiple of the symbol length")
        if self.frame_len is not None:
            head = self.n_dft + (self.n_cp_first if self.n_cp_first is not None else self.n_cp)
            if self.frame_len < head or (self.frame_len - head) % sym != 0:
                raise ValueError("frame_len must be a whole number of symbols")

    @property
    def symbol_len(self) -> int:
        return self.n_dft + self.n_cp

    @property
    def symbols_per_frame(self) -> int | None:
        if self.frame_len is None:
            return None
        head = self.n_dft + (self.n_cp_first if self.n_cp_first is not None else self.n_cp)
        return 1 + (self.frame_len - head) // self.symbol_len

    def rate_fraction(self, reference_hz: float, max_denominator: int = 10000) -> Fraction:
        """native_rate / reference as an exact small rational, else ValueError.

        Exact preset ratios land within float rounding (~1e-16 relative) of
        their reduced fraction; anything farther than 1e-12 has no faithful
        rational realization within the denominator limit.
        """
        frac = Fraction(self.native_rate_hz / reference_hz).limit_denominator(max_denominator)
        if abs(float(frac) * reference_hz - self.native_rate_hz) > 1e-12 * self.native_rate_hz:
            raise ValueError(
                f"rate ratio {self.native_rate_hz}/{reference_hz} has no exact rational "
                f"form with denominator <= {max_denominator}"
            )
        return frac


@dataclass(frozen=True)
class WmParams:
    """FM microphone surrogate: a sinusoid-modulated carrier inside the channel.

    The occupied bandwidth (Carson estimate) must stay under 200 kHz, the
    defining narrowband property of the class.
    """

    carrier_offset_hz: float = 0.0
    audio_tone_hz: float = 1000.0
    fm_deviation_hz: float = 50e3

    def __post_init__(self):
        if not self.audio_tone_hz > 0:
            raise ValueError("audio_tone_hz must be positive")
        if self.fm_deviation_hz < 0:
            raise ValueError("fm_deviation_hz must be non-negative")
        if self.occupied_bandwidth_hz >= 200e3:
            raise ValueError("occupied bandwidth must stay under 200 kHz")

    @property
    def occupied_bandwidth_hz(self) -> float:
        return 2.0 * (self.fm_deviation_hz + self.audio_tone_hz)


def default_presets() -> dict[str, tuple[SignalClass, OfdmPreset]]:
    """The stock mode table: 8 DVB-T modes, 2 LTE CP modes, one 802.22, one ECMA-392.

    Classification only requires the presets to be pairwise distinct in
    (n_dft, native_rate); the exact numbers are configuration, not code.
    """
    table: dict[str, tuple[SignalClass, OfdmPreset]] = {}
    dvbt_rate = 64e6 / 7.0
    for n_dft, tag in ((2048, "2k"), (8192, "8k")):
        for denom in (4, 8, 16, 32):
            n_cp = n_dft // denom
            name = f"dvbt-{tag}-cp1/{denom}"
            table[name] = (
                SignalClass.DVBT,
                OfdmPreset(
                    name=name,
                    n_dft=n_dft,
                    n_cp=n_cp,
                    native_rate_hz=dvbt_rate,
                    pilot_period=4 * (n_dft + n_cp),
                    frame_len=4 * (n_dft + n_cp),
                    active_carriers=1705 if n_dft == 2048 else 6817,
                ),
            )
    table["lte5-normal-cp"] = (
        SignalClass.LTE_DL,
        OfdmPreset(
            name="lte5-normal-cp",
            n_dft=512,
            n_cp=36,
            n_cp_first=40,
            frame_len=3840,
            native_rate_hz=7.68e6,
            active_carriers=300,
        ),
    )
    table["lte5-extended-cp"] = (
        SignalClass.LTE_DL,
        OfdmPreset(
            name="lte5-extended-cp",
            n_dft=512,
            n_cp=128,
            n_cp_first=128,
            frame_len=3840,
            native_rate_hz=7.68e6,
            active_carriers=300,
        ),
    )
    table["wran-8mhz"] = (
        SignalClass.WRAN,
        OfdmPreset(
            name="wran-8mhz",
            n_dft=2048,
            n_cp=128,
            native_rate_hz=9.136e6,
            active_carriers=1681,
        ),
    )
    table["ecma392-8mhz"] = (
        SignalClass.ECMA392,
        OfdmPreset(
            name="ecma392-8mhz",
            n_dft=128,
            n_cp=8,
            native_rate_hz=9.136e6,
            duty_cycle=0.5,
            active_carriers=105,
        ),
    )
    return table


def presets_for_class(
    table: dict[str, tuple[SignalClass, OfdmPreset]], cls: SignalClass
) -> list[OfdmPreset]:
    return [preset for c, preset in table.values() if c is cls]


def save_presets(path: str, table: dict[str, tuple[SignalClass, OfdmPreset]]) -> None:
    """Write the preset table as an editable INI file, one section per preset."""
    cp = configparser.ConfigParser()
    for name, (cls, p) in table.items():
        sec = {
            "class": cls.value,
            "n_dft": str(p.n_dft),
            "n_cp": str(p.n_cp),
            "native_rate_hz": _rate_to_str(p.native_rate_hz),
            "duty_cycle": repr(p.duty_cycle),
        }
        if p.n_cp_first is not None:
            sec["n_cp_first"] = str(p.n_cp_first)
        if p.frame_len is not None:
            sec["frame_len"] = str(p.frame_len)
        if p.pilot_period is not None:
            sec["pilot_period"] = str(p.pilot_period)
        if p.active_carriers is not None:
            sec["active_carriers"] = str(p.active_carriers)
        cp[name] = sec
    with open(path, "w") as fh:
        cp.write(fh)


def load_presets(path: str) -> dict[str, tuple[SignalClass, OfdmPreset]]:
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    table: dict[str, tuple[SignalClass, OfdmPreset]] = {}
    for name in cp.sections():
        sec = cp[name]
        cls = SignalClass(sec["class"])
        table[name] = (
            cls,
            OfdmPreset(
                name=name,
                n_dft=sec.getint("n_dft"),
                n_cp=sec.getint("n_cp"),
                native_rate_hz=_rate_from_str(sec["native_rate_hz"]),
                n_cp_first=sec.getint("n_cp_first", fallback=None),
                frame_len=sec.getint("frame_len", fallback=None),
                pilot_period=sec.getint("pilot_period", fallback=None),
                duty_cycle=sec.getfloat("duty_cycle", fallback=1.0),
                active_carriers=sec.getint("active_carriers", fallback=None),
            ),
        )
    return table


def _rate_to_str(rate: float) -> str:
    frac = Fraction(rate).limit_denominator(10000)
    if float(frac) == rate and frac.denominator > 1:
        return f"{frac.numerator}/{frac.denominator}"
    return repr(rate)


def _rate_from_str(text: str) -> float:
    if "/" in text:
        num, den = text.split("/")
        return float(Fraction(int(num), int(den)))
    return float(text)


def _carrier_indices(n_dft: int, count: int) -> np.ndarray:
    """FFT bin indices of `count` active carriers centered on DC."""
    half = (count - 1) // 2
    c = np.arange(-half, count - half)
    return np.mod(c, n_dft)


def _qpsk(rng: np.random.Generator, shape) -> np.ndarray:
    re = rng.integers(0, 2, shape) * 2.0 - 1.0
    im = rng.integers(0, 2, shape) * 2.0 - 1.0
    return (re + 1j * im) / np.sqrt(2.0)


def _pilot_layout(n_dft: int, count: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fixed pilot pattern: per-carrier BPSK signs, continual set, scatter base set."""
    rng = np.random.default_rng(_PILOT_RNG_SEED)
    signs = rng.integers(0, 2, count) * 2.0 - 1.0
    continual = rng.choice(count, size=min(_N_CONTINUAL, count // 8), replace=False)
    scatter_base = np.arange(0, count, _SCATTER_SPACING)
    return signs, np.sort(continual), scatter_base


def _require_duration(n: int, minimum: int) -> None:
    if n < minimum:
        raise ValueError("insufficient observation")


def _symbols_to_stream(vals: np.ndarray, carriers: np.ndarray, n_dft: int, n_cp: int) -> np.ndarray:
    """IFFT a (n_syms, n_active) carrier matrix and prepend each symbol's CP."""
    spec = np.zeros((vals.shape[0], n_dft), dtype=np.complex128)
    spec[:, carriers] = vals
    sym = sfft.ifft(spec, axis=1)
    return np.concatenate([sym[:, n_dft - n_cp :], sym], axis=1).reshape(-1)


def gen_pilot_ofdm(preset: OfdmPreset, duration_s: float, seed: int) -> IqBuffer:
    """OFDM stream with a pilot pattern that repeats every preset.pilot_period samples.

    Scattered pilots advance by three carriers per symbol and cycle with
    period four; together with fixed continual pilots they put a deterministic
    component at every lag that is a multiple of the pilot period.  Data
    carriers are fresh QPSK each symbol.  Output is unit average power and
    starts at a random offset inside the pilot cycle.
    """
    if preset.pilot_period is None:
        raise ValueError("preset has no pilot_period")
    n = int(np.floor(duration_s * preset.native_rate_hz))
    _require_duration(n, 2 * preset.pilot_period)
    rng = np.random.default_rng(seed)
    n_act = preset.active_carriers or (preset.n_dft * 5 // 6)
    carriers = _carrier_indices(preset.n_dft, n_act)
    signs, continual, scatter_base = _pilot_layout(preset.n_dft, n_act)

    sym_len = preset.symbol_len
    n_syms = int(np.ceil((n + preset.pilot_period) / sym_len)) + 1
    offset = int(rng.integers(0, preset.pilot_period))

    vals = _qpsk(rng, (n_syms, n_act))
    for phase in range(4):
        scatter = scatter_base + _SCATTER_STEP * phase
        scatter = scatter[scatter < n_act]
        vals[phase::4, scatter.reshape(1, -1)] = _PILOT_BOOST * signs[scatter]
    vals[:, continual] = _PILOT_BOOST * signs[continual]

    out = _symbols_to_stream(vals, carriers, preset.n_dft, preset.n_cp)
    out = out[offset : offset + n]
    out /= np.sqrt(np.mean(out.real**2 + out.imag**2))
    return IqBuffer(out, preset.native_rate_hz)


def gen_lte_slots(preset: OfdmPreset, duration_s: float, seed: int) -> IqBuffer:
    """Slot-periodic OFDM: first symbol per frame uses n_cp_first, the rest n_cp.

    No pilots; the CP correlation at lag n_dft plus the frame periodicity are
    the exploited features.  Unit average power, random start phase within a
    frame.
    """
    if preset.n_cp_first is None or preset.frame_len is None:
        raise ValueError("preset needs n_cp_first and frame_len")
    n = int(np.floor(duration_s * preset.native_rate_hz))
    _require_duration(n, 2 * preset.frame_len)
    rng = np.random.default_rng(seed)
    n_act = preset.active_carriers or (preset.n_dft * 3 // 5)
    # DC carrier left empty, like the downlink grid it mimics
    half = n_act // 2
    c = np.concatenate([np.arange(-half, 0), np.arange(1, n_act - half + 1)])
    carriers = np.mod(c, preset.n_dft)

    spf = preset.symbols_per_frame
    cp_seq = [preset.n_cp_first] + [preset.n_cp] * (spf - 1)
    n_frames = int(np.ceil((n + preset.frame_len) / preset.frame_len)) + 1
    offset = int(rng.integers(0, preset.frame_len))

    spec = np.zeros((n_frames * spf, preset.n_dft), dtype=np.complex128)
    spec[:, carriers] = _qpsk(rng, (n_frames * spf, n_act))
    sym = sfft.ifft(spec, axis=1)
    # gather template mapping one frame's samples to (symbol row, intra index)
    tpl_sym, tpl_intra = [], []
    for s, cp in enumerate(cp_seq):
        tpl_sym.append(np.full(cp + preset.n_dft, s))
        tpl_intra.append(np.concatenate([np.arange(preset.n_dft - cp, preset.n_dft), np.arange(preset.n_dft)]))
    tpl_sym = np.concatenate(tpl_sym)
    tpl_intra = np.concatenate(tpl_intra)
    rows = (np.arange(n_frames)[:, None] * spf + tpl_sym[None, :]).reshape(-1)
    cols = np.tile(tpl_intra, n_frames)
    out = sym[rows, cols]
    out = out[offset : offset + n]
    out /= np.sqrt(np.mean(out.real**2 + out.imag**2))
    return IqBuffer(out, preset.native_rate_hz)


def gen_burst_ofdm(preset: OfdmPreset, duration_s: float, seed: int) -> IqBuffer:
    """CP-OFDM in random bursts with a target on-air fraction of preset.duty_cycle.

    On/off run lengths are exponentially distributed (in whole symbols) with
    means set by the duty cycle, mimicking contention-style channel access;
    gaps are true zeros.  The on-region power is unit; the realized on
    fraction is kept within +/-0.04 of the target by redrawing outliers.
    duty_cycle = 1 degenerates to a continuous stream.
    """
    n = int(np.floor(duration_s * preset.native_rate_hz))
    sym_len = preset.symbol_len
    _require_duration(n, 4 * sym_len)
    rng = np.random.default_rng(seed)
    duty = preset.duty_cycle
    n_syms = int(np.ceil(n / sym_len)) + 2

    if duty >= 1.0:
        mask = np.ones(n_syms, dtype=bool)
    else:
        mean_on = 24.0
        mean_off = mean_on * (1.0 - duty) / duty
        for _ in range(200):
            mask = _burst_mask(rng, n_syms, mean_on, mean_off)
            frac = mask[: max(1, n // sym_len)].mean()
            if abs(frac - duty) <= 0.04:
                break
        else:
            raise ValueError("could not realize the requested duty cycle")

    n_act = preset.active_carriers or (preset.n_dft * 5 // 6)
    carriers = _carrier_indices(preset.n_dft, n_act)
    vals = _qpsk(rng, (n_syms, n_act))
    vals[~mask, :] = 0.0
    out = _symbols_to_stream(vals, carriers, preset.n_dft, preset.n_cp)
    out = out[:n]
    on = np.abs(out) > 0
    if not on.any():
        raise ValueError("burst draw produced an empty buffer")
    out /= np.sqrt(np.mean(out[on].real ** 2 + out[on].imag ** 2))
    return IqBuffer(out, preset.native_rate_hz)


def _burst_mask(rng: np.random.Generator, n_syms: int, mean_on: float, mean_off: float) -> np.ndarray:
    mask = np.empty(n_syms, dtype=bool)
    pos = 0
    state = bool(rng.integers(0, 2))
    while pos < n_syms:
        mean = mean_on if state else mean_off
        run = max(1, int(np.ceil(rng.exponential(mean))))
        mask[pos : pos + run] = state
        pos += run
        state = not state
    return mask


def gen_fm_wm(params: WmParams, duration_s: float, rate_hz: float, seed: int) -> IqBuffer:
    """Constant-envelope FM carrier modulated by a single audio tone.

    Unit power by construction (|sample| = 1).  With zero deviation this
    degenerates to a pure tone at the carrier offset.
    """
    min_rate = 2.0 * (abs(params.carrier_offset_hz) + params.fm_deviation_hz + params.audio_tone_hz)
    if rate_hz <= min_rate:
        raise ValueError("sample rate too low for the requested FM parameters")
    n = int(np.floor(duration_s * rate_hz))
    if n < 2:
        raise ValueError("insufficient observation")
    rng = np.random.default_rng(seed)
    t = np.arange(n) / rate_hz
    audio_phase = rng.uniform(0.0, 2.0 * np.pi)
    carrier_phase = rng.uniform(0.0, 2.0 * np.pi)
    phase = 2.0 * np.pi * params.carrier_offset_hz * t + carrier_phase
    if params.fm_deviation_hz > 0:
        mod_index = params.fm_deviation_hz / params.audio_tone_hz
        phase = phase + mod_index * np.sin(2.0 * np.pi * params.audio_tone_hz * t + audio_phase)
    return IqBuffer(np.exp(1j * phase), rate_hz)
