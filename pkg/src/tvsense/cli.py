"""Command-line front end: gen / calibrate / classify / sweep."""

from __future__ import annotations

import argparse
import configparser
import sys

import numpy as np

from . import calib, classify, harness, iqfile, siggen
from .core import SignalClass
from .impair import ImpairmentConfig, gen_awgn, mix_at_snr


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _parse_snr_grid(text: str) -> tuple[float, ...]:
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        count = int(round((stop - start) / step)) + 1
        return tuple(start + i * step for i in range(count))
    return tuple(float(x) for x in text.split(","))


def _load_table(args) -> dict:
    if getattr(args, "presets", None):
        return siggen.load_presets(args.presets)
    return siggen.default_presets()


def _cmd_gen(args) -> int:
    table = _load_table(args)
    if args.preset == "wm":
        buf = siggen.gen_fm_wm(siggen.WmParams(), args.duration, args.rate, args.seed)
    else:
        if args.preset not in table:
            print(f"unknown preset '{args.preset}'; known: {', '.join(table)} and wm", file=sys.stderr)
            return 2
        cls, preset = table[args.preset]
        gen = {
            SignalClass.DVBT: siggen.gen_pilot_ofdm,
            SignalClass.LTE_DL: siggen.gen_lte_slots,
            SignalClass.WRAN: siggen.gen_burst_ofdm,
            SignalClass.ECMA392: siggen.gen_burst_ofdm,
        }[cls]
        native = gen(preset, args.duration * 1.02 + 1e-4, args.seed)
        n_out = int(round(args.duration * args.rate))
        from fractions import Fraction
        from scipy.signal import resample_poly

        frac = Fraction(args.rate / preset.native_rate_hz).limit_denominator(10000)
        y = resample_poly(native.samples, frac.numerator, frac.denominator)[:n_out]
        from .core import IqBuffer

        buf = IqBuffer(y, args.rate)
    if args.snr is not None:
        noise = gen_awgn(len(buf), 1.0, args.seed + 1, rate_hz=args.rate)
        buf = mix_at_snr(buf, noise, args.snr)
    iqfile.write_iq(args.out, buf)
    print(f"wrote {len(buf)} samples at {buf.sample_rate_hz:g} S/s to {args.out}")
    return 0


def _cmd_calibrate(args) -> int:
    table = _load_table(args)
    branches = classify.build_branches(table)
    ts = calib.calibrate_bank(
        branches,
        pfa=args.pfa,
        trials=args.trials,
        seed=args.seed,
        observation_s=args.obs,
        capture_rate_hz=args.rate,
        threads=args.threads,
    )
    calib.save_thresholds(args.out, ts)
    print(f"wrote thresholds for {len(ts.entries)} branches to {args.out}")
    return 0


def _cmd_classify(args) -> int:
    table = _load_table(args)
    buf = iqfile.read_iq(args.file)
    ts = calib.load_thresholds(args.thresholds)
    bank = classify.BankConfig(
        ofdm=classify.build_branches(table),
        wm=classify.WmBranchConfig(),
        thresholds=ts,
        dic_enabled=not args.no_dic,
        nominal_noise_power=args.nominal_noise,
    )
    reports = classify.run_bank(buf, bank)
    verdict = classify.decide(reports)
    print(f"{'branch':<18} {'detector':<10} {'metric':>12} {'threshold':>12} {'ratio':>9}  flag")
    for r in reports:
        flag = "WM" if r.wm_flag else ""
        print(
            f"{r.branch:<18} {r.detector_id.value:<10} {r.dic_metric:>12.4g} "
            f"{r.threshold:>12.4g} {r.ratio:>9.3f}  {flag}"
        )
    print(verdict.label)
    return 0


def _cmd_sweep(args) -> int:
    if args.config:
        cfg = load_experiment_config(args.config, seed=args.seed, dic=not args.no_dic, nu_db=args.nu_db)
    else:
        classes = tuple(SignalClass(c) for c in args.classes.split(","))
        cfg = harness.ExperimentConfig(
            classes_under_test=classes,
            snr_grid_db=_parse_snr_grid(args.snr),
            trials_per_point=args.trials,
            observation_s=args.obs,
            pfa=args.pfa,
            seed=args.seed,
            dic_enabled=not args.no_dic,
            impairments=ImpairmentConfig(nu_db=args.nu_db),
            preset_table=_load_table(args),
        )
    if args.fast:
        # CI profile: 5 ms captures, modes that cannot fit three pilot
        # periods in that window are dropped from the table
        from dataclasses import replace as _replace

        obs = 0.005
        table = {
            name: (cls, preset)
            for name, (cls, preset) in cfg.preset_table.items()
            if preset.pilot_period is None
            or int(obs * preset.native_rate_hz) // preset.pilot_period >= 3
        }
        cfg = _replace(
            cfg,
            observation_s=obs,
            trials_per_point=min(cfg.trials_per_point, 50),
            preset_table=table,
        )
    branches = classify.build_branches(cfg.preset_table)
    ts = calib.calibrate_bank(
        branches,
        pfa=cfg.pfa,
        trials=max(args.cal_trials, int(np.ceil(100.0 / cfg.pfa))),
        seed=cfg.seed,
        observation_s=cfg.observation_s,
        capture_rate_hz=cfg.capture_rate_hz,
    )
    bank = classify.BankConfig(
        ofdm=branches,
        wm=classify.WmBranchConfig(),
        thresholds=ts,
        dic_enabled=cfg.dic_enabled,
        nominal_noise_power=cfg.noise_power,
    )
    summary = harness.run_sweep(cfg, bank, csv_path=args.out, threads=args.threads)
    print(f"wrote {len(summary.cells)} cells to {args.out}")
    pfa = summary.pfa_measured
    if pfa is not None:
        print(f"measured false-occupancy rate on noise trials: {pfa:.4f}")
    return 0


def load_experiment_config(path: str, seed: int | None = None, dic: bool = True, nu_db: float = 0.0):
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    exp = cp["experiment"]
    imp = cp["impairments"] if cp.has_section("impairments") else {}
    return harness.ExperimentConfig(
        classes_under_test=tuple(SignalClass(c.strip()) for c in exp["classes"].split(",")),
        snr_grid_db=_parse_snr_grid(exp["snr_db"]),
        trials_per_point=int(exp["trials"]),
        observation_s=exp.getfloat("observation_s", fallback=0.02),
        capture_rate_hz=exp.getfloat("capture_rate_hz", fallback=12.5e6),
        pfa=exp.getfloat("pfa", fallback=0.01),
        seed=seed if seed is not None else exp.getint("seed", fallback=0),
        dic_enabled=dic and exp.getboolean("dic", fallback=True),
        impairments=ImpairmentConfig(
            nu_db=nu_db or float(imp.get("nu_db", 0.0)),
            spur_offsets_hz=tuple(
                float(x) for x in imp.get("spur_offsets_hz", "").split(",") if x.strip()
            ),
            spur_power_db=float(imp.get("spur_power_db", 0.0)),
        ),
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tvsense", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="emit a class waveform to an IQ file")
    g.add_argument("--preset", required=True, help="preset name from the table, or 'wm'")
    g.add_argument("--duration", type=float, default=0.02, help="seconds")
    g.add_argument("--rate", type=float, default=12.5e6, help="output sample rate")
    g.add_argument("--snr", type=float, default=None, help="mix with unit AWGN at this SNR (dB)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--presets", help="preset table file")
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen)

    c = sub.add_parser("calibrate", help="produce a threshold file")
    c.add_argument("--pfa", type=float, default=0.01)
    c.add_argument("--trials", type=int, default=10000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--obs", type=float, default=0.02, help="observation seconds")
    c.add_argument("--rate", type=float, default=12.5e6, help="capture rate")
    c.add_argument("--presets", help="preset table file")
    c.add_argument("--threads", type=int, default=1, help="worker processes")
    c.add_argument("--out", required=True)
    c.set_defaults(func=_cmd_calibrate)

    k = sub.add_parser("classify", help="classify one IQ file")
    k.add_argument("file")
    k.add_argument("--thresholds", required=True, help="file from 'calibrate'")
    k.add_argument("--no-dic", action="store_true")
    k.add_argument("--nominal-noise", type=float, default=1.0)
    k.add_argument("--presets", help="preset table file")
    k.set_defaults(func=_cmd_classify)

    s = sub.add_parser("sweep", help="run a Monte-Carlo sweep, write CSV")
    s.add_argument("--config", help="experiment INI file")
    s.add_argument("--classes", default="dvbt,lte,wran,ecma392,wm,noise")
    s.add_argument("--snr", default="-20:10:2", help="grid 'start:stop:step' or comma list")
    s.add_argument("--trials", type=_positive_int, default=200)
    s.add_argument("--obs", type=float, default=0.02)
    s.add_argument("--pfa", type=float, default=0.01)
    s.add_argument("--cal-trials", type=int, default=10000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--no-dic", action="store_true")
    s.add_argument("--nu-db", type=float, default=0.0)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--presets", help="preset table file")
    s.add_argument("--fast", action="store_true", help="CI profile: 5 ms, <= 50 trials/point")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_sweep)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
