import pytest

import tvsense as tv
from tvsense.classify import BankConfig, WmBranchConfig, build_branches


def random_iq(rng, n, rate=1e6):
    return tv.IqBuffer(rng.standard_normal(n) + 1j * rng.standard_normal(n), rate)


@pytest.fixture(scope="session")
def preset_table():
    return tv.default_presets()


@pytest.fixture(scope="session")
def small_bank(preset_table, tmp_path_factory, request):
    """Full 12-branch bank at 20 ms, calibrated with the minimum trial count.

    Session-scoped and cached across runs through pytest's cache: the
    calibration is deterministic in (pfa, trials, seed, observation), so the
    cached threshold file is byte-equivalent to recomputing.
    """
    branches = build_branches(preset_table)
    key = "tvsense/thresholds-pfa0.01-t10000-seed1234-obs0.02"
    cached = request.config.cache.get(key, None)
    if cached is not None:
        path = tmp_path_factory.mktemp("bank") / "thresholds.ini"
        path.write_text(cached)
        thresholds = tv.load_thresholds(str(path))
    else:
        thresholds = tv.calibrate_bank(
            branches, pfa=0.01, trials=10000, seed=1234, observation_s=0.02, threads=2
        )
        path = tmp_path_factory.mktemp("bank") / "thresholds.ini"
        tv.save_thresholds(str(path), thresholds)
        request.config.cache.set(key, path.read_text())
    return BankConfig(ofdm=branches, wm=WmBranchConfig(), thresholds=thresholds)
