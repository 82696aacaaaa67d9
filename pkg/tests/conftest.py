import numpy as np
import pytest

from candidates import CandidateRecord, make_pair
from sky_sim import EAST, IQFrame, SimConfig
from timebase import ObservatoryClock

# 4096-bin frames of 0.067 s with 14.9 Hz bins around a harmonic-free LO
SMALL_FFT = 2 ** 12
SMALL_RATE = 62.5e6 / 1024
SMALL_LO = 1415.05e6


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-scale tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def small_cfg():
    return SimConfig(sample_rate_hz=SMALL_RATE, fft_len=SMALL_FFT, lo_freq_hz=SMALL_LO, quantize_bits=0, seed=7)


@pytest.fixture
def clock():
    return ObservatoryClock(mjd_epoch=60284.0)


@pytest.fixture
def small_config_dict():
    """Scenario overrides for a ConfigManager running at test scale."""
    return {
        "simulation": {
            "sample_rate_hz": SMALL_RATE,
            "fft_len": SMALL_FFT,
            "lo_freq_hz": SMALL_LO,
            "quantize_bits": 0,
            "seed": 11,
        },
        "clock": {"mjd_epoch": 60284.0},
        # 12 ticks of 3 s per file
        "run": {"file_duration_hr": 0.01, "workers": 2, "max_lag": 8},
    }


@pytest.fixture
def iq_frame():
    """Build an IQFrame at test scale from raw samples."""
    def build(samples, element=EAST, start_mjd=60284.0):
        samples = np.asarray(samples, dtype=np.complex128)
        return IQFrame(element, start_mjd, samples, SMALL_RATE, SMALL_LO)
    return build


@pytest.fixture
def noise():
    def draw(seed, n=SMALL_FFT, sigma=1.0):
        rng = np.random.default_rng(seed)
        return sigma / np.sqrt(2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return draw


@pytest.fixture
def candidate():
    """CandidateRecord factory with harmless defaults."""
    def build(**overrides):
        values = dict(
            mjd=60284.0, ra_hr=5.25, ra_bin=52, rf_hz=1415.05e6, bin_index=2048,
            snr_east_db=12.0, snr_west_db=12.0, phi_east_rad=0.0, phi_west_rad=0.0,
            p954_east=256.0, p954_west=256.0, p50m_east=4096.0, p50m_west=4096.0,
            margin_low=16, margin_high=16,
        )
        values.update(overrides)
        return CandidateRecord(**values)
    return build


@pytest.fixture
def pair(candidate):
    """PairRecord factory: two candidates `delta_f_hz` apart with the given West-East phase change."""
    def build(dd_phi=0.0, delta_f_hz=3.7252902984619, rf_hz=1415.05e6, mjd=60284.0, ra_bin=52, bin_index=2048):
        lower = candidate(mjd=mjd, rf_hz=rf_hz, bin_index=bin_index, ra_bin=ra_bin)
        upper = candidate(mjd=mjd, rf_hz=rf_hz + delta_f_hz, bin_index=bin_index + 1, ra_bin=ra_bin,
                          phi_west_rad=dd_phi)
        return make_pair(lower, upper)
    return build
