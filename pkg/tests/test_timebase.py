import numpy as np
import pytest

from errors import RangeError, UnsupportedConfigurationError
from timebase import (
    MJD_J2000,
    SIDEREAL_DAY_SOLAR_DAYS,
    ObservatoryClock,
    Pointing,
    RaBin,
    frame_mjds,
    hour_angle_hours,
    lst_hours,
    pointing_ra_hours,
    ra_bin_center,
    ra_bin_of,
    ra_bins_of,
    ra_in_sweep,
    ra_sweep,
    transit_mjd,
)


def test_lst_at_j2000_is_the_gmst_constant():
    assert lst_hours(MJD_J2000) == pytest.approx(18.697374558, abs=1e-9)


def test_lst_repeats_after_one_sidereal_day():
    mjd = 60284.3
    assert lst_hours(mjd + SIDEREAL_DAY_SOLAR_DAYS) == pytest.approx(lst_hours(mjd), abs=1e-6)


def test_lst_advances_about_four_minutes_per_solar_day():
    gain = (lst_hours(60285.3) - lst_hours(60284.3)) % 24.0
    assert gain * 60.0 == pytest.approx(3.94, abs=0.01)


def test_longitude_shifts_lst_by_an_hour_per_15_degrees():
    mjd = 60284.3
    assert (lst_hours(mjd, 15.0) - lst_hours(mjd)) % 24.0 == pytest.approx(1.0, abs=1e-9)


def test_lst_is_vectorised_and_in_range():
    lst = lst_hours(np.linspace(60000.0, 60010.0, 1001))
    assert lst.shape == (1001,)
    assert np.all((lst >= 0.0) & (lst < 24.0))


def test_lst_rejects_non_finite_mjd():
    with pytest.raises(RangeError):
        lst_hours(float("nan"))


def test_meridian_pointing_ra_is_lst():
    clock = ObservatoryClock(mjd_epoch=60284.0, site_longitude_deg=-3.0)
    assert pointing_ra_hours(60284.2, clock) == lst_hours(60284.2, -3.0)


def test_non_meridian_pointing_is_unsupported():
    clock = ObservatoryClock(mjd_epoch=60284.0)
    with pytest.raises(UnsupportedConfigurationError):
        pointing_ra_hours(60284.2, clock, Pointing(azimuth_deg=170.0))


def test_hour_angle_is_wrapped():
    clock = ObservatoryClock(mjd_epoch=60284.0)
    mjd = 60284.2
    lst = lst_hours(mjd)
    assert hour_angle_hours(lst, mjd, clock) == pytest.approx(0.0, abs=1e-9)
    ha = hour_angle_hours((lst + 13.0) % 24.0, mjd, clock)
    assert ha == pytest.approx(11.0, abs=1e-9)


@pytest.mark.parametrize("ra, expected", [(0.0, 0), (0.3, 3), (5.25, 52), (23.99, 239)])
def test_ra_bin_of(ra, expected):
    assert ra_bin_of(ra) == expected


@pytest.mark.parametrize("ra", [-0.1, 24.0, 25.0])
def test_ra_bin_of_rejects_out_of_range(ra):
    with pytest.raises(RangeError):
        ra_bin_of(ra)


def test_ra_bins_of_matches_scalar_form():
    ras = np.array([0.05, 0.3, 5.25, 12.0, 23.95])
    assert list(ra_bins_of(ras)) == [ra_bin_of(r) for r in ras]


def test_ra_bin_center():
    assert ra_bin_center(52) == pytest.approx(5.25)
    assert RaBin(0).center == pytest.approx(0.05)
    with pytest.raises(RangeError):
        RaBin(240)


def test_clock_ticks():
    clock = ObservatoryClock(mjd_epoch=60284.0)
    assert clock.tick_mjd(0) == 60284.0
    assert (clock.tick_mjd(20) - clock.tick_mjd(0)) * 86400.0 == pytest.approx(60.0, abs=1e-6)
    with pytest.raises(RangeError):
        ObservatoryClock(mjd_epoch=60284.0, tick_interval_s=0.0)


def test_frame_mjds_are_contiguous():
    starts = frame_mjds(60284.0, 0.268, frames_per_tick=2)
    assert len(starts) == 2
    assert (starts[1] - starts[0]) * 86400.0 == pytest.approx(0.268, abs=1e-6)


def test_four_hour_sweep_covers_a_little_more_than_four_hours_of_ra():
    clock = ObservatoryClock(mjd_epoch=60284.0)
    start, length = ra_sweep(60284.0, 60284.0 + 4.0 / 24.0, clock)
    assert start == pytest.approx(lst_hours(60284.0))
    assert length == pytest.approx(4.011, abs=1e-3)


def test_ra_in_sweep_handles_wrap():
    sweep = (23.0, 2.0)
    assert ra_in_sweep(0.5, sweep)
    assert ra_in_sweep(23.5, sweep)
    assert not ra_in_sweep(2.0, sweep)
    assert not ra_in_sweep(12.0, sweep)


def test_transit_mjd_puts_the_ra_on_the_meridian():
    clock = ObservatoryClock(mjd_epoch=60284.0)
    t = transit_mjd(5.25, 60284.0, clock)
    assert 60284.0 <= t < 60284.0 + SIDEREAL_DAY_SOLAR_DAYS
    assert lst_hours(t) == pytest.approx(5.25, abs=1e-6)
