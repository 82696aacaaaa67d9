"""Time and celestial-coordinate bookkeeping for a meridian transit interferometer.

MJD timestamps drive everything: local sidereal time follows from a linear GMST
formula referenced to J2000, the pointing RA of a meridian telescope equals the
LST, and RA is binned in 0.1 hr bins (240 per sidereal day).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from errors import RangeError, UnsupportedConfigurationError

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0
MJD_J2000 = 51544.5
GMST_AT_J2000_HR = 18.697374558
# Sidereal hours per solar day (GMST linear coefficient)
SIDEREAL_HOURS_PER_DAY = 24.06570982441908
SIDEREAL_RATE = SIDEREAL_HOURS_PER_DAY / 24.0
SIDEREAL_DAY_SOLAR_DAYS = 24.0 / SIDEREAL_HOURS_PER_DAY

RA_BIN_WIDTH_HR = 0.1
RA_BINS_PER_HOUR = 10
N_RA_BINS = 240
MERIDIAN_AZIMUTH_DEG = 180.0


@dataclass(frozen=True)
class ObservatoryClock:
    mjd_epoch: float
    site_longitude_deg: float = 0.0
    tick_interval_s: float = 3.0

    def __post_init__(self):
        if not math.isfinite(self.mjd_epoch):
            raise RangeError(f"mjd_epoch must be finite, got {self.mjd_epoch}")
        if not self.tick_interval_s > 0:
            raise RangeError(f"tick_interval_s must be > 0, got {self.tick_interval_s}")

    def tick_mjd(self, index: int) -> float:
        """MJD of the trigger pulse that starts tick `index`."""
        return self.mjd_epoch + index * self.tick_interval_s / SECONDS_PER_DAY


@dataclass(frozen=True)
class Pointing:
    dec_deg: float = -8.0
    azimuth_deg: float = MERIDIAN_AZIMUTH_DEG

    def __post_init__(self):
        if not -90.0 <= self.dec_deg <= 90.0:
            raise RangeError(f"dec_deg must be within [-90, 90], got {self.dec_deg}")


@dataclass(frozen=True)
class RaBin:
    index: int
    width_hr: float = RA_BIN_WIDTH_HR

    def __post_init__(self):
        if not 0 <= self.index < N_RA_BINS:
            raise RangeError(f"RA bin index must be within [0, {N_RA_BINS - 1}], got {self.index}")

    @property
    def center(self) -> float:
        return ra_bin_center(self.index)


def lst_hours(mjd, site_longitude_deg: float = 0.0):
    """Local mean sidereal time in hours, [0, 24). Accepts scalars or arrays."""
    mjd_arr = np.asarray(mjd, dtype=float)
    if not np.all(np.isfinite(mjd_arr)):
        raise RangeError("mjd must be finite")
    gmst = GMST_AT_J2000_HR + SIDEREAL_HOURS_PER_DAY * (mjd_arr - MJD_J2000)
    lst = np.mod(gmst + site_longitude_deg / 15.0, 24.0)
    # mod can round up to exactly 24.0 for tiny negative inputs
    lst = np.where(lst >= 24.0, 0.0, lst)
    if lst.ndim == 0:
        return float(lst)
    return lst


def pointing_ra_hours(mjd, clock: ObservatoryClock, pointing: Pointing = Pointing()):
    """RA the elements point at. Only meridian (azimuth 180°) pointing is modelled."""
    if not math.isclose(pointing.azimuth_deg, MERIDIAN_AZIMUTH_DEG, abs_tol=1e-9):
        raise UnsupportedConfigurationError(
            f"only meridian pointing (azimuth 180°) is supported, got {pointing.azimuth_deg}°"
        )
    return lst_hours(mjd, clock.site_longitude_deg)


def hour_angle_hours(source_ra_hr: float, mjd, clock: ObservatoryClock):
    """Hour angle of a source, wrapped into [-12, 12)."""
    ha = lst_hours(mjd, clock.site_longitude_deg) - source_ra_hr
    ha = np.mod(np.asarray(ha) + 12.0, 24.0) - 12.0
    if np.ndim(ha) == 0:
        return float(ha)
    return ha


def ra_bin_of(ra_hr: float) -> int:
    if not (0.0 <= ra_hr < 24.0):
        raise RangeError(f"RA must be within [0, 24) hr, got {ra_hr}")
    # multiply rather than divide by 0.1: 0.3 / 0.1 floors to 2
    return min(int(math.floor(ra_hr * RA_BINS_PER_HOUR)), N_RA_BINS - 1)


def ra_bins_of(ra_hr) -> np.ndarray:
    """Vectorised ra_bin_of."""
    ra = np.asarray(ra_hr, dtype=float)
    if np.any((ra < 0.0) | (ra >= 24.0)):
        raise RangeError("RA must be within [0, 24) hr")
    return np.minimum(np.floor(ra * RA_BINS_PER_HOUR).astype(int), N_RA_BINS - 1)


def ra_bin_center(index: int) -> float:
    return (index + 0.5) * RA_BIN_WIDTH_HR


def frame_mjds(tick_mjd: float, frame_duration_s: float, frames_per_tick: int = 2) -> list[float]:
    """Start MJDs of the contiguous, non-overlapping frames captured after a trigger."""
    return [tick_mjd + j * frame_duration_s / SECONDS_PER_DAY for j in range(frames_per_tick)]


def ra_sweep(mjd_start: float, mjd_end: float, clock: ObservatoryClock) -> tuple[float, float]:
    """RA interval swept by a meridian telescope, as (start_hr, length_hr).

    The interval may wrap through 24 h; use `ra_in_sweep` for membership tests.
    """
    start = lst_hours(mjd_start, clock.site_longitude_deg)
    length = (mjd_end - mjd_start) * SIDEREAL_HOURS_PER_DAY
    return start, length


def ra_in_sweep(ra_hr: float, sweep: tuple[float, float]) -> bool:
    start, length = sweep
    if length >= 24.0:
        return True
    return ((ra_hr - start) % 24.0) <= length


def transit_mjd(ra_hr: float, after_mjd: float, clock: ObservatoryClock) -> float:
    """First MJD at or after `after_mjd` when `ra_hr` is on the meridian."""
    lst = lst_hours(after_mjd, clock.site_longitude_deg)
    wait_sidereal_hr = (ra_hr - lst) % 24.0
    return after_mjd + wait_sidereal_hr / SIDEREAL_HOURS_PER_DAY
