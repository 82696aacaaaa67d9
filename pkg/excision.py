"""RFI excision: fixed notches and the per-segment record ledger.

A four-hour candidate file is guarded by a ledger counting first-level
candidates per 256-bin segment. Once a segment has produced `trip_threshold`
candidates it is considered RFI-corrupted: later records from it go to the RFI
file (at most 200 per segment, at most 100 per FFT frame) and beyond that are
dropped. Records already written to the candidate file stay there.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from channelizer import FIRST_LEVEL_BAND_HZ, SEGMENT_BINS, SpectralFrame
from errors import ConfigError, OrderingError, RangeError

logger = logging.getLogger(__name__)

KEEP = "keep"
EXCISED_BAND = "band"
EXCISED_LO = "lo"
EXCISED_HARMONIC = "harmonic"

ROUTE_CANDIDATE = "candidate_file"
ROUTE_RFI = "rfi_file"
ROUTE_DROPPED = "dropped"

LEVELS = ("first", "second")

# 256 bins of the full-scale 62.5 MHz / 2**24 grid
SEGMENT_WIDTH_HZ = SEGMENT_BINS * 62.5e6 / 2 ** 24


@dataclass(frozen=True)
class NotchSet:
    harmonic_base_hz: float = 100e3
    harmonic_halfwidth_hz: float = 15e3
    lo_exclusion_hz: tuple[float, float] = (1424e6, 1426e6)
    first_level_band_hz: tuple[float, float] = (1398e6, 1451e6)
    second_level_band_hz: tuple[float, float] = (1405e6, 1435e6)

    def __post_init__(self):
        for name in ("lo_exclusion_hz", "first_level_band_hz", "second_level_band_hz"):
            low, high = getattr(self, name)
            if not low < high:
                raise ConfigError(f"{name} must be (low, high) with low < high, got {(low, high)}")
        first, second = self.first_level_band_hz, self.second_level_band_hz
        if not (first[0] <= second[0] and second[1] <= first[1]):
            raise ConfigError("second_level_band_hz must lie inside first_level_band_hz")
        if not 0 <= self.harmonic_halfwidth_hz < self.harmonic_base_hz / 2:
            raise ConfigError("harmonic_halfwidth_hz must be within [0, harmonic_base_hz / 2)")

    def band(self, level: str) -> tuple[float, float]:
        if level == "first":
            return self.first_level_band_hz
        if level == "second":
            return self.second_level_band_hz
        raise RangeError(f"unknown filter level '{level}', expected one of {LEVELS}")


def _harmonic_distance(rf_hz, base_hz: float):
    offset = np.mod(rf_hz, base_hz)
    return np.minimum(offset, base_hz - offset)


def notch_check(rf_hz: float, notches: NotchSet, level: str = "first") -> str:
    """KEEP, or the name of the first rule that excises `rf_hz` (band, lo, harmonic)."""
    low, high = notches.band(level)
    if not low <= rf_hz <= high:
        return EXCISED_BAND
    lo_low, lo_high = notches.lo_exclusion_hz
    if lo_low <= rf_hz <= lo_high:
        return EXCISED_LO
    if _harmonic_distance(rf_hz, notches.harmonic_base_hz) <= notches.harmonic_halfwidth_hz:
        return EXCISED_HARMONIC
    return KEEP


def notch_mask(rf_hz: np.ndarray, notches: NotchSet, level: str = "first") -> np.ndarray:
    """Vectorised notch_check: True where the frequency is kept."""
    rf_hz = np.asarray(rf_hz, dtype=float)
    low, high = notches.band(level)
    lo_low, lo_high = notches.lo_exclusion_hz
    keep = (rf_hz >= low) & (rf_hz <= high)
    keep &= ~((rf_hz >= lo_low) & (rf_hz <= lo_high))
    keep &= _harmonic_distance(rf_hz, notches.harmonic_base_hz) > notches.harmonic_halfwidth_hz
    return keep


def usable_bin_mask(frame: SpectralFrame, notches: NotchSet, level: str = "first") -> np.ndarray:
    """Bins of `frame` that survive the fixed notch filters."""
    return notch_mask(frame.rf_axis(), notches, level)


@dataclass
class SegmentLedger:
    """Per-segment counts over the first-level band; segment 0 starts at the band bottom."""
    n_segments: int
    band_low_hz: float = FIRST_LEVEL_BAND_HZ[0]
    segment_width_hz: float = SEGMENT_WIDTH_HZ
    trip_threshold: int = 10
    rfi_cap_per_segment: int = 200
    rfi_cap_per_frame: int = 100
    candidate_count: np.ndarray = field(init=False, repr=False)
    rfi_records_stored: np.ndarray = field(init=False, repr=False)
    rfi_records_this_frame: int = field(init=False, default=0)
    frame_mjd: float | None = field(init=False, default=None)
    routed: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_segments < 1:
            raise ConfigError(f"n_segments must be >= 1, got {self.n_segments}")
        if not self.segment_width_hz > 0:
            raise ConfigError(f"segment_width_hz must be > 0, got {self.segment_width_hz}")
        if self.trip_threshold < 1:
            raise ConfigError(f"trip_threshold must be >= 1, got {self.trip_threshold}")
        self.reset()

    @classmethod
    def for_band(cls, bin_width_hz: float, band_hz: tuple[float, float] = FIRST_LEVEL_BAND_HZ,
                 **kwargs) -> "SegmentLedger":
        """Ledger of 256-bin segments covering `band_hz` at the given bin width."""
        if not bin_width_hz > 0:
            raise ConfigError(f"bin_width_hz must be > 0, got {bin_width_hz}")
        width = SEGMENT_BINS * bin_width_hz
        n_segments = int(math.ceil((band_hz[1] - band_hz[0]) / width))
        return cls(n_segments=n_segments, band_low_hz=band_hz[0], segment_width_hz=width, **kwargs)

    def segment_of(self, rf_hz: float) -> int:
        seg = int(math.floor((rf_hz - self.band_low_hz) / self.segment_width_hz))
        # the band top itself belongs to the last segment
        if seg == self.n_segments and rf_hz - self.band_low_hz <= self.n_segments * self.segment_width_hz:
            seg -= 1
        return seg

    def reset(self):
        """Start a new four-hour file."""
        self.candidate_count = np.zeros(self.n_segments, dtype=np.int64)
        self.rfi_records_stored = np.zeros(self.n_segments, dtype=np.int64)
        self.rfi_records_this_frame = 0
        self.frame_mjd = None
        self.routed = {ROUTE_CANDIDATE: 0, ROUTE_RFI: 0, ROUTE_DROPPED: 0}

    @property
    def tripped(self) -> np.ndarray:
        return self.candidate_count >= self.trip_threshold

    def tripped_segments(self) -> np.ndarray:
        return np.flatnonzero(self.tripped)

    def summary(self) -> dict:
        return {
            "tripped_segments": int(self.tripped.sum()),
            "rfi_stored": int(self.rfi_records_stored.sum()),
            **self.routed,
        }


def ledger_admit(ledger: SegmentLedger, candidate) -> str:
    """Route one candidate (needs `.mjd` and `.rf_hz`) and update the ledger."""
    if ledger.frame_mjd is not None and candidate.mjd < ledger.frame_mjd:
        raise OrderingError(
            f"candidate at MJD {candidate.mjd} presented after MJD {ledger.frame_mjd}"
        )
    if ledger.frame_mjd is None or candidate.mjd > ledger.frame_mjd:
        ledger.frame_mjd = candidate.mjd
        ledger.rfi_records_this_frame = 0

    seg = ledger.segment_of(candidate.rf_hz)
    if not 0 <= seg < ledger.n_segments:
        raise RangeError(f"{candidate.rf_hz:.1f} Hz maps outside the ledger's {ledger.n_segments} segments")
    ledger.candidate_count[seg] += 1
    count = ledger.candidate_count[seg]

    if count <= ledger.trip_threshold:
        if count == ledger.trip_threshold:
            logger.debug("segment %d tripped at MJD %.7f", seg, candidate.mjd)
        route = ROUTE_CANDIDATE
    elif (ledger.rfi_records_stored[seg] < ledger.rfi_cap_per_segment
          and ledger.rfi_records_this_frame < ledger.rfi_cap_per_frame):
        ledger.rfi_records_stored[seg] += 1
        ledger.rfi_records_this_frame += 1
        route = ROUTE_RFI
    else:
        route = ROUTE_DROPPED
    ledger.routed[route] += 1
    return route


def rfi_margins(ledger: SegmentLedger, segment: int) -> tuple[int, int]:
    """Segments from `segment` down / up to the nearest tripped segment.

    Sides without a tripped segment saturate at `ledger.n_segments`.
    """
    if not 0 <= segment < ledger.n_segments:
        raise RangeError(f"segment {segment} outside [0, {ledger.n_segments})")
    tripped = ledger.tripped_segments()
    sentinel = ledger.n_segments
    pos = np.searchsorted(tripped, segment)
    if pos < len(tripped) and tripped[pos] == segment:
        return 0, 0
    low = segment - int(tripped[pos - 1]) if pos > 0 else sentinel
    high = int(tripped[pos]) - segment if pos < len(tripped) else sentinel
    return low, high
