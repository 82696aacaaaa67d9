"""First-level candidates, Δt=0 pulse pairs and the second-level pair filter."""

import logging
import math
from dataclasses import dataclass, replace
from itertools import groupby
from typing import Iterable

import numpy as np

from channelizer import SEGMENT_BINS, SpectralFrame, snr_db_all
from errors import AlignmentError, OrderingError
from excision import (
    ROUTE_CANDIDATE,
    ROUTE_RFI,
    NotchSet,
    SegmentLedger,
    ledger_admit,
    rfi_margins,
    usable_bin_mask,
)
from timebase import ObservatoryClock, Pointing, pointing_ra_hours, ra_bin_of
from utils import wrap_phase

logger = logging.getLogger(__name__)

SNR_THRESHOLD_DB = 8.5
MAX_DELTA_F_HZ = 1e5
MAX_DD_PHI_RAD = 0.1

MARGIN_END_OF_FILE = "end_of_file"
MARGIN_AT_CANDIDATE = "at_candidate"
MARGIN_SNAPSHOTS = (MARGIN_END_OF_FILE, MARGIN_AT_CANDIDATE)

ROUTE_REASON_TRIPPED = "segment_tripped"


@dataclass(frozen=True)
class CandidateRecord:
    mjd: float
    ra_hr: float
    ra_bin: int
    rf_hz: float
    bin_index: int
    snr_east_db: float
    snr_west_db: float
    phi_east_rad: float
    phi_west_rad: float
    p954_east: float
    p954_west: float
    p50m_east: float
    p50m_west: float
    margin_low: int
    margin_high: int
    route_reason: str = ""

    @property
    def phase_difference(self) -> float:
        """West minus East RF phase, wrapped."""
        return wrap_phase(self.phi_west_rad - self.phi_east_rad)


@dataclass(frozen=True)
class PairRecord:
    upper: CandidateRecord
    lower: CandidateRecord
    delta_f_hz: float
    log10_df_mhz: float
    dd_phi_abs_rad: float
    pair_mjd: float
    ra_bin: int

    @property
    def upper_rf_hz(self) -> float:
        return self.upper.rf_hz


def check_aligned(east: SpectralFrame, west: SpectralFrame):
    if not math.isclose(east.start_mjd, west.start_mjd, rel_tol=0.0, abs_tol=1e-9):
        raise AlignmentError(f"frames start at MJD {east.start_mjd} and {west.start_mjd}")
    if (east.fft_len != west.fft_len
            or not math.isclose(east.bin_width_hz, west.bin_width_hz)
            or east.lo_freq_hz != west.lo_freq_hz):
        raise AlignmentError(
            f"bin grids differ: {east.fft_len}x{east.bin_width_hz} Hz @ {east.lo_freq_hz} "
            f"vs {west.fft_len}x{west.bin_width_hz} Hz @ {west.lo_freq_hz}"
        )


def first_level_filter(east: SpectralFrame, west: SpectralFrame, notches: NotchSet, ledger: SegmentLedger,
                       clock: ObservatoryClock, pointing: Pointing = Pointing(),
                       snr_threshold_db: float = SNR_THRESHOLD_DB,
                       rfi_sink: list | None = None) -> list[CandidateRecord]:
    """Bins above threshold on both elements that survive the notches and the ledger.

    Returns the candidate-file records in bin order. Records the ledger routes to
    the RFI file are appended to `rfi_sink` when given; dropped ones are discarded.
    Margins reflect the ledger at the time of detection.
    """
    check_aligned(east, west)
    snr_e = snr_db_all(east)
    snr_w = snr_db_all(west)
    hits = (snr_e > snr_threshold_db) & (snr_w > snr_threshold_db)
    hits &= usable_bin_mask(east, notches, "first")
    bins = np.flatnonzero(hits)
    if not len(bins):
        return []

    mjd = east.start_mjd
    ra_hr = pointing_ra_hours(mjd, clock, pointing)
    ra_bin = ra_bin_of(ra_hr)
    rf = east.rf_of_bin(bins)
    phi_e = wrap_phase(np.angle(east.bins[bins]))
    phi_w = wrap_phase(np.angle(west.bins[bins]))

    kept = []
    for i, k in enumerate(bins):
        seg = int(k) // SEGMENT_BINS
        record = CandidateRecord(
            mjd=mjd,
            ra_hr=ra_hr,
            ra_bin=ra_bin,
            rf_hz=float(rf[i]),
            bin_index=int(k),
            snr_east_db=float(snr_e[k]),
            snr_west_db=float(snr_w[k]),
            phi_east_rad=float(phi_e[i]),
            phi_west_rad=float(phi_w[i]),
            p954_east=float(east.segment_power[seg]),
            p954_west=float(west.segment_power[seg]),
            p50m_east=east.wideband_power,
            p50m_west=west.wideband_power,
            margin_low=0,
            margin_high=0,
        )
        route = ledger_admit(ledger, record)
        low, high = rfi_margins(ledger, ledger.segment_of(record.rf_hz))
        record = replace(record, margin_low=low, margin_high=high)
        if route == ROUTE_CANDIDATE:
            kept.append(record)
        elif route == ROUTE_RFI and rfi_sink is not None:
            rfi_sink.append(replace(record, route_reason=ROUTE_REASON_TRIPPED))
    return kept


def annotate_margins(records: Iterable[CandidateRecord], ledger: SegmentLedger) -> list[CandidateRecord]:
    """Recompute RFI margins from the ledger's current (end of file) state."""
    return [replace(r, margin_low=low, margin_high=high)
            for r in records
            for low, high in [rfi_margins(ledger, ledger.segment_of(r.rf_hz))]]


def make_pair(lower: CandidateRecord, upper: CandidateRecord) -> PairRecord:
    delta_f = upper.rf_hz - lower.rf_hz
    dd = abs(wrap_phase(upper.phase_difference - lower.phase_difference))
    return PairRecord(
        upper=upper,
        lower=lower,
        delta_f_hz=delta_f,
        log10_df_mhz=math.log10(delta_f / 1e6),
        dd_phi_abs_rad=dd,
        pair_mjd=upper.mjd,
        ra_bin=upper.ra_bin,
    )


def form_pairs(cands: list[CandidateRecord]) -> list[PairRecord]:
    """Chain consecutive bin-sorted candidates of one frame into n-1 pairs."""
    if len(cands) < 2:
        return []
    mjd = cands[0].mjd
    for prev, cur in zip(cands, cands[1:]):
        if cur.mjd != mjd:
            raise AlignmentError(f"candidates from MJD {mjd} and {cur.mjd} cannot be paired (Δt != 0)")
        if cur.bin_index <= prev.bin_index:
            raise OrderingError(f"candidates not bin-sorted: {prev.bin_index} then {cur.bin_index}")
    return [make_pair(lower, upper) for lower, upper in zip(cands, cands[1:])]


def pairs_from_candidates(cands: Iterable[CandidateRecord]) -> list[PairRecord]:
    """Form pairs frame by frame over a whole candidate file."""
    pairs = []
    ordered = sorted(cands, key=lambda r: (r.mjd, r.bin_index))
    for _, frame in groupby(ordered, key=lambda r: r.mjd):
        pairs.extend(form_pairs(list(frame)))
    return pairs


def second_level_filter(pairs: Iterable[PairRecord], notches: NotchSet,
                        max_delta_f_hz: float = MAX_DELTA_F_HZ,
                        max_dd_phi_rad: float = MAX_DD_PHI_RAD) -> list[PairRecord]:
    """Band, Δf and |ΔΔΦ| cuts, sorted by increasing |ΔΔΦ|."""
    low, high = notches.band("second")
    kept = [
        p for p in pairs
        if low <= p.lower.rf_hz <= high
        and low <= p.upper.rf_hz <= high
        and p.delta_f_hz < max_delta_f_hz
        and p.dd_phi_abs_rad < max_dd_phi_rad
    ]
    kept.sort(key=lambda p: (p.dd_phi_abs_rad, p.pair_mjd, p.upper.rf_hz))
    return kept
