"""Statistics for candidate rates and per-RA-bin pulse-pair event counts.

Threshold math follows the Rayleigh envelope of circular complex AWGN: a bin
exceeds an SNR threshold t (linear, relative to the mean bin power) with
probability exp(-t), and M independent elements all exceed it with exp(-M t).
The SNR estimator used by the channelizer divides by a 255-bin noise mean,
which turns the exact per-element tail into (1 + t/m)^-m for m noise bins.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
from scipy import stats as sps

from candidates import PairRecord
from channelizer import SEGMENT_BINS
from errors import DegenerateInputError, OrderingError, RangeError
from sky_sim import BaselineGeometry
from timebase import N_RA_BINS, RA_BIN_WIDTH_HR
from utils import db_to_linear

logger = logging.getLogger(__name__)

# noise bins behind each SNR estimate: the segment minus the candidate bin
ESTIMATOR_NOISE_BINS = SEGMENT_BINS - 1

D_MODES = ("trial", "event")


@dataclass(frozen=True)
class ThresholdModel:
    n_fft: int
    sigma: float = 1.0
    snr_threshold_db: float = 8.5
    n_elements: int = 2
    noise_bins: int | None = None

    def __post_init__(self):
        if self.n_fft < 1:
            raise RangeError(f"n_fft must be >= 1, got {self.n_fft}")
        if self.n_elements < 1:
            raise RangeError(f"n_elements must be >= 1, got {self.n_elements}")
        if not self.sigma > 0:
            raise RangeError(f"sigma must be > 0, got {self.sigma}")
        if self.noise_bins is not None and self.noise_bins < 1:
            raise RangeError(f"noise_bins must be >= 1, got {self.noise_bins}")

    @property
    def threshold_linear(self) -> float:
        """r^2 / 2σ^2 for the threshold amplitude r."""
        return float(db_to_linear(self.snr_threshold_db))


def rayleigh_tail(r: float, sigma: float) -> float:
    """P(envelope > r) for a Rayleigh envelope of per-component variance σ^2."""
    if r < 0:
        raise RangeError(f"r must be >= 0, got {r}")
    if not sigma > 0:
        raise RangeError(f"sigma must be > 0, got {sigma}")
    return math.exp(-r * r / (2.0 * sigma * sigma))


def element_tail(snr_db, noise_bins: int | None = None):
    """Single-element exceedance of an SNR threshold.

    With `noise_bins` the estimator's finite noise mean is accounted for exactly.
    """
    t = db_to_linear(snr_db)
    if noise_bins is None:
        tail = np.exp(-t)
    else:
        tail = np.power(1.0 + t / noise_bins, -float(noise_bins))
    return float(tail) if np.ndim(tail) == 0 else tail


def expected_candidates(model: ThresholdModel) -> float:
    """Mean number of bins per frame exceeding the threshold on every element."""
    return model.n_fft * element_tail(model.snr_threshold_db, model.noise_bins) ** model.n_elements


def equal_rate_threshold_shift_db(m_from: int, m_to: int) -> float:
    """Threshold reduction (dB) keeping the candidate rate fixed when going from m_from to m_to elements."""
    if m_from < 1 or m_to < 1:
        raise RangeError(f"element counts must be >= 1, got {m_from} and {m_to}")
    return 10.0 * math.log10(m_to / m_from)


def threshold_for_rate(model: ThresholdModel, rate: float) -> float:
    """SNR threshold (dB) giving `rate` candidates per frame; model's threshold is ignored."""
    if not 0 < rate <= model.n_fft:
        raise RangeError(f"rate must be within (0, {model.n_fft}], got {rate}")
    ratio = model.n_fft / rate
    if model.noise_bins is None:
        t = math.log(ratio) / model.n_elements
    else:
        m = model.noise_bins
        t = m * (ratio ** (1.0 / (m * model.n_elements)) - 1.0)
    if t == 0:
        return float("-inf")
    return 10.0 * math.log10(t)


def _bin_overlap(start_hr: float, end_hr: float) -> np.ndarray:
    """Hours of [start, end) (0 <= start <= end <= 24) falling into each RA bin."""
    lo = np.arange(N_RA_BINS) * RA_BIN_WIDTH_HR
    hi = lo + RA_BIN_WIDTH_HR
    return np.clip(np.minimum(end_hr, hi) - np.maximum(start_hr, lo), 0.0, None)


def dwell_per_bin(dwell: Iterable[tuple[float, float]]) -> np.ndarray:
    """Accumulate (ra_start_hr, length_hr) sweeps into dwell hours per RA bin."""
    total = np.zeros(N_RA_BINS)
    for start, length in dwell:
        if length < 0:
            raise RangeError(f"dwell length must be >= 0, got {length}")
        full, rest = divmod(length, 24.0)
        total += full * RA_BIN_WIDTH_HR
        start = start % 24.0
        end = start + rest
        if end <= 24.0:
            total += _bin_overlap(start, end)
        else:
            total += _bin_overlap(start, 24.0) + _bin_overlap(0.0, end - 24.0)
    return total


def event_probabilities(dwell: Iterable[tuple[float, float]]) -> np.ndarray:
    """Probability of a random event landing in each RA bin, proportional to dwell time."""
    total = dwell_per_bin(dwell)
    norm = total.sum()
    if norm <= 0:
        raise DegenerateInputError("no dwell time in any RA bin")
    return total / norm


def _check_p(p):
    p_arr = np.asarray(p, dtype=float)
    if np.any((p_arr <= 0) | (p_arr >= 1)) or np.any(~np.isfinite(p_arr)):
        raise RangeError(f"event probability must be within (0, 1), got {p}")


def binomial_tail(n: int, k: int, p: float) -> float:
    """P(at least k events in n trials)."""
    _check_p(p)
    if not 0 <= k <= n:
        raise RangeError(f"need 0 <= k <= n, got k={k}, n={n}")
    if k == 0:
        return 1.0
    return float(sps.binom.sf(k - 1, n, p))


def binomial_cdf(n: int, k: int, p: float) -> float:
    _check_p(p)
    if k < 0:
        return 0.0
    return float(sps.binom.cdf(k, n, p))


def cohens_d(events, trials, p):
    """(observed - expected) / binomial standard deviation. Vectorised."""
    _check_p(p)
    trials_arr = np.asarray(trials, dtype=float)
    if np.any(trials_arr < 1):
        raise RangeError(f"trials must be >= 1, got {trials}")
    d = (np.asarray(events, dtype=float) - trials_arr * p) / np.sqrt(trials_arr * p * (1.0 - p))
    return float(d) if np.ndim(d) == 0 else d


def df_likelihood(delta_f_hz: float, candidate_density: float) -> float:
    """Chance of a Poisson-spaced neighbour within `delta_f_hz` (surrogate)."""
    if not candidate_density > 0:
        raise RangeError(f"candidate density must be > 0, got {candidate_density}")
    return float(-np.expm1(-candidate_density * delta_f_hz))


def snr_likelihood_log10(snr_db, n_elements: int = 2):
    """log10 of the dual-element exceedance probability at `snr_db` (surrogate)."""
    out = -n_elements * db_to_linear(snr_db) / math.log(10.0)
    return float(out) if np.ndim(out) == 0 else out


def pair_snr_likelihood_log10(pair: PairRecord) -> float:
    """Summed log10 exceedance of both elements of both pair components."""
    t = sum(float(db_to_linear(s)) for c in (pair.lower, pair.upper) for s in (c.snr_east_db, c.snr_west_db))
    return -t / math.log(10.0)


def phase_to_sky_angle_deg(dd_phi_rad: float, geometry: BaselineGeometry) -> float:
    """Small-angle sky separation matching a differential fringe phase."""
    if abs(dd_phi_rad) > math.pi:
        raise RangeError(f"|dd_phi| must be <= pi, got {dd_phi_rad}")
    return math.degrees(dd_phi_rad / (2.0 * math.pi * geometry.baseline_wavelengths))


def candidate_density(n_candidates: int, n_frames: int, usable_bandwidth_hz: float) -> float:
    if n_frames < 1 or not usable_bandwidth_hz > 0:
        raise DegenerateInputError("candidate density needs at least one frame and a usable band")
    return n_candidates / (n_frames * usable_bandwidth_hz)


@dataclass
class RaBinTable:
    event_probability: np.ndarray
    events_seen: np.ndarray = field(default=None)
    trials_seen: np.ndarray = field(default=None)
    sum_log10_df: np.ndarray = field(default=None)
    sum_snr_log10: np.ndarray = field(default=None)

    def __post_init__(self):
        self.event_probability = np.asarray(self.event_probability, dtype=float)
        if self.event_probability.shape != (N_RA_BINS,):
            raise RangeError(f"need {N_RA_BINS} bin probabilities, got shape {self.event_probability.shape}")
        for name, dtype in (("events_seen", np.int64), ("trials_seen", np.int64),
                            ("sum_log10_df", float), ("sum_snr_log10", float)):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(N_RA_BINS, dtype=dtype))

    @classmethod
    def from_dwell(cls, dwell: Iterable[tuple[float, float]]) -> "RaBinTable":
        return cls(event_probabilities(dwell))

    @classmethod
    def from_frame(cls, df: pd.DataFrame) -> "RaBinTable":
        """Inverse of to_frame."""
        df = df.sort_values("ra_bin")
        return cls(
            event_probability=df["event_probability"].to_numpy(dtype=float),
            events_seen=df["events"].to_numpy(dtype=np.int64),
            trials_seen=df["trials"].to_numpy(dtype=np.int64),
            sum_log10_df=df["sum_log10_df_mhz"].to_numpy(dtype=float),
            sum_snr_log10=df["sum_snr_log10"].to_numpy(dtype=float),
        )

    def accumulate(self, sorted_pairs: Sequence[PairRecord]) -> "RaBinTable":
        """Fold second-level pairs into per-bin counts and sums."""
        for pair in sorted_pairs:
            self.events_seen[pair.ra_bin] += 1
            self.sum_log10_df[pair.ra_bin] += pair.log10_df_mhz
            self.sum_snr_log10[pair.ra_bin] += pair_snr_likelihood_log10(pair)
        self.trials_seen[:] += len(sorted_pairs)
        return self

    @property
    def occupied(self) -> np.ndarray:
        return self.event_probability > 0

    def cohens_d(self) -> np.ndarray:
        """Final d per bin; NaN where the bin has no dwell or no trials were seen."""
        d = np.full(N_RA_BINS, np.nan)
        ok = self.occupied & (self.event_probability < 1) & (self.trials_seen > 0)
        if ok.any():
            d[ok] = cohens_d(self.events_seen[ok], self.trials_seen[ok], self.event_probability[ok])
        return d

    def binomial_tails(self) -> np.ndarray:
        """Per-bin chance of at least the observed count under the null."""
        tails = np.full(N_RA_BINS, np.nan)
        for i in np.flatnonzero(self.occupied & (self.event_probability < 1)):
            tails[i] = binomial_tail(int(self.trials_seen[i]), int(self.events_seen[i]),
                                     float(self.event_probability[i]))
        return tails

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "ra_bin": np.arange(N_RA_BINS),
            "ra_center_hr": (np.arange(N_RA_BINS) + 0.5) * RA_BIN_WIDTH_HR,
            "event_probability": self.event_probability,
            "events": self.events_seen,
            "trials": self.trials_seen,
            "cohens_d": self.cohens_d(),
            "binomial_tail": self.binomial_tails(),
            "sum_log10_df_mhz": self.sum_log10_df,
            "sum_snr_log10": self.sum_snr_log10,
        })


def running_d_series(sorted_pairs: Sequence[PairRecord], table: RaBinTable, mode: str = "trial") -> pd.DataFrame:
    """Cohen's d per RA bin as the phase-sorted trials are added one by one.

    mode "trial" emits every occupied bin after every trial; mode "event" emits
    only the bin that received the event at that trial.
    """
    if mode not in D_MODES:
        raise RangeError(f"unknown d-series mode '{mode}', expected one of {D_MODES}")
    dd = np.array([p.dd_phi_abs_rad for p in sorted_pairs], dtype=float)
    if np.any(np.diff(dd) < 0):
        raise OrderingError("pairs must be sorted by increasing |ΔΔΦ|")
    columns = ["trial", "ra_bin", "events", "cohens_d"]
    if not len(sorted_pairs):
        return pd.DataFrame(columns=columns)

    n = len(sorted_pairs)
    bins = np.array([p.ra_bin for p in sorted_pairs], dtype=int)
    trials = np.arange(1, n + 1)
    p = table.event_probability
    usable = np.flatnonzero(table.occupied & (p < 1))

    if mode == "event":
        onehot = np.zeros((n, N_RA_BINS), dtype=np.int64)
        onehot[trials - 1, bins] = 1
        counts = np.cumsum(onehot, axis=0)[trials - 1, bins]
        d = np.full(n, np.nan)
        ok = np.isin(bins, usable)
        if not ok.all():
            logger.warning("%d events fall in RA bins without dwell time", int((~ok).sum()))
        d[ok] = cohens_d(counts[ok], trials[ok], p[bins[ok]])
        return pd.DataFrame({"trial": trials, "ra_bin": bins, "events": counts, "cohens_d": d})

    rows = []
    for b in usable:
        counts = np.cumsum(bins == b)
        rows.append(pd.DataFrame({
            "trial": trials,
            "ra_bin": b,
            "events": counts,
            "cohens_d": cohens_d(counts, trials, p[b]),
        }))
    out = pd.concat(rows, ignore_index=True) if rows else pd.DataFrame(columns=columns)
    return out.sort_values(["trial", "ra_bin"], kind="stable").reset_index(drop=True)


def event_count_chisquare(counts, probabilities):
    """Chi-square of observed per-bin counts against dwell probabilities.

    Bins expected to hold fewer than 5 events are pooled into one.
    """
    counts = np.asarray(counts, dtype=float)
    probabilities = np.asarray(probabilities, dtype=float)
    if np.any(counts[probabilities <= 0] > 0):
        raise DegenerateInputError("events observed in RA bins with zero probability")
    total = counts.sum()
    if total <= 0:
        raise DegenerateInputError("no events to test")
    live = probabilities > 0
    obs = counts[live]
    expected = total * probabilities[live] / probabilities[live].sum()
    big = expected >= 5
    f_obs = list(obs[big])
    f_exp = list(expected[big])
    if (~big).any():
        f_obs.append(obs[~big].sum())
        f_exp.append(expected[~big].sum())
    if len(f_obs) < 2:
        raise DegenerateInputError("need at least two bins after pooling")
    return sps.chisquare(f_obs, f_exp)
