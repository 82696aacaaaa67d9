"""Run orchestration: capture files, daily file selection, second-level analysis, lag profiles.

A capture file covers `file_duration_hr` of ticks. Files sit on a grid that
starts at the clock epoch; `continuous` schedules consecutive files, `daily`
takes, for each day, the grid file holding the transit of the RA of interest.
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import islice
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
import pandas as pd

from candidates import (
    MARGIN_END_OF_FILE,
    CandidateRecord,
    PairRecord,
    annotate_margins,
    first_level_filter,
    pairs_from_candidates,
    second_level_filter,
)
from channelizer import channelize, rf_of_bin
from correlator import LagSpectrum, average_lag_spectra, cross_correlate, lag_profile_frame
from data_processing import (
    candidate_file_name,
    frame_to_pairs,
    load_candidates,
    pairs_to_frame,
    read_header,
    read_table,
    rfi_file_name,
    write_candidates,
    write_table,
)
from errors import ConfigError, DegenerateInputError, FrameError
from excision import SegmentLedger, notch_mask
from managers import LEVELS, ConfigManager
from sky_sim import (
    EAST,
    WEST,
    IQFrame,
    SimConfig,
    expand_source,
    generate_frames,
    read_frame_dump,
    snap_to_frame,
)
from stats import RaBinTable, candidate_density, running_d_series
from timebase import SECONDS_PER_DAY, ObservatoryClock, frame_mjds, ra_in_sweep, ra_sweep, transit_mjd
from utils import format_mjd

logger = logging.getLogger(__name__)

CAPTURE_INDEX = "capture_index.json"
PAIRS_FILE = "pairs.csv"
RA_BINS_FILE = "ra_bins.csv"
D_SERIES_FILE = "d_series.csv"
LAG_PROFILE_FILE = "lag_profile.csv"


@dataclass(frozen=True)
class RunManifest:
    output_dir: Path
    scenario_path: Path | None = None
    file_duration_hr: float = 4.0
    ra_of_interest_hr: float = 5.25
    level: str = "second"
    seed: int = 0
    preset: str = "desk"

    def __post_init__(self):
        if not self.file_duration_hr > 0:
            raise ConfigError(f"file_duration_hr must be > 0, got {self.file_duration_hr}")
        if not 0.0 <= self.ra_of_interest_hr < 24.0:
            raise ConfigError(f"ra_of_interest_hr must be within [0, 24), got {self.ra_of_interest_hr}")
        if self.level not in LEVELS:
            raise ConfigError(f"level must be one of {LEVELS}, got '{self.level}'")

    @classmethod
    def from_config(cls, config: ConfigManager, output_dir) -> "RunManifest":
        run = config.get_run()
        return cls(
            output_dir=Path(output_dir),
            scenario_path=config.path,
            file_duration_hr=float(run["file_duration_hr"]),
            ra_of_interest_hr=float(run["ra_of_interest_hr"]),
            level=run["level"],
            seed=int(config.get_section("simulation")["seed"]),
            preset=run["preset"],
        )


@dataclass
class CaptureFile:
    file_index: int
    mjd_start: float
    mjd_end: float
    ra_start_hr: float
    ra_length_hr: float
    cand_file: str
    rfi_file: str
    n_frames: int = 0
    n_candidates: int = 0
    n_rfi: int = 0
    clipped: int = 0
    ledger: dict = field(default_factory=dict)

    @property
    def sweep(self) -> tuple[float, float]:
        return self.ra_start_hr, self.ra_length_hr


@dataclass
class AnalysisResult:
    files: list[CaptureFile]
    pairs: list[PairRecord]
    table: RaBinTable
    d_series: pd.DataFrame
    n_candidates: int
    candidate_density: float | None


# --- Scheduling ---
def ticks_per_file(manifest: RunManifest, clock: ObservatoryClock) -> int:
    n = int(round(manifest.file_duration_hr * 3600.0 / clock.tick_interval_s))
    if n < 1:
        raise ConfigError(f"a {manifest.file_duration_hr} hr file holds no {clock.tick_interval_s} s ticks")
    return n


def file_grid_indices(config: ConfigManager, manifest: RunManifest) -> list[int]:
    run = config.get_run()
    clock = config.clock()
    n_files = int(run["n_files"])
    if run["schedule"] == "continuous":
        return list(range(n_files))
    duration_days = ticks_per_file(manifest, clock) * clock.tick_interval_s / SECONDS_PER_DAY
    indices = []
    for day in range(n_files):
        t = transit_mjd(manifest.ra_of_interest_hr, clock.mjd_epoch + day, clock)
        indices.append(int(math.floor((t - clock.mjd_epoch) / duration_days)))
    return sorted(set(indices))


def _file_seed(seed: int, grid_index: int, stream: int = 0) -> int:
    return int(np.random.SeedSequence([seed, grid_index, stream]).generate_state(1)[0])


def simulate_file(config: ConfigManager, manifest: RunManifest, grid_index: int,
                  n_ticks: int | None = None) -> Iterator[tuple[IQFrame, IQFrame]]:
    """Frames of one grid file, seeded from (seed, grid index)."""
    clock = config.clock()
    per_file = ticks_per_file(manifest, clock)
    n_ticks = per_file if n_ticks is None else min(n_ticks, per_file)
    start_tick = grid_index * per_file
    cfg = replace(config.sim_config(), seed=_file_seed(manifest.seed, grid_index))
    mjd_start = clock.tick_mjd(start_tick)
    mjd_end = clock.tick_mjd(start_tick + n_ticks)

    pairs = [p for p in (snap_to_frame(q, cfg, clock) for q in config.injected_pairs())
             if mjd_start <= p.start_mjd < mjd_end]
    for k, source in enumerate(config.injected_sources()):
        pairs.extend(expand_source(source, cfg, clock, n_ticks, seed=_file_seed(manifest.seed, grid_index, k + 1),
                                   start_tick=start_tick, pointing=config.pointing()))
    return generate_frames(cfg, config.geometry(), pairs, config.injected_rfi(), clock, n_ticks,
                           pointing=config.pointing(), start_tick=start_tick)


def frames_from_dump(path, config: ConfigManager) -> Iterator[tuple[IQFrame, IQFrame]]:
    """Replay a raw frame dump as (east, west) frames, timed from its start MJD."""
    meta, data = read_frame_dump(path)
    if meta["n_elements"] != 2:
        raise FrameError(f"{path}: expected 2 elements, found {meta['n_elements']}")
    cfg = config.sim_config()
    clock = replace(config.clock(), mjd_epoch=meta["start_mjd"])
    duration = meta["fft_len"] / meta["sample_rate_hz"]
    for i, frame in enumerate(data):
        tick, j = divmod(i, cfg.frames_per_tick)
        mjd = frame_mjds(clock.tick_mjd(tick), duration, cfg.frames_per_tick)[j]
        yield (
            IQFrame(EAST, mjd, frame[0].astype(np.complex128), meta["sample_rate_hz"], cfg.lo_freq_hz),
            IQFrame(WEST, mjd, frame[1].astype(np.complex128), meta["sample_rate_hz"], cfg.lo_freq_hz),
        )


# --- Detection ---
def _channelize_pair(pair):
    east, west = pair
    return channelize(east), channelize(west), east.clipped + west.clipped


def detect_frames(frames: Iterable[tuple[IQFrame, IQFrame]], config: ConfigManager,
                  ledger: SegmentLedger) -> tuple[list[CandidateRecord], list[CandidateRecord], int, int]:
    """Channelize frames on a worker pool and run them through the first-level filter in time order.

    Returns (candidate records, RFI records, frame count, clipped components).
    """
    workers = int(config.get_run()["workers"])
    excision = config.get_excision()
    notches = config.notches()
    clock = config.clock()
    pointing = config.pointing()
    cands, rfi = [], []
    n_frames = clipped = 0
    frames = iter(frames)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        while True:
            batch = list(islice(frames, 2 * workers))
            if not batch:
                break
            # map keeps submission order, so the ledger sees frames in time order
            for east, west, clip in executor.map(_channelize_pair, batch):
                cands.extend(first_level_filter(east, west, notches, ledger, clock, pointing,
                                                snr_threshold_db=excision["snr_threshold_db"], rfi_sink=rfi))
                n_frames += 1
                clipped += clip
    if excision["margin_snapshot"] == MARGIN_END_OF_FILE:
        cands = annotate_margins(cands, ledger)
        rfi = annotate_margins(rfi, ledger)
    return cands, rfi, n_frames, clipped


def _new_ledger(config: ConfigManager) -> SegmentLedger:
    excision = config.get_excision()
    return SegmentLedger.for_band(
        config.sim_config().bin_width_hz,
        band_hz=config.notches().first_level_band_hz,
        trip_threshold=int(excision["trip_threshold"]),
        rfi_cap_per_segment=int(excision["rfi_cap_per_segment"]),
        rfi_cap_per_frame=int(excision["rfi_cap_per_frame"]),
    )


def capture_file(frames: Iterable[tuple[IQFrame, IQFrame]], config: ConfigManager, out_dir: Path,
                 file_index: int, mjd_start: float, mjd_end: float) -> CaptureFile:
    """Detect one file's frames and write its candidate and RFI files."""
    ledger = _new_ledger(config)
    cands, rfi, n_frames, clipped = detect_frames(frames, config, ledger)
    cand_name = candidate_file_name(mjd_start)
    rfi_name = rfi_file_name(mjd_start)
    write_candidates(cands, out_dir / cand_name)
    write_candidates(rfi, out_dir / rfi_name, with_route=True)
    start_hr, length_hr = ra_sweep(mjd_start, mjd_end, config.clock())
    summary = ledger.summary()
    logger.info(
        "file %s: %d frames, %d candidates, %d RFI records, %d segments tripped, %d dropped, %d clipped",
        format_mjd(mjd_start), n_frames, len(cands), len(rfi),
        summary["tripped_segments"], summary["dropped"], clipped,
    )
    return CaptureFile(
        file_index=file_index,
        mjd_start=mjd_start,
        mjd_end=mjd_end,
        ra_start_hr=start_hr,
        ra_length_hr=length_hr,
        cand_file=cand_name,
        rfi_file=rfi_name,
        n_frames=n_frames,
        n_candidates=len(cands),
        n_rfi=len(rfi),
        clipped=clipped,
        ledger=summary,
    )


def write_capture_index(files: list[CaptureFile], out_dir) -> Path:
    path = Path(out_dir) / CAPTURE_INDEX
    with open(path, "w", encoding="utf-8") as f:
        json.dump([asdict(c) for c in files], f, indent=4)
    return path


def load_capture_index(out_dir) -> list[CaptureFile]:
    path = Path(out_dir) / CAPTURE_INDEX
    with open(path, "r", encoding="utf-8") as f:
        return [CaptureFile(**entry) for entry in json.load(f)]


def run_capture(manifest: RunManifest, config: ConfigManager) -> list[CaptureFile]:
    """Simulate and detect every scheduled file; ledger state never crosses files."""
    out_dir = Path(manifest.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.save_resolved(out_dir)
    clock = config.clock()
    per_file = ticks_per_file(manifest, clock)
    files = []
    for grid_index in file_grid_indices(config, manifest):
        start_tick = grid_index * per_file
        files.append(capture_file(
            simulate_file(config, manifest, grid_index),
            config, out_dir, grid_index,
            clock.tick_mjd(start_tick), clock.tick_mjd(start_tick + per_file),
        ))
    write_capture_index(files, out_dir)
    return files


def detect_dump(path, manifest: RunManifest, config: ConfigManager) -> CaptureFile:
    """Detect a raw frame dump as a single capture file."""
    out_dir = Path(manifest.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.save_resolved(out_dir)
    meta, data = read_frame_dump(path)
    cfg = config.sim_config()
    clock = config.clock()
    n_ticks = -(-len(data) // cfg.frames_per_tick)
    mjd_start = meta["start_mjd"]
    mjd_end = mjd_start + n_ticks * clock.tick_interval_s / SECONDS_PER_DAY
    captured = capture_file(frames_from_dump(path, config), config, out_dir, 0, mjd_start, mjd_end)
    write_capture_index([captured], out_dir)
    return captured


# --- Second level ---
def select_daily_files(files: list[CaptureFile], ra_of_interest_hr: float) -> list[CaptureFile]:
    """Per MJD day, the earliest file whose RA sweep holds the RA of interest."""
    by_day: dict[int, list[CaptureFile]] = {}
    for f in files:
        by_day.setdefault(int(math.floor(f.mjd_start)), []).append(f)
    selected = []
    for day in sorted(by_day):
        covering = [f for f in by_day[day] if ra_in_sweep(ra_of_interest_hr, f.sweep)]
        if not covering:
            logger.warning("MJD day %d: no file covers RA %.2f hr, day omitted", day, ra_of_interest_hr)
            continue
        selected.append(min(covering, key=lambda f: f.mjd_start))
    return selected


def verify_pair_integrity(pairs: Iterable[PairRecord],
                          candidate_tables: Iterable[Iterable[CandidateRecord]]) -> list[PairRecord]:
    """Pairs with a component missing from every candidate table."""
    known = {(c.mjd, c.bin_index) for table in candidate_tables for c in table}
    return [p for p in pairs
            if (p.lower.mjd, p.lower.bin_index) not in known or (p.upper.mjd, p.upper.bin_index) not in known]


def usable_bandwidth_hz(config: ConfigManager) -> float:
    cfg: SimConfig = config.sim_config()
    rf = rf_of_bin(np.arange(cfg.fft_len), cfg.lo_freq_hz, cfg.bin_width_hz, cfg.fft_len)
    return float(notch_mask(rf, config.notches(), "first").sum() * cfg.bin_width_hz)


def analyze(manifest: RunManifest, config: ConfigManager) -> AnalysisResult:
    """Pairs, second-level cuts, per-RA-bin statistics; writes the pair and bin tables."""
    out_dir = Path(manifest.output_dir)
    run = config.get_run()
    files = load_capture_index(out_dir)
    if manifest.level == "second":
        files = select_daily_files(files, manifest.ra_of_interest_hr)
    if not files:
        raise DegenerateInputError(f"no capture files to analyze in {out_dir}")

    tables = [load_candidates(out_dir / f.cand_file) for f in files]
    pairs = [p for table in tables for p in pairs_from_candidates(table)]
    if manifest.level == "second":
        pairs = second_level_filter(pairs, config.notches(), run["max_delta_f_hz"], run["max_dd_phi_rad"])
    else:
        pairs = sorted(pairs, key=lambda p: (p.dd_phi_abs_rad, p.pair_mjd, p.upper.rf_hz))

    orphans = verify_pair_integrity(pairs, tables)
    if orphans:
        raise DegenerateInputError(f"{len(orphans)} pairs reference candidates missing from the candidate files")

    table = RaBinTable.from_dwell([f.sweep for f in files]).accumulate(pairs)
    d_series = running_d_series(pairs, table, mode=run["d_mode"])
    n_candidates = sum(len(t) for t in tables)
    n_frames = sum(f.n_frames for f in files)
    bandwidth = usable_bandwidth_hz(config)
    density = candidate_density(n_candidates, n_frames, bandwidth) if n_candidates and n_frames and bandwidth else None

    write_table(pairs_to_frame(pairs), out_dir / PAIRS_FILE)
    write_table(table.to_frame(), out_dir / RA_BINS_FILE,
                header_lines=[f"candidate_density_per_hz = {density if density is not None else 'nan'}"])
    write_table(d_series, out_dir / D_SERIES_FILE, header_lines=[f"mode = {run['d_mode']}"])
    logger.info("analyzed %d files: %d candidates, %d pairs at level %s",
                len(files), n_candidates, len(pairs), manifest.level)
    return AnalysisResult(files, pairs, table, d_series, n_candidates, density)


def load_analysis(out_dir) -> tuple[list[PairRecord], RaBinTable, pd.DataFrame, float | None]:
    """Read back what `analyze` wrote: (pairs, table, d-series, candidate density)."""
    out_dir = Path(out_dir)
    pairs = frame_to_pairs(read_table(out_dir / PAIRS_FILE))
    table = RaBinTable.from_frame(read_table(out_dir / RA_BINS_FILE))
    d_series = read_table(out_dir / D_SERIES_FILE)
    density = None
    for line in read_header(out_dir / RA_BINS_FILE):
        key, _, value = line.partition(" = ")
        if key == "candidate_density_per_hz" and value != "nan":
            density = float(value)
    return pairs, table, d_series, density


# --- Correlation ---
def correlate(manifest: RunManifest, config: ConfigManager, n_ticks: int | None = None,
              frames: Iterable[tuple[IQFrame, IQFrame]] | None = None) -> LagSpectrum:
    """Average lag spectrum over the first scheduled file (or the given frames)."""
    if frames is None:
        frames = simulate_file(config, manifest, file_grid_indices(config, manifest)[0], n_ticks)
    spectra = [cross_correlate(channelize(east), channelize(west)) for east, west in frames]
    lag = average_lag_spectra(spectra)
    out_dir = Path(manifest.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    profile = lag_profile_frame(lag, int(config.get_run()["max_lag"]))
    write_table(profile, out_dir / LAG_PROFILE_FILE,
                header_lines=[f"frames = {len(spectra)} ; tap_interval_s = {lag.tap_interval_s:.6g}"])
    logger.info("lag profile over %d frames, peak at tap %d", len(spectra), int(lag.signed_delays()[lag.peak_tap()]))
    return lag
