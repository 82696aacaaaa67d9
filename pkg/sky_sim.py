"""Two-element baseband sky simulator.

Produces East/West complex IQ frames containing circular complex AWGN (a
configurable fraction of it shared between the elements), Δt=0 Δf pulse pairs
carrying the geometric West-East phase of an East-West baseline, and narrowband
RFI. Frames come out in time order, two adjacent-time frames per 3 s tick.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from errors import BandError, ConfigError, FrameError
from timebase import (
    SECONDS_PER_DAY,
    ObservatoryClock,
    Pointing,
    frame_mjds,
    hour_angle_hours,
)

logger = logging.getLogger(__name__)

EAST = "east"
WEST = "west"
ELEMENTS = (EAST, WEST)

# 1 ms, well below one FFT interval, absorbs float noise in MJD comparisons
_MJD_EPS = 1e-3 / SECONDS_PER_DAY

FULL_SCALE = {
    "sample_rate_hz": 62.5e6,
    "fft_len": 2 ** 24,
    "lo_freq_hz": 1425e6,
}
DESK_SCALE = {
    "sample_rate_hz": 1.024e6,
    "fft_len": 2 ** 18,
    # off the LO exclusion and between 100 kHz harmonics
    "lo_freq_hz": 1415.05e6,
}
PRESETS = {"full": FULL_SCALE, "desk": DESK_SCALE}


@dataclass(frozen=True)
class SimConfig:
    sample_rate_hz: float = DESK_SCALE["sample_rate_hz"]
    fft_len: int = DESK_SCALE["fft_len"]
    sigma: float = 1.0
    correlated_fraction: float = 0.0
    quantize_bits: int = 8
    seed: int = 0
    lo_freq_hz: float = DESK_SCALE["lo_freq_hz"]
    frames_per_tick: int = 2

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be > 0, got {self.sigma}")
        if not 0.0 <= self.correlated_fraction <= 1.0:
            raise ConfigError(f"correlated_fraction must be within [0, 1], got {self.correlated_fraction}")
        if self.fft_len < 1:
            raise ConfigError(f"fft_len must be >= 1, got {self.fft_len}")
        if not self.sample_rate_hz > 0:
            raise ConfigError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        if self.quantize_bits < 0:
            raise ConfigError(f"quantize_bits must be >= 0, got {self.quantize_bits}")
        if self.frames_per_tick < 1:
            raise ConfigError(f"frames_per_tick must be >= 1, got {self.frames_per_tick}")

    @classmethod
    def preset(cls, name: str, **overrides) -> "SimConfig":
        if name not in PRESETS:
            raise ConfigError(f"unknown scale preset '{name}', expected one of {sorted(PRESETS)}")
        return cls(**{**PRESETS[name], **overrides})

    @property
    def bin_width_hz(self) -> float:
        return self.sample_rate_hz / self.fft_len

    @property
    def frame_duration_s(self) -> float:
        return self.fft_len / self.sample_rate_hz

    @property
    def band_hz(self) -> tuple[float, float]:
        half = self.sample_rate_hz / 2.0
        return self.lo_freq_hz - half, self.lo_freq_hz + half


@dataclass(frozen=True)
class BaselineGeometry:
    baseline_wavelengths: float = 32.0
    reference_freq_hz: float = 1425e6
    orientation: str = "East-West"

    def __post_init__(self):
        if not self.baseline_wavelengths > 0:
            raise ConfigError(f"baseline_wavelengths must be > 0, got {self.baseline_wavelengths}")
        if self.orientation != "East-West":
            raise ConfigError(f"only an East-West baseline is modelled, got '{self.orientation}'")


@dataclass(frozen=True)
class InjectedPair:
    f_low_hz: float
    delta_f_hz: float
    snr_db: float
    source_ra_hr: float
    start_mjd: float
    duration_s: float | None = None
    upper_offset_deg: float = 0.0
    on_bin_center: bool = True

    def __post_init__(self):
        if not self.delta_f_hz > 0:
            raise ConfigError(f"delta_f_hz must be > 0, got {self.delta_f_hz}")

    @property
    def f_high_hz(self) -> float:
        return self.f_low_hz + self.delta_f_hz


@dataclass(frozen=True)
class InjectedRfi:
    freq_hz: float
    power: float
    duty_cycle: float = 1.0
    persistent: bool = True

    def __post_init__(self):
        if not 0.0 < self.duty_cycle <= 1.0:
            raise ConfigError(f"duty_cycle must be within (0, 1], got {self.duty_cycle}")
        if self.power < 0:
            raise ConfigError(f"RFI power must be >= 0, got {self.power}")


@dataclass(frozen=True)
class InjectedSource:
    """A repeating pulse-pair emitter that is only seen while it transits the beam."""
    ra_hr: float
    snr_db: float
    delta_f_hz: float
    rate_per_tick: float = 1.0
    beam_halfwidth_hr: float = 0.2
    upper_offset_deg: float = 0.0
    f_range_hz: tuple[float, float] | None = None

    def __post_init__(self):
        if not 0.0 <= self.rate_per_tick <= 1.0:
            raise ConfigError(f"rate_per_tick must be within [0, 1], got {self.rate_per_tick}")
        if not self.delta_f_hz > 0:
            raise ConfigError(f"delta_f_hz must be > 0, got {self.delta_f_hz}")


@dataclass(frozen=True)
class IQFrame:
    element: str
    start_mjd: float
    samples: np.ndarray = field(repr=False)
    sample_rate_hz: float
    lo_freq_hz: float
    clipped: int = 0

    def __len__(self) -> int:
        return len(self.samples)


def scale_tone_amplitude(snr_db: float, sigma: float, fft_len: int) -> float:
    """Time-domain amplitude giving `snr_db` per-bin SNR with an orthonormal FFT."""
    return sigma * math.sqrt(10.0 ** (snr_db / 10.0) / fft_len)


def fringe_phase(offset_angle_rad, geometry: BaselineGeometry, rf_hz: float):
    """West-East phase for an arrival direction `offset_angle_rad` off the meridian plane."""
    wavelengths = geometry.baseline_wavelengths * (rf_hz / geometry.reference_freq_hz)
    return 2.0 * np.pi * wavelengths * np.sin(offset_angle_rad)


def offset_angle_rad(source_ra_hr: float, mjd: float, clock: ObservatoryClock,
                     pointing: Pointing = Pointing()) -> float:
    """Hour-angle-projected angle between the source and the meridian plane."""
    ha_rad = math.radians(hour_angle_hours(source_ra_hr, mjd, clock) * 15.0)
    return math.asin(math.cos(math.radians(pointing.dec_deg)) * math.sin(ha_rad))


def element_phase_offset(source_ra_hr: float, mjd: float, geometry: BaselineGeometry, rf_hz: float,
                         clock: ObservatoryClock, pointing: Pointing = Pointing()) -> float:
    """West minus East RF phase of a source, radians; zero at meridian transit."""
    return float(fringe_phase(offset_angle_rad(source_ra_hr, mjd, clock, pointing), geometry, rf_hz))


def expand_source(source: InjectedSource, cfg: SimConfig, clock: ObservatoryClock, n_ticks: int,
                  seed: int = 0, start_tick: int = 0, pointing: Pointing = Pointing(),
                  band_hz: tuple[float, float] | None = None) -> list[InjectedPair]:
    """Schedule the pulse pairs a transiting source emits during `n_ticks` ticks."""
    rng = np.random.default_rng(seed)
    if source.f_range_hz is not None:
        f_min, f_max = source.f_range_hz
    else:
        f_min, f_max = band_hz if band_hz is not None else cfg.band_hz
        margin = 4 * cfg.bin_width_hz
        f_min, f_max = f_min + margin, f_max - margin
    f_max -= source.delta_f_hz
    if f_max <= f_min:
        raise BandError(f"no room for Δf={source.delta_f_hz} Hz pairs inside [{f_min}, {f_max}] Hz")

    pairs = []
    for tick in range(start_tick, start_tick + n_ticks):
        tick_mjd = clock.tick_mjd(tick)
        if abs(hour_angle_hours(source.ra_hr, tick_mjd, clock)) > source.beam_halfwidth_hr:
            continue
        if rng.random() >= source.rate_per_tick:
            continue
        frame = int(rng.integers(cfg.frames_per_tick))
        start = frame_mjds(tick_mjd, cfg.frame_duration_s, cfg.frames_per_tick)[frame]
        pairs.append(InjectedPair(
            f_low_hz=float(rng.uniform(f_min, f_max)),
            delta_f_hz=source.delta_f_hz,
            snr_db=source.snr_db,
            source_ra_hr=source.ra_hr,
            start_mjd=start,
            duration_s=cfg.frame_duration_s,
            upper_offset_deg=source.upper_offset_deg,
        ))
    return pairs


def snap_to_frame(pair: InjectedPair, cfg: SimConfig, clock: ObservatoryClock) -> InjectedPair:
    """Move a pair's start to the start of the frame holding it, or of the next frame.

    Frames only cover part of each tick, so a start in the gap after a tick's last
    frame moves to the next tick.
    """
    slack_s = _MJD_EPS * SECONDS_PER_DAY
    elapsed_s = (pair.start_mjd - clock.mjd_epoch) * SECONDS_PER_DAY
    tick = int(math.floor((elapsed_s + slack_s) / clock.tick_interval_s))
    tick_mjd = clock.tick_mjd(tick)
    frame = int(math.floor(((pair.start_mjd - tick_mjd) * SECONDS_PER_DAY + slack_s) / cfg.frame_duration_s))
    if frame < cfg.frames_per_tick:
        start = frame_mjds(tick_mjd, cfg.frame_duration_s, cfg.frames_per_tick)[frame]
    else:
        start = clock.tick_mjd(tick + 1)
    if abs(start - pair.start_mjd) > _MJD_EPS:
        logger.debug("pair at %.1f Hz moved from MJD %.8f to frame start %.8f",
                     pair.f_low_hz, pair.start_mjd, start)
    return replace(pair, start_mjd=start)


def _check_band(cfg: SimConfig, freqs_hz: Iterable[float], what: str):
    low, high = cfg.band_hz
    for f in freqs_hz:
        if not low <= f < high:
            raise BandError(f"{what} at {f:.1f} Hz lies outside the sampled band [{low:.1f}, {high:.1f}) Hz")


def _snap(baseband_hz: float, cfg: SimConfig) -> float:
    return round(baseband_hz / cfg.bin_width_hz) * cfg.bin_width_hz


def _quantize(samples: np.ndarray, bits: int, sigma: float) -> tuple[np.ndarray, int]:
    """Mid-rise uniform quantizer per I/Q component, full scale at ±4σ."""
    levels = 2 ** bits
    full_scale = 4.0 * sigma
    step = 2.0 * full_scale / levels
    clipped = 0
    out = []
    for component in (samples.real, samples.imag):
        index = np.floor(component / step)
        clipped += int(np.count_nonzero((index < -levels // 2) | (index > levels // 2 - 1)))
        index = np.clip(index, -levels // 2, levels // 2 - 1)
        out.append((index + 0.5) * step)
    return out[0] + 1j * out[1], clipped


class _RfiGate:
    """Decides per frame whether each RFI emitter is on."""

    def __init__(self, rfi: list[InjectedRfi], n_ticks: int, rng: np.random.Generator):
        self.rfi = rfi
        self.rng = rng
        self.bursts = []
        for r in rfi:
            if r.persistent:
                self.bursts.append(None)
            else:
                length = max(1, int(round(r.duty_cycle * n_ticks)))
                start = int(rng.integers(0, max(1, n_ticks - length + 1)))
                self.bursts.append((start, start + length))

    def active(self, tick_offset: int) -> list[bool]:
        states = []
        for r, burst in zip(self.rfi, self.bursts):
            if burst is None:
                states.append(r.duty_cycle >= 1.0 or self.rng.random() < r.duty_cycle)
            else:
                states.append(burst[0] <= tick_offset < burst[1])
        return states


def generate_frames(cfg: SimConfig, geometry: BaselineGeometry, pairs: list[InjectedPair],
                    rfi: list[InjectedRfi], clock: ObservatoryClock, n_ticks: int,
                    pointing: Pointing = Pointing(), start_tick: int = 0) -> Iterator[tuple[IQFrame, IQFrame]]:
    """Yield (east, west) frame pairs, `cfg.frames_per_tick` per tick, in time order."""
    if cfg.frame_duration_s * cfg.frames_per_tick > clock.tick_interval_s:
        raise ConfigError(
            f"{cfg.frames_per_tick} frames of {cfg.frame_duration_s:.3f} s do not fit in a "
            f"{clock.tick_interval_s} s tick"
        )
    _check_band(cfg, [f for p in pairs for f in (p.f_low_hz, p.f_high_hz)], "injected pulse pair")
    _check_band(cfg, [r.freq_hz for r in rfi], "injected RFI")

    rng = np.random.default_rng(cfg.seed)
    n = cfg.fft_len
    t = np.arange(n) / cfg.sample_rate_hz
    scale = cfg.sigma / math.sqrt(2.0)
    own = math.sqrt(1.0 - cfg.correlated_fraction)
    shared = math.sqrt(cfg.correlated_fraction)

    pairs = sorted((snap_to_frame(p, cfg, clock) for p in pairs), key=lambda p: p.start_mjd)
    starts = np.array([p.start_mjd for p in pairs], dtype=float)
    ends = np.array([
        p.start_mjd + (p.duration_s if p.duration_s is not None else cfg.frame_duration_s) / SECONDS_PER_DAY
        for p in pairs
    ], dtype=float)
    rfi_inter_phase = rng.uniform(-np.pi, np.pi, size=len(rfi))
    gate = _RfiGate(rfi, n_ticks, rng)

    def noise() -> np.ndarray:
        draw = rng.standard_normal(2 * n)
        return scale * (draw[:n] + 1j * draw[n:])

    for tick_offset in range(n_ticks):
        tick_mjd = clock.tick_mjd(start_tick + tick_offset)
        for frame_mjd in frame_mjds(tick_mjd, cfg.frame_duration_s, cfg.frames_per_tick):
            common = noise() if shared > 0 else 0.0
            east = own * noise() + shared * common if own > 0 else shared * common
            west = own * noise() + shared * common if own > 0 else shared * common
            east = np.array(east, dtype=np.complex128, copy=True)
            west = np.array(west, dtype=np.complex128, copy=True)

            if len(pairs):
                active = np.nonzero((starts <= frame_mjd + _MJD_EPS) & (ends > frame_mjd + _MJD_EPS))[0]
            else:
                active = []
            for idx in active:
                pair = pairs[idx]
                amplitude = scale_tone_amplitude(pair.snr_db, cfg.sigma, n)
                theta = offset_angle_rad(pair.source_ra_hr, frame_mjd, clock, pointing)
                for rf, angle in ((pair.f_low_hz, theta),
                                  (pair.f_high_hz, theta + math.radians(pair.upper_offset_deg))):
                    baseband = rf - cfg.lo_freq_hz
                    if pair.on_bin_center:
                        baseband = _snap(baseband, cfg)
                    phase = rng.uniform(-np.pi, np.pi)
                    delta_phi = float(fringe_phase(angle, geometry, cfg.lo_freq_hz + baseband))
                    tone = amplitude * np.exp(1j * (2.0 * np.pi * baseband * t + phase))
                    east += tone
                    west += tone * np.exp(1j * delta_phi)

            for r, on, inter in zip(rfi, gate.active(tick_offset), rfi_inter_phase):
                if not on:
                    continue
                amplitude = cfg.sigma * math.sqrt(r.power / n)
                tone = amplitude * np.exp(1j * (2.0 * np.pi * (r.freq_hz - cfg.lo_freq_hz) * t
                                                + rng.uniform(-np.pi, np.pi)))
                east += tone
                west += tone * np.exp(1j * inter)

            clipped_e = clipped_w = 0
            if cfg.quantize_bits:
                east, clipped_e = _quantize(east, cfg.quantize_bits, cfg.sigma)
                west, clipped_w = _quantize(west, cfg.quantize_bits, cfg.sigma)
                if clipped_e or clipped_w:
                    logger.debug("frame %.7f: clipped %d east / %d west components",
                                 frame_mjd, clipped_e, clipped_w)
            east.setflags(write=False)
            west.setflags(write=False)
            yield (
                IQFrame(EAST, frame_mjd, east, cfg.sample_rate_hz, cfg.lo_freq_hz, clipped_e),
                IQFrame(WEST, frame_mjd, west, cfg.sample_rate_hz, cfg.lo_freq_hz, clipped_w),
            )


# --- raw frame dump ---
DUMP_MAGIC = b"SKYIQDMP"
DUMP_VERSION = 1
DUMP_HEADER = np.dtype([
    ("magic", "S8"),
    ("version", "<u4"),
    ("n_elements", "<u4"),
    ("sample_rate_hz", "<f8"),
    ("fft_len", "<u8"),
    ("start_mjd", "<f8"),
    ("reserved", "S24"),
])


def write_frame_dump(path, frames: Iterable[tuple[IQFrame, IQFrame]]) -> int:
    """Write frame pairs as little-endian interleaved float32 I/Q, East then West.

    Returns the number of frame pairs written.
    """
    path = Path(path)
    count = 0
    with open(path, "wb") as fh:
        for east, west in frames:
            if count == 0:
                header = np.zeros(1, dtype=DUMP_HEADER)
                header["magic"] = DUMP_MAGIC
                header["version"] = DUMP_VERSION
                header["n_elements"] = len(ELEMENTS)
                header["sample_rate_hz"] = east.sample_rate_hz
                header["fft_len"] = len(east)
                header["start_mjd"] = east.start_mjd
                header.tofile(fh)
            np.asarray(east.samples, dtype="<c8").tofile(fh)
            np.asarray(west.samples, dtype="<c8").tofile(fh)
            count += 1
    logger.info("wrote %d frame pairs to %s", count, path)
    return count


def read_frame_dump(path) -> tuple[dict, np.ndarray]:
    """Read a dump back as (header, samples[frame, element, sample])."""
    header = np.fromfile(path, dtype=DUMP_HEADER, count=1)
    if len(header) == 0 or header["magic"][0] != DUMP_MAGIC:
        raise FrameError(f"{path} is not an IQ frame dump")
    meta = {name: header[name][0].item() for name in ("version", "n_elements", "sample_rate_hz",
                                                       "fft_len", "start_mjd")}
    data = np.fromfile(path, dtype="<c8", offset=DUMP_HEADER.itemsize)
    n_el, n = meta["n_elements"], meta["fft_len"]
    return meta, data.reshape(-1, n_el, n)


