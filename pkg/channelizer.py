"""FFT channelizer: IQ frames to complex spectra, segment and wideband powers, per-bin SNR.

Spectra are stored fftshifted so bin 0 is the bottom of the sampled band;
bin k sits at RF = lo + (k - N//2) * bin_width. The FFT is orthonormal, so a
circular complex noise of variance σ² gives a mean bin power of σ².
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from errors import DegenerateInputError, FrameError, RangeError
from sky_sim import DUMP_HEADER, IQFrame

logger = logging.getLogger(__name__)

SEGMENT_BINS = 256
FIRST_LEVEL_BAND_HZ = (1398e6, 1451e6)
WIDEBAND_BW_HZ = 50e6
SPECTRAL_DUMP_MAGIC = b"SKYPWDMP"


@dataclass(frozen=True)
class SpectralFrame:
    element: str
    start_mjd: float
    bin_width_hz: float
    lo_freq_hz: float
    bins: np.ndarray = field(repr=False)
    power: np.ndarray = field(repr=False)
    segment_power: np.ndarray = field(repr=False)
    wideband_power: float

    @property
    def fft_len(self) -> int:
        return len(self.bins)

    @property
    def n_segments(self) -> int:
        return len(self.segment_power)

    def rf_of_bin(self, k):
        return rf_of_bin(k, self.lo_freq_hz, self.bin_width_hz, self.fft_len)

    def bin_of_rf(self, rf_hz):
        return bin_of_rf(rf_hz, self.lo_freq_hz, self.bin_width_hz, self.fft_len)

    def rf_axis(self) -> np.ndarray:
        return rf_of_bin(np.arange(self.fft_len), self.lo_freq_hz, self.bin_width_hz, self.fft_len)


def rf_of_bin(k, lo_freq_hz: float, bin_width_hz: float, fft_len: int):
    return lo_freq_hz + (np.asarray(k) - fft_len // 2) * bin_width_hz


def bin_of_rf(rf_hz, lo_freq_hz: float, bin_width_hz: float, fft_len: int):
    k = np.rint((np.asarray(rf_hz, dtype=float) - lo_freq_hz) / bin_width_hz).astype(int) + fft_len // 2
    if np.any((k < 0) | (k >= fft_len)):
        raise RangeError(f"RF {rf_hz} Hz lies outside the sampled band")
    if k.ndim == 0:
        return int(k)
    return k


def segment_of_bin(k):
    return np.asarray(k) // SEGMENT_BINS


def _segment_sizes(fft_len: int) -> np.ndarray:
    starts = np.arange(0, fft_len, SEGMENT_BINS)
    return np.minimum(starts + SEGMENT_BINS, fft_len) - starts


def channelize(frame: IQFrame, fft_len: int | None = None,
               first_level_band_hz: tuple[float, float] = FIRST_LEVEL_BAND_HZ,
               wideband_bw_hz: float = WIDEBAND_BW_HZ) -> SpectralFrame:
    """Rectangular-window complex FFT of one element frame."""
    n = len(frame.samples)
    if n == 0 or (fft_len is not None and n != fft_len):
        raise FrameError(f"{frame.element} frame at MJD {frame.start_mjd}: {n} samples, expected {fft_len}")

    bins = np.fft.fftshift(np.fft.fft(frame.samples, norm="ortho"))
    bins.setflags(write=False)
    power = np.abs(bins) ** 2
    power.setflags(write=False)
    segment_power = np.add.reduceat(power, np.arange(0, n, SEGMENT_BINS))
    segment_power.setflags(write=False)

    bin_width = frame.sample_rate_hz / n
    rf = rf_of_bin(np.arange(n), frame.lo_freq_hz, bin_width, n)
    center = 0.5 * (first_level_band_hz[0] + first_level_band_hz[1])
    half = 0.5 * min(wideband_bw_hz, first_level_band_hz[1] - first_level_band_hz[0])
    wideband_power = float(power[(rf >= center - half) & (rf < center + half)].sum())

    return SpectralFrame(
        element=frame.element,
        start_mjd=frame.start_mjd,
        bin_width_hz=bin_width,
        lo_freq_hz=frame.lo_freq_hz,
        bins=bins,
        power=power,
        segment_power=segment_power,
        wideband_power=wideband_power,
    )


def segment_power(frame: SpectralFrame, segment_index: int) -> float:
    """Power integrated over the 256 bins (~954 Hz) of one segment."""
    if not 0 <= segment_index < frame.n_segments:
        raise RangeError(f"segment {segment_index} outside [0, {frame.n_segments})")
    return float(frame.segment_power[segment_index])


def noise_estimate(frame: SpectralFrame) -> np.ndarray:
    """Per-bin noise: mean power of the other bins of the same segment."""
    seg = segment_of_bin(np.arange(frame.fft_len))
    others = _segment_sizes(frame.fft_len)[seg] - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        noise = (frame.segment_power[seg] - frame.power) / others
    noise = np.where(others > 0, noise, 0.0)
    # cancellation can leave tiny negatives for an all-zero segment
    return np.maximum(noise, 0.0)


def snr_db_all(frame: SpectralFrame) -> np.ndarray:
    """Per-bin SNR in dB; bins without a noise estimate get -inf."""
    noise = noise_estimate(frame)
    snr = np.full(frame.fft_len, -np.inf)
    ok = noise > 0
    with np.errstate(divide="ignore"):
        snr[ok] = 10.0 * np.log10(frame.power[ok] / noise[ok])
    return snr


def bin_snr_db(frame: SpectralFrame, bin: int) -> float:
    if not 0 <= bin < frame.fft_len:
        raise RangeError(f"bin {bin} outside [0, {frame.fft_len})")
    seg = bin // SEGMENT_BINS
    others = _segment_sizes(frame.fft_len)[seg] - 1
    noise = (frame.segment_power[seg] - frame.power[bin]) / others if others > 0 else 0.0
    if noise <= 0:
        raise DegenerateInputError(f"zero noise estimate for bin {bin} (segment {seg})")
    if frame.power[bin] == 0:
        return float("-inf")
    return float(10.0 * np.log10(frame.power[bin] / noise))


def write_spectral_dump(path, frames: Iterable[SpectralFrame]) -> int:
    """Bin powers per frame as little-endian float32 after the 64-byte header."""
    path = Path(path)
    count = 0
    with open(path, "wb") as fh:
        for frame in frames:
            if count == 0:
                header = np.zeros(1, dtype=DUMP_HEADER)
                header["magic"] = SPECTRAL_DUMP_MAGIC
                header["version"] = 1
                header["n_elements"] = 1
                header["sample_rate_hz"] = frame.bin_width_hz * frame.fft_len
                header["fft_len"] = frame.fft_len
                header["start_mjd"] = frame.start_mjd
                header.tofile(fh)
            np.asarray(frame.power, dtype="<f4").tofile(fh)
            count += 1
    logger.info("wrote %d spectra to %s", count, path)
    return count
