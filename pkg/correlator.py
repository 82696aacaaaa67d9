"""FX cross-correlation of the two elements into delay taps."""

import logging
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import pandas as pd

from candidates import check_aligned
from channelizer import SpectralFrame
from errors import DegenerateInputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LagSpectrum:
    taps: np.ndarray = field(repr=False)
    tap_interval_s: float
    zero_lag_index: int = 0
    start_mjd: float | None = None

    def __len__(self) -> int:
        return len(self.taps)

    def signed_delays(self) -> np.ndarray:
        """Tap offsets in samples, negative for West leading East."""
        n = len(self.taps)
        m = (np.arange(n) - self.zero_lag_index) % n
        return np.where(m > n // 2, m - n, m)

    def peak_tap(self) -> int:
        return int(np.argmax(np.abs(self.taps)))


def cross_correlate(east: SpectralFrame, west: SpectralFrame) -> LagSpectrum:
    """Inverse transform of the per-bin conjugate products.

    Normalised by the geometric mean of the two frame powers, so identical
    inputs give magnitude 1 at zero lag. A West signal delayed by k samples
    peaks at tap k.
    """
    check_aligned(east, west)
    pe = float(east.power.sum())
    pw = float(west.power.sum())
    if pe <= 0 or pw <= 0:
        raise DegenerateInputError(f"zero-power frame at MJD {east.start_mjd}")
    n = east.fft_len
    # spectra are stored fftshifted; the product must be in natural order for the lag axis
    cross = np.fft.ifftshift(east.bins * np.conj(west.bins))
    r = n * np.fft.ifft(cross) / np.sqrt(pe * pw)
    taps = np.roll(r[::-1], 1)
    return LagSpectrum(
        taps=taps,
        tap_interval_s=1.0 / (east.bin_width_hz * n),
        zero_lag_index=0,
        start_mjd=east.start_mjd,
    )


def average_lag_spectra(spectra: Iterable[LagSpectrum]) -> LagSpectrum:
    """Complex mean over frames."""
    spectra = list(spectra)
    if not spectra:
        raise DegenerateInputError("no lag spectra to average")
    taps = np.mean([s.taps for s in spectra], axis=0)
    return LagSpectrum(taps=taps, tap_interval_s=spectra[0].tap_interval_s,
                       zero_lag_index=spectra[0].zero_lag_index, start_mjd=spectra[0].start_mjd)


def lag_profile_frame(lag: LagSpectrum, max_lag: int | None = None) -> pd.DataFrame:
    """Taps as rows of (tap_index, delay_s, magnitude, phase), ordered by signed delay."""
    delays = lag.signed_delays()
    keep = np.ones(len(lag), dtype=bool) if max_lag is None else np.abs(delays) <= max_lag
    order = np.argsort(delays[keep], kind="stable")
    taps = lag.taps[keep][order]
    return pd.DataFrame({
        "tap_index": delays[keep][order],
        "delay_s": delays[keep][order] * lag.tap_interval_s,
        "magnitude": np.abs(taps),
        "phase": np.angle(taps),
    })
