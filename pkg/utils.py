import numpy as np
import pandas as pd


def db_to_linear(value_db):
    return np.power(10.0, np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(value, dtype=float))


def wrap_phase(phase):
    """Wrap radians into (-pi, pi]."""
    wrapped = np.angle(np.exp(1j * np.asarray(phase, dtype=float)))
    # np.angle returns -pi for the branch cut, the interval is open there
    wrapped = np.where(wrapped <= -np.pi, np.pi, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def format_mjd(value: float) -> str:
    """MJD with the 7 decimals used in figure headers (~9 ms)."""
    if pd.isna(value):
        return "-"
    return f"{value:.7f}".rstrip("0").rstrip(".")


def format_hours(value: float) -> str:
    """Hours as 'HHhMMmSS.Ss'."""
    if pd.isna(value):
        return "-"
    value = float(value) % 24.0
    hours = int(value)
    minutes_decimal = (value - hours) * 60.0
    minutes = int(np.floor(minutes_decimal))
    seconds = (minutes_decimal - minutes) * 60.0
    return f"{hours:02d}h{minutes:02d}m{seconds:04.1f}s"


def mjd_tag(value: float) -> str:
    return f"{value:.6f}"
