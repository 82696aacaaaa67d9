import logging
from dataclasses import asdict, fields
from pathlib import Path
from typing import Iterable

import pandas as pd

from candidates import CandidateRecord, PairRecord
from errors import DegenerateInputError
from utils import mjd_tag

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
# 9 digits cannot resolve a 3.7 Hz bin at 1.4 GHz or two frames of one tick in MJD
FLOAT_FORMAT = "%.15g"

CANDIDATE_COLUMNS = [
    "mjd", "ra_hr", "ra_bin", "rf_hz", "bin_index",
    "snr_east_db", "snr_west_db", "phi_east_rad", "phi_west_rad",
    "p954_east", "p954_west", "p50m_east", "p50m_west",
    "margin_low", "margin_high",
]
RFI_COLUMNS = CANDIDATE_COLUMNS + ["route_reason"]
PAIR_EXTRA_COLUMNS = ["delta_f_hz", "log10_df_mhz", "dd_phi_abs_rad", "upper_rf_hz"]
PAIR_COLUMNS = (
    ["pair_mjd", "ra_bin"]
    + [f"lower_{c}" for c in CANDIDATE_COLUMNS]
    + [f"upper_{c}" for c in CANDIDATE_COLUMNS]
    + PAIR_EXTRA_COLUMNS
)
_INT_COLUMNS = {"ra_bin", "bin_index", "margin_low", "margin_high"}


def candidate_file_name(mjd_start: float) -> str:
    return f"cand_{mjd_tag(mjd_start)}.csv"


def rfi_file_name(mjd_start: float) -> str:
    return f"rfi_{mjd_tag(mjd_start)}.csv"


def write_table(df: pd.DataFrame, path, header_lines: Iterable[str] = ()) -> Path:
    """CSV with a schema comment line (and optional extra comment lines) on top."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(f"# schema_version={SCHEMA_VERSION}\n")
        for line in header_lines:
            f.write(f"# {line}\n")
        df.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def read_header(path) -> list[str]:
    """Comment lines at the top of a table, without the leading '# '."""
    lines = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            lines.append(line[1:].strip())
    return lines


def read_table(path) -> pd.DataFrame:
    header = read_header(path)
    if not header or header[0] != f"schema_version={SCHEMA_VERSION}":
        raise DegenerateInputError(f"{path}: missing or unsupported schema version line")
    df = pd.read_csv(path, skiprows=len(header))
    for col in _INT_COLUMNS.intersection(df.columns):
        df[col] = df[col].astype("int64")
    return df


# --- Candidate tables ---
def candidates_to_frame(records: Iterable[CandidateRecord], with_route: bool = False) -> pd.DataFrame:
    columns = RFI_COLUMNS if with_route else CANDIDATE_COLUMNS
    rows = [asdict(r) for r in records]
    if not rows:
        return pd.DataFrame(columns=columns)
    return pd.DataFrame(rows)[columns]


def frame_to_candidates(df: pd.DataFrame) -> list[CandidateRecord]:
    names = [f.name for f in fields(CandidateRecord)]
    records = []
    for row in df.to_dict("records"):
        values = {k: row[k] for k in names if k in row}
        if "route_reason" in values and pd.isna(values["route_reason"]):
            values["route_reason"] = ""
        for k in _INT_COLUMNS:
            values[k] = int(values[k])
        records.append(CandidateRecord(**values))
    return records


def write_candidates(records: list[CandidateRecord], path, with_route: bool = False) -> Path:
    df = candidates_to_frame(records, with_route=with_route)
    if len(df) and not df["mjd"].is_monotonic_increasing:
        raise DegenerateInputError(f"{path}: records are not in time order")
    write_table(df, path)
    logger.info("wrote %d records to %s", len(df), path)
    return Path(path)


def load_candidates(path) -> list[CandidateRecord]:
    return frame_to_candidates(read_table(path))


# --- Pair tables ---
def pairs_to_frame(pairs: Iterable[PairRecord]) -> pd.DataFrame:
    rows = []
    for p in pairs:
        row = {"pair_mjd": p.pair_mjd, "ra_bin": p.ra_bin}
        for side, rec in (("lower", p.lower), ("upper", p.upper)):
            row.update({f"{side}_{k}": v for k, v in asdict(rec).items() if k in CANDIDATE_COLUMNS})
        row.update({
            "delta_f_hz": p.delta_f_hz,
            "log10_df_mhz": p.log10_df_mhz,
            "dd_phi_abs_rad": p.dd_phi_abs_rad,
            "upper_rf_hz": p.upper_rf_hz,
        })
        rows.append(row)
    if not rows:
        return pd.DataFrame(columns=PAIR_COLUMNS)
    return pd.DataFrame(rows)[PAIR_COLUMNS]


def frame_to_pairs(df: pd.DataFrame) -> list[PairRecord]:
    pairs = []
    for row in df.to_dict("records"):
        sides = {}
        for side in ("lower", "upper"):
            values = {c: row[f"{side}_{c}"] for c in CANDIDATE_COLUMNS}
            for k in _INT_COLUMNS:
                values[k] = int(values[k])
            sides[side] = CandidateRecord(**values)
        pairs.append(PairRecord(
            upper=sides["upper"],
            lower=sides["lower"],
            delta_f_hz=row["delta_f_hz"],
            log10_df_mhz=row["log10_df_mhz"],
            dd_phi_abs_rad=row["dd_phi_abs_rad"],
            pair_mjd=row["pair_mjd"],
            ra_bin=int(row["ra_bin"]),
        ))
    return pairs
