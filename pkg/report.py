"""Figure datasets (CSV) for a second-level run, plus plotly renders of each."""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

import ui_components as ui
from candidates import MAX_DD_PHI_RAD, MAX_DELTA_F_HZ, PairRecord
from data_processing import read_header, read_table, write_table
from stats import RaBinTable, df_likelihood, pair_snr_likelihood_log10, running_d_series
from utils import format_mjd

logger = logging.getLogger(__name__)

FIGURES_DIR = "figures"

# id -> (name, title)
FIGURES = {
    1: ("ra_bin_counts", "Pulse pair count per RA bin"),
    2: ("cohens_d_series", "Running Cohen's d per RA bin"),
    3: ("log10_df", "Log10 Δf/MHz"),
    4: ("sum_log10_df", "Sum of Log10 Δf/MHz per RA bin"),
    5: ("power_954hz", "954 Hz segment power"),
    6: ("power_50mhz", "50 MHz wideband power"),
    7: ("mjd", "MJD of pulse pair"),
    8: ("upper_rf", "RF of the higher frequency component"),
    9: ("event_probability", "Event probability per RA bin"),
    10: ("snr_log_likelihood", "SNR log10 likelihood (surrogate)"),
    11: ("dd_phi", "|ΔΔΦ| (radians)"),
    12: ("rfi_margin_low", "RFI margin below (segments)"),
    13: ("rfi_margin_high", "RFI margin above (segments)"),
}


@dataclass
class FigureDataset:
    figure_id: int
    rows: pd.DataFrame
    header: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return FIGURES[self.figure_id][0]

    @property
    def title(self) -> str:
        return FIGURES[self.figure_id][1]

    @property
    def file_stem(self) -> str:
        return f"fig{self.figure_id:02d}_{self.name}"

    def caption(self) -> str:
        h = self.header
        return (
            f"points = {h['points']} ; MJD range = {format_mjd(h['mjd_min'])} - {format_mjd(h['mjd_max'])} ; "
            f"Log10 Δf/MHz Max = {h['log10_df_max']:.3f} ; |ΔΔΦ| Max = {h['ddphi_max']:.3f} radians"
        )


def _pair_rows(pairs: list[PairRecord]) -> pd.DataFrame:
    return pd.DataFrame({
        "ra_hr": [p.upper.ra_hr for p in pairs],
        "ra_bin": [p.ra_bin for p in pairs],
        "pair_mjd": [p.pair_mjd for p in pairs],
    })


def _relative(values: pd.Series) -> pd.Series:
    median = values.median() if len(values) else np.nan
    if not median or pd.isna(median):
        return pd.Series(np.nan, index=values.index)
    return values / median


def build_datasets(pairs: list[PairRecord], table: RaBinTable, d_series: pd.DataFrame | None = None,
                   candidate_density: float | None = None, max_delta_f_hz: float = MAX_DELTA_F_HZ,
                   max_dd_phi_rad: float = MAX_DD_PHI_RAD) -> list[FigureDataset]:
    header = {
        "points": len(pairs),
        "mjd_min": min((p.pair_mjd for p in pairs), default=float("nan")),
        "mjd_max": max((p.pair_mjd for p in pairs), default=float("nan")),
        "log10_df_max": math.log10(max_delta_f_hz / 1e6),
        "ddphi_max": max_dd_phi_rad,
    }
    bins = table.to_frame()
    base = _pair_rows(pairs)
    if d_series is None:
        d_series = running_d_series(pairs, table)

    rows = {
        1: bins[["ra_bin", "ra_center_hr", "events"]],
        2: d_series,
        3: base.assign(
            delta_f_hz=[p.delta_f_hz for p in pairs],
            log10_df_mhz=[p.log10_df_mhz for p in pairs],
            df_likelihood_surrogate=[
                df_likelihood(p.delta_f_hz, candidate_density) if candidate_density else np.nan for p in pairs
            ],
        ),
        4: bins[["ra_bin", "ra_center_hr", "sum_log10_df_mhz"]],
        7: base,
        8: base.assign(upper_rf_mhz=[p.upper_rf_hz / 1e6 for p in pairs]),
        9: bins[["ra_bin", "ra_center_hr", "event_probability"]],
        10: base.assign(snr_log10_surrogate=[pair_snr_likelihood_log10(p) for p in pairs]),
        11: base.assign(dd_phi_abs_rad=[p.dd_phi_abs_rad for p in pairs]),
        12: base.assign(margin_low=[min(p.lower.margin_low, p.upper.margin_low) for p in pairs]),
        13: base.assign(margin_high=[min(p.lower.margin_high, p.upper.margin_high) for p in pairs]),
    }
    for fig_id, prefix in ((5, "p954"), (6, "p50m")):
        df = base.assign(**{
            f"{prefix}_east": [getattr(p.upper, f"{prefix}_east") for p in pairs],
            f"{prefix}_west": [getattr(p.upper, f"{prefix}_west") for p in pairs],
        })
        df[f"{prefix}_east_rel"] = _relative(df[f"{prefix}_east"])
        df[f"{prefix}_west_rel"] = _relative(df[f"{prefix}_west"])
        rows[fig_id] = df
    return [FigureDataset(fig_id, rows[fig_id].reset_index(drop=True), dict(header)) for fig_id in sorted(rows)]


def figure_for(dataset: FigureDataset):
    """Plotly figure for a dataset, laid out per RA like the datasets themselves."""
    df, title, caption = dataset.rows, f"Fig. {dataset.figure_id}: {dataset.title}", dataset.caption()
    fid = dataset.figure_id
    if fid == 1:
        return ui.ra_bin_bars(df, "events", title, "Pulse pairs", caption)
    if fid == 2:
        return ui.d_series_chart(df, title, caption)
    if fid == 3:
        return ui.ra_scatter(df, "log10_df_mhz", title, "Log10 Δf/MHz", caption)
    if fid == 4:
        return ui.ra_bin_bars(df, "sum_log10_df_mhz", title, "Σ Log10 Δf/MHz", caption)
    if fid == 5:
        return ui.power_scatter(df, "p954_east_rel", "p954_west_rel", title, "Relative 954 Hz power", caption)
    if fid == 6:
        return ui.power_scatter(df, "p50m_east_rel", "p50m_west_rel", title, "Relative 50 MHz power", caption)
    if fid == 7:
        return ui.ra_scatter(df, "pair_mjd", title, "MJD", caption)
    if fid == 8:
        return ui.ra_scatter(df, "upper_rf_mhz", title, "RF (MHz)", caption)
    if fid == 9:
        return ui.ra_bin_bars(df, "event_probability", title, "Probability", caption)
    if fid == 10:
        return ui.ra_scatter(df, "snr_log10_surrogate", title, "Log10 likelihood", caption)
    if fid == 11:
        return ui.ra_scatter(df, "dd_phi_abs_rad", title, "|ΔΔΦ| (rad)", caption)
    if fid == 12:
        return ui.ra_scatter(df, "margin_low", title, "Segments", caption)
    return ui.ra_scatter(df, "margin_high", title, "Segments", caption)


def render(dataset: FigureDataset, out_dir: Path) -> bool:
    """HTML (and PNG where an image engine is installed); failures are logged, never raised."""
    try:
        fig = figure_for(dataset)
        fig.write_html(out_dir / f"{dataset.file_stem}.html", include_plotlyjs="cdn")
    except Exception as e:
        logger.warning("could not render figure %d: %s", dataset.figure_id, e)
        return False
    try:
        fig.write_image(out_dir / f"{dataset.file_stem}.png")
    except Exception as e:
        logger.debug("no PNG for figure %d: %s", dataset.figure_id, e)
    return True


def emit_figures(pairs: list[PairRecord], table: RaBinTable, out_dir, d_series: pd.DataFrame | None = None,
                 candidate_density: float | None = None, max_delta_f_hz: float = MAX_DELTA_F_HZ,
                 max_dd_phi_rad: float = MAX_DD_PHI_RAD, plots: bool = True) -> list[FigureDataset]:
    """Write the 13 figure datasets, and their plots, under `out_dir/figures`."""
    fig_dir = Path(out_dir) / FIGURES_DIR
    fig_dir.mkdir(parents=True, exist_ok=True)
    datasets = build_datasets(pairs, table, d_series, candidate_density, max_delta_f_hz, max_dd_phi_rad)
    rendered = 0
    for ds in datasets:
        write_table(ds.rows, fig_dir / f"{ds.file_stem}.csv",
                    header_lines=[f"figure = {ds.figure_id} ; {ds.title}", ds.caption()])
        if plots:
            rendered += render(ds, fig_dir)
    logger.info("wrote %d figure datasets (%d rendered) to %s", len(datasets), rendered, fig_dir)
    return datasets


def load_dataset(path) -> FigureDataset:
    """Read an emitted figure dataset back, caption included."""
    header = read_header(path)
    figure_id = int(header[1].split(";")[0].split("=")[1])
    caption = dict(part.strip().split(" = ", 1) for part in header[2].split(";"))
    mjd_min, _, mjd_max = caption["MJD range"].partition(" - ")
    meta = {
        "points": int(caption["points"]),
        "mjd_min": float(mjd_min) if mjd_min != "-" else float("nan"),
        "mjd_max": float(mjd_max) if mjd_max != "-" else float("nan"),
        "log10_df_max": float(caption["Log10 Δf/MHz Max"]),
        "ddphi_max": float(caption["|ΔΔΦ| Max"].split()[0]),
    }
    return FigureDataset(figure_id, read_table(path), meta)
