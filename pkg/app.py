import sys
from pathlib import Path

import pandas as pd
import streamlit as st

from data_processing import read_table
from pipeline import CAPTURE_INDEX, LAG_PROFILE_FILE, load_capture_index
from report import FIGURES, FIGURES_DIR, figure_for, load_dataset
from ui_components import lag_profile_chart
from utils import format_hours, format_mjd


@st.cache_data
def load_figure(path: str):
    return load_dataset(path)


@st.cache_data
def load_index(out_dir: str) -> pd.DataFrame:
    files = load_capture_index(out_dir)
    return pd.DataFrame([{
        "file": f.cand_file,
        "MJD start": format_mjd(f.mjd_start),
        "RA start": format_hours(f.ra_start_hr),
        "RA length (hr)": round(f.ra_length_hr, 3),
        "frames": f.n_frames,
        "candidates": f.n_candidates,
        "RFI records": f.n_rfi,
        "tripped segments": f.ledger.get("tripped_segments", 0),
    } for f in files])


def main() -> None:
    st.set_page_config(page_title="Pulse Pair Report", layout="wide")
    st.title("Pulse Pair Report")

    default_dir = sys.argv[1] if len(sys.argv) > 1 else "out"
    out_dir = Path(st.sidebar.text_input("Report directory", value=default_dir))
    fig_dir = out_dir / FIGURES_DIR
    if not fig_dir.is_dir():
        st.info(f"No figures found under `{fig_dir}`. Run `python cli.py run --out {out_dir}` first.")
        return

    available = {int(p.name[3:5]): p for p in sorted(fig_dir.glob("fig*.csv"))}
    choice = st.sidebar.selectbox(
        "Figure",
        options=sorted(available),
        format_func=lambda i: f"{i}: {FIGURES[i][1]}",
    )
    dataset = load_figure(str(available[choice]))
    st.caption(dataset.caption())
    st.plotly_chart(figure_for(dataset), use_container_width=True)
    with st.expander("Dataset"):
        st.dataframe(dataset.rows, use_container_width=True, hide_index=True)

    if (out_dir / CAPTURE_INDEX).exists():
        st.subheader("Capture files")
        st.dataframe(load_index(str(out_dir)), use_container_width=True, hide_index=True)

    if (out_dir / LAG_PROFILE_FILE).exists():
        st.subheader("Cross-correlation")
        st.plotly_chart(lag_profile_chart(read_table(out_dir / LAG_PROFILE_FILE)), use_container_width=True)


if __name__ == "__main__":
    main()
