import pandas as pd
import plotly.express as px
import plotly.graph_objects as go

RA_AXIS_TITLE = "RA (hr)"


def _style(fig: go.Figure, title: str, caption: str | None = None) -> go.Figure:
    if caption:
        title = f"{title}<br><sup>{caption}</sup>"
    fig.update_layout(
        title=title,
        paper_bgcolor="rgba(0,0,0,0)",
        plot_bgcolor="rgba(0,0,0,0)",
        margin=dict(l=40, r=20, t=70, b=40),
        legend_title_text="",
    )
    fig.update_xaxes(showgrid=True, gridcolor="rgba(128,128,128,0.2)")
    fig.update_yaxes(showgrid=True, gridcolor="rgba(128,128,128,0.2)")
    return fig


def ra_scatter(df: pd.DataFrame, y: str, title: str, y_title: str, caption: str | None = None) -> go.Figure:
    """One point per pulse pair against the RA of its frame."""
    fig = px.scatter(df, x="ra_hr", y=y, labels={"ra_hr": RA_AXIS_TITLE, y: y_title})
    fig.update_traces(marker=dict(size=6, opacity=0.8))
    fig.update_xaxes(range=[0, 24])
    return _style(fig, title, caption)


def ra_bin_bars(df: pd.DataFrame, y: str, title: str, y_title: str, caption: str | None = None) -> go.Figure:
    """Per-RA-bin values, drawn at the bin centres."""
    fig = px.bar(df, x="ra_center_hr", y=y, labels={"ra_center_hr": RA_AXIS_TITLE, y: y_title})
    fig.update_traces(width=0.09)
    fig.update_xaxes(range=[0, 24])
    return _style(fig, title, caption)


def power_scatter(df: pd.DataFrame, east: str, west: str, title: str, y_title: str,
                  caption: str | None = None) -> go.Figure:
    fig = go.Figure()
    for col, name in ((east, "East"), (west, "West")):
        fig.add_trace(go.Scatter(x=df["ra_hr"], y=df[col], mode="markers", name=name, marker=dict(size=6)))
    fig.update_layout(xaxis_title=RA_AXIS_TITLE, yaxis_title=y_title)
    fig.update_xaxes(range=[0, 24])
    return _style(fig, title, caption)


def d_series_chart(df: pd.DataFrame, title: str, caption: str | None = None, max_bins: int = 12) -> go.Figure:
    """Running Cohen's d, one line per RA bin; only the bins with the largest final |d| are drawn."""
    if df.empty:
        return _style(go.Figure(), title, caption)
    final = df.groupby("ra_bin")["cohens_d"].last().abs().sort_values(ascending=False)
    shown = df[df["ra_bin"].isin(final.index[:max_bins])].copy()
    shown["ra_bin"] = shown["ra_bin"].astype(str)
    fig = px.line(shown, x="trial", y="cohens_d", color="ra_bin",
                  labels={"trial": "Trial (sorted by |ΔΔΦ|)", "cohens_d": "Cohen's d", "ra_bin": "RA bin"})
    return _style(fig, title, caption)


def lag_profile_chart(df: pd.DataFrame, title: str = "Cross-correlation") -> go.Figure:
    fig = px.line(df, x="delay_s", y="magnitude", labels={"delay_s": "Delay (s)", "magnitude": "|r|"})
    return _style(fig, title)
