import pandas as pd
import pytest

from data_processing import (
    CANDIDATE_COLUMNS,
    PAIR_COLUMNS,
    RFI_COLUMNS,
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
from errors import DegenerateInputError


def test_file_names_carry_the_start_mjd():
    assert candidate_file_name(60284.1799) == "cand_60284.179900.csv"
    assert rfi_file_name(60284.1799) == "rfi_60284.179900.csv"


def test_candidates_are_written_with_a_schema_line(tmp_path, candidate):
    records = [candidate(mjd=60284.0 + i * 3.1e-6, bin_index=100 + i, rf_hz=1415.0312345678e6 + i)
               for i in range(3)]
    path = write_candidates(records, tmp_path / "cand.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# schema_version=1"
    assert lines[1] == ",".join(CANDIDATE_COLUMNS)
    loaded = load_candidates(path)
    assert len(loaded) == 3
    for got, want in zip(loaded, records):
        assert got.bin_index == want.bin_index
        assert got.rf_hz == pytest.approx(want.rf_hz, abs=1e-3)
        assert got.mjd == pytest.approx(want.mjd, abs=1e-9)
    # consecutive frames stay distinguishable
    assert len({r.mjd for r in loaded}) == 3


def test_rfi_records_keep_their_route_reason(tmp_path, candidate):
    path = write_candidates([candidate(route_reason="segment_tripped")], tmp_path / "rfi.csv", with_route=True)
    assert list(read_table(path).columns) == RFI_COLUMNS
    assert load_candidates(path)[0].route_reason == "segment_tripped"


def test_empty_candidate_file(tmp_path):
    path = write_candidates([], tmp_path / "cand.csv")
    assert load_candidates(path) == []


def test_records_must_be_in_time_order(tmp_path, candidate):
    with pytest.raises(DegenerateInputError):
        write_candidates([candidate(mjd=60284.1), candidate(mjd=60284.0)], tmp_path / "cand.csv")


def test_tables_without_schema_line_are_rejected(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(DegenerateInputError):
        read_table(path)


def test_extra_header_lines(tmp_path):
    path = write_table(pd.DataFrame({"x": [1.5]}), tmp_path / "t.csv", header_lines=["mode = trial"])
    assert read_header(path) == ["schema_version=1", "mode = trial"]
    assert read_table(path).x.tolist() == [1.5]


def test_pair_table_layout(tmp_path, pair):
    pairs = [pair(dd_phi=0.02, ra_bin=49), pair(dd_phi=0.05, ra_bin=50, mjd=60284.01)]
    df = pairs_to_frame(pairs)
    assert list(df.columns) == PAIR_COLUMNS
    path = write_table(df, tmp_path / "pairs.csv")
    loaded = frame_to_pairs(read_table(path))
    assert [p.ra_bin for p in loaded] == [49, 50]
    assert loaded[1].dd_phi_abs_rad == pytest.approx(0.05)
    assert loaded[0].upper.bin_index == pairs[0].upper.bin_index
    assert frame_to_pairs(pairs_to_frame([])) == []
