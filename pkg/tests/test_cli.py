import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spfc.cli import EXIT_ARGS, EXIT_OK, EXIT_VERIFY, ghz_to_rad_s, main, parse_delay, parse_depth, parse_grid


@pytest.mark.parametrize("text,value", [("pi", math.pi), ("2.6pi", 2.6 * math.pi), ("5*pi", 5 * math.pi),
                                        ("3.7", 3.7), ("1e1", 10.0), ("0.1π", 0.1 * math.pi)])
def test_parse_depth(text, value):
    assert parse_depth(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["", "abc", "2pipi", "--1"])
def test_parse_depth_rejects(text):
    with pytest.raises(ValueError):
        parse_depth(text)


def test_parse_grid():
    g = parse_grid("0.1pi:10pi:100")
    assert len(g) == 100 and g[0] == pytest.approx(0.1 * math.pi) and g[-1] == pytest.approx(10 * math.pi)
    with pytest.raises(ValueError):
        parse_grid("1:2")


def test_parse_delay():
    assert parse_delay("opt") is None
    assert parse_delay("1.5") == pytest.approx(1.5e-12)


@settings(max_examples=100)
@given(st.floats(1e-3, 1e4))
def test_ghz_conversion(nu):
    assert ghz_to_rad_s(nu) / (2 * math.pi * 1e9) == pytest.approx(nu, rel=1e-15)


@pytest.mark.parametrize("argv", [["nonsense"], ["reproduce"], ["reproduce", "fig9"], ["sidebands", "--depth", "x"],
                                  ["g2-zero", "--kappa-ghz", "-1"], ["sidebands", "--omega-ghz", "0"]])
def test_bad_arguments(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_ARGS


def test_sidebands_csv_and_json(tmp_path):
    assert main(["sidebands", "--depth", "2.6pi", "--out", str(tmp_path / "c")]) == EXIT_OK
    lines = (tmp_path / "c" / "sidebands.csv").read_text().splitlines()
    assert lines[0].startswith("n,")
    assert main(["sidebands", "--depth", "2.6pi", "--format", "json", "--out", str(tmp_path / "j")]) == EXIT_OK
    data = json.loads((tmp_path / "j" / "sidebands.json").read_text())
    assert data["omega_rad_s"] == pytest.approx(ghz_to_rad_s(50))
    weight = sum(t["re"] ** 2 + t["im"] ** 2 for t in data["teeth"])
    assert weight == pytest.approx(1.0, abs=1e-6)


def test_manifest_contents(tmp_path):
    assert main(["optimal-delay", "--grid", "pi:5pi:3", "--out", str(tmp_path)]) == EXIT_OK
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["tool"] == "spfc" and m["command"] == "optimal-delay"
    assert m["parameters"]["omega_rad_s"] == pytest.approx(ghz_to_rad_s(50))
    names = {f["name"] for f in m["files"]}
    assert "optimal_delay.csv" in names
    assert all(len(f["sha256"]) == 64 for f in m["files"])


def test_deterministic_bytes(tmp_path):
    for d in ("a", "b"):
        assert main(["overlap-map", "--grid", "1:4:3", "--delay-count", "16", "--out", str(tmp_path / d)]) == EXIT_OK
    assert (tmp_path / "a" / "overlap_map.csv").read_bytes() == (tmp_path / "b" / "overlap_map.csv").read_bytes()
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma == mb


def test_verify_roundtrip_and_tamper(tmp_path):
    argv = ["reproduce", "fig3b", "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    assert main(argv + ["--verify"]) == EXIT_OK
    target = tmp_path / "fig3b.csv"
    target.write_text(target.read_text().replace("1", "2", 1))
    assert main(argv + ["--verify"]) == EXIT_VERIFY


def test_verify_detects_parameter_change(tmp_path):
    assert main(["reproduce", "fig3b", "--out", str(tmp_path)]) == EXIT_OK
    assert main(["reproduce", "fig3b", "--depth", "2pi", "--out", str(tmp_path), "--verify"]) == EXIT_VERIFY


def test_verify_without_manifest(tmp_path):
    assert main(["sidebands", "--out", str(tmp_path), "--verify"]) == EXIT_VERIFY


def test_g2_zero_both_methods(tmp_path):
    assert main(["g2-zero", "--depth", "2.6pi", "--method", "both", "--out", str(tmp_path)]) == EXIT_OK
    rows = np.genfromtxt(tmp_path / "g2_zero.csv", delimiter=",", names=True)
    assert float(rows["g2_floquet"]) == pytest.approx(0.091531, abs=1e-5)
    assert float(rows["g2_master"]) <= 0.12


def test_fig2_columns(tmp_path):
    assert main(["reproduce", "fig2", "--grid", "pi:2pi:3", "--out", str(tmp_path)]) == EXIT_OK
    header = (tmp_path / "fig2.csv").read_text().splitlines()[0]
    assert header == "A,n,abs2_s_n,abs2_asymptotic"
