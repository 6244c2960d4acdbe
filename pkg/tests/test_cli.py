import json

import pytest
from hypothesis import given, strategies as st

from tronquee.cli import format_complex, main, parse_complex, resolve_config
from tronquee.errors import ConfigError

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(finite, finite)
def test_complex_literal_round_trip(a, b):
    z = complex(a, b)
    assert parse_complex(format_complex(z)) == z


@pytest.mark.parametrize("text,value", [
    ("1", 1), ("-2.5", -2.5), ("3i", 3j), ("i", 1j), ("-i", -1j), ("1+2i", 1 + 2j),
    ("1e-3-2.5i", 1e-3 - 2.5j), ("0.5-i", 0.5 - 1j), ("2j", 2j),
])
def test_complex_literals(text, value):
    assert parse_complex(text) == value


@pytest.mark.parametrize("text", ["", "x", "1+", "1 2i", "i1"])
def test_bad_literals(text):
    with pytest.raises(ConfigError):
        parse_complex(text)


def test_precedence(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# comment\nN = 30\nC = 0.5-0.1i\nfamily = I0\nbeta = -0.5\ndelta = -0.5\n")
    cfg = resolve_config(f, ["N=36"], {"TRONQUEE_K": "3", "TRONQUEE_N": "32"})
    assert (cfg.N, cfg.K, cfg.C, cfg.family) == (36, 3, 0.5 - 0.1j, "I0")


def test_unknown_keys_rejected(tmp_path):
    f = tmp_path / "bad.cfg"
    f.write_text("NN = 3\n")
    with pytest.raises(ConfigError):
        resolve_config(f, [], {})
    with pytest.raises(ConfigError):
        resolve_config(None, [], {"TRONQUEE_TYPO": "1"})


def test_exit_codes(tmp_path, capsys):
    assert main(["--set", "bogus=1", "series"]) == 2
    assert "ConfigError" in capsys.readouterr().err
    assert main(["--no-cache", "sum", "--x", "1+1i", "--C", "5"]) == 1
    assert "OutsideConvergenceRegion" in capsys.readouterr().err


def _sum(capsys, *extra):
    assert main(["--no-cache", "sum", "--x", "25", *extra]) == 0
    return json.loads(capsys.readouterr().out)["values"][0]


def test_zero_constant_identity(capsys):
    a = _sum(capsys, "--C", "0")
    b = _sum(capsys, "--pure")
    assert abs(complex(*a["w"]) - complex(*b["w"])) < 1e-12


def test_cache_cold_and_warm_identical(tmp_path):
    cache = tmp_path / "cache"
    outs = []
    for name in ("cold.json", "warm.json"):
        out = tmp_path / name
        assert main(["--set", f"cache_dir={cache}", "--set", "N=20", "series", "-o",
                     str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert main(["--no-cache", "--set", "N=20", "series", "-o", str(tmp_path / "nc.json")]) == 0
    assert (tmp_path / "nc.json").read_bytes() == outs[0]


def test_integrate_writes_artifacts(tmp_path, capsys):
    rc = main(["--no-cache", "integrate", "--x0", "15+3i", "--path", "18+1i",
               "--init-from-transseries", "--C", "0.5", "-o", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "trajectory.csv").exists() and (tmp_path / "events.json").exists()


def test_via_symmetry_reciprocal(capsys):
    # family II parameters are the Reciprocal image of the I0 example
    args = ["--no-cache", "--set", "alpha=0.5", "--set", "beta=-1", "--set", "gamma=-1",
            "--set", "delta=-0.5", "--set", "family=II"]
    assert main([*args, "sum", "--x", "20+10i"]) == 0
    v = complex(*json.loads(capsys.readouterr().out)["values"][0]["w"])
    assert main(["--no-cache", "--set", "family=I0", "--set", "beta=-0.5", "--set",
                 "delta=-0.5", "sum", "--x", "20+10i"]) == 0
    w = complex(*json.loads(capsys.readouterr().out)["values"][0]["w"])
    assert abs(v * w - 1) < 1e-13


def test_poles_prediction_only(tmp_path, capsys):
    rc = main(["--no-cache", "poles", "--C", "-2", "--n", "5..15:5", "--variant", "both",
               "--refine", "-o", str(tmp_path)])
    assert rc == 0
    rows = (tmp_path / "predictions.csv").read_text().splitlines()
    assert len(rows) == 1 + 6 and rows[1].startswith("5,a,")


def test_poles_requires_constant(tmp_path):
    assert main(["--no-cache", "poles", "--C", "0", "-o", str(tmp_path)]) == 2


def test_family_two_only_for_sum_and_integrate(capsys):
    assert main(["--no-cache", "--set", "family=II", "series"]) == 2
