"""Spec-file IO, artifact writers, and the command line contract."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from maxchar.bv import BVFunction1D
from maxchar.cli import main
from maxchar.decay import DecayReport, TimeField
from maxchar.errors import SpecSchemaError
from maxchar.geometry import Box
from maxchar.level_sets import PERSISTS, DistributionCurve, TailVerdict
from maxchar.measure import Measure
from maxchar.specio import (
    decay_block,
    decay_csv,
    distribution_csv,
    fmt,
    load_bv,
    load_input,
    load_measure,
    load_timefield,
    verdict_block,
    write_text,
)

SPECS = Path(__file__).resolve().parent.parent / "specs"


class TestLoaders:
    def test_unit_atom_spec(self):
        mu = load_measure(SPECS / "unit_atom.json")
        assert isinstance(mu, Measure)
        assert mu.atoms == (((0.0,), 1.0),)
        assert mu.total_variation() == 1.0

    def test_density_spec(self):
        mu = load_measure(SPECS / "chi_density.json")
        assert mu.density is not None
        assert mu.total_variation() == pytest.approx(1.0)

    def test_bv_spec(self):
        f = load_bv(SPECS / "tent.json")
        assert isinstance(f, BVFunction1D)
        assert f.value(0.0) == pytest.approx(1.0)
        assert f.total_variation() == pytest.approx(2.0)

    def test_timefield_spec(self):
        tf = load_timefield(SPECS / "sign_field.json")
        assert isinstance(tf, TimeField)
        assert tf.times == (0.5,)
        assert tf.ball_center == (0.5,)
        assert tf.slices[0].total_variation() == pytest.approx(2.0)

    def test_load_input_discriminates(self):
        assert isinstance(load_input(SPECS / "tent.json"), BVFunction1D)
        assert isinstance(load_input(SPECS / "sign_field.json"), TimeField)
        assert isinstance(load_input(SPECS / "unit_atom.json"), Measure)

    def test_unclassifiable_spec(self, tmp_path):
        p = tmp_path / "odd.json"
        p.write_text('{"what": 1}\n')
        with pytest.raises(SpecSchemaError, match="cannot classify"):
            load_input(p)

    def test_bad_value_reports_key_line(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text('{\n  "dimension": 1,\n'
                     '  "atoms": [{"location": "zero", "weight": 1.0}]\n}\n')
        with pytest.raises(SpecSchemaError) as exc:
            load_measure(p)
        assert f"{p}:3:" in str(exc.value)
        assert "type str" in str(exc.value)

    def test_invalid_json_reports_line(self, tmp_path):
        p = tmp_path / "syntax.json"
        p.write_text('{\n  "dimension": 1,\n  "atoms": [\n}\n')
        with pytest.raises(SpecSchemaError) as exc:
            load_measure(p)
        assert "invalid JSON" in str(exc.value)
        assert ":4:" in str(exc.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecSchemaError):
            load_measure(tmp_path / "absent.json")

    def test_dimension_must_be_low(self, tmp_path):
        p = tmp_path / "d3.json"
        p.write_text('{"dimension": 3}\n')
        with pytest.raises(SpecSchemaError, match="1 or 2"):
            load_measure(p)

    def test_slice_count_mismatch(self, tmp_path):
        p = tmp_path / "tf.json"
        p.write_text(json.dumps({
            "times": [0.25, 0.75],
            "slices": [{"dimension": 1, "atoms": []}],
            "ball": {"center": [0.0], "radius": 1.0},
        }))
        with pytest.raises(SpecSchemaError, match="2 times but 1 slices"):
            load_timefield(p)

    def test_jump_entries_are_pairs(self, tmp_path):
        p = tmp_path / "f.json"
        p.write_text('{"breakpoints": [], "jumps": [[0.0]]}\n')
        with pytest.raises(SpecSchemaError, match="pair"):
            load_bv(p)

    def test_timefield_slices_accept_functions(self, tmp_path):
        p = tmp_path / "tf.json"
        p.write_text(json.dumps({
            "times": [0.5],
            "slices": [{"breakpoints": [-1.0, 0.0, 1.0],
                        "slopes": [1.0, -1.0], "compact_support": True}],
            "ball": {"center": 0.0, "radius": 1.0},
        }))
        tf = load_timefield(p)
        assert tf.slices[0].total_variation() == pytest.approx(2.0,
                                                               rel=1e-12)

    def test_2d_measure_with_curve(self, tmp_path):
        p = tmp_path / "curve.json"
        p.write_text(json.dumps({
            "dimension": 2,
            "curves": [{"points": [[-1.0, 0.0], [1.0, 0.0]],
                        "density": 1.5}],
        }))
        mu = load_measure(p)
        assert mu.total_variation() == pytest.approx(3.0)


class TestWriters:
    def test_fmt(self):
        assert fmt(1.0) == "1"
        assert fmt(0.5) == "0.5"
        assert fmt(1.0 / 3.0) == "0.333333333333"
        assert fmt(1e-06) == "1e-06"

    def test_distribution_csv(self):
        curve = DistributionCurve(lambdas=(1.0, 2.0), volumes=(1.0, 0.25),
                                  flags=(False, True),
                                  window=Box((0.0,), (1.0,)), variant="M")
        assert distribution_csv(curve) == (
            "lambda,volume,product,flag\n1,1,1,0\n2,0.25,0.5,1\n")

    def test_decay_csv(self):
        rep = DecayReport(deltas=(0.1, 0.01), q_values=(0.5, 0.25),
                          liminf_est=0.25, limsup_est=0.5,
                          verdict="inconclusive",
                          singular_mass_timeintegral=0.0,
                          singular_mass_timeintegral_closed=0.0,
                          threshold=0.1)
        assert decay_csv(rep) == "delta,Q\n0.1,0.5\n0.01,0.25\n"
        block = decay_block(rep)
        assert block.startswith("verdict=inconclusive\n")
        assert "liminf_est=0.25" in block

    def test_verdict_block_reason_is_optional(self):
        v = TailVerdict(PERSISTS, 1.0, 2.0, 1.5, True, 0.05)
        block = verdict_block(v)
        assert block == ("classification=bounded_away_from_zero\n"
                         "tail_min=1\ntail_max=2\ntail_last=1.5\n"
                         "threshold=0.05\n")
        flagged = TailVerdict("inconclusive", 1.0, 2.0, 1.5, True, 0.05,
                              reason="why not")
        assert verdict_block(flagged).endswith("reason=why not\n")

    def test_write_text_creates_parents(self, tmp_path):
        target = tmp_path / "a" / "b" / "out.txt"
        write_text(target, "payload\n")
        assert target.read_text() == "payload\n"


def run_cli(*argv):
    return main(list(argv))


class TestCliExitCodes:
    def test_conclusive_match(self, capsys):
        code = run_cli("distcurve", "--input", str(SPECS / "unit_atom.json"),
                       "--h", "0.005", "--radii", "32",
                       "--expect", "persists")
        assert code == 0
        out = capsys.readouterr().out
        assert "classification=bounded_away_from_zero" in out

    def test_expect_synonym(self):
        code = run_cli("distcurve", "--input", str(SPECS / "unit_atom.json"),
                       "--h", "0.005", "--radii", "32",
                       "--expect", "bounded_away_from_zero")
        assert code == 0

    def test_conclusive_mismatch(self):
        code = run_cli("distcurve", "--input", str(SPECS / "unit_atom.json"),
                       "--h", "0.005", "--radii", "32",
                       "--expect", "vanishes")
        assert code == 3

    def test_inconclusive(self, tmp_path, capsys):
        # five far-apart unit atoms: the default level ceiling keys off the
        # total mass, but each superlevel component is carried by a single
        # atom, so the top decade outruns the grid resolution
        p = tmp_path / "spread.json"
        p.write_text(json.dumps({
            "dimension": 1,
            "atoms": [{"location": float(2 * k), "weight": 1.0}
                      for k in range(5)],
        }))
        code = run_cli("distcurve", "--input", str(p), "--h", "0.002",
                       "--radii", "32", "--expect", "persists")
        assert code == 2
        assert "classification=inconclusive" in capsys.readouterr().out

    def test_usage_errors(self, tmp_path, capsys):
        cases = [
            ("distcurve", "--input", str(tmp_path / "missing.json")),
            ("distcurve", "--input", str(SPECS / "unit_atom.json"),
             "--variant", "Mtau"),
            ("distcurve", "--input", str(SPECS / "unit_atom.json"),
             "--frobnicate"),
            ("distcurve", "--input", str(SPECS / "unit_atom.json"),
             "--h", "-1"),
            ("distcurve", "--input", str(SPECS / "unit_atom.json"),
             "--h", "0.01", "--radii", "16", "--expect", "sideways"),
            ("verify", "--corpus-size", "0"),
            (),
        ]
        for argv in cases:
            assert run_cli(*argv) == 1, argv
            assert "error:" in capsys.readouterr().err

    def test_broken_spec_reports_line(self, tmp_path, capsys):
        p = tmp_path / "broken.json"
        p.write_text('{\n"dimension": 1,\n'
                     '"atoms": [{"location": "x", "weight": 1}]\n}\n')
        assert run_cli("distcurve", "--input", str(p)) == 1
        err = capsys.readouterr().err
        assert f"{p}:3:" in err


class TestCliArtifacts:
    def test_distcurve_artifacts_and_determinism(self, tmp_path):
        args = ("distcurve", "--input", str(SPECS / "unit_atom.json"),
                "--h", "0.005", "--radii", "32")
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert run_cli(*args, "--out", str(out1)) == 0
        assert run_cli(*args, "--out", str(out2), "--threads", "2") == 0
        for name in ("curve.csv", "verdict.txt", "curve.svg"):
            a = (out1 / name).read_bytes()
            b = (out2 / name).read_bytes()
            assert a == b, name
        header, first = (out1 / "curve.csv").read_text().splitlines()[:2]
        assert header == "lambda,volume,product,flag"
        assert first.endswith(",0")
        assert (out1 / "curve.svg").read_text().startswith("<svg")

    def test_sobolev_verdict_names(self, tmp_path, capsys):
        code = run_cli("sobolev", "--input", str(SPECS / "tent.json"),
                       "--h", "0.002", "--expect", "W11",
                       "--out", str(tmp_path / "tent"))
        assert code == 0
        assert capsys.readouterr().out.startswith("verdict=W11\n")
        code = run_cli("sobolev", "--input", str(SPECS / "step.json"),
                       "--h", "0.002", "--expect", "bv-with-jumps")
        assert code == 0
        assert capsys.readouterr().out.startswith("verdict=BV-with-jumps\n")
        code = run_cli("sobolev", "--input", str(SPECS / "tent.json"),
                       "--h", "0.002", "--expect", "bv_with_jumps")
        assert code == 3

    def test_decay_artifacts(self, tmp_path, capsys):
        out = tmp_path / "sign"
        code = run_cli("decay", "--input", str(SPECS / "sign_field.json"),
                       "--radii", "32", "--expect", "persists",
                       "--out", str(out))
        assert code == 0
        assert capsys.readouterr().out.startswith("verdict=persists\n")
        assert (out / "decay.csv").read_text().startswith("delta,Q\n0.1,")
        assert (out / "report.txt").exists()
        assert (out / "decay.svg").exists()
        code = run_cli("decay", "--input", str(SPECS / "tent_field.json"),
                       "--radii", "32", "--expect", "vanishes")
        assert code == 0
        code = run_cli("decay", "--input", str(SPECS / "sign_field.json"),
                       "--radii", "32", "--expect", "vanishes")
        assert code == 3

    def test_config_file_merge_and_precedence(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"variant": "Mbar", "h": 0.005,
                                   "radii": 24,
                                   "input": str(SPECS / "cancel_pair.json")}))
        out1 = tmp_path / "from-config"
        assert run_cli("distcurve", "--config", str(cfg),
                       "--out", str(out1)) == 0
        assert "variant Mbar" in (out1 / "curve.svg").read_text()
        out2 = tmp_path / "flag-wins"
        assert run_cli("distcurve", "--config", str(cfg), "--variant", "M",
                       "--out", str(out2)) == 0
        assert "variant M<" in (out2 / "curve.svg").read_text()

    def test_config_rejects_unknown_key(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"thresholdd": 0.1}\n')
        assert run_cli("distcurve", "--config", str(cfg),
                       "--input", str(SPECS / "unit_atom.json")) == 1
        err = capsys.readouterr().err
        assert f"{cfg}:1:" in err and "thresholdd" in err


class TestCliVerify:
    def test_verify_artifacts_are_reproducible(self, tmp_path, monkeypatch,
                                               capsys):
        monkeypatch.setenv("MAXCHAR_SEED", "20260814")
        out1, out2 = tmp_path / "v1", tmp_path / "v2"
        assert run_cli("verify", "--corpus-size", "2",
                       "--out", str(out1)) == 0
        assert run_cli("verify", "--corpus-size", "2",
                       "--out", str(out2)) == 0
        rep = (out1 / "report.txt").read_bytes()
        assert rep == (out2 / "report.txt").read_bytes()
        assert b"result: PASS 12/12" in rep
        constants = json.loads((out1 / "constants.json").read_text())
        assert constants == json.loads((out2 / "constants.json").read_text())
        assert all(isinstance(v, (int, float)) for v in constants.values())
        assert "seed=20260814" in capsys.readouterr().out

    def test_bad_seed_env(self, monkeypatch, capsys):
        monkeypatch.setenv("MAXCHAR_SEED", "not-a-number")
        assert run_cli("verify", "--corpus-size", "1") == 1
        assert "MAXCHAR_SEED" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "maxchar", "distcurve",
         "--input", str(SPECS / "unit_atom.json"),
         "--h", "0.005", "--radii", "24", "--expect", "persists"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "classification=bounded_away_from_zero" in proc.stdout
