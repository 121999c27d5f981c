import numpy as np
import pytest

from korteweg.cli import main
from korteweg.config import parse_config
from korteweg.errors import ConfigError, ContractError, SolverError
from korteweg.io import (
    FieldSnapshot,
    config_hash,
    read_csv,
    read_field,
    read_mask,
    write_csv,
    write_field,
    write_mask,
)

MINIMAL = """
geometry:
  grain: disc
  grain_params: {radius: 0.25}
  m: 8
constitutive:
  law: polytropic
  params: {coeff: 1.0, exponent: 2.0}
  gamma: 1.0
  rho_s: 1.0
  r_max: 100.0
"""


class TestFieldFormat:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        vals = rng.normal(size=(12, 9))
        snap = FieldSnapshot("rho", h=0.125, t=0.25, values=vals, comments=("extension: zero",))
        p = tmp_path / "x.field"
        write_field(p, snap)
        back = read_field(p)
        assert back.name == "rho"
        assert back.h == 0.125 and back.t == 0.25
        assert back.comments == ("extension: zero",)
        assert np.array_equal(back.values, vals)

    def test_header_payload_mismatch_rejected(self, tmp_path):
        p = tmp_path / "bad.field"
        p.write_bytes(b"FIELD rho 4 4 0.25 0.0\n" + b"\x00" * 17)
        with pytest.raises(ConfigError, match="payload"):
            read_field(p)

    def test_non_field_file_rejected(self, tmp_path):
        p = tmp_path / "junk.field"
        p.write_bytes(b"hello world\n")
        with pytest.raises(ConfigError):
            read_field(p)


class TestMaskFormat:
    def test_round_trip(self, tmp_path):
        fluid = np.zeros((6, 5), dtype=bool)
        fluid[1:4, 2:5] = True
        p = tmp_path / "m.mask"
        write_mask(p, fluid, 0.1)
        back, h = read_mask(p)
        assert h == 0.1
        assert np.array_equal(back, fluid)


class TestCsv:
    def test_round_trip_with_quoting(self, tmp_path):
        p = tmp_path / "t.csv"
        write_csv(p, ["name", "value"], [('he said "hi", twice', 1.5), ("plain", 2)])
        header, rows = read_csv(p)
        assert header == ["name", "value"]
        assert rows[0][0] == 'he said "hi", twice'
        assert float(rows[0][1]) == 1.5

    def test_floats_survive_exactly(self, tmp_path):
        p = tmp_path / "f.csv"
        vals = [1 / 3, 1e-17, np.pi]
        write_csv(p, ["v"], [[v] for v in vals])
        _, rows = read_csv(p)
        assert [float(r[0]) for r in rows] == vals

    def test_empty_csv_rejected(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("")
        with pytest.raises(ConfigError):
            read_csv(p)


class TestConfig:
    def test_minimal_config_parses(self):
        cfg = parse_config(MINIMAL)
        assert cfg.geometry.m == 8
        assert cfg.constitutive.gamma == 1.0

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match="unknown config sections"):
            parse_config(MINIMAL + "\nnot_a_section: {}\n")

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown keys"):
            parse_config(MINIMAL + "\nkernel: {deltta: 0.2}\n")

    def test_missing_required_section_rejected(self):
        with pytest.raises(ConfigError, match="missing required"):
            parse_config("geometry: {m: 8}\n")

    def test_invalid_yaml_rejected(self):
        with pytest.raises(ConfigError, match="YAML"):
            parse_config("geometry: [unclosed\n")

    def test_config_hash_is_git_blob_sha1(self):
        # oracle: the well-known hash of the empty blob
        assert config_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"


class TestCliExitCodes:
    def _write_cfg(self, tmp_path, text):
        p = tmp_path / "cfg.yaml"
        p.write_text(text)
        return str(p)

    def test_success_exit_zero_and_manifest(self, tmp_path, capsys):
        cfg = self._write_cfg(tmp_path, MINIMAL)
        out = tmp_path / "out"
        assert main(["check-pressure", "--config", cfg, "--out", str(out)]) == 0
        assert (out / "manifest.json").exists()
        assert (out / "admissibility.csv").exists()

    def test_config_error_exit_two(self, tmp_path):
        cfg = self._write_cfg(tmp_path, "geometry: {m: 8}\n")
        assert main(["check-pressure", "--config", cfg, "--out", str(tmp_path / "o")]) == 2

    def test_missing_config_exit_two(self, tmp_path):
        assert main(["cell", "--config", "/nonexistent.yaml", "--out", str(tmp_path)]) == 2

    def test_solver_error_exit_three(self, tmp_path, monkeypatch):
        import korteweg.cli as cli

        monkeypatch.setitem(
            cli._COMMANDS, "cell", lambda cfg, out: (_ for _ in ()).throw(SolverError("x"))
        )
        cfg = self._write_cfg(tmp_path, MINIMAL)
        assert main(["cell", "--config", cfg, "--out", str(tmp_path / "o")]) == 3

    def test_contract_violation_exit_four(self, tmp_path, monkeypatch):
        import korteweg.cli as cli

        monkeypatch.setitem(
            cli._COMMANDS, "compare",
            lambda cfg, out: (_ for _ in ()).throw(ContractError("non-monotone")),
        )
        cfg = self._write_cfg(tmp_path, MINIMAL)
        assert main(["compare", "--config", cfg, "--out", str(tmp_path / "o")]) == 4

    def test_check_pressure_reproducible(self, tmp_path):
        cfg = self._write_cfg(tmp_path, MINIMAL)
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["check-pressure", "--config", cfg, "--out", str(out)]) == 0
            outs.append((out / "admissibility.csv").read_bytes())
        assert outs[0] == outs[1]
