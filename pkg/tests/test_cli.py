import json

import numpy as np
import pytest

from permtdp.calibration import calibrate
from permtdp.cli import _parse_bind, main
from permtdp.families import CriticalFamily
from permtdp.matrixio import read_matrix
from permtdp.nifti import write_nifti_volume
from permtdp.simulate import CSV_COLUMNS, SimulationSpec, run_fwer_validation
from permtdp.stats import PermutationScheme, one_sample_statistics, pvalue_matrix


@pytest.fixture
def copes(tmp_path):
    rng = np.random.default_rng(5)
    data = rng.normal(size=(12, 8))
    data[:, :3] += 1.2
    path = tmp_path / "copes.csv"
    np.savetxt(path, data, delimiter=",", fmt="%.17g")
    return path


def run_cli(capsys, *args):
    rc = main(list(args))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def out_json(text):
    return json.loads(text)


class TestCalibrateCommand:
    def test_emits_calibration_record(self, copes, capsys):
        rc, out, err = run_cli(capsys, "calibrate", "--data", str(copes),
                               "--alpha", "0.2", "--permutations", "64", "--seed", "3")
        assert rc == 0 and err == ""
        record = out_json(out)
        assert record["schema_version"] == "1"
        assert record["family"] == "simes_shift"
        assert record["w"] == 64
        assert "per_permutation_lambdas" not in record
        # the CLI is a thin shell over the library pipeline
        data = read_matrix(copes)
        scheme = PermutationScheme(kind="sign_flip", w=64, seed=3)
        pv = pvalue_matrix(one_sample_statistics(data, scheme))
        cal = calibrate(pv, CriticalFamily("simes_shift", m=8), 0.2)
        assert record["lambda_alpha"] == cal.lambda_alpha

    def test_include_lambdas(self, copes, capsys):
        rc, out, _ = run_cli(capsys, "calibrate", "--data", str(copes),
                             "--alpha", "0.2", "--permutations", "32",
                             "--include-lambdas")
        record = out_json(out)
        assert rc == 0
        assert len(record["per_permutation_lambdas"]) == 32

    def test_family_alias_and_delta(self, copes, capsys):
        rc, out, _ = run_cli(capsys, "calibrate", "--data", str(copes),
                             "--alpha", "0.2", "--permutations", "32",
                             "--family", "aorc", "--delta", "1")
        record = out_json(out)
        assert rc == 0
        assert record["family"] == "aorc_shift"
        assert record["delta"] == 1.0

    def test_two_sample_labels(self, copes, capsys):
        rc, out, _ = run_cli(capsys, "calibrate", "--data", str(copes),
                             "--alpha", "0.2", "--permutations", "32",
                             "--labels", "1,1,1,1,1,1,2,2,2,2,2,2")
        assert rc == 0
        assert out_json(out)["w"] == 32

    def test_unknown_family(self, copes, capsys):
        rc, _, err = run_cli(capsys, "calibrate", "--data", str(copes),
                             "--family", "cauchy")
        assert rc == 2
        record = out_json(err)
        assert record["error"]["code"] == "usage"
        assert "cauchy" in record["error"]["message"]


class TestTdpCommand:
    def test_bounds_a_subset(self, copes, tmp_path, capsys):
        subset = tmp_path / "subset.json"
        subset.write_text(json.dumps({"indices": [0, 1, 2, 5]}))
        rc, out, _ = run_cli(capsys, "tdp", "--data", str(copes), "--subset", str(subset),
                             "--alpha", "0.2", "--permutations", "64", "--seed", "3")
        assert rc == 0
        record = out_json(out)
        assert record["size"] == 4
        assert 0 <= record["lower_bound"] <= 4
        assert record["tdp"] == record["lower_bound"] / 4

    def test_empty_subset_is_usage_error(self, copes, tmp_path, capsys):
        subset = tmp_path / "empty.json"
        subset.write_text(json.dumps({"indices": []}))
        rc, _, err = run_cli(capsys, "tdp", "--data", str(copes), "--subset", str(subset))
        assert rc == 2
        assert "nonempty" in out_json(err)["error"]["message"]

    def test_coords_need_geometry(self, copes, tmp_path, capsys):
        subset = tmp_path / "coords.json"
        subset.write_text(json.dumps({"coords": [[0, 0, 0]]}))
        rc, _, err = run_cli(capsys, "tdp", "--data", str(copes), "--subset", str(subset))
        assert rc == 2
        assert out_json(err)["error"]["code"] == "invalid_input"


class TestClusterCommand:
    @pytest.fixture
    def volume_pair(self, tmp_path):
        rng = np.random.default_rng(5)
        mask = np.ones((4, 3, 2), dtype=np.float64)
        mask[3, 2, 1] = 0.0
        maskpath = tmp_path / "mask.nii"
        write_nifti_volume(maskpath, mask, datatype=2)
        vals = rng.normal(size=(4, 3, 2, 10))
        vals[:2, :2, 0, :] += 2.0
        datapath = tmp_path / "copes4d.nii"
        write_nifti_volume(datapath, vals, datatype=64)
        return datapath, maskpath

    def test_reports_signal_cluster(self, volume_pair, tmp_path, capsys):
        datapath, maskpath = volume_pair
        tdpmap = tmp_path / "tdp.csv"
        rc, out, _ = run_cli(capsys, "cluster", "--data", str(datapath),
                             "--geometry", str(maskpath), "--alpha", "0.2",
                             "--permutations", "128", "--seed", "2",
                             "--threshold", "2.5", "--connectivity", "18",
                             "--tdp-map", str(tdpmap))
        assert rc == 0
        report = out_json(out)
        assert report["threshold"] == 2.5
        assert report["connectivity"] == 18
        assert report["clusters"][0]["id"] == "c1"
        assert report["clusters"][0]["size"] == 4
        assert "voxels" not in report["clusters"][0]
        lines = tdpmap.read_text().splitlines()
        assert lines[0] == "x,y,z,tdp"
        assert len(lines) == 24   # 23 in-mask voxels

    def test_voxels_flag(self, volume_pair, capsys):
        datapath, maskpath = volume_pair
        rc, out, _ = run_cli(capsys, "cluster", "--data", str(datapath),
                             "--geometry", str(maskpath), "--alpha", "0.2",
                             "--permutations", "64", "--threshold", "2.5",
                             "--voxels")
        assert rc == 0
        report = out_json(out)
        assert report["clusters"][0]["voxels"] == sorted(report["clusters"][0]["voxels"])

    def test_matrix_data_requires_geometry(self, copes, capsys):
        rc, _, err = run_cli(capsys, "cluster", "--data", str(copes),
                             "--threshold", "2.0")
        assert rc == 2
        assert "geometry" in out_json(err)["error"]["message"]

    def test_geometry_size_mismatch(self, copes, volume_pair, capsys):
        _, maskpath = volume_pair
        rc, _, err = run_cli(capsys, "cluster", "--data", str(copes),
                             "--geometry", str(maskpath), "--threshold", "2.0")
        assert rc == 2
        assert "8" in out_json(err)["error"]["message"]


class TestSimulationCommands:
    def test_simulate_writes_grid_csv(self, tmp_path, capsys):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps([
            {"n": 10, "m": 6, "rho2": 0.0, "nu": 0.5, "alpha": 0.2, "w": 24,
             "replications": 2, "seed": 1},
            {"n": 10, "m": 6, "rho2": 0.8, "nu": 0.5, "alpha": 0.2, "w": 24,
             "replications": 2, "seed": 1},
        ]))
        out_csv = tmp_path / "results.csv"
        rc, out, _ = run_cli(capsys, "simulate", "--grid", str(grid), "--out", str(out_csv))
        assert rc == 0
        summary = out_json(out)
        assert summary["kind"] == "power"
        assert summary["out"] == str(out_csv)
        lines = out_csv.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 5
        methods = [line.split(",")[4] for line in lines[1:]]
        assert methods == ["permutation", "parametric"] * 2

    def test_simulate_accepts_wrapped_specs(self, tmp_path, capsys):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps({"schema_version": "1", "specs": [
            {"n": 8, "m": 4, "rho2": 0.0, "nu": 0.5, "alpha": 0.2, "w": 16,
             "replications": 1, "seed": 0}]}))
        rc, _, _ = run_cli(capsys, "simulate", "--grid", str(grid),
                           "--out", str(tmp_path / "r.csv"))
        assert rc == 0

    def test_simulate_rejects_unknown_field(self, tmp_path, capsys):
        grid = tmp_path / "grid.json"
        grid.write_text(json.dumps([
            {"n": 8, "m": 4, "rho2": 0.0, "nu": 0.5, "alpha": 0.2, "w": 16,
             "replications": 1, "seed": 0, "wat": 3}]))
        rc, _, err = run_cli(capsys, "simulate", "--grid", str(grid),
                             "--out", str(tmp_path / "r.csv"))
        assert rc == 2
        assert "wat" in out_json(err)["error"]["message"]

    def test_validate_fwer_matches_library(self, tmp_path, capsys):
        fields = {"n": 8, "m": 6, "rho2": 0.0, "nu": 1.0, "alpha": 0.2, "w": 24,
                  "replications": 3, "seed": 9}
        specfile = tmp_path / "null.json"
        specfile.write_text(json.dumps({**fields, "pool_size": 12}))
        rc, out, _ = run_cli(capsys, "validate-fwer", "--spec", str(specfile))
        assert rc == 0
        expected = run_fwer_validation(SimulationSpec(**fields), pool_size=12)
        assert out_json(out) == expected.to_dict()

    def test_validate_fwer_rejects_signal_spec(self, tmp_path, capsys):
        specfile = tmp_path / "bad.json"
        specfile.write_text(json.dumps({"n": 8, "m": 6, "rho2": 0.0, "nu": 0.5,
                                        "alpha": 0.2, "w": 24, "replications": 2,
                                        "seed": 0}))
        rc, _, err = run_cli(capsys, "validate-fwer", "--spec", str(specfile))
        assert rc == 2
        assert out_json(err)["error"]["code"] == "invalid_input"


class TestInvocationErrors:
    def test_missing_subcommand(self, capsys):
        rc, _, err = run_cli(capsys)
        assert rc == 2
        assert out_json(err)["error"]["code"] == "usage"

    def test_unknown_flag(self, copes, capsys):
        rc, _, err = run_cli(capsys, "calibrate", "--data", str(copes), "--bogus")
        assert rc == 2
        assert out_json(err)["error"]["code"] == "usage"

    def test_missing_data_file(self, tmp_path, capsys):
        rc, _, err = run_cli(capsys, "calibrate", "--data", str(tmp_path / "nope.csv"))
        assert rc == 2
        assert out_json(err)["error"]["code"] == "missing_file"

    def test_bad_labels(self, copes, capsys):
        rc, _, err = run_cli(capsys, "calibrate", "--data", str(copes),
                             "--labels", "a,b")
        assert rc == 2
        assert "labels" in out_json(err)["error"]["message"]

    def test_invalid_json_input(self, copes, tmp_path, capsys):
        subset = tmp_path / "broken.json"
        subset.write_text("{not json")
        rc, _, err = run_cli(capsys, "tdp", "--data", str(copes), "--subset", str(subset))
        assert rc == 2
        assert "line" in out_json(err)["error"]["message"]


class TestServeParsing:
    def test_bind_forms(self):
        assert _parse_bind("0.0.0.0:9000") == ("0.0.0.0", 9000)
        assert _parse_bind(":8000") == ("127.0.0.1", 8000)
        with pytest.raises(Exception, match="host:port"):
            _parse_bind("8000")
        with pytest.raises(Exception, match="host:port"):
            _parse_bind("localhost:http")
