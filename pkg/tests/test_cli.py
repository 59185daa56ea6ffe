"""End-to-end CLI tests: exit codes, output formats, reproducibility."""

import json

import numpy as np
import pytest

from pumsim import ExperimentConfig, LevelCode, load_dump
from pumsim.cli import build_parser, main, _load_config

DECODE_EXPECTED = """\
# selects 256=A0,B0,C0,D0,E2
# selects 287=A1,B3,C3,D0,E2
256,287,8,256;257;262;263;280;281;286;287
"""


@pytest.fixture
def small_ini(tmp_path):
    config = ExperimentConfig(
        n_bitlines=64, trials=8, groups_per_subarray=2, group_size=8
    )
    path = tmp_path / "small.ini"
    path.write_text(config.to_ini())
    return str(path)


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_decode_output(capsys):
    code, out, _ = run_cli(["decode", "256", "287"], capsys)
    assert code == 0
    assert out == DECODE_EXPECTED


def test_decode_single_row_group(capsys):
    code, out, _ = run_cli(["decode", "7", "7"], capsys)
    assert code == 0
    assert out.splitlines()[-1] == "7,7,1,7"


def test_decode_cross_subarray_exits_2(capsys):
    code, _, err = run_cli(["decode", "0", "600"], capsys)
    assert code == 2
    assert "error" in err


def test_bad_usage_exits_3(capsys):
    assert run_cli([], capsys)[0] == 3
    assert run_cli(["unknown-command"], capsys)[0] == 3
    assert run_cli(["decode", "1"], capsys)[0] == 3
    assert run_cli(["census", "--bogus-flag"], capsys)[0] == 3


def test_missing_config_exits_3(capsys):
    code, _, err = run_cli(["--config", "/no/such/file.ini", "census"], capsys)
    assert code == 3
    assert "config error" in err


def test_global_flags_work_on_both_sides():
    parser = build_parser()
    before = _load_config(parser.parse_args(["--seed", "7", "census"]))
    after = _load_config(parser.parse_args(["census", "--seed", "7"]))
    assert before.seed == after.seed == 7


def test_full_flag_scales_experiment():
    parser = build_parser()
    cfg = _load_config(parser.parse_args(["--full", "census"]))
    assert cfg.trials == 10000
    assert cfg.groups_per_subarray == 100
    assert cfg.subarrays_sampled == 1


def test_census_report(small_ini, capsys):
    code, out, _ = run_cli(["--config", small_ini, "census"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# report=census version=1"
    assert lines[3] == "n,pairs,fraction"
    sizes = [int(line.split(",")[0]) for line in lines[4:]]
    assert sizes == [2, 4, 8, 16, 32]


def test_maj_rerun_is_byte_identical(small_ini, tmp_path, capsys):
    argv = ["--config", small_ini, "maj", "--m", "3", "--n", "8",
            "--trials", "4"]
    paths = [str(tmp_path / f"maj{i}.csv") for i in (1, 2)]
    for path in paths:
        code, out, _ = run_cli(argv + ["--out", path], capsys)
        assert code == 0
        assert out == ""
    first, second = (open(p, "rb").read() for p in paths)
    assert first == second
    assert b"# report=maj version=1" in first


def test_seed_changes_report_bytes(small_ini, tmp_path, capsys):
    base = ["--config", small_ini, "maj", "--trials", "2", "--n", "4"]
    p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert run_cli(base + ["--out", p1], capsys)[0] == 0
    assert run_cli(base + ["--seed", "2", "--out", p2], capsys)[0] == 0
    assert open(p1).read() != open(p2).read()


def test_exec_trace_roundtrip(small_ini, tmp_path, capsys):
    trace_path = tmp_path / "copy.trace"
    data = "ab" * 8  # 8 bytes -> 64 bitlines
    trace_path.write_text(
        "# charge-share a 4-row group, then overwrite it\n"
        "0 ACT 0\n"
        "1.5 PRE\n"
        "3 ACT 7\n"
        "16.5 WRITE " + data + "\n"
        "48.5 PRE\n"
    )
    dump_path = tmp_path / "bank.dump"
    code, out, _ = run_cli(
        ["--config", small_ini, "exec", "--trace", str(trace_path),
         "--init", "random:5", "--dump", str(dump_path)],
        capsys,
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# report=exec version=1"
    kinds = [line.split(",")[1] for line in lines if "," in line][1:]
    assert "apa_charge_share" in kinds
    assert "write" in kinds
    contents = load_dump(str(dump_path))
    assert contents.codes is not None
    want = np.unpackbits(np.frombuffer(bytes.fromhex(data), dtype=np.uint8))
    for row in (0, 1, 6, 7):
        assert np.array_equal(contents.bits[row], want)
    assert (contents.codes[2] != LevelCode.NEUTRAL).all()


def test_exec_missing_trace_exits_3(small_ini, capsys):
    code, _, err = run_cli(
        ["--config", small_ini, "exec", "--trace", "/no/trace.txt"], capsys
    )
    assert code == 3
    assert "cannot read trace" in err


def test_exec_bad_trace_exits_2(small_ini, tmp_path, capsys):
    trace_path = tmp_path / "bad.trace"
    trace_path.write_text("0 ACT 0\n10 PRE\n")  # gap in no defined regime
    code, _, err = run_cli(
        ["--config", small_ini, "exec", "--trace", str(trace_path)], capsys
    )
    assert code == 2
    assert "error" in err


def test_verify_cli(small_ini, capsys):
    code, out, _ = run_cli(["--config", small_ini, "verify"], capsys)
    assert code == 0
    rows = [line for line in out.splitlines() if not line.startswith("#")][1:]
    assert rows, out
    assert all(line.endswith(",1") for line in rows)


def test_characterize_cli(small_ini, capsys):
    code, out, _ = run_cli(
        ["--config", small_ini, "characterize", "--m-list", "3",
         "--n-list", "8", "--patterns", "ones"],
        capsys,
    )
    assert code == 0
    rows = [line for line in out.splitlines() if not line.startswith("#")]
    assert rows[0].startswith("module_profile,")
    assert len(rows) == 3  # header + two sampled groups
    assert all(line.split(",")[6] == "8" for line in rows[1:])  # 2^3 trials


def test_spatial_cli(small_ini, capsys):
    code, out, _ = run_cli(["--config", small_ini, "spatial"], capsys)
    assert code == 0
    assert "# report=spatial version=1" in out


def test_compute_cli_deterministic(small_ini, tmp_path, capsys):
    argv = ["--config", small_ini, "compute", "--kernel", "xor",
            "--arity", "5", "--elements", "64"]
    p1, p2 = str(tmp_path / "c1.json"), str(tmp_path / "c2.json")
    assert run_cli(argv + ["--out", p1], capsys)[0] == 0
    assert run_cli(argv + ["--out", p2], capsys)[0] == 0
    blob1, blob2 = open(p1).read(), open(p2).read()
    assert blob1 == blob2
    payload = json.loads(blob1)
    assert payload["report"] == "compute"
    assert payload["kernel"] == "xor"
    assert payload["speedup_vs_fracdram"] > 0


def test_compute_cli_rejects_bad_scenario(small_ini, capsys):
    code = run_cli(
        ["--config", small_ini, "compute", "--kernel", "and",
         "--scenario", "warp"],
        capsys,
    )[0]
    assert code == 3


def test_sensitivity_cli(small_ini, capsys):
    code, out, _ = run_cli(["--config", small_ini, "sensitivity"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# report=sensitivity version=1"
    assert any(line.startswith("realexp,9,32,mean,") for line in lines)


def test_destruct_cli_with_trace(small_ini, tmp_path, capsys):
    trace_path = str(tmp_path / "destroy.trace")
    code, out, _ = run_cli(
        ["--config", small_ini, "destruct", "--max-n", "32",
         "--trace-out", trace_path],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["steps"] == 16
    assert payload["speedup"]["rowclone"] > 8.0

    dump_path = str(tmp_path / "after.dump")
    code, _, _ = run_cli(
        ["--config", small_ini, "exec", "--trace", trace_path,
         "--init", "random:9", "--dump", dump_path],
        capsys,
    )
    assert code == 0
    contents = load_dump(dump_path)
    assert not contents.bits.any()
    assert (contents.codes == LevelCode.ZERO).all()
