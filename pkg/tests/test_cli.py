import json
import subprocess
import sys

import numpy as np
import pytest

from toda_transport.cli import RunSpec, main, render_rational, validate


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "json")
    assert code == 0
    return json.loads(out)


def test_runspec_round_trip():
    spec = RunSpec("noise", N_L=2, N_R=3, eta="1.5", M=3)
    assert RunSpec.from_dict(spec.to_dict()) == spec
    assert spec.lead.nu == 1


def test_runspec_rejects_tunnel_for_ideal_commands():
    with pytest.raises(ValueError):
        RunSpec("cumulants", gamma2=0.3)
    assert RunSpec("nonideal", gamma2=0.3).tunnel.gamma2 == 0.3


def test_render_rational():
    assert render_rational("-1/3") == {"exact": "-1/3", "decimal": "-0.33333333333333333333"}


def test_cumulants_text_and_json(capsys):
    code, out, _ = run(capsys, "cumulants", "--nl", "1", "--nr", "1", "-L", "4")
    assert code == 0 and "1/12" in out and "-1/120" in out
    payload = run_json(capsys, "cumulants", "--nl", "2", "--nr", "3", "-L", "3")
    assert [c["value"]["exact"] for c in payload["cumulants"]] == ["6/5", "3/50", "-1/875"]


def test_cumulants_columns(capsys):
    payload = run_json(capsys, "cumulants", "--nl", "2", "--nr", "2", "-L", "2", "--asymptotic", "--mc",
                       "--samples", "20000")
    first = payload["cumulants"][0]
    assert first["asymptotic"] is not None and abs(first["mc_estimate"] - 1.0) < 5 * first["mc_stderr"]


def test_singular_order_without_fallback_exits_one(capsys):
    code, _, err = run(capsys, "cumulants", "--nl", "1", "--nr", "1", "-L", "4", "--no-fallback")
    assert code == 1 and "SingularRecurrenceError" in err


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["cumulants", "--gamma2", "0.3"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["cumulants", "--nl", "0"])
    assert exc.value.code == 1


def test_distribution_csv(capsys):
    code, out, _ = run(capsys, "distribution", "--nl", "1", "--nr", "1", "--format", "csv", "--grid", "5")
    rows = [line.split(",") for line in out.strip().splitlines()[1:]]
    assert code == 0 and len(rows) == 5
    assert all(float(r[-1]) == pytest.approx(1.0) for r in rows)


@pytest.mark.parametrize("argv", [
    ["distribution", "--nl", "2", "--nr", "2"],
    ["noise", "--nl", "2", "--nr", "2", "--eta", "1.0"],
    ["noise", "--nl", "1", "--nr", "1"],
    ["painleve", "--nl", "2", "--nr", "3", "--z1", "2.0"],
    ["nonideal", "--nl", "1", "--nr", "2", "--gamma2", "0.4", "--z", "0,0.5"],
    ["nonideal", "--nl", "1", "--nr", "2", "--gamma2", "0.4", "--density", "--grid", "5"],
    ["montecarlo", "--nl", "1", "--nr", "2", "--samples", "2000", "-L", "2"],
])
def test_json_outputs_validate(capsys, argv):
    payload = run_json(capsys, *argv)
    validate(payload)
    assert payload["command"] == argv[0]


def test_noise_shot_values(capsys):
    code, out, _ = run(capsys, "noise", "--nl", "1", "--nr", "1", "-L", "0", "-M", "3")
    assert code == 0
    for value in ("1/6", "1/180", "-1/3780"):
        assert value in out


def test_nonideal_mgf_at_zero(capsys):
    payload = run_json(capsys, "nonideal", "--nl", "2", "--nr", "3", "--gamma2", "0.5", "--z", "0")
    assert payload["records"][0]["mgf"] == pytest.approx(1.0, abs=1e-10)


def test_montecarlo_raw_dump_and_seeding(tmp_path, capsys):
    raw = tmp_path / "samples.bin"
    a = run_json(capsys, "montecarlo", "--nl", "1", "--nr", "1", "--samples", "3000", "--seed", "5",
                 "--raw", str(raw))
    b = run_json(capsys, "montecarlo", "--nl", "1", "--nr", "1", "--samples", "3000", "--seed", "5",
                 "--workers", "2")
    assert a == b
    data = np.fromfile(raw, dtype="<f8").reshape(-1, 2)
    assert data.shape == (3000, 2)
    assert np.allclose(data[:, 1], data[:, 0] * (1 - data[:, 0]))


def test_verify_passes_and_perturbation_fails(capsys):
    code, _, _ = run(capsys, "verify", "--suite", "nonideal", "--nl", "1", "--nr", "2", "--gamma2", "0.3")
    assert code == 0
    payload = run_json(capsys, "verify", "--suite", "ideal", "--samples", "20000")
    assert payload["passed"] and all(c["passed"] for c in payload["checks"])
    code, out, _ = run(capsys, "verify", "--suite", "ideal", "--samples", "20000", "--perturb", "0.01",
                       "--format", "json")
    failed = [c["name"] for c in json.loads(out)["checks"] if not c["passed"]]
    assert code == 2 and len(failed) == len(payload["checks"])


def test_output_file(tmp_path, capsys):
    target = tmp_path / "out.json"
    assert main(["cumulants", "-L", "2", "--format", "json", "--out", str(target)]) == 0
    assert json.loads(target.read_text())["command"] == "cumulants"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "toda_transport", "cumulants", "-L", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "1/2" in proc.stdout
