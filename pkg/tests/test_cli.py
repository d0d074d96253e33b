import socket
import threading
import time

import pytest
import uvicorn

from nqdlab.cli import EXIT_INVALID, EXIT_NUMERIC, EXIT_OK, main
from nqdlab.config import OUTPUT_DIR_ENV, parse_config
from nqdlab.reports import read_report

PARETO_INI = "[marginal]\nspec = pareto(alpha=1.8, xm=1.0)\n"
SIM_INI = PARETO_INI + "[simulate]\npaths = 6\nhorizon = 20000\ncheckpoint_start = 100\n"


@pytest.fixture
def ini(tmp_path):
    def make(text, name="run.ini"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return make


def test_sequences_lambda_16(tmp_path, capsys):
    out = tmp_path / "seq.csv"
    assert main(["sequences", "--p", "1.5", "--n", "16", "--out", str(out)]) == EXIT_OK
    _, header, rows = read_report(out)
    assert header == ["n", "a_n", "b_n", "c_n", "d_n"]
    _, bheader, brows = read_report(tmp_path / "seq_blocks.csv")
    assert brows[15][0] == "16" and brows[15][bheader.index("Lambda_k")] == "5"
    assert f"wrote {out}" in capsys.readouterr().out


def test_missing_marginal_exits_1(tmp_path, capsys):
    code = main(["check-theorem1", "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_INVALID
    assert "marginal" in capsys.readouterr().err
    assert not (tmp_path / "x.csv").exists()


def test_bad_config_key_exits_1_naming_path(ini, capsys):
    assert main(["simulate", "--config", ini("[scaling]\nq = 1\n")]) == EXIT_INVALID
    assert "scaling.q" in capsys.readouterr().err


def test_usage_error_exits_1(capsys):
    assert main(["sequences", "--n", "zero"]) == EXIT_INVALID
    assert main(["no-such-command"]) == EXIT_INVALID


def test_quadrature_budget_exits_2(tmp_path, capsys):
    code = main(["lemma3", "--a", "0.05", "--b", "0.01", "--r", "2", "--x", "0",
                 "--rel-tol", "1e-13", "--limit", "1", "--out", str(tmp_path / "l3.csv")])
    assert code == EXIT_NUMERIC
    assert "numeric failure" in capsys.readouterr().err


def test_check_theorem1_subset(ini, tmp_path):
    out = tmp_path / "chk.csv"
    assert main(["check-theorem1", "--config", ini(PARETO_INI), "--conditions", "a,c,e", "--out", str(out)]) == 0
    cfg_text, header, rows = read_report(out)
    assert header[:2] == ["condition", "verdict"]
    assert [r[1] for r in rows] == ["converged"] * 3
    assert parse_config(cfg_text).marginal.spec == "pareto(alpha=1.8, xm=1.0)"


def test_seed_and_threads_flags(ini, tmp_path):
    path = ini(SIM_INI)
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    assert main(["--threads", "1", "simulate", "--config", path, "--seed", "3", "--out", str(a)]) == 0
    assert main(["simulate", "--threads", "4", "--config", path, "--seed", "3", "--out", str(b)]) == 0
    assert main(["simulate", "--config", path, "--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert parse_config(read_report(a)[0]).simulate.seed == 3
    assert a.read_bytes() != c.read_bytes()


def test_env_output_dir(ini, tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env"))
    assert main(["lemma3", "--a", "1", "--b", "1", "--r", "0", "--x", "1"]) == 0
    assert (tmp_path / "env" / "lemma3.csv").exists()
    # the config's own directory wins over the environment
    cfg = ini(PARETO_INI + f"[output]\ndir = {tmp_path / 'cfg'}\nprefix = p_\n")
    assert main(["lemma2", "--config", cfg, "--which", "3.2"]) == 0
    assert (tmp_path / "cfg" / "p_lemma2.csv").exists()


def test_byte_identical_reruns(ini, tmp_path):
    path = ini(SIM_INI)
    for name in ("r1.csv", "r2.csv"):
        assert main(["compare", "--config", path, "--out", str(tmp_path / name), "--json"]) == 0
    assert (tmp_path / "r1.csv").read_bytes() == (tmp_path / "r2.csv").read_bytes()
    assert (tmp_path / "r1.json").exists()


def test_verify_ineq_joint_csv(tmp_path):
    joint = tmp_path / "j.csv"
    joint.write_text("x1,x2,prob\n0,0,0.4\n1,1,0.4\n0,1,0.1\n1,0,0.1\n")
    out = tmp_path / "v.csv"
    assert main(["verify-ineq", "--model", "joint", "--joint-csv", str(joint), "--out", str(out)]) == 0
    _, header, rows = read_report(out)
    assert rows[0][header.index("nqd_pass")] == "false"
    assert float(rows[0][header.index("worst_gap")]) == pytest.approx(0.15, abs=1e-12)
    assert main(["verify-ineq", "--model", "joint", "--joint-csv", str(tmp_path / "none.csv")]) == EXIT_INVALID


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="module")
def server():
    port = _free_port()
    srv = uvicorn.Server(uvicorn.Config("nqdlab.service.app:app", host="127.0.0.1", port=port, log_level="warning"))
    th = threading.Thread(target=srv.run, daemon=True)
    th.start()
    for _ in range(200):
        if srv.started:
            break
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    srv.should_exit = True
    th.join(timeout=5)


def test_server_mode_matches_local(server, tmp_path, ini):
    local, remote = tmp_path / "l.csv", tmp_path / "r.csv"
    args = ["lemma4", "--config", ini(PARETO_INI), "--which", "3.14"]
    assert main(args + ["--out", str(local)]) == 0
    assert main(["--server", server] + args + ["--out", str(remote)]) == 0
    assert local.read_bytes() == remote.read_bytes()


def test_server_mode_error_codes(server, capsys):
    assert main(["--server", server, "check-theorem1", "--conditions", "c"]) == EXIT_INVALID
    assert "marginal" in capsys.readouterr().err
    assert main(["--server", server, "lemma3", "--a", "0.05", "--b", "0.01", "--r", "2", "--x", "0",
                 "--rel-tol", "1e-13", "--limit", "1"]) == EXIT_NUMERIC


def test_unreachable_server_is_numeric():
    assert main(["--server", f"http://127.0.0.1:{_free_port()}", "sequences"]) == EXIT_NUMERIC
