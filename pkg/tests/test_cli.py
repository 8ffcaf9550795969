import json

import pytest

from eigenphase import cli


def run_cli(capsys, *args):
    code = cli.main(list(args))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *args):
    code, out = run_cli(capsys, *args, "--json")
    return code, json.loads(out.strip().splitlines()[-1])


class TestFactor:
    def test_factor_15_seed_7(self, capsys):
        code, rep = run_json(capsys, "--seed", "7", "factor", "15")
        assert code == 0
        assert rep["result"]["factors"] == [3, 5]
        assert rep["seed"] == 7
        assert rep["blackbox_calls"] > 0

    def test_factor_prime_is_hard_error(self, capsys):
        code, out = run_cli(capsys, "factor", "13")
        assert code == 2

    def test_deterministic_output(self, capsys):
        code1, rep1 = run_json(capsys, "--seed", "11", "factor", "21")
        code2, rep2 = run_json(capsys, "--seed", "11", "factor", "21")
        rep1.pop("wall_time_s")
        rep2.pop("wall_time_s")
        assert code1 == code2 == 0
        assert rep1 == rep2


class TestOrder:
    def test_order_one(self, capsys):
        code, rep = run_json(capsys, "order", "1", "15")
        assert code == 0
        assert rep["result"]["order"] == 1

    def test_order_2_mod_15(self, capsys):
        code, rep = run_json(capsys, "--seed", "3", "order", "2", "15")
        assert code == 0
        assert rep["result"]["order"] == 4


class TestDlog:
    def test_dlog_7_3_6(self, capsys):
        code, rep = run_json(capsys, "--seed", "5", "dlog", "7", "3", "6")
        assert code == 0
        assert rep["result"]["exponent"] == 3


class TestPhase:
    def test_phase_demo(self, capsys):
        code, rep = run_json(capsys, "--seed", "2", "phase", "5", "--index", "2")
        assert code == 0
        assert rep["result"]["measured"] == "2/5"
        assert rep["result"]["exact_match"] is True


class TestQft:
    def test_qft4_column0(self, capsys):
        code, rep = run_json(capsys, "qft", "4", "--a", "0")
        assert code == 0
        assert rep["result"]["fidelities"]["0"] >= 1 - 1e-3

    def test_qft_product(self, capsys):
        code, rep = run_json(capsys, "qft", "2,3", "--a", "4")
        assert code == 0
        assert rep["result"]["fidelities"]["4"] >= 1 - 1e-3

    def test_qubit_cap_exceeded(self, capsys):
        code, _ = run_cli(capsys, "--qubit-cap", "8", "qft", "16")
        assert code == 2


class TestArgumentErrors:
    def test_unknown_command(self, capsys):
        assert cli.main(["frobnicate"]) == 2

    def test_bad_eps(self, capsys):
        code, _ = run_cli(capsys, "--eps", "0.7", "order", "2", "15")
        assert code == 2

    def test_bad_qubit_cap(self, capsys):
        code, _ = run_cli(capsys, "--qubit-cap", "99", "order", "2", "15")
        assert code == 2
