"""CLI subcommands, exit codes, and report determinism."""
from fractions import Fraction

import pytest

from capmarket import gen_fixture, parse_state, serialize_market
from capmarket.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def prop1_file(tmp_path):
    path = tmp_path / "prop1.market"
    path.write_text(serialize_market(gen_fixture("prop1").market))
    return str(path)


@pytest.fixture
def nsw_file(tmp_path):
    text = "nsw 2 3\ncap 1 4\ncap 2 5\nval 1 1 3\nval 1 2 1\nval 2 2 4\nval 2 3 2\n"
    path = tmp_path / "toy.nsw"
    path.write_text(text)
    return str(path)


class TestSolve:
    def test_prop1_state_has_price_two(self, capsys, tmp_path, prop1_file):
        out_path = tmp_path / "state.txt"
        code, out, _ = _run(
            capsys, "solve", prop1_file, "--epsilon", "1",
            "--out", str(out_path), "--no-timestamp",
        )
        assert code == 0
        assert "price 1 2 ~ 2" in out
        prices, flow, alloc = parse_state(out_path.read_text())
        assert prices == [2] and alloc.entries[0][0] == Fraction(1, 2)

    def test_malformed_file_exits_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.nsw"
        bad.write_text("nsw 1\n")
        code, _, err = _run(capsys, "solve", str(bad), "--epsilon", "1")
        assert code == 2

    def test_missing_file_exits_2(self, capsys):
        code, _, _ = _run(capsys, "solve", "/nonexistent", "--epsilon", "1")
        assert code == 2

    def test_unsolvable_market_exits_3(self, capsys, tmp_path):
        # two buyers, one valued good with too little earning capacity, and
        # large caps so no capped start exists either
        text = (
            "market 2 1\nbudget 1 5\nbudget 2 5\nucap 1 100\nucap 2 100\n"
            "ecap 1 1\nutil 1 1 2\nutil 2 1 2\n"
        )
        path = tmp_path / "heavy.market"
        path.write_text(text)
        code, _, err = _run(capsys, "solve", str(path), "--epsilon", "1")
        assert code == 3
        assert "money clearing" in err

    def test_trace_file_written(self, capsys, tmp_path, nsw_file):
        trace = tmp_path / "trace.txt"
        code, _, _ = _run(
            capsys, "solve", nsw_file, "--epsilon", "1/2",
            "--trace", str(trace), "--no-timestamp",
        )
        assert code == 0
        for line in trace.read_text().splitlines():
            if line:
                assert line.startswith("iter ")
                assert " buyer " in line and " event " in line
                assert " x " in line and " minprice " in line

    def test_deterministic_output(self, capsys, nsw_file):
        code1, out1, _ = _run(capsys, "solve", nsw_file, "--epsilon", "1/2", "--no-timestamp")
        code2, out2, _ = _run(capsys, "solve", nsw_file, "--epsilon", "1/2", "--no-timestamp")
        assert code1 == code2 == 0
        assert out1 == out2


class TestPipelineCommand:
    def test_certificate_pass(self, capsys, nsw_file):
        code, out, _ = _run(capsys, "pipeline", nsw_file, "--epsilon", "1/4", "--no-timestamp")
        assert code == 0
        assert "ratio_check pass" in out
        assert out.count("assign ") == 3

    def test_requires_nsw(self, capsys, prop1_file):
        code, _, _ = _run(capsys, "pipeline", prop1_file, "--epsilon", "1/4")
        assert code == 2

    def test_nonpositive_epsilon_exits_2(self, capsys, nsw_file):
        code, _, err = _run(capsys, "pipeline", nsw_file, "--epsilon", "0")
        assert code == 2

    def test_opt_zero_instance(self, capsys, tmp_path):
        text = "nsw 2 2\ncap 1 9\ncap 2 9\nval 1 1 5\nval 2 1 5\n"
        path = tmp_path / "zero.nsw"
        path.write_text(text)
        code, out, _ = _run(capsys, "pipeline", str(path), "--epsilon", "1/4", "--no-timestamp")
        assert code == 0
        assert "opt_zero true" in out


class TestRoundAndVerify:
    def test_solve_then_round_then_verify(self, capsys, tmp_path, nsw_file):
        state = tmp_path / "state.txt"
        code, _, _ = _run(
            capsys, "solve", nsw_file, "--epsilon", "1/8",
            "--out", str(state), "--no-timestamp",
        )
        assert code == 0
        code, out, _ = _run(
            capsys, "round", nsw_file, "--state", str(state),
            "--epsilon", "1/8", "--no-timestamp",
        )
        assert code == 0
        assert "tree_checks pass" in out
        code, out, _ = _run(
            capsys, "verify", nsw_file, "--state", str(state),
            "--epsilon", "1/8", "--no-timestamp",
        )
        assert code == 0
        assert "verify_exact pass" in out and "verify_approx pass" in out

    def test_verify_rejects_corrupted_state(self, capsys, tmp_path, nsw_file):
        state = tmp_path / "state.txt"
        _run(capsys, "solve", nsw_file, "--epsilon", "1/8", "--out", str(state))
        text = state.read_text().replace("price 1 ", "price 1 9999", 1)
        # crude corruption: rewrite first price line entirely
        lines = [
            "price 1 9999" if line.startswith("price 1 ") else line
            for line in state.read_text().splitlines()
        ]
        state.write_text("\n".join(lines) + "\n")
        code, out, _ = _run(
            capsys, "verify", nsw_file, "--state", str(state), "--epsilon", "1/8"
        )
        assert code == 4
        assert "fail" in out


class TestGenCommand:
    def test_random_round_trip(self, capsys, tmp_path):
        out_path = tmp_path / "inst.nsw"
        code, out, _ = _run(
            capsys, "gen", "--kind", "random", "--seed", "5", "--n", "3",
            "--m", "5", "--vmax", "8", "--cmax", "12", "--out", str(out_path),
        )
        assert code == 0
        assert out_path.read_text() == out
        code2, out2, _ = _run(
            capsys, "gen", "--kind", "random", "--seed", "5", "--n", "3",
            "--m", "5", "--vmax", "8", "--cmax", "12",
        )
        assert out2 == out

    def test_fixture_emits_market(self, capsys):
        code, out, _ = _run(capsys, "gen", "--kind", "fixture", "--fixture", "prop3")
        assert code == 0
        assert out.startswith("market 2 2")

    def test_e3lin2_gadget(self, capsys):
        code, out, _ = _run(capsys, "gen", "--kind", "e3lin2", "--eqs", "1,2,3,0")
        assert code == 0
        assert out.startswith("nsw 6 15")

    def test_uneven_occurrences_exit_2(self, capsys):
        code, _, err = _run(capsys, "gen", "--kind", "e3lin2", "--eqs", "1,2,4,0")
        assert code == 2
        assert "occur" in err


class TestOracleCommand:
    def test_nsw_opt(self, capsys, nsw_file):
        code, out, _ = _run(capsys, "oracle", nsw_file, "--no-timestamp")
        assert code == 0
        # agent 1 takes item 1 (value 3), agent 2 takes items 2+3 (capped at 5)
        assert out.splitlines()[0] == "opt_product 15"

    def test_market_clearing(self, capsys, prop1_file):
        code, out, _ = _run(capsys, "oracle", prop1_file, "--no-timestamp")
        assert code == 0
        assert "money_clearing false" in out


class TestBenchCommand:
    def test_small_batch_is_deterministic(self, capsys):
        argv = [
            "bench", "--seeds", "1:3", "--epsilon", "1/4", "--n", "2",
            "--m", "3", "--no-timestamp",
        ]
        code1, out1, _ = _run(capsys, *argv)
        code2, out2, _ = _run(capsys, *argv)
        assert code1 == code2 == 0
        assert out1 == out2
        assert out1.splitlines()[0].startswith("seed iterations")
        assert all("fail" not in line for line in out1.splitlines()[1:])

    def test_empty_seed_list_gives_empty_table(self, capsys):
        code, out, _ = _run(capsys, "bench", "--seeds", ",", "--epsilon", "1/4", "--no-timestamp")
        assert code == 0
        assert len(out.strip().splitlines()) == 1

    def test_worker_pool_matches_serial(self, capsys):
        argv = ["bench", "--seeds", "1:3", "--epsilon", "1/4", "--n", "2",
                "--m", "3", "--no-timestamp"]
        _, serial, _ = _run(capsys, *argv)
        _, pooled, _ = _run(capsys, *argv, "--workers", "2")
        assert serial == pooled
