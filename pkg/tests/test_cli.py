import csv
import xml.etree.ElementTree as ET

import pytest

from rlcfr.cli import EXPERIMENT_PRESETS, main, read_config_file
from rlcfr.experiments import RESULTS_HEADER, ResultRow, checkpoints, read_results, write_results
from rlcfr.games import ConfigurationError


def rows_of(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestBaseline:
    def test_writes_results(self, tmp_path, capsys):
        assert main(["baseline", "--game", "kuhn", "--rule", "vanilla", "--iters", "50", "--out", str(tmp_path)]) == 0
        path = tmp_path / "baseline_kuhn_vanilla_seed0.csv"
        assert str(path) in capsys.readouterr().out
        rows = rows_of(path)
        assert tuple(rows[0]) == RESULTS_HEADER
        assert len(rows) == 51
        assert [int(r[3]) for r in rows[1:]] == list(range(1, 51))
        assert float(rows[-1][4]) < float(rows[10][4])
        assert {r[5] for r in rows[1:]} == {"0.0"}
        assert (tmp_path / "run_config_baseline.txt").exists()

    def test_reproducible_bytes(self, tmp_path):
        for d in ("a", "b"):
            assert main(["baseline", "--game", "leduc", "--rule", "dcfr", "--iters", "5", "--out",
                         str(tmp_path / d)]) == 0
        name = "baseline_leduc_dcfr_seed0.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_timing_flag(self, tmp_path):
        assert main(["baseline", "--rule", "a1", "--iters", "3", "--timing", "--out", str(tmp_path)]) == 0
        assert float(rows_of(tmp_path / "baseline_kuhn_cfr+_seed0.csv")[-1][5]) > 0

    def test_unknown_rule(self, tmp_path, capsys):
        assert main(["baseline", "--rule", "a9", "--out", str(tmp_path)]) == 2
        assert "a1" in capsys.readouterr().err

    def test_unknown_game(self, tmp_path):
        assert main(["baseline", "--game", "holdem", "--out", str(tmp_path)]) == 2

    def test_bad_flag(self):
        assert main(["baseline", "--bogus"]) == 2
        assert main([]) == 2

    def test_config_file_and_set(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# a comment\ngame = leduc\niters = 4\nrule = a5\n")
        assert main(["baseline", "--config", str(cfg), "--set", "iters=3", "--rule", "a2",
                     "--out", str(tmp_path)]) == 0
        rows = rows_of(tmp_path / "baseline_leduc_lcfr_seed0.csv")
        assert len(rows) == 4

    def test_bad_config_key(self, tmp_path):
        assert main(["baseline", "--set", "colour=blue", "--out", str(tmp_path)]) == 3
        assert main(["baseline", "--set", "iters=many", "--out", str(tmp_path)]) == 3
        assert main(["baseline", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path)]) == 3

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["baseline", "--iters", "2", "--out", str(blocker / "sub")]) == 4


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    d = tmp_path_factory.mktemp("run")
    assert main(["build-curves", "--game", "kuhn", "--iters", "20", "--out", str(d)]) == 0
    assert main(["train", "--games", "kuhn", "--reward", "r2", "--steps", "60", "--episode-steps", "20",
                 "--checkpoint-every", "30", "--seeds", "1,2", "--set", "dqn.batch_size=8",
                 "--out", str(d)]) == 0
    return d


class TestPipeline:
    def test_curves_file(self, trained):
        rows = rows_of(trained / "curves_kuhn.csv")
        assert rows[0] == ["game", "rule", "iteration", "exploitability"]
        assert {r[1] for r in rows[1:]} == {"a5", "a2", "a3", "a4", "min"}

    def test_train_outputs(self, trained):
        for seed in (1, 2):
            assert (trained / f"agent_seed{seed}.ckpt").exists()
            assert (trained / f"agent_seed{seed}_step30.ckpt").exists()
            log = rows_of(trained / f"train_log_seed{seed}.csv")
            assert log[0] == ["step", "episode", "loss", "epsilon", "reward", "action"]
            assert len(log) == 61
        assert (trained / "agent_seed1.ckpt").read_text() != (trained / "agent_seed2.ckpt").read_text()

    def test_train_is_reproducible(self, trained, tmp_path):
        main(["build-curves", "--game", "kuhn", "--iters", "20", "--out", str(tmp_path)])
        assert main(["train", "--games", "kuhn", "--reward", "r2", "--steps", "60", "--episode-steps", "20",
                     "--checkpoint-every", "30", "--seeds", "1", "--set", "dqn.batch_size=8",
                     "--out", str(tmp_path)]) == 0
        assert (tmp_path / "agent_seed1.ckpt").read_bytes() == (trained / "agent_seed1.ckpt").read_bytes()
        assert (tmp_path / "train_log_seed1.csv").read_bytes() == (trained / "train_log_seed1.csv").read_bytes()

    def test_eval_on_unseen_game(self, trained, tmp_path):
        ck = trained / "agent_seed1.ckpt"
        for d in ("a", "b"):
            assert main(["eval", "--checkpoint", str(ck), "--game", "royal", "--iters", "3",
                         "--out", str(tmp_path / d)]) == 0
        a = tmp_path / "a" / "eval_royal_agent_seed1.csv"
        assert len(read_results(a)) == 3
        assert a.read_bytes() == (tmp_path / "b" / "eval_royal_agent_seed1.csv").read_bytes()
        rules = rows_of(tmp_path / "a" / "eval_royal_agent_seed1_rules.csv")
        assert rules[0] == ["iteration", "rule"] and len(rules) == 4

    def test_eval_bad_checkpoint(self, tmp_path):
        ck = tmp_path / "broken.ckpt"
        ck.write_text("nothing here\n")
        assert main(["eval", "--checkpoint", str(ck), "--out", str(tmp_path)]) == 3
        assert main(["eval", "--checkpoint", str(tmp_path / "absent.ckpt"), "--out", str(tmp_path)]) == 4

    def test_eval_dimension_mismatch(self, trained, tmp_path):
        text = (trained / "agent_seed1.ckpt").read_text()
        ck = tmp_path / "wide.ckpt"
        ck.write_text(text.replace("config layer_dims 18 ", "config layer_dims 19 ", 1))
        assert main(["eval", "--checkpoint", str(ck), "--iters", "2", "--out", str(tmp_path)]) == 3

    def test_compare_and_svg(self, trained, tmp_path):
        inputs = []
        for rule in ("a1", "a5"):
            main(["baseline", "--rule", rule, "--iters", "20", "--seeds", "1,2", "--out", str(tmp_path)])
        inputs = sorted(str(p) for p in tmp_path.glob("baseline_*.csv"))
        main(["eval", "--checkpoint", str(trained / "agent_seed1.ckpt"), "--iters", "20", "--out", str(tmp_path)])
        inputs.append(str(tmp_path / "eval_kuhn_agent_seed1.csv"))
        assert main(["compare", *inputs, "--out", str(tmp_path)]) == 0
        table = rows_of(tmp_path / "compare.csv")
        assert table[0] == ["game", "method", "iteration", "mean_exploitability", "n_seeds"]
        assert {r[1] for r in table[1:]} == {"cfr+", "vanilla", "rlcfr"}
        assert {r[4] for r in table[1:] if r[1] != "rlcfr"} == {"2"}
        svg = tmp_path / "compare_kuhn.svg"
        root = ET.parse(svg).getroot()
        assert root.tag.endswith("svg")
        first = svg.read_bytes()
        assert main(["compare", *inputs, "--out", str(tmp_path)]) == 0
        assert svg.read_bytes() == first

    def test_compare_single_method(self, tmp_path):
        main(["baseline", "--rule", "a3", "--iters", "5", "--out", str(tmp_path)])
        assert main(["compare", str(tmp_path / "baseline_kuhn_dcfr_seed0.csv"), "--out", str(tmp_path)]) == 0
        ET.parse(tmp_path / "compare_kuhn.svg")

    def test_compare_missing_inputs(self, tmp_path, capsys):
        assert main(["compare", str(tmp_path / "x.csv"), str(tmp_path / "y.csv"), "--out", str(tmp_path)]) == 4
        err = capsys.readouterr().err
        assert "x.csv" in err and "y.csv" in err

    def test_compare_rejects_bad_rows(self, tmp_path):
        path = tmp_path / "bad.csv"
        write_results([ResultRow("kuhn", "a1", 0, 1, 0.5)], path)
        path.write_text(path.read_text().replace(",0.5,", ",-0.5,"))
        assert main(["compare", str(path), "--out", str(tmp_path)]) == 3


def test_train_without_curves(tmp_path, capsys):
    assert main(["train", "--games", "kuhn", "--reward", "r2", "--steps", "5", "--out", str(tmp_path)]) == 3
    assert "build-curves" in capsys.readouterr().err


def test_train_r1_needs_no_curves(tmp_path):
    assert main(["train", "--games", "kuhn", "--reward", "r1", "--steps", "5", "--episode-steps", "5",
                 "--actions", "4", "--out", str(tmp_path)]) == 0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_train_divergence_exits_with_diagnostic(tmp_path, capsys):
    argv = ["train", "--games", "kuhn", "--reward", "r1", "--steps", "200", "--episode-steps", "20",
            "--set", "dqn.learning_rate=1e6", "--set", "dqn.batch_size=8", "--out", str(tmp_path)]
    assert main(argv) == 1
    assert "training diverged" in capsys.readouterr().err


@pytest.mark.parametrize("bad", [["--set", "dqn.discount=2"], ["--set", "env.game=leduc"],
                                 ["--set", "dqn.nonsense=1"], ["--reward", "r7"]])
def test_train_configuration_errors(tmp_path, bad):
    assert main(["train", "--games", "kuhn", "--reward", "r1", "--steps", "5", *bad, "--out", str(tmp_path)]) == 3


def test_presets_cover_ablations():
    assert EXPERIMENT_PRESETS["main"]["steps"] == "20000"
    assert {EXPERIMENT_PRESETS[f"reward-r{i}"]["reward"] for i in (1, 2, 3)} == {"R1", "R2", "R3"}
    assert {EXPERIMENT_PRESETS[f"actions-{n}"]["actions"] for n in (4, 6, 7)} == {"4", "6", "7"}


def test_read_config_file_rejects_junk(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("iters 10\n")
    with pytest.raises(ConfigurationError):
        read_config_file(p)


def test_log_spaced_checkpoints():
    pts = checkpoints(10000, log_spaced=True)
    assert pts[:1000] == list(range(1, 1001))
    assert pts[-1] == 10000 and len(pts) < 1100
    assert checkpoints(50) == list(range(1, 51))
