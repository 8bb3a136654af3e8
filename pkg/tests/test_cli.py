import json
import math
from pathlib import Path

import pytest
import yaml

from amenable_entropy.cli import main, payload_bytes, replay, run
from amenable_entropy.config import ConfigError, load_config
from conftest import H_RATE

CONFIGS = Path(__file__).resolve().parent.parent / "scripts" / "configs"


def cfg_path(name):
    return str(CONFIGS / f"{name}.yaml")


def write_yaml(tmp_path, data, name="c.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return str(p)


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


GOLDEN = {"kind": "markov", "P": [[0.9, 0.1], [0.2, 0.8]]}


class TestCommands:
    def test_entropy_rate_bernoulli_z2(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code, _, _ = run_cli(["entropy-rate", "--config", cfg_path("bernoulli_z2_rate"), "--out", str(out)], capsys)
        assert code == 0
        env = json.loads(out.read_text())
        assert [r["key"] for r in env["rows"]] == [1, 2, 3, 4, 5, 6]
        assert all(abs(r["value_nats"] - math.log(2)) < 1e-9 for r in env["rows"])
        assert set(env) >= {"version", "command", "config_digest", "seed", "rows", "verdicts", "elapsed_ms"}

    def test_kp_lexicographic(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert main(["kp", "--config", cfg_path("golden_kp_lex"), "--out", str(out)]) == 0
        rows = json.loads(out.read_text())["rows"]
        assert len(rows) == 1
        assert rows[0]["value_nats"] == pytest.approx(0.383523, abs=1e-6)
        assert rows[0]["value_nats"] == pytest.approx(H_RATE, abs=1e-12)

    def test_kp_uniform_adds_exact_rows(self):
        cfg = load_config({"seed": 2, "process": GOLDEN, "order_model": {"kind": "iid-uniform"},
                           "params": {"D_list": [2], "n_orders": 200}})
        env = run("kp", cfg)
        keys = [r["key"] for r in env["rows"]]
        assert keys == [2, "2/uniform-exact"]
        assert env["rows"][0]["mode"] == "monte-carlo" and env["rows"][1]["mode"] == "exact"
        assert "D=2:within_3_stderr" in env["verdicts"]

    def test_chain_check(self):
        env = run("chain-check", load_config(cfg_path("three_state_lumped_chain_check")))
        assert len(env["rows"]) == 100
        assert env["verdicts"]["chain_rule_identity"] is True

    def test_order_stats(self):
        env = run("order-stats", load_config(cfg_path("iid_order_stats")))
        assert len(env["rows"]) == 5
        assert env["verdicts"]["invariant_at_0.01"] is True

    def test_folner_audit_lamplighter(self):
        env = run("folner-audit", load_config(cfg_path("lamplighter_audit")))
        assert env["verdicts"]["ratios_decrease"] is True

    def test_folner_audit_interior(self):
        env = run("folner-audit", load_config(cfg_path("z1_interior_audit")))
        assert env["verdicts"]["interior_fraction_increasing"] is True

    def test_predictability(self):
        env = run("predictability", load_config(cfg_path("periodic_predictability")))
        assert env["verdicts"]["verdict"] == "predictable"

    def test_ar_check(self):
        env = run("ar-check", load_config(cfg_path("three_state_ar")))
        assert env["verdicts"]["identity_holds"] is True

    def test_ar_check_without_factor(self, tmp_path, capsys):
        path = write_yaml(tmp_path, {"seed": 1, "process": GOLDEN, "params": {"n_list": [2]}})
        code, _, err = run_cli(["ar-check", "--config", path], capsys)
        assert code == 2 and "factor" in err


class TestErrors:
    def test_malformed_probability(self, tmp_path, capsys):
        path = write_yaml(tmp_path, {"seed": 1, "process": {"kind": "bernoulli", "p": [0.6, 0.6]},
                                     "params": {"n_list": [1]}})
        code, _, err = run_cli(["entropy-rate", "--config", path], capsys)
        assert code == 2
        assert "process.p" in err

    def test_budget_refusal(self, tmp_path, capsys):
        path = write_yaml(tmp_path, {"seed": 1, "process": {"kind": "periodic", "word": "abc"},
                                     "params": {"n_list": [40]}})
        code, _, err = run_cli(["entropy-rate", "--config", path], capsys)
        assert code == 3 and "budget" in err

    def test_missing_seed(self, tmp_path, capsys):
        path = write_yaml(tmp_path, {"process": GOLDEN, "params": {"n_list": [1]}})
        code, _, err = run_cli(["entropy-rate", "--config", path], capsys)
        assert code == 2 and "seed" in err
        assert main(["entropy-rate", "--config", path, "--seed", "4"]) == 0

    def test_missing_file(self, capsys):
        assert run_cli(["kp", "--config", "/nonexistent.yaml"], capsys)[0] == 2

    def test_unknown_command(self):
        with pytest.raises(ConfigError):
            run("nope", load_config(cfg_path("golden_kp_lex")))

    def test_bad_format(self):
        with pytest.raises(ConfigError, match="output.format"):
            load_config({"seed": 1, "process": GOLDEN, "output": {"format": "xml"}})


class TestOutput:
    def test_csv(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        assert main(["entropy-rate", "--config", cfg_path("golden_rate"), "--out", str(out), "--format", "csv"]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "key,value_nats,stderr,n_orders,mode"
        assert len(lines) == 11
        assert lines[1].startswith("1,0.6365141682948")

    def test_bits_is_display_only(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code, stdout, _ = run_cli(["kp", "--config", cfg_path("golden_kp_lex"), "--bits", "--out", str(out)], capsys)
        assert code == 0
        assert "bits" in stdout
        assert f"{H_RATE / math.log(2):.12f}" in stdout
        assert json.loads(out.read_text())["rows"][0]["value_nats"] == pytest.approx(H_RATE, abs=1e-15)

    def test_digest_ignores_execution_keys(self):
        base = {"seed": 1, "process": GOLDEN, "params": {"n_list": [1]}}
        a = load_config(base)
        b = load_config({**base, "threads": 8, "output": {"path": "x.json"}})
        assert a.digest() == b.digest()
        assert load_config({**base, "seed": 2}).digest() != a.digest()

    def test_digest_normalizes_numbers(self):
        a = load_config({"seed": 1, "process": GOLDEN, "params": {"n_list": [1, 2]}})
        b = load_config({"params": {"n_list": [1.0, 2.0]}, "process": GOLDEN, "seed": 1.0})
        assert a.digest() == b.digest()


class TestDeterminismAndReplay:
    def test_identical_payloads_across_threads(self):
        raw = yaml.safe_load(Path(cfg_path("golden_kp_uniform")).read_text())
        raw["params"]["n_orders"] = 300
        one = run("kp", load_config({**raw, "threads": 1}))
        eight = run("kp", load_config({**raw, "threads": 8}))
        assert payload_bytes(one) == payload_bytes(eight)
        assert one["config_digest"] == eight["config_digest"]

    def test_replay_pass(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert main(["chain-check", "--config", cfg_path("golden_chain_check"), "--out", str(out)]) == 0
        code, stdout, _ = run_cli(["replay", str(out)], capsys)
        assert code == 0 and "PASS" in stdout

    def test_replay_tampered(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert main(["entropy-rate", "--config", cfg_path("golden_rate"), "--out", str(out)]) == 0
        env = json.loads(out.read_text())
        env["rows"][3]["value_nats"] += 1e-9
        out.write_text(json.dumps(env))
        code, stdout, _ = run_cli(["replay", str(out)], capsys)
        assert code == 1
        assert "FAIL" in stdout and "row 4" in stdout

    def test_replay_other_thread_count(self, tmp_path, capsys):
        raw = yaml.safe_load(Path(cfg_path("golden_kp_uniform")).read_text())
        raw["params"]["n_orders"] = 300
        path = write_yaml(tmp_path, raw)
        out = tmp_path / "r.json"
        assert main(["kp", "--config", path, "--threads", "1", "--out", str(out)]) == 0
        ok, report = replay(out, threads=8)
        assert ok, report

    def test_replay_version_mismatch(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert main(["kp", "--config", cfg_path("golden_kp_lex"), "--out", str(out)]) == 0
        env = json.loads(out.read_text())
        env["version"] = "0.0.0"
        out.write_text(json.dumps(env))
        ok, report = replay(out)
        assert not ok and "version" in report[0]

    def test_cache_dir_does_not_change_payload(self, tmp_path):
        cfg = load_config(cfg_path("three_state_ar"))
        plain = run("ar-check", cfg)
        cfg.cache_dir = str(tmp_path / "cache")
        cached = run("ar-check", cfg)
        assert payload_bytes(plain) == payload_bytes(cached)
        assert list((tmp_path / "cache").glob("*.bin"))
