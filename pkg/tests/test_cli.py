import json
import subprocess
import sys

import pytest

from dcqa.cli import main


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert main(["synth", "--hops", "2", "--n", "20", "--seed", "1", "--out", str(d)]) == 0
    return d


def _report(out):
    return json.loads((out / "report.json").read_text())["reports"][0]


def test_synth_outputs(synth_dir):
    for name in ("world.jsonl", "questions.jsonl", "texts.jsonl", "tables.jsonl", "captions.jsonl",
                 "resolved_config.json"):
        assert (synth_dir / name).exists()
    assert len((synth_dir / "questions.jsonl").read_text().splitlines()) == 20


def test_run_divide_conquer_oracle(synth_dir, tmp_path, capsys):
    out = tmp_path / "dc"
    assert main(["run", "--synth", str(synth_dir), "--strategy", "divide-conquer", "--llm", "scripted-oracle",
                 "--tools", "oracle", "--out", str(out)]) == 0
    rep = _report(out)
    assert rep["EM"] == 100.0 and rep["avg_tool_calls"] == 2.0
    assert "100.00" in capsys.readouterr().out


def test_run_tools_answer(synth_dir, tmp_path):
    out = tmp_path / "ta"
    assert main(["run", "--synth", str(synth_dir), "--strategy", "tools-answer", "--out", str(out)]) == 0
    assert _report(out)["avg_tool_calls"] == 4.0


def test_unknown_strategy_exit_1(synth_dir, tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["run", "--synth", str(synth_dir), "--strategy", "magic", "--out", str(tmp_path)])
    assert e.value.code == 1
    assert "usage:" in capsys.readouterr().err


def test_missing_source_exit_1(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path)]) == 1
    assert "usage:" in capsys.readouterr().err


def test_data_error_exit_2(tmp_path):
    assert main(["run", "--synth", str(tmp_path / "missing"), "--out", str(tmp_path / "o")]) == 2
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{not json\n")
    assert main(["eval", "--transcripts", str(bad), "--gold", str(bad)]) == 2


def test_backend_error_exit_3(synth_dir, tmp_path, monkeypatch):
    monkeypatch.delenv("DCQA_LLM_ENDPOINT", raising=False)
    assert main(["run", "--synth", str(synth_dir), "--llm", "http:some-model", "--out", str(tmp_path / "x")]) == 3
    # every episode failing in the backend is also exit 3
    assert main(["run", "--synth", str(synth_dir), "--llm", "http:m", "--llm-endpoint", "http://127.0.0.1:9",
                 "--limit", "2", "--out", str(tmp_path / "y")]) == 3


def test_rerun_byte_identical(synth_dir, tmp_path):
    args = ["run", "--synth", str(synth_dir), "--tools", "noisy:0.3", "--strategy", "react", "--seed", "4"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--parallelism", "4", "--out", str(tmp_path / "b")]) == 0
    for name in ("transcripts.jsonl", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "run.log").exists()
    assert "latency_ms" not in (tmp_path / "a" / "transcripts.jsonl").read_text()


def test_synth_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["synth", "--hops", "3", "--n", "15", "--seed", "9", "--out", str(tmp_path / d)]) == 0
    for name in ("world.jsonl", "questions.jsonl", "texts.jsonl", "tables.jsonl", "captions.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    cfg = [json.loads((tmp_path / d / "resolved_config.json").read_text()) for d in ("a", "b")]
    assert [c.pop("out") for c in cfg] == [str(tmp_path / "a"), str(tmp_path / "b")]
    assert cfg[0] == cfg[1]


def test_replay_reproduces(synth_dir, tmp_path):
    assert main(["run", "--synth", str(synth_dir), "--tools", "noisy:0.5", "--out", str(tmp_path / "live")]) == 0
    assert main(["run", "--synth", str(synth_dir), "--tools", "noisy:0.5",
                 "--llm", f"replay:{tmp_path / 'live' / 'transcripts.jsonl'}", "--out", str(tmp_path / "rep")]) == 0
    assert (tmp_path / "live" / "transcripts.jsonl").read_bytes() == (tmp_path / "rep" / "transcripts.jsonl").read_bytes()


def test_eval_and_inspect(synth_dir, tmp_path, capsys):
    out = tmp_path / "r"
    main(["run", "--synth", str(synth_dir), "--out", str(out)])
    capsys.readouterr()
    assert main(["eval", "--transcripts", str(out / "transcripts.jsonl"), "--gold", str(synth_dir / "questions.jsonl"),
                 "--budget", "6", "--out", str(tmp_path / "e.json")]) == 0
    text = capsys.readouterr().out
    assert "100.00" in text and "set to 6" in text
    assert json.loads((tmp_path / "e.json").read_text())["reports"][0]["EM"] == 100.0
    assert main(["inspect", "--transcripts", str(out / "transcripts.jsonl"), "synth-d2-s1-00003"]) == 0
    shown = capsys.readouterr().out
    assert "synth-d2-s1-00003" in shown and "[TOOL]   Answer from the" in shown
    assert main(["inspect", "--transcripts", str(out / "transcripts.jsonl"), "nope"]) == 2


def test_datagen(synth_dir, tmp_path, capsys):
    out = tmp_path / "dg" / "data.jsonl"
    assert main(["datagen", "--synth", str(synth_dir), "--subset", "10", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 10
    rep = json.loads(out.with_suffix(".report.json").read_text())
    assert rep["kept"] == 10 and rep["written"] == 10
    assert main(["datagen", "--synth", str(synth_dir), "--subset", "10", "--llm", "scripted-constant:[Answer: banana]",
                 "--out", str(tmp_path / "b" / "d.jsonl")]) == 0
    assert (tmp_path / "b" / "d.jsonl").read_text() == ""


def test_config_precedence(synth_dir, tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_tool_calls": 5, "seed": 3, "llm_endpoint": "http://from-file"}))
    monkeypatch.setenv("DCQA_LLM_ENDPOINT", "http://from-env")
    monkeypatch.setenv("DCQA_LLM_API_KEY", "sk-should-not-leak")
    out = tmp_path / "o"
    assert main(["run", "--synth", str(synth_dir), "--config", str(cfg), "--seed", "8", "--out", str(out)]) == 0
    resolved = json.loads((out / "resolved_config.json").read_text())
    assert resolved["seed"] == 8  # flag beats file
    assert resolved["max_tool_calls"] == 5  # file beats default
    assert resolved["llm_endpoint"] == "http://from-env"  # env beats file
    assert resolved["strategy"] == "divide-conquer"  # default
    for name in ("resolved_config.json", "run.log", "transcripts.jsonl", "report.json"):
        assert "sk-should-not-leak" not in (out / name).read_text()
    assert "Note: maximum tool calls per question set to 5." in (out / "report.txt").read_text()


def test_lexical_tools_run(synth_dir, tmp_path):
    out = tmp_path / "lex"
    assert main(["run", "--synth", str(synth_dir), "--tools", "lexical", "--out", str(out)]) == 0
    assert _report(out)["EM"] > 50.0


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dcqa.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "synth" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "dcqa.cli", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 1
