import json

import pytest
from hypothesis import given, settings, strategies as st

from dcqa import datagen, synthworld
from dcqa.errors import InvalidInput, InvalidShot
from dcqa.eval import QaRecord
from dcqa.llm import ScriptedBackend
from dcqa.orchestrator import Budget
from dcqa.prompts import (
    DIVIDE_CONQUER_INSTRUCTION,
    Shot,
    assemble_prompt,
    fit_prompt,
    load_shots,
    validate_shot,
)
from dcqa.protocol import ToolKind, ToolReplyEvent, render_tool_reply, sub_question, transcript_text


@pytest.fixture(scope="module")
def shots():
    return load_shots()


@pytest.fixture(scope="module")
def synth50():
    w = synthworld.generate_world(40, 2, seed=21)
    return w, synthworld.generate_questions(w, 50, 2, seed=21)


def test_bundled_shots(shots):
    assert len(shots) == 8
    for s in shots:
        validate_shot(s)
    mods = [s.modality for s in shots]
    assert mods.count("text") == 3 and mods.count("table") == 3 and mods.count("image") == 2


def test_table_one_shot_present(shots):
    nfl = next(s for s in shots if s.id == "nfl-cheerleaders")
    assert nfl.gold == ("Chicago Bears", "Cleveland Browns")
    assert "Answer from the Text Tool: Chicago Bears, Cleveland Browns, Persepolis." in nfl.render()


def test_table_one_shot_validates(shots):
    nfl = next(s for s in shots if s.id == "nfl-cheerleaders")
    legal, f1, calls = datagen.validate_completion(transcript_text(nfl.turns), [["Chicago Bears", "Cleveland Browns"]])
    assert legal and f1 == 1.0 and calls == 2


def test_prompt_tail(shots):
    nfl = next(s for s in shots if s.id == "nfl-cheerleaders")
    prompt = assemble_prompt([nfl], "Who won?")
    assert prompt.endswith("Open Question: Who won?")
    assert prompt.startswith(DIVIDE_CONQUER_INSTRUCTION)
    assert prompt.count("Open Question:") == 2


def test_zero_shot_prompt():
    assert assemble_prompt([], "Who won?") == DIVIDE_CONQUER_INSTRUCTION + "\n\nOpen Question: Who won?"


def test_history_in_prompt():
    prompt = assemble_prompt([], "And the second?", [("Who won?", "Bears")])
    assert prompt.endswith("Q: Who won?\nA: Bears\nOpen Question: And the second?")


def test_shot_without_final_answer_invalid():
    bad = Shot("Q?", (sub_question("Who?", ToolKind.TEXT), ToolReplyEvent(ToolKind.TEXT, "x")))
    with pytest.raises(InvalidShot):
        validate_shot(bad)
    with pytest.raises(InvalidShot):
        assemble_prompt([bad], "Q?")


def test_shot_round_trip(shots, tmp_path):
    path = tmp_path / "shots.jsonl"
    path.write_text("".join(json.dumps(s.to_dict()) + "\n" for s in shots))
    assert load_shots(path) == shots


def test_mixed_instructions_rejected(shots):
    other = Shot(shots[0].question, shots[0].turns, instruction="Something else.")
    with pytest.raises(InvalidShot):
        assemble_prompt([shots[0], other], "Q?")


def test_fit_prompt(shots):
    full, dropped = fit_prompt(shots, "Q?")
    assert dropped == 0
    p, d = fit_prompt(shots, "Q?", max_chars=len(full) // 2)
    assert d > 0 and len(p) <= len(full) // 2 and p == assemble_prompt(shots[d:], "Q?")


# -- sampling --------------------------------------------------------------------

def _bench(n):
    return [QaRecord(f"mmqa-{i:05d}", f"question {i}?", [["a"]], split="train") for i in range(n)]


def test_sample_2000_of_23817():
    bench = _bench(23817)
    sub = datagen.sample_training_subset(bench, 2000, seed=0)
    assert len({r.qid for r in sub}) == 2000
    assert [r.qid for r in sub] == [r.qid for r in datagen.sample_training_subset(bench, 2000, seed=0)]
    assert [r.qid for r in sub] == sorted(r.qid for r in sub)


def test_sample_everything_is_stable_copy():
    bench = _bench(50)
    assert datagen.sample_training_subset(bench, 50, seed=3) == bench
    with pytest.raises(InvalidInput):
        datagen.sample_training_subset(bench, 51)


# -- generation ------------------------------------------------------------------

def test_oracle_generator_50(synth50, shots, tmp_path):
    w, qs = synth50
    recs = [q.to_record() for q in qs]
    out, rep = datagen.generate_dataset(recs, shots, synthworld.oracle_backend(qs), synthworld.oracle_tools(w))
    assert len(out) == 50 and rep.kept == 50 and rep.parse_failures == 0
    path = tmp_path / "data.jsonl"
    assert datagen.write_dataset(out, path) == 50
    gold = {r.qid: r.gold_answers for r in recs}
    for line in path.read_text().splitlines():
        row = json.loads(line)
        legal, f1, calls = datagen.validate_completion(row["completion"], gold[row["meta"]["qid"]])
        assert legal and f1 == 1.0 and calls == 2
        assert row["prompt"].endswith("Open Question: " + next(r.question for r in recs if r.qid == row["meta"]["qid"]))


def test_banana_generator(synth50, shots):
    w, qs = synth50
    recs = [q.to_record() for q in qs]
    banana = ScriptedBackend(lambda p: "[Answer: banana]")
    out, rep = datagen.generate_dataset(recs, shots, banana, synthworld.oracle_tools(w), threshold=0.8)
    assert sum(r.validated for r in out) == 0 and rep.kept == 0


def test_turn_granularity(synth50, shots):
    w, qs = synth50
    recs = [q.to_record() for q in qs[:5]]
    out, rep = datagen.generate_dataset(recs, shots, synthworld.oracle_backend(qs), synthworld.oracle_tools(w),
                                        granularity="turn")
    assert len(out) == 15 and all(r.validated for r in out)
    first = [r for r in out if r.qid == recs[0].qid]
    assert first[1].prompt.startswith(first[0].prompt) and first[0].completion in first[1].prompt


def test_invent_mode(synth50, shots):
    _, qs = synth50
    by_q = {q.question: q for q in qs}

    def writer(prompt):
        q = by_q[prompt.rsplit("Open Question: ", 1)[1].strip()]
        lines = []
        for h in q.hops:
            lines.append(f"Sub-question: {synthworld.hop_question(h.relation, h.subject)} (Tool={h.tool.value})")
            lines.append(render_tool_reply(h.tool, h.answer))
        lines.append(f"[Answer: {q.gold[0]}]")
        return "\n".join(lines)

    recs = [q.to_record() for q in qs[:10]]
    out, rep = datagen.generate_dataset(recs, shots, ScriptedBackend(writer), mode="invent")
    assert rep.kept == 10 and all(r.tool_calls == 2 for r in out)
    out, rep = datagen.generate_dataset(recs, shots, ScriptedBackend(lambda p: "nonsense"), mode="invent")
    assert rep.kept == 0 and rep.parse_failures == 10


def test_live_mode_needs_tools(synth50, shots):
    _, qs = synth50
    with pytest.raises(InvalidInput):
        datagen.generate_dataset([qs[0].to_record()], shots, synthworld.oracle_backend(qs))


def test_budget_exhaustion_counted(synth50, shots):
    w, qs = synth50
    loop = ScriptedBackend(lambda p: "Sub-question: What? (Tool=Text)")
    out, rep = datagen.generate_dataset([qs[0].to_record()], shots, loop, synthworld.oracle_tools(w), Budget(3))
    assert rep.budget_exhaustions == 1 and rep.kept == 0


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1))
def test_keep_rule_monotone(t1, t2):
    lo, hi = sorted((t1, t2))
    completion = "Sub-question: Who? (Tool=Text)\nAnswer from the Text Tool: x\n[Answer: Chicago]"
    rec = datagen.FinetuneRecord("q", "p", completion, False, 0.0)
    gold = [["Chicago Bears"]]
    if datagen.validate_record(rec, gold, hi).validated:
        assert datagen.validate_record(rec, gold, lo).validated


def test_validation_idempotent():
    completion = "Sub-question: Who? (Tool=Text)\nAnswer from the Text Tool: x\n[Answer: Chicago Bears]"
    rec = datagen.FinetuneRecord("q", "p", completion, False, 0.0)
    once = datagen.validate_record(rec, [["Chicago Bears"]])
    assert once.validated and datagen.validate_record(once, [["Chicago Bears"]]) == once


@pytest.mark.parametrize("completion", [
    "",
    "[Answer: x]\nAnswer from the Text Tool: y",
    "Sub-question: a? (Tool=Text)\nAnswer from the Table Tool: y\n[Answer: x]",
    "Answer from the Text Tool: y\n[Answer: x]",
    "Sub-question: a? (Tool=Text)\nAnswer from the Text Tool: y",
    "gibberish",
])
def test_illegal_completions(completion):
    assert datagen.validate_completion(completion, [["x"]])[0] is False
