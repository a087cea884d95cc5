"""Command-line entry point: ``dcqa {synth,run,eval,datagen,inspect}``.

Settings resolve as command-line flags, then environment variables, then a
JSON ``--config`` file, then defaults. Every command that writes results
also writes ``resolved_config.json`` next to them; wall-clock timestamps go
only to the ``run.log`` sidecar so result files are byte-reproducible.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import datagen, synthworld
from .errors import BackendError, DcqaError, InvalidInput, MissingFile, SchemaError
from .eval import load_benchmark, load_records, render_report, score_predictions
from .eval.records import QaRecord
from .llm import ENDPOINT_ENV, Cassette, HttpChatBackend, LlmBackend, ReplayBackend, ScriptedBackend
from .orchestrator import (
    Budget,
    OutcomeKind,
    Strategy,
    StrategyKind,
    llm_outputs,
    read_transcripts,
    run_batch,
    write_episodes,
)
from .prompts import load_shots
from .protocol import DividerEvent, SystemNote, ToolKind, ToolReplyEvent, render_divider, render_tool_reply
from .toolkit import (
    HttpToolClient,
    SearchToolClient,
    StubTool,
    ToolRegistry,
    standin_registry,
)

log = logging.getLogger("dcqa")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BACKEND = 0, 1, 2, 3

DEFAULTS: Dict[str, Any] = {
    "strategy": "divide-conquer",
    "llm": "scripted-oracle",
    "tools": "oracle",
    "max_tool_calls": 12,
    "max_parse_retries": 1,
    "seed": 0,
    "parallelism": 1,
    "context_mode": "gold",
    "split": None,
    "llm_label": None,
    "size": "NA",
    "temperature": 0.0,
    "max_tokens": 512,
    "llm_endpoint": None,
    "cassette": None,
    "cassette_mode": "auto",
    "threshold": datagen.DEFAULT_THRESHOLD,
    "granularity": "transcript",
    "mode": "live",
    "subset": datagen.TRAINING_SUBSET_SIZE,
    "shots": None,
    "max_prompt_chars": None,
}
ENV = {"llm_endpoint": ENDPOINT_ENV}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1 instead of argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_options(p: argparse.ArgumentParser) -> None:
    src = p.add_argument_group("questions")
    src.add_argument("--synth", help="directory written by `dcqa synth`")
    src.add_argument("--benchmark", choices=["multimodalqa", "mmcoqa", "native"])
    src.add_argument("--data", help="benchmark directory (or native JSONL file)")
    src.add_argument("--split", default=None)
    src.add_argument("--limit", type=int, default=None, help="use only the first N questions")
    p.add_argument("--config", help="JSON file with default settings")
    p.add_argument("--llm", default=None,
                   help="scripted-oracle | scripted-constant:TEXT | replay:TRANSCRIPTS | http:MODEL")
    p.add_argument("--llm-endpoint", default=None)
    p.add_argument("--llm-label", default=None)
    p.add_argument("--size", default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--max-tokens", type=int, default=None)
    p.add_argument("--cassette", default=None, help="JSONL cassette for recording/replaying HTTP LLM calls")
    p.add_argument("--cassette-mode", choices=["record", "replay", "auto"], default=None)
    p.add_argument("--tools", default=None, help="oracle | noisy:P | lexical | http:TOOLS.json")
    p.add_argument("--max-tool-calls", type=int, default=None)
    p.add_argument("--max-parse-retries", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--parallelism", type=int, default=None)
    p.add_argument("--context-mode", choices=["gold", "global"], default=None)
    p.add_argument("--max-prompt-chars", type=int, default=None,
                   help="drop the oldest shots until the initial prompt fits")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dcqa", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic world and question set")
    p.add_argument("--hops", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--entities", type=int, default=60)
    p.add_argument("--relations", type=int, default=6)
    p.add_argument("--no-mix", action="store_true", help="allow chains whose hops all use one tool")
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="answer questions and score them")
    _add_run_options(p)
    p.add_argument("--strategy", choices=[k.value for k in StrategyKind], default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="score a transcripts file against gold answers")
    p.add_argument("--transcripts", required=True)
    p.add_argument("--gold", required=True, help="QaRecord JSONL (e.g. questions.jsonl from synth)")
    p.add_argument("--llm-label", default="")
    p.add_argument("--size", default="NA")
    p.add_argument("--budget", type=int, default=12)
    p.add_argument("--out", default=None)

    p = sub.add_parser("datagen", help="generate a divide-and-conquer finetuning dataset")
    _add_run_options(p)
    p.add_argument("--subset", type=int, default=None, help="training subset size (default 2000)")
    p.add_argument("--shots", default=None, help="shot library JSONL (default: bundled shots)")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--granularity", choices=["transcript", "turn"], default=None)
    p.add_argument("--mode", choices=["live", "invent"], default=None)
    p.add_argument("--out", required=True, help="output dataset JSONL")

    p = sub.add_parser("inspect", help="pretty-print one episode")
    p.add_argument("--transcripts", required=True)
    p.add_argument("qid", nargs="?", help="episode id (default: first)")
    return parser


def resolve(args: argparse.Namespace) -> Dict[str, Any]:
    """Flags > environment > config file > defaults."""
    file_cfg: Dict[str, Any] = {}
    if getattr(args, "config", None):
        try:
            file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise MissingFile(f"no such config file: {args.config}") from None
        except json.JSONDecodeError as e:
            raise SchemaError(f"config is not JSON: {e.msg}", args.config, e.lineno) from None
    cfg: Dict[str, Any] = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
        elif key in ENV and os.environ.get(ENV[key]):
            cfg[key] = os.environ[ENV[key]]
        elif key in file_cfg:
            cfg[key] = file_cfg[key]
        else:
            cfg[key] = default
    for key in ("synth", "benchmark", "data", "limit"):
        v = getattr(args, key, None)
        cfg[key] = v if v is not None else file_cfg.get(key)
    return cfg


# -- question sources -----------------------------------------------------------

class Source:
    def __init__(self, records: List[QaRecord], world=None, questions=None, stores=None):
        self.records = records
        self.world = world
        self.questions = questions
        self.stores = stores


def load_source(cfg: Dict[str, Any]) -> Source:
    if cfg["synth"]:
        d = Path(cfg["synth"])
        if not (d / "world.jsonl").exists():
            raise MissingFile(f"{d} has no world.jsonl; run `dcqa synth` first")
        world = synthworld.FactGraph.loads((d / "world.jsonl").read_text(encoding="utf-8"))
        questions = synthworld.load_questions(d / "questions.jsonl")
        if cfg["limit"]:
            questions = questions[: cfg["limit"]]
        return Source([q.to_record() for q in questions], world, questions)
    if cfg["benchmark"]:
        if not cfg["data"]:
            raise UsageError("--benchmark needs --data")
        records, stores = load_benchmark(cfg["benchmark"], cfg["data"], cfg["split"])
        if cfg["limit"]:
            records = records[: cfg["limit"]]
        return Source(records, stores=stores)
    raise UsageError("give --synth DIR or --benchmark NAME --data PATH")


def make_llm(cfg: Dict[str, Any], src: Source, style: StrategyKind) -> LlmBackend:
    choice: str = cfg["llm"]
    if choice == "scripted-oracle":
        if src.questions is None:
            raise UsageError("scripted-oracle needs a synthetic question set (--synth)")
        return synthworld.oracle_backend(src.questions, style)
    if choice.startswith("scripted-constant:"):
        text = choice.split(":", 1)[1]
        return ScriptedBackend(lambda prompt: text, label="scripted-constant")
    if choice.startswith("replay:"):
        path = choice.split(":", 1)[1]
        by_qid = {h["qid"]: llm_outputs(events) for h, events in read_transcripts(path)}
        return ReplayBackend(by_qid)
    if choice.startswith("http:"):
        cassette = Cassette(cfg["cassette"], cfg["cassette_mode"]) if cfg["cassette"] else None
        try:
            return HttpChatBackend(choice.split(":", 1)[1], endpoint=cfg["llm_endpoint"],
                                   temperature=cfg["temperature"], max_tokens=cfg["max_tokens"], cassette=cassette)
        except InvalidInput as e:
            raise BackendError(str(e)) from None
    raise UsageError(f"unknown --llm {choice!r}")


def make_tools(cfg: Dict[str, Any], src: Source) -> ToolRegistry:
    choice: str = cfg["tools"]
    if choice == "oracle" or choice.startswith("noisy:"):
        if src.world is None:
            raise UsageError(f"--tools {choice} needs a synthetic world (--synth)")
        if choice == "oracle":
            return synthworld.oracle_tools(src.world)
        try:
            p = float(choice.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad noise level in {choice!r}") from None
        return synthworld.noisy_tools(src.world, p, cfg["seed"])
    if choice == "lexical":
        if src.world is not None:
            return synthworld.lexical_tools(src.world)
        s = src.stores
        if s is None:
            raise UsageError("--tools lexical needs modality stores (--synth or a multimodalqa/mmcoqa directory)")
        return standin_registry(s.texts, s.tables, s.captions, SearchToolClient())
    if choice.startswith("http:"):
        conf = json.loads(Path(choice.split(":", 1)[1]).read_text(encoding="utf-8"))
        clients = {}
        for kind in ToolKind:
            url = conf.get(kind.value)
            if kind is ToolKind.SEARCH and url == "serpapi":
                clients[kind] = SearchToolClient()
            elif url:
                clients[kind] = HttpToolClient(url, timeout=float(conf.get("timeout", 30.0)))
            else:
                clients[kind] = StubTool()
        return ToolRegistry(clients)
    raise UsageError(f"unknown --tools {choice!r}")


def _write_config(out_dir: Path, command: str, cfg: Dict[str, Any]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    resolved = {"command": command, **cfg}
    (out_dir / "resolved_config.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n",
                                                  encoding="utf-8")


def _sidecar(out_dir: Path, message: str) -> None:
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    with (out_dir / "run.log").open("a", encoding="utf-8") as fh:
        fh.write(f"{stamp} {message}\n")


# -- commands -------------------------------------------------------------------

def cmd_synth(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    world = synthworld.generate_world(args.entities, args.hops, args.seed, num_relations=args.relations)
    questions = synthworld.generate_questions(world, args.n, args.hops, args.seed, mix_modalities=not args.no_mix)
    (out / "world.jsonl").write_text(world.dumps(), encoding="utf-8")
    synthworld.save_questions(questions, out / "questions.jsonl")
    world.text_store().to_jsonl(out / "texts.jsonl")
    world.table_store().to_jsonl(out / "tables.jsonl")
    world.caption_store().to_jsonl(out / "captions.jsonl")
    _write_config(out, "synth", {k: v for k, v in vars(args).items() if k not in ("func", "verbose")})
    print(f"wrote {len(questions)} questions ({args.hops} hops) to {out}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    cfg = resolve(args)
    out = Path(args.out)
    src = load_source(cfg)
    strategy = Strategy.from_name(cfg["strategy"], context_mode=cfg["context_mode"],
                                  max_prompt_chars=cfg["max_prompt_chars"])
    budget = Budget(cfg["max_tool_calls"], cfg["max_parse_retries"])
    llm = make_llm(cfg, src, strategy.kind)
    tools = make_tools(cfg, src)
    _write_config(out, "run", cfg)
    _sidecar(out, f"run start: {len(src.records)} questions")
    episodes = run_batch(src.records, strategy, budget, llm, tools, cfg["seed"], cfg["parallelism"])
    _sidecar(out, "run end")
    write_episodes(episodes, out / "transcripts.jsonl")
    rows = [(ep.question.qid, ep.prediction, ep.question.gold_answers, ep.tool_calls) for ep in episodes]
    report = score_predictions(rows, strategy.name, llm=cfg["llm_label"] or getattr(llm, "label", cfg["llm"]),
                               size=cfg["size"], budget=budget.max_tool_calls, context_mode=cfg["context_mode"])
    text, payload = render_report([report])
    (out / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    if all(ep.outcome.kind is OutcomeKind.BACKEND_ERROR for ep in episodes):
        print(f"error: every episode failed in the LLM backend ({episodes[0].outcome.detail})", file=sys.stderr)
        return EXIT_BACKEND
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    gold = {r.qid: r for r in load_records(args.gold)}
    rows = []
    strategy = ""
    for header, _ in read_transcripts(args.transcripts):
        rec = gold.get(header["qid"])
        if rec is None:
            raise SchemaError(f"no gold record for {header['qid']!r}", args.gold)
        strategy = header["strategy"]
        pred = header.get("answer", []) if header["outcome"] == OutcomeKind.ANSWERED.value else []
        rows.append((rec.qid, pred, rec.gold_answers, header["tool_calls"]))
    report = score_predictions(rows, strategy, llm=args.llm_label, size=args.size, budget=args.budget)
    text, payload = render_report([report])
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_datagen(args: argparse.Namespace) -> int:
    cfg = resolve(args)
    out = Path(args.out)
    src = load_source(cfg)
    n = min(cfg["subset"], len(src.records))
    subset = datagen.sample_training_subset(src.records, n, cfg["seed"])
    shots = load_shots(cfg["shots"])
    llm = make_llm(cfg, src, StrategyKind.DIVIDE_CONQUER)
    tools = make_tools(cfg, src) if cfg["mode"] == "live" else None
    budget = Budget(cfg["max_tool_calls"], cfg["max_parse_retries"])
    records, report = datagen.generate_dataset(subset, shots, llm, tools, budget, cfg["threshold"],
                                               cfg["granularity"], cfg["mode"], cfg["seed"], cfg["parallelism"])
    out.parent.mkdir(parents=True, exist_ok=True)
    written = datagen.write_dataset(records, out)
    _write_config(out.parent, "datagen", cfg)
    gen = report.to_dict()
    gen["written"] = written
    out.with_suffix(".report.json").write_text(json.dumps(gen, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"kept {report.kept}/{report.total} questions; wrote {written} records to {out}")
    return EXIT_OK


def format_episode(header: Dict[str, Any], events: Sequence[Any]) -> str:
    lines = [
        f"episode {header['qid']}  strategy={header['strategy']}  seed={header['seed']}",
        f"question: {header['question']}",
        f"outcome: {header['outcome']}  answer={header.get('answer', [])}  tool_calls={header['tool_calls']}",
        "",
    ]
    for ev in events:
        if isinstance(ev, DividerEvent):
            lines.append(f"[LLM]    {ev.raw or render_divider(ev)}")
        elif isinstance(ev, ToolReplyEvent):
            lines.append(f"[TOOL]   {render_tool_reply(ev.tool, ev.answer)}")
        elif isinstance(ev, SystemNote):
            lines.append(f"[SYSTEM] {ev.text}" + (f"  (output: {ev.detail!r})" if ev.detail else ""))
    return "\n".join(lines) + "\n"


def cmd_inspect(args: argparse.Namespace) -> int:
    episodes = read_transcripts(args.transcripts)
    if not episodes:
        raise SchemaError("no episodes in file", args.transcripts)
    if args.qid is None:
        header, events = episodes[0]
    else:
        match = [e for e in episodes if e[0]["qid"] == args.qid]
        if not match:
            raise SchemaError(f"no episode {args.qid!r}", args.transcripts)
        header, events = match[0]
    sys.stdout.write(format_episode(header, events))
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "run": cmd_run, "eval": cmd_eval, "datagen": cmd_datagen, "inspect": cmd_inspect}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"dcqa: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BackendError as e:
        print(f"dcqa: backend error: {e}", file=sys.stderr)
        return EXIT_BACKEND
    except (DcqaError, OSError, ValueError, KeyError) as e:
        print(f"dcqa: data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
