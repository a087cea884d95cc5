"""Seeded synthetic fact worlds with gold multi-hop decompositions.

Entities are opaque ids (``E17``) and relations opaque names
(``rel_capital``). Every relation is a total function from entities to
other entities, so each hop has exactly one answer. Each fact lives in one
modality store only:

* text passage   ``The rel_capital of E3 is E7.``
* table row      ``T_rel_capital``: ``["entity", "rel_capital"]`` / ``["E3", "E7"]``
* image caption  ``E7 as the rel_capital of E3``

A depth-``d`` question composes ``d`` hop templates from the last hop
backwards: ``What is the rel_b of the rel_a of E3?``.
"""

from __future__ import annotations

import itertools
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple, Union

from .errors import InsufficientChains, InvalidInput
from .eval.records import QaRecord
from .llm import ScriptedBackend
from .orchestrator import StrategyKind, render_react
from .protocol import NO_RESULT, ToolKind, final_answer, render_divider, sub_question
from .toolkit import (
    CaptionImageTool,
    CaptionStore,
    LexicalTextTool,
    NoisyTool,
    OracleTool,
    StubTool,
    TableLookupTool,
    TableStore,
    TextStore,
    ToolRegistry,
)

RELATION_NAMES = (
    "rel_capital", "rel_founder", "rel_director", "rel_spouse", "rel_author", "rel_owner",
    "rel_mayor", "rel_coach", "rel_mentor", "rel_rival", "rel_sponsor", "rel_neighbor",
)
GOLD_MODALITIES = (ToolKind.TEXT, ToolKind.TABLE, ToolKind.IMAGE)
FACT_PATTERN = re.compile(r"\b(rel_\w+) of (E\d+)\b")


def hop_question(relation: str, subject: str) -> str:
    return f"What is the {relation} of {subject}?"


@dataclass(frozen=True)
class Fact:
    subject: str
    relation: str
    object: str
    modality: ToolKind


@dataclass(frozen=True)
class Hop:
    sub_question: str
    tool: ToolKind
    answer: str
    relation: str
    subject: str


@dataclass(frozen=True)
class SynthQuestion:
    id: str
    question: str
    hops: Tuple[Hop, ...]
    gold: Tuple[str, ...]

    @property
    def depth(self) -> int:
        return len(self.hops)

    def to_record(self) -> QaRecord:
        return QaRecord(self.id, self.question, (self.gold,), split="test", benchmark="synthworld")

    def to_dict(self) -> Dict[str, Any]:
        d = self.to_record().to_dict()
        d["hops"] = [{"sub_question": h.sub_question, "tool": h.tool.value, "answer": h.answer,
                      "relation": h.relation, "subject": h.subject} for h in self.hops]
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "SynthQuestion":
        hops = tuple(Hop(h["sub_question"], ToolKind.parse(h["tool"]), h["answer"], h["relation"], h["subject"])
                     for h in d["hops"])
        return cls(d["qid"], d["question"], hops, tuple(d["gold_answers"][0]))


@dataclass
class FactGraph:
    entities: List[str]
    relations: List[str]
    facts: List[Fact]
    depth_max: int
    seed: int
    _index: Dict[Tuple[str, str], Fact] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        self._index = {(f.relation, f.subject): f for f in self.facts}

    def fact(self, relation: str, subject: str) -> Fact:
        return self._index[(relation, subject)]

    def facts_for(self, modality: ToolKind) -> Dict[Tuple[str, str], str]:
        return {(f.relation, f.subject): f.object for f in self.facts if f.modality == modality}

    # modality stores -----------------------------------------------------

    def text_store(self) -> TextStore:
        docs = {}
        for i, f in enumerate(self.facts):
            if f.modality == ToolKind.TEXT:
                docs[f"P{i}"] = f"The {f.relation} of {f.subject} is {f.object}."
        return TextStore(docs)

    def table_store(self) -> TableStore:
        tables: Dict[str, Tuple[List[str], List[List[str]]]] = {}
        for f in self.facts:
            if f.modality == ToolKind.TABLE:
                tid = f"T_{f.relation}"
                tables.setdefault(tid, (["entity", f.relation], []))[1].append([f.subject, f.object])
        return TableStore(tables)

    def caption_store(self) -> CaptionStore:
        caps = {}
        for i, f in enumerate(self.facts):
            if f.modality == ToolKind.IMAGE:
                caps[f"I{i}"] = f"{f.object} as the {f.relation} of {f.subject}"
        return CaptionStore(caps)

    # serialization -------------------------------------------------------

    def dumps(self) -> str:
        meta = {"type": "meta", "entities": self.entities, "relations": self.relations,
                "depth_max": self.depth_max, "seed": self.seed}
        rows = [meta] + [{"type": "fact", "subject": f.subject, "relation": f.relation, "object": f.object,
                          "modality": f.modality.value} for f in self.facts]
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)

    @classmethod
    def loads(cls, text: str) -> "FactGraph":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        meta = rows[0]
        facts = [Fact(r["subject"], r["relation"], r["object"], ToolKind.parse(r["modality"])) for r in rows[1:]]
        return cls(meta["entities"], meta["relations"], facts, meta["depth_max"], meta["seed"])


def generate_world(num_entities: int, depth_max: int, seed: int, num_relations: int = 6) -> FactGraph:
    """Random functional relations over ``num_entities`` entities."""
    if depth_max < 1:
        raise InvalidInput("depth_max must be at least 1")
    if num_entities < depth_max + 1:
        raise InvalidInput("num_entities must be at least depth_max + 1")
    if num_relations < 1:
        raise InvalidInput("num_relations must be positive")
    rng = random.Random(seed)
    entities = [f"E{i}" for i in range(num_entities)]
    relations = [RELATION_NAMES[i] if i < len(RELATION_NAMES) else f"rel_{i}" for i in range(num_relations)]
    pairs = []
    for rel in relations:
        for subj in entities:
            obj = rng.choice([e for e in entities if e != subj])
            pairs.append((subj, rel, obj))
    # round-robin modalities over a seeded shuffle of the facts
    order = list(range(len(pairs)))
    rng.shuffle(order)
    start = rng.randrange(len(GOLD_MODALITIES))
    modality = {}
    for k, idx in enumerate(order):
        modality[idx] = GOLD_MODALITIES[(start + k) % len(GOLD_MODALITIES)]
    facts = [Fact(s, r, o, modality[i]) for i, (s, r, o) in enumerate(pairs)]
    return FactGraph(entities, relations, facts, depth_max, seed)


def _chain(world: FactGraph, start: str, rels: Sequence[str]) -> Tuple[Hop, ...]:
    hops = []
    subject = start
    for rel in rels:
        f = world.fact(rel, subject)
        hops.append(Hop(hop_question(rel, subject), f.modality, f.object, rel, subject))
        subject = f.object
    return tuple(hops)


def _surface(start: str, rels: Sequence[str]) -> str:
    phrase = start
    for rel in rels:
        phrase = f"the {rel} of {phrase}"
    return f"What is {phrase}?"


def generate_questions(world: FactGraph, n: int, depth: int, seed: int,
                       mix_modalities: bool = True) -> List[SynthQuestion]:
    """``n`` distinct chains of ``depth`` hops, each with its gold decomposition.

    With ``mix_modalities`` multi-hop chains whose hops all use one tool are
    skipped.
    """
    if depth < 1 or depth > world.depth_max:
        raise InvalidInput(f"depth must lie in 1..{world.depth_max}")
    if n < 1:
        raise InvalidInput("n must be positive")
    rng = random.Random(seed)

    def usable(hops: Tuple[Hop, ...]) -> bool:
        return not (mix_modalities and depth >= 2 and len({h.tool for h in hops}) == 1)

    total = len(world.entities) * len(world.relations) ** depth
    if total <= 200_000:
        candidates = [(s, rels) for s in world.entities
                      for rels in itertools.product(world.relations, repeat=depth)]
        chains = [(s, rels, hops) for s, rels in candidates if usable(hops := _chain(world, s, rels))]
        if len(chains) < n:
            raise InsufficientChains(f"world supports {len(chains)} chains of depth {depth}, asked for {n}")
        picked = rng.sample(chains, n)
    else:
        seen = set()
        picked = []
        attempts = 0
        while len(picked) < n:
            attempts += 1
            if attempts > 50 * n:
                raise InsufficientChains(f"could not find {n} usable chains of depth {depth}")
            s = rng.choice(world.entities)
            rels = tuple(rng.choice(world.relations) for _ in range(depth))
            if (s, rels) in seen:
                continue
            seen.add((s, rels))
            hops = _chain(world, s, rels)
            if usable(hops):
                picked.append((s, rels, hops))
    return [
        SynthQuestion(f"synth-d{depth}-s{seed}-{k:05d}", _surface(s, rels), hops, (hops[-1].answer,))
        for k, (s, rels, hops) in enumerate(picked)
    ]


def save_questions(questions: Sequence[SynthQuestion], path: Union[str, Path]) -> None:
    Path(path).write_text("".join(json.dumps(q.to_dict(), sort_keys=True) + "\n" for q in questions),
                          encoding="utf-8")


def load_questions(path: Union[str, Path]) -> List[SynthQuestion]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [SynthQuestion.from_dict(json.loads(line)) for line in lines if line.strip()]


# -- tools -------------------------------------------------------------------------

def oracle_tools(world: FactGraph) -> ToolRegistry:
    """Exact per-modality lookups; Search is a stub since no fact lives there."""
    return ToolRegistry({
        **{kind: OracleTool(world.facts_for(kind), FACT_PATTERN) for kind in GOLD_MODALITIES},
        ToolKind.SEARCH: StubTool(),
    })


def noisy_tools(world: FactGraph, p: float, seed: int) -> ToolRegistry:
    """Oracle tools whose answers are replaced by a random entity with probability ``p``."""
    oracle = oracle_tools(world)
    return ToolRegistry({kind: NoisyTool(oracle[kind], p, seed, world.entities) for kind in oracle})


def lexical_tools(world: FactGraph) -> ToolRegistry:
    """The generic desk-scale stand-ins over this world's modality stores."""
    return ToolRegistry({
        ToolKind.TEXT: LexicalTextTool(world.text_store()),
        ToolKind.TABLE: TableLookupTool(world.table_store()),
        ToolKind.IMAGE: CaptionImageTool(world.caption_store()),
        ToolKind.SEARCH: StubTool(),
    })


# -- oracle divider ---------------------------------------------------------------

_REPLY_LINE = re.compile(r"^Answer from the \w+ Tool: ?(.*)$", re.MULTILINE)
_OBSERVATION_LINE = re.compile(r"^Observation: ?(.*)$", re.MULTILINE)


def _target_and_replies(prompt: str, style: StrategyKind) -> Tuple[str, List[str]]:
    marker = "Question: " if style is StrategyKind.REACT else "Open Question: "
    pos = prompt.rfind(marker)
    if pos < 0:
        raise InvalidInput("prompt has no question")
    tail = prompt[pos + len(marker):]
    question, _, rest = tail.partition("\n")
    pattern = _OBSERVATION_LINE if style is StrategyKind.REACT else _REPLY_LINE
    return question.strip(), [m.group(1).strip() for m in pattern.finditer(rest)]


def oracle_step(question: SynthQuestion, replies: Sequence[str],
                style: StrategyKind = StrategyKind.DIVIDE_CONQUER) -> str:
    """Next divider output given the tool replies received so far.

    Hop ``k`` asks about whatever hop ``k-1`` returned, so corrupted replies
    propagate downstream.
    """
    if style is StrategyKind.TOOLS_ANSWER:
        useful = [r for r in replies if r and r != NO_RESULT]
        return render_divider(final_answer([useful[0] if useful else NO_RESULT],
                                           "Based on the tool answers, the final answer is:"))
    k = len(replies)
    if k >= question.depth:
        ev = final_answer([replies[-1]], "Based on the answers, the final answer is:")
    else:
        hop = question.hops[k]
        subject = hop.subject if k == 0 else replies[-1]
        ev = sub_question(hop_question(hop.relation, subject), hop.tool,
                          f"I need the {hop.relation} of {subject} from the {hop.tool.value.lower()} module.")
    return render_react(ev) if style is StrategyKind.REACT else render_divider(ev)


def oracle_divider_policy(world: FactGraph, question: SynthQuestion,
                          style: StrategyKind = StrategyKind.DIVIDE_CONQUER):
    """Scripted policy for a single question: reads the prompt's replies, emits the next gold step."""
    del world  # the gold decomposition already carries every fact the policy needs

    def policy(prompt: str) -> str:
        _, replies = _target_and_replies(prompt, style)
        return oracle_step(question, replies, style)

    return policy


def oracle_backend(questions: Sequence[SynthQuestion],
                   style: StrategyKind = StrategyKind.DIVIDE_CONQUER) -> ScriptedBackend:
    """Scripted oracle for a whole question set; the target is looked up from the prompt."""
    by_text = {q.question: q for q in questions}

    def policy(prompt: str) -> str:
        target, replies = _target_and_replies(prompt, style)
        q = by_text.get(target)
        if q is None:
            return "I do not know this question."
        return oracle_step(q, replies, style)

    return ScriptedBackend(policy, label="scripted-oracle")
