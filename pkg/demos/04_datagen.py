"""
Generating fine-tuning data
===========================

Run the few-shot divider over training questions, keep only transcripts that
parse legally and score well against the gold answer, and write them as
prompt/completion pairs.
"""

# %%
import tempfile
from pathlib import Path

from dcqa import datagen, synthworld
from dcqa.llm import ScriptedBackend
from dcqa.prompts import load_shots

shots = load_shots()
print(len(shots), "bundled shots:", ", ".join(s.id for s in shots))
print(shots[0].render()[:400])

# %%
world = synthworld.generate_world(40, 2, seed=3)
questions = synthworld.generate_questions(world, 20, 2, seed=3)
records = [q.to_record() for q in questions]

out, report = datagen.generate_dataset(records, shots, synthworld.oracle_backend(questions),
                                       synthworld.oracle_tools(world))
print(report)

# %%
path = Path(tempfile.mkdtemp()) / "train.jsonl"
print(datagen.write_dataset(out, path), "records written to", path)
print(out[0].completion)

# %%
# A generator that always guesses the same thing produces legal transcripts
# that fail the F1 threshold, so nothing is kept.
banana = ScriptedBackend(lambda prompt: "[Answer: banana]")
out, report = datagen.generate_dataset(records, shots, banana, synthworld.oracle_tools(world))
print("kept", report.kept, "of", len(records))
