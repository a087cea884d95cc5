"""
A synthetic world answered by an oracle
=======================================

Build a small fact graph, ask two-hop questions about it, and let a scripted
divider walk each chain with perfect tools. Every question should be answered
with exactly one tool call per hop.
"""

# %%
from dcqa import synthworld
from dcqa.cli import format_episode
from dcqa.eval import evaluate, render_report
from dcqa.orchestrator import Budget, Strategy, run_batch

world = synthworld.generate_world(num_entities=40, depth_max=2, seed=1)
print(len(world.entities), "entities,", len(world.facts), "facts")
print(world.facts[0])

# %%
# Questions chain relations; each hop lives in exactly one modality.
questions = synthworld.generate_questions(world, n=25, depth=2, seed=1)
q = questions[0]
print(q.question)
for hop in q.hops:
    print(f"  {hop.tool.value:6s} {hop.sub_question} -> {hop.answer}")

# %%
records = [q.to_record() for q in questions]
episodes = run_batch(records, Strategy.divide_conquer(), Budget(),
                     synthworld.oracle_backend(questions), synthworld.oracle_tools(world))
print(format_episode(episodes[0].header(), episodes[0].events))

# %%
text, _ = render_report([evaluate(episodes, llm="scripted-oracle")])
print(text)
