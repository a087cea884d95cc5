"""
Exact match and token F1 on list answers
========================================

Answers are lists. Items are normalized, aligned greedily and scored, and the
best gold variant wins.
"""

# %%
from dcqa.eval import exact_match, normalize_answer, token_f1

print(normalize_answer("The Chicago Bears."))

gold = [["Chicago Bears", "Cleveland Browns"]]
for pred in (["Cleveland Browns", "Chicago Bears"], ["Chicago Bears"], ["Cleveland"], ["Persepolis"]):
    print(f"{pred!s:45s} EM={exact_match(pred, gold)} F1={token_f1(pred, gold):.4f}")

# %%
# A partial item still earns token credit: two of three tokens overlap.
print(round(token_f1(["Cleveland"], [["Cleveland Browns"]]), 4))
