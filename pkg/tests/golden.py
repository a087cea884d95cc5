"""Frozen fixtures shared by the unit tests and the acceptance suite."""

from dcqa.protocol import FinalAnswer, SubQuestion, ToolKind

T, TB, IM, S = ToolKind.TEXT, ToolKind.TABLE, ToolKind.IMAGE, ToolKind.SEARCH

NFL_TURN_1 = (
    "To answer this question, I first need to know the name of teams that did not have cheerleaders in 2017 "
    "from the text module. So, I need to ask this sub-question: Sub-question: Which teams did not have "
    "cheerleaders in 2017? (Tool=Text)"
)
NFL_TURN_2 = (
    "Now, I need to know the name of teams that played against Dallas Cowboys at Cowboys Stadium in the 2012 "
    "regular season. So, I need to ask this sub-question: Which teams played against Dallas Cowboys at "
    "Cowboys Stadium? (Tool=Text)"
)
NFL_FINAL = "Based on the answers, the final answer is: [Answer: Chicago Bears, Cleveland Browns]"

# (divider output, expected payload); None means ParseFailure
GOLDEN = [
    (NFL_TURN_1, SubQuestion("Which teams did not have cheerleaders in 2017?", T)),
    (NFL_TURN_2, SubQuestion("Which teams played against Dallas Cowboys at Cowboys Stadium?", T)),
    (NFL_FINAL, FinalAnswer(("Chicago Bears", "Cleveland Browns"), "Chicago Bears, Cleveland Browns")),
    ("To answer this question, I first need to know … Sub-question: Which teams did not have cheerleaders "
     "in 2017? (Tool=Text)", SubQuestion("Which teams did not have cheerleaders in 2017?", T)),
    ("Sub-question: How many wins did the Bears have? (Tool=Table)", SubQuestion("How many wins did the Bears have?", TB)),
    ("Sub-question: What animal is on the flag? (Tool=Image)", SubQuestion("What animal is on the flag?", IM)),
    ("Sub-question: Who founded Acme? (Tool=Search)", SubQuestion("Who founded Acme?", S)),
    ("Sub-question: Who founded Acme? (Tool=Web Search)", SubQuestion("Who founded Acme?", S)),
    ("Sub-question: Who wrote it? (Tool=TextQA)", SubQuestion("Who wrote it?", T)),
    ("Sub-question: Which year? (Tool=TableQA)", SubQuestion("Which year?", TB)),
    ("Sub-question: What color? (Tool=ImageQA)", SubQuestion("What color?", IM)),
    ("sub-question: lower case marker? (tool=text)", SubQuestion("lower case marker?", T)),
    ("SUB-QUESTION:   spaced   out  (Tool = Table )", SubQuestion("spaced out", TB)),
    ("I need more.\nSub-question: Which river\nflows through Tartu? (Tool=Text)",
     SubQuestion("Which river flows through Tartu?", T)),
    ("Sub-question: first? (Tool=Text) Actually, Sub-question: second? (Tool=Table)", SubQuestion("second?", TB)),
    ("Sub-question: What about (parenthetical) notes? (Tool=Text)",
     SubQuestion("What about (parenthetical) notes?", T)),
    ("[Answer: 42]", FinalAnswer(("42",), "42")),
    ("[Answer: a, , b]", FinalAnswer(("a", "b"), "a, , b")),
    ("[answer: lower]", FinalAnswer(("lower",), "lower")),
    ("The answer: [Answer:   padded  ]", FinalAnswer(("padded",), "padded")),
    ("[Answer: 1,000 people]", FinalAnswer(("1,000 people",), "1,000 people")),
    ("[Answer: Smith (born 1970, Ohio), Jones]", FinalAnswer(("Smith (born 1970, Ohio)", "Jones"),
                                                             "Smith (born 1970, Ohio), Jones")),
    ('[Answer: "Hello, World", Goodbye]', FinalAnswer(('"Hello, World"', "Goodbye"), '"Hello, World", Goodbye')),
    ("Sub-question: ignored? (Tool=Text) [Answer: wins]", FinalAnswer(("wins",), "wins")),
    ("[Answer: first] then [Answer: second]", FinalAnswer(("second",), "second")),
    ("Based on the answers:\n[Answer: Paris,\nLyon]", FinalAnswer(("Paris", "Lyon"), "Paris,\nLyon")),
    ("I am not sure what to do next.", None),
    ("", None),
    ("(Tool=Text)", None),
    ("Which teams? (Tool=Text)", None),
    ("Sub-question: Which teams? (Tool=Video)", None),
    ("Sub-question: (Tool=Text)", None),
    ("[Answer: ]", None),
    ("[Answer: , ,]", None),
    ("Sub-question: no tool tag here", None),
]

# (pred, gold variants, em, f1), every F1 worked out by hand from normalized tokens
FIXTURES = [
    (["Chicago Bears", "Cleveland Browns"], [["Chicago Bears", "Cleveland Browns"]], 1, 1.0),
    (["Cleveland"], [["Cleveland Browns"]], 0, 2 * (1.0 * 0.5) / (1.0 + 0.5)),
    ([], [["Chicago Bears"]], 0, 0.0),
    (["The Chicago Bears."], [["chicago bears"]], 1, 1.0),
    (["Cleveland Browns", "Chicago Bears"], [["Chicago Bears", "Cleveland Browns"]], 1, 1.0),
    (["Chicago Bears"], [["Chicago Bears", "Cleveland Browns"]], 0, 1 / 2),
    (["Chicago Bears", "Cleveland Browns", "Persepolis"], [["Chicago Bears", "Cleveland Browns"]], 0, 2 / 3),
    (["Paris"], [["Lyon"], ["Paris"]], 1, 1.0),
    (["42"], [["42"]], 1, 1.0),
    (["42"], [["43"]], 0, 0.0),
    (["New York City"], [["New York"]], 0, 0.8),
    (["Bears Bears"], [["Bears"]], 0, 2 / 3),
    (["the big red dog"], [["red dog"]], 0, 0.8),
    (["Chicago", "Browns"], [["Chicago Bears", "Cleveland Browns"]], 0, (2 / 3 + 2 / 3) / 2),
    (["Cleveland Browns"], [["Cleveland"], ["Cleveland Browns Stadium"]], 0, 0.8),
    (["x y", "x"], [["x", "x y z"]], 0, (1.0 + 0.8) / 2),
    (["Paris", "Paris"], [["Paris"]], 0, 0.5),
    (["1,000"], [["1000"]], 1, 1.0),
    (["U.S.A."], [["usa"]], 1, 1.0),
    (["An apple"], [["apple"]], 1, 1.0),
    (["Paris"], "Paris", 1, 1.0),
    (["Paris", "Lyon"], ["Lyon", "Paris"], 1, 1.0),
    (["one two three four"], [["one two"]], 0, 2 / 3),
    (["x"], [["y z"]], 0, 0.0),
    (["a"], [["the"]], 1, 1.0),
]
