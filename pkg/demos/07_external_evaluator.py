"""
External evaluators
===================

Expensive objectives can live in a separate process that speaks a
line-delimited JSON protocol on stdin/stdout. The bundled mock evaluator can
answer out of order, hang, or reply with garbage, to exercise the failure paths.
"""

# %%
import sys

from boga.evaluator import ExternalEvaluator

cmd = [sys.executable, "-m", "boga.mock_evaluator", "--landscape", "sheet", "--reorder"]
with ExternalEvaluator(cmd, timeout=5, n_jobs=4) as ev:
    print(ev.evaluate_batch(["EMALEMAL", "GGGGSSSS", "EMALGGGG"]))

# %%
# A hang times out and a malformed reply is a protocol error; each affects
# only its own candidate.
faulty = cmd + ["--hang-on", "2", "--malformed-on", "3"]
with ExternalEvaluator(faulty, timeout=0.5, n_jobs=2) as ev:
    for seq, result in zip(["EMALEMAL", "GGGGSSSS", "EMALGGGG", "AAAAAAAA"], ev.evaluate_batch(["EMALEMAL", "GGGGSSSS", "EMALGGGG", "AAAAAAAA"])):
        print(seq, "->", result if isinstance(result, float) else f"{type(result).__name__}: {result}")
