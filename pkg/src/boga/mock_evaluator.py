"""Reference evaluator process speaking the line-delimited scoring protocol.

Run as ``python -m boga.mock_evaluator --landscape sheet``. Fault injection
flags exist to exercise the client: ``--reorder`` answers every buffered
group of requests in reverse order, ``--hang-on N`` never answers the N-th
request, ``--malformed-on N`` answers the N-th request with a string score,
``--nan-on N`` answers it with NaN. The ``length`` landscape echoes the
sequence length.
"""

from __future__ import annotations

import argparse
import json
import os
import select
import sys
import time

from .objectives import LANDSCAPES

MOCK_LANDSCAPES = {**LANDSCAPES, "length": lambda seq: float(len(seq))}


def _lines(fd: int, idle: float):
    """Yield lists of complete lines; a list is flushed whenever input goes idle."""
    buf = b""
    pending: list[str] = []
    while True:
        ready, _, _ = select.select([fd], [], [], idle if pending else None)
        if not ready:
            yield pending
            pending = []
            continue
        chunk = os.read(fd, 65536)
        if not chunk:
            if pending:
                yield pending
            return
        buf += chunk
        *complete, buf = buf.split(b"\n")
        pending.extend(c.decode("utf-8") for c in complete if c.strip())


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(prog="boga.mock_evaluator")
    p.add_argument("--landscape", choices=sorted(MOCK_LANDSCAPES), default="sheet")
    p.add_argument("--latency", type=float, default=0.0, help="seconds slept per request")
    p.add_argument("--reorder", action="store_true")
    p.add_argument("--hang-on", type=int, default=0)
    p.add_argument("--malformed-on", type=int, default=0)
    p.add_argument("--nan-on", type=int, default=0)
    p.add_argument("--idle", type=float, default=0.02)
    args = p.parse_args(argv)

    fn = MOCK_LANDSCAPES[args.landscape]
    out = sys.stdout
    out.write(json.dumps({"protocol": "boga-eval", "version": 1}) + "\n")
    out.flush()
    print(f"mock evaluator ready (landscape={args.landscape})", file=sys.stderr, flush=True)

    seen = 0
    for group in _lines(sys.stdin.fileno(), args.idle):
        replies = []
        for line in group:
            req = json.loads(line)
            seen += 1
            if seen == args.hang_on:
                print(f"dropping request {req['id']}", file=sys.stderr, flush=True)
                continue
            if args.latency:
                time.sleep(args.latency)
            if seen == args.malformed_on:
                replies.append(json.dumps({"id": req["id"], "score": "abc"}))
            elif seen == args.nan_on:
                replies.append(json.dumps({"id": req["id"], "score": float("nan")}))
            else:
                replies.append(json.dumps({"id": req["id"], "score": fn(req["sequence"])}))
        if args.reorder:
            replies.reverse()
        for r in replies:
            out.write(r + "\n")
        out.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
