"""Client side of the line-delimited external evaluator protocol.

The evaluator is a child process. On startup it prints the handshake line
``{"protocol": "boga-eval", "version": 1}``; afterwards each request line
``{"id": <uint64>, "sequence": "<str>"}`` is answered, in any order, by
``{"id": <uint64>, "score": <finite float>}``. Standard error is logged and
otherwise ignored.
"""

from __future__ import annotations

import json
import logging
import math
import queue
import subprocess
import threading
import time
from typing import Sequence

from .objectives import Objective, ObjectiveSpec

logger = logging.getLogger(__name__)

PROTOCOL = "boga-eval"
PROTOCOL_VERSION = 1


class EvaluatorError(RuntimeError):
    pass


class EvaluatorTimeout(EvaluatorError):
    def __init__(self, sequence: str, timeout: float) -> None:
        super().__init__(f"no score for {sequence} within {timeout:g} s")
        self.sequence = sequence


class EvaluatorProtocolError(EvaluatorError):
    pass


class NonFiniteScore(EvaluatorError):
    def __init__(self, sequence: str) -> None:
        super().__init__(f"non-finite score for {sequence}")
        self.sequence = sequence


class EvaluatorLost(EvaluatorError):
    """The evaluator process exited or closed its output; unrecoverable."""


def _parse_score(value: object) -> float:
    # bool is an int subclass; reject it along with strings and nulls
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise EvaluatorProtocolError(f"score must be a number, got {value!r}")
    return float(value)


class ExternalEvaluator(Objective):
    def __init__(
        self,
        command: Sequence[str],
        timeout: float = 60.0,
        n_jobs: int = 1,
        spec: ObjectiveSpec | None = None,
        handshake_timeout: float = 30.0,
    ) -> None:
        self.spec = spec or ObjectiveSpec(name="external", kind="external", command=tuple(command))
        self.timeout = timeout
        self.n_jobs = max(1, n_jobs)
        self._next_id = 1
        self._cond = threading.Condition()
        self._results: dict[int, float | Exception] = {}
        self._closed = False
        self._proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
        self._stderr_thread = threading.Thread(target=self._pump_stderr, daemon=True)
        self._stderr_thread.start()
        self._handshake: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump_stdout, daemon=True)
        self._reader.start()
        try:
            line = self._handshake.get(timeout=handshake_timeout)
        except queue.Empty:
            self.close()
            raise EvaluatorProtocolError("evaluator sent no handshake") from None
        if line is None:
            self.close()
            raise EvaluatorLost("evaluator exited before the handshake")
        try:
            hello = json.loads(line)
        except json.JSONDecodeError:
            hello = None
        if not isinstance(hello, dict) or hello.get("protocol") != PROTOCOL or hello.get("version") != PROTOCOL_VERSION:
            self.close()
            raise EvaluatorProtocolError(f"bad handshake line: {line!r}")

    def _pump_stderr(self) -> None:
        assert self._proc.stderr is not None
        for line in self._proc.stderr:
            logger.info("evaluator stderr: %s", line.rstrip("\n"))

    def _pump_stdout(self) -> None:
        assert self._proc.stdout is not None
        first = True
        for line in self._proc.stdout:
            line = line.rstrip("\n")
            if first:
                self._handshake.put(line)
                first = False
                continue
            self._handle_response(line)
        if first:
            self._handshake.put(None)
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def _handle_response(self, line: str) -> None:
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            logger.error("unparseable evaluator line: %r", line)
            return
        rid = msg.get("id") if isinstance(msg, dict) else None
        if isinstance(rid, bool) or not isinstance(rid, int):
            logger.error("evaluator line without a usable id: %r", line)
            return
        result: float | Exception
        try:
            result = _parse_score(msg.get("score"))
        except EvaluatorProtocolError as exc:
            logger.error("malformed evaluator response for id %d: %r", rid, line)
            result = exc
        with self._cond:
            self._results[rid] = result
            self._cond.notify_all()

    def _send(self, rid: int, seq: str) -> None:
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps({"id": rid, "sequence": seq}) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise EvaluatorLost(f"cannot write to evaluator: {exc}") from exc

    def evaluate_batch(self, seqs: Sequence[str], timeout: float | None = None) -> list[float | Exception]:
        """Score `seqs` with up to `n_jobs` requests in flight.

        Per-candidate failures (timeout, malformed reply, non-finite score) come
        back in place of the score; losing the process raises `EvaluatorLost`.
        """
        timeout = self.timeout if timeout is None else timeout
        out: list[float | Exception | None] = [None] * len(seqs)
        inflight: dict[int, tuple[int, float]] = {}  # request id -> (batch index, deadline)
        cursor = 0
        while cursor < len(seqs) or inflight:
            while cursor < len(seqs) and len(inflight) < self.n_jobs:
                rid = self._next_id
                self._next_id += 1
                inflight[rid] = (cursor, time.monotonic() + timeout)
                self._send(rid, seqs[cursor])
                cursor += 1
            with self._cond:
                done = [rid for rid in inflight if rid in self._results]
                if not done:
                    if self._closed:
                        raise EvaluatorLost("evaluator closed its output with requests pending")
                    wait = min(d for _, d in inflight.values()) - time.monotonic()
                    if wait > 0:
                        self._cond.wait(wait)
                    done = [rid for rid in inflight if rid in self._results]
                results = {rid: self._results.pop(rid) for rid in done}
            for rid, res in results.items():
                idx, _ = inflight.pop(rid)
                if isinstance(res, float) and not math.isfinite(res):
                    res = NonFiniteScore(seqs[idx])
                out[idx] = res
            now = time.monotonic()
            for rid in [r for r, (_, d) in inflight.items() if d <= now]:
                idx, _ = inflight.pop(rid)
                logger.warning("evaluator timed out on request %d (%s)", rid, seqs[idx])
                out[idx] = EvaluatorTimeout(seqs[idx], timeout)
        return out  # type: ignore[return-value]

    def close(self) -> None:
        proc = self._proc
        if proc.poll() is None:
            try:
                assert proc.stdin is not None
                proc.stdin.close()
            except OSError:
                pass
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()


def evaluate_external(batch: Sequence[str], adapter: ExternalEvaluator, timeout: float | None = None) -> list[float]:
    """Scores for `batch` in request order; the first failure is raised."""
    results = adapter.evaluate_batch(batch, timeout)
    for res in results:
        if isinstance(res, Exception):
            raise res
    return results  # type: ignore[return-value]
