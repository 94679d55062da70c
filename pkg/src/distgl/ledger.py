"""Message accounting: one transmitted scalar over one hop is one message."""
from __future__ import annotations

import csv
import io
from collections import Counter

import numpy as np

PHASES = ("init_signals", "init_results", "weight_exchange", "central_up", "central_down")


class MessageLedger:
    """Per-phase message counters, charged explicitly by the algorithms."""

    def __init__(self):
        self.counters = {p: 0 for p in PHASES}

    def charge(self, phase: str, n: int) -> None:
        if phase not in self.counters:
            raise KeyError(f"unknown phase {phase!r}")
        n = int(n)
        if n < 0:
            raise ValueError("message counts are nonnegative")
        self.counters[phase] += n

    def __getitem__(self, phase: str) -> int:
        return self.counters[phase]

    @property
    def total(self) -> int:
        return sum(self.counters.values())

    @property
    def init_total(self) -> int:
        return self.counters["init_signals"] + self.counters["init_results"]

    def snapshot(self) -> dict:
        return dict(self.counters)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["phase", "count"])
        for p in PHASES:
            w.writerow([p, self.counters[p]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MessageLedger":
        led = cls()
        for row in csv.DictReader(io.StringIO(text)):
            led.charge(row["phase"], int(row["count"]))
        return led

    def __repr__(self) -> str:
        return f"MessageLedger(total={self.total}, {self.counters})"


class HopViolation(RuntimeError):
    pass


class Transport:
    """Simulated 1-hop channel that keeps its own tally of delivered scalars.

    The tally is independent of :class:`MessageLedger`; the two must agree
    after every run. Sends over a non-edge raise :class:`HopViolation`.
    """

    def __init__(self, adjacency: np.ndarray):
        self.adjacency = np.asarray(adjacency, dtype=bool)
        self.tally: Counter = Counter()
        self.n_sends = 0

    def send(self, src: int, dst: int, n_scalars: int, phase: str) -> None:
        if not self.adjacency[src, dst]:
            raise HopViolation(f"{src} -> {dst} is not a communication edge")
        self.tally[phase] += int(n_scalars)
        self.n_sends += 1

    def send_many(self, src, dst, n_scalars, phase: str) -> None:
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if src.size and not np.all(self.adjacency[src, dst]):
            bad = np.flatnonzero(~self.adjacency[src, dst])[0]
            raise HopViolation(f"{src[bad]} -> {dst[bad]} is not a communication edge")
        sizes = np.broadcast_to(np.asarray(n_scalars, dtype=np.int64), src.shape)
        self.tally[phase] += int(sizes.sum())
        self.n_sends += int(src.size)

    def relay(self, path, n_scalars: int, phase: str) -> None:
        """Forward a payload hop by hop along ``path`` (node ids, source first)."""
        for a, b in zip(path[:-1], path[1:]):
            self.send(a, b, n_scalars, phase)

    def counts(self) -> dict:
        return {p: self.tally.get(p, 0) for p in PHASES}

    def matches(self, ledger: MessageLedger) -> bool:
        return self.counts() == ledger.snapshot()
