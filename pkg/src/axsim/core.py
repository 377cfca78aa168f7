"""Deterministic discrete-event engine: integer-ns clock, ordered queue, seeded RNG streams."""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Callable, TextIO

# All simulated time is an integer count of nanoseconds.  Protocol constants
# (SIFS, DIFS, slot, TXOP limit) are exact multiples of 1 ns, so interframe
# arithmetic never drifts.
NS = 1
US = 1_000
MS = 1_000_000
SEC = 1_000_000_000

SLOT_TIME = 9 * US          # DIFS = SIFS + 2*slot with SIFS 16us, DIFS 34us
SIFS = 16 * US
DIFS = 34 * US
TXOP_LIMIT = 3_008 * US


class PastEventError(RuntimeError):
    """Scheduling an event before the current virtual time is a programming error."""


@dataclass(slots=True)
class SimEvent:
    fire_time: int
    seq: int
    kind: str
    target: int
    fn: Callable[[], None] | None = None
    detail: str = ""

    def sort_key(self):
        return (self.fire_time, self.seq)


class EventQueue:
    """Heap of SimEvent ordered by (fire_time, seq); seq assigned at insertion."""

    def __init__(self):
        self._heap: list[tuple[tuple[int, int], SimEvent]] = []
        self._seq = 0

    def push(self, event: SimEvent) -> None:
        event.seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (event.sort_key(), event))

    def pop(self) -> SimEvent:
        return heapq.heappop(self._heap)[1]

    def peek_time(self) -> int | None:
        return self._heap[0][0][0] if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)


class Simulator:
    """Single-threaded event loop.  One instance per run; no shared state between runs."""

    def __init__(self, trace: TextIO | None = None):
        self._queue = EventQueue()
        self._now = 0
        self._trace = trace
        self.scheduled = 0
        self.processed = 0

    @property
    def now(self) -> int:
        return self._now

    @property
    def pending(self) -> int:
        return len(self._queue)

    def schedule(self, event: SimEvent) -> SimEvent:
        if event.fire_time < self._now:
            raise PastEventError(
                f"past event: kind={event.kind} fire_time={event.fire_time} now={self._now}"
            )
        self._queue.push(event)
        self.scheduled += 1
        return event

    def at(self, fire_time: int, kind: str, target: int = -1,
           fn: Callable[[], None] | None = None, detail: str = "") -> SimEvent:
        return self.schedule(SimEvent(fire_time, 0, kind, target, fn, detail))

    def after(self, delay: int, kind: str, target: int = -1,
              fn: Callable[[], None] | None = None, detail: str = "") -> SimEvent:
        return self.at(self._now + delay, kind, target, fn, detail)

    def run_until(self, t_end: int) -> int:
        """Process every event with fire_time <= t_end; leaves now == t_end."""
        if t_end < self._now:
            raise PastEventError(f"run_until into the past: {t_end} < {self._now}")
        n = 0
        while True:
            t = self._queue.peek_time()
            if t is None or t > t_end:
                break
            event = self._queue.pop()
            self._now = event.fire_time
            if self._trace is not None:
                self._trace.write(
                    f"{event.fire_time}\t{event.kind}\t{event.target}\t{event.detail}\n"
                )
            if event.fn is not None:
                event.fn()
            self.processed += 1
            n += 1
        self._now = t_end
        return n


def _child_seed(seed: int, stream_id: str) -> int:
    digest = hashlib.sha256(f"{seed}:{stream_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class RngStream:
    """A purpose-labelled random stream; identical (seed, stream_id) replays identically."""

    seed: int
    stream_id: str
    rng: random.Random = field(init=False)

    def __post_init__(self):
        self.rng = random.Random(_child_seed(self.seed, self.stream_id))

    def randint(self, a: int, b: int) -> int:
        return self.rng.randint(a, b)

    def random(self) -> float:
        return self.rng.random()

    def uniform(self, a: float, b: float) -> float:
        return self.rng.uniform(a, b)

    def gauss(self, mu: float, sigma: float) -> float:
        return self.rng.gauss(mu, sigma)

    def choice(self, seq):
        return self.rng.choice(seq)

    def sample(self, seq, k: int):
        return self.rng.sample(seq, k)

    def shuffle(self, seq) -> None:
        self.rng.shuffle(seq)


class RngSet:
    """Per-purpose streams so adding a feature does not perturb unrelated draws."""

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, RngStream] = {}

    def stream(self, stream_id: str) -> RngStream:
        if stream_id not in self._streams:
            self._streams[stream_id] = RngStream(self.seed, stream_id)
        return self._streams[stream_id]
