"""Domain records: transcripts, prices, relations, quarters.

Validation lives next to the types so loaders and the synthetic
generator share one set of rules.
"""

from __future__ import annotations

import datetime as dt
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from ..errors import InsufficientDataError, ParseError

ROLES = ("executive", "analyst")
PARTS = ("presentation", "qa")


@dataclass
class Sentence:
    """One transcript sentence with structural attributes.

    Either ``text`` or ``vector`` may be missing, never both: real corpora
    ship text, the synthetic generator ships vectors directly.
    """

    utterance_idx: int
    role: str
    part: str
    position: int
    text: str | None = None
    vector: np.ndarray | None = None


@dataclass
class CallRecord:
    call_id: str
    company_id: str
    call_date: dt.date
    sentences: list[Sentence]


def validate_call(call: CallRecord, where: str = "") -> None:
    """Enforce sentence-structure invariants; raises ParseError on violation."""
    ctx = where or call.call_id
    if not call.company_id:
        raise ParseError(f"{ctx}: empty company_id")
    if not call.sentences:
        raise ParseError(f"{ctx}: call has no sentences")
    prev_pos = -1
    prev_utt = -1
    seen_qa = False
    for s in call.sentences:
        if s.text is None and s.vector is None:
            raise ParseError(f"{ctx}: sentence {s.position} has neither text nor vector")
        if s.role not in ROLES:
            raise ParseError(f"{ctx}: unknown role {s.role!r}")
        if s.part not in PARTS:
            raise ParseError(f"{ctx}: unknown part {s.part!r}")
        if s.position <= prev_pos:
            raise ParseError(f"{ctx}: positions not strictly increasing at {s.position}")
        if s.utterance_idx < prev_utt:
            raise ParseError(f"{ctx}: utterance_idx decreases at position {s.position}")
        if s.part == "qa":
            seen_qa = True
        elif seen_qa:
            raise ParseError(f"{ctx}: part transitions qa→presentation at position {s.position}")
        prev_pos = s.position
        prev_utt = s.utterance_idx


@dataclass
class PriceSeries:
    """Per-company adjusted closes on strictly increasing trading dates."""

    company_id: str
    dates: list[dt.date]
    closes: np.ndarray

    def __post_init__(self):
        self.closes = np.asarray(self.closes, dtype=np.float64)
        if len(self.dates) != self.closes.shape[0]:
            raise ParseError(f"{self.company_id}: dates/closes length mismatch")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ParseError(f"{self.company_id}: trading dates not strictly increasing")
        if np.any(self.closes <= 0):
            raise ParseError(f"{self.company_id}: non-positive adjusted close")

    def __len__(self) -> int:
        return len(self.dates)

    def index_on_or_after(self, d: dt.date) -> int:
        """First trading-day index with date ≥ d."""
        i = bisect_left(self.dates, d)
        if i >= len(self.dates):
            raise InsufficientDataError(f"{self.company_id}: no trading day on or after {d}")
        return i


@dataclass(frozen=True, order=True)
class Quarter:
    year: int
    q: int

    def __post_init__(self):
        if not 1 <= self.q <= 4:
            raise ParseError(f"quarter index {self.q} outside 1..4")

    @property
    def start(self) -> dt.date:
        return dt.date(self.year, 3 * (self.q - 1) + 1, 1)

    @property
    def end(self) -> dt.date:
        if self.q == 4:
            return dt.date(self.year, 12, 31)
        return dt.date(self.year, 3 * self.q + 1, 1) - dt.timedelta(days=1)

    def contains(self, d: dt.date) -> bool:
        return self.start <= d <= self.end

    def next(self) -> "Quarter":
        return Quarter(self.year + 1, 1) if self.q == 4 else Quarter(self.year, self.q + 1)

    @classmethod
    def of_date(cls, d: dt.date) -> "Quarter":
        return cls(d.year, (d.month - 1) // 3 + 1)

    @classmethod
    def parse(cls, s: str) -> "Quarter":
        try:
            year, q = s.upper().split("Q")
            return cls(int(year), int(q))
        except (ValueError, TypeError) as e:
            raise ParseError(f"bad quarter {s!r}, expected e.g. 2016Q3") from e

    def __str__(self) -> str:
        return f"{self.year}Q{self.q}"


@dataclass
class RelationRecord:
    """Undirected company-pair similarity valid for one effective year."""

    company_a: str
    company_b: str
    effective_year: int
    similarity: float

    def __post_init__(self):
        if self.company_a == self.company_b:
            raise ParseError(f"relation pairs a company with itself: {self.company_a}")
        if not 0.0 <= self.similarity <= 1.0:
            raise ParseError(
                f"similarity {self.similarity} outside [0,1] "
                f"for {self.company_a}-{self.company_b}"
            )


@dataclass
class QuarterDataset:
    """All retained calls of one quarter plus their labels and baselines.

    ``labels[call_id][tau]`` is the log-volatility regression target;
    ``v_past[call_id][tau]`` the trailing-window baseline prediction.
    Retained calls carry all three values of each; calls that could not be
    labeled are listed in ``excluded`` with a reason.
    """

    quarter: Quarter
    calls: list[CallRecord]
    labels: dict[str, dict[int, float]] = field(default_factory=dict)
    v_past: dict[str, dict[int, float]] = field(default_factory=dict)
    split: str | None = None
    excluded: list[tuple[str, str]] = field(default_factory=list)
