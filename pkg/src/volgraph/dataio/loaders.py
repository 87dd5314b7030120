"""File ingestion and export.

Formats:
  transcripts.jsonl — one call per line:
      {"call_id": ..., "company_id": ..., "date": "YYYY-MM-DD",
       "sentences": [{"text"?, "vector"?, "utterance_idx", "role", "part"}, ...]}
  prices.csv    — company_id,date,adjusted_close
  relations.csv — company_a,company_b,year,similarity

Operator/moderator sentences are dropped at ingestion (the model knows
exactly two roles) and the drop is counted in the ingest report, as is
every call excluded outright. The report's accounting invariant is
calls_in == calls_kept + len(call_exclusions).
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ParseError
from .records import PARTS, ROLES, CallRecord, PriceSeries, RelationRecord, Sentence, validate_call

log = logging.getLogger(__name__)

_DROP_ROLES = ("operator", "moderator")


@dataclass
class IngestReport:
    """Counts in = counts out + itemized exclusions, machine-checkable."""

    calls_in: int = 0
    calls_kept: int = 0
    sentences_in: int = 0
    sentences_kept: int = 0
    operator_sentences_dropped: int = 0
    call_exclusions: list = field(default_factory=list)
    label_exclusions: list = field(default_factory=list)
    price_rows: int = 0
    relation_rows: int = 0

    def exclude_call(self, call_id: str, reason: str) -> None:
        self.call_exclusions.append({"call_id": call_id, "reason": reason})

    def balanced(self) -> bool:
        return self.calls_in == self.calls_kept + len(self.call_exclusions)

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True))


def _parse_date(s, where: str) -> dt.date:
    try:
        return dt.date.fromisoformat(str(s))
    except ValueError as e:
        raise ParseError(f"bad date {s!r}", path=where) from e


def load_transcripts(path, report: IngestReport | None = None) -> list[CallRecord]:
    """Read calls from JSONL, dropping operator sentences and empty calls."""
    path = Path(path)
    report = report if report is not None else IngestReport()
    calls: list[CallRecord] = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            report.calls_in += 1
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError("invalid JSON", path=str(path), line=lineno) from e
            call = _parse_call(obj, str(path), lineno, report)
            if call is None:
                continue
            calls.append(call)
            report.calls_kept += 1
    if not calls:
        log.warning("no calls loaded from %s", path)
    return calls


def _parse_call(obj, path: str, lineno: int, report: IngestReport) -> CallRecord | None:
    for key in ("call_id", "company_id", "date", "sentences"):
        if key not in obj:
            raise ParseError(f"call missing field {key!r}", path=path, line=lineno)
    call_id = str(obj["call_id"])
    date = _parse_date(obj["date"], f"{path}:{lineno}")
    sentences: list[Sentence] = []
    for j, s in enumerate(obj["sentences"]):
        report.sentences_in += 1
        role = s.get("role")
        part = s.get("part")
        if role in _DROP_ROLES:
            report.operator_sentences_dropped += 1
            continue
        if role not in ROLES:
            raise ParseError(
                f"call {call_id}: unknown role {role!r} in sentence {j}", path=path, line=lineno
            )
        if part not in PARTS:
            raise ParseError(
                f"call {call_id}: unknown part {part!r} in sentence {j}", path=path, line=lineno
            )
        if "utterance_idx" not in s:
            raise ParseError(
                f"call {call_id}: sentence {j} missing utterance_idx", path=path, line=lineno
            )
        text = s.get("text")
        vec = s.get("vector")
        if text is None and vec is None:
            raise ParseError(
                f"call {call_id}: sentence {j} has neither text nor vector",
                path=path,
                line=lineno,
            )
        sentences.append(
            Sentence(
                utterance_idx=int(s["utterance_idx"]),
                role=role,
                part=part,
                position=len(sentences),
                text=text,
                vector=None if vec is None else np.asarray(vec, dtype=np.float64),
            )
        )
        report.sentences_kept += 1
    if not sentences:
        report.exclude_call(call_id, "no sentences left after role filtering")
        return None
    call = CallRecord(
        call_id=call_id, company_id=str(obj["company_id"]), call_date=date, sentences=sentences
    )
    validate_call(call, where=f"{path}:{lineno}")
    return call


def load_prices(path) -> list[PriceSeries]:
    """Read per-company adjusted closes; rows may arrive in any order."""
    path = Path(path)
    rows: dict[str, list[tuple[dt.date, float]]] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"company_id", "date", "adjusted_close"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise ParseError(
                f"prices header must contain {sorted(expected)}", path=str(path), line=1
            )
        for lineno, row in enumerate(reader, start=2):
            date = _parse_date(row["date"], f"{path}:{lineno}")
            try:
                close = float(row["adjusted_close"])
            except ValueError as e:
                raise ParseError("bad adjusted_close", path=str(path), line=lineno) from e
            if close <= 0:
                raise ParseError(
                    f"non-positive adjusted_close {close}", path=str(path), line=lineno
                )
            rows.setdefault(row["company_id"], []).append((date, close))
    out = []
    for company_id in sorted(rows):
        pairs = sorted(rows[company_id])
        dates = [d for d, _ in pairs]
        if len(set(dates)) != len(dates):
            raise ParseError(f"{company_id}: duplicate trading dates", path=str(path))
        out.append(
            PriceSeries(company_id, dates, np.array([c for _, c in pairs], dtype=np.float64))
        )
    if not out:
        log.warning("no price rows loaded from %s", path)
    return out


def load_relations(path) -> list[RelationRecord]:
    path = Path(path)
    out: list[RelationRecord] = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"company_a", "company_b", "year", "similarity"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise ParseError(
                f"relations header must contain {sorted(expected)}", path=str(path), line=1
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                rec = RelationRecord(
                    company_a=row["company_a"],
                    company_b=row["company_b"],
                    effective_year=int(row["year"]),
                    similarity=float(row["similarity"]),
                )
            except (ValueError, ParseError) as e:
                raise ParseError(f"bad relation row: {e}", path=str(path), line=lineno) from e
            out.append(rec)
    if not out:
        log.warning("no relations loaded from %s", path)
    return out


# -- writers (round-trip partners of the loaders) -------------------------------


def write_transcripts(calls, path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        for call in calls:
            obj = {
                "call_id": call.call_id,
                "company_id": call.company_id,
                "date": call.call_date.isoformat(),
                "sentences": [
                    {
                        "utterance_idx": s.utterance_idx,
                        "role": s.role,
                        "part": s.part,
                        **({"text": s.text} if s.text is not None else {}),
                        **(
                            {"vector": [float(x) for x in s.vector]}
                            if s.vector is not None
                            else {}
                        ),
                    }
                    for s in call.sentences
                ],
            }
            fh.write(json.dumps(obj) + "\n")


def write_prices(series_list, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["company_id", "date", "adjusted_close"])
        for series in series_list:
            for d, c in zip(series.dates, series.closes):
                writer.writerow([series.company_id, d.isoformat(), repr(float(c))])


def write_relations(relations, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["company_a", "company_b", "year", "similarity"])
        for r in relations:
            writer.writerow([r.company_a, r.company_b, r.effective_year, repr(float(r.similarity))])
