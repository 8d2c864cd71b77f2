"""Machine-readable check reports with a pinned schema.

Every suite run produces one Record per check.  The field set is frozen
(schema version bumps on any change) so downstream diffing against old
reports stays meaningful.  Records are ordered by (tag, pair, n, kind),
which makes reports deterministic byte-for-byte once elapsed times are
normalised.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from typing import Iterable

SCHEMA_VERSION = 1

#: statuses that count as success
PASSING = ("certified_zero", "pass")

_FIELDS = ("tag", "pair", "n", "kind", "status", "metric", "tolerance",
           "elapsed")


class ReportError(ValueError):
    """Raised for malformed report payloads."""


@dataclass(frozen=True)
class Record:
    """One check: what ran, against which tolerance, and how it went."""

    tag: str
    pair: str
    n: int
    kind: str  # certify | composite | eigen | oracle | degenerate
    status: str
    metric: float
    tolerance: float
    elapsed: float

    @property
    def passed(self) -> bool:
        return self.status in PASSING

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Record":
        missing = [k for k in _FIELDS if k not in d]
        if missing:
            raise ReportError(f"record misses fields {missing}")
        return cls(**{k: d[k] for k in _FIELDS})


@dataclass(frozen=True)
class Report:
    schema_version: int
    records: tuple

    @classmethod
    def build(cls, records: Iterable[Record]) -> "Report":
        ordered = tuple(
            sorted(records, key=lambda r: (r.tag, r.pair, r.n, r.kind))
        )
        return cls(schema_version=SCHEMA_VERSION, records=ordered)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def failures(self) -> tuple:
        return tuple(r for r in self.records if not r.passed)

    def normalized(self) -> "Report":
        """Copy with elapsed times zeroed, for golden-file comparison."""
        return Report(
            self.schema_version,
            tuple(replace(r, elapsed=0.0) for r in self.records),
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "schemaVersion": self.schema_version,
                "passed": self.passed,
                "records": [r.to_dict() for r in self.records],
            },
            indent=1,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Report":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ReportError(f"report is not valid JSON: {exc}") from exc
        if payload.get("schemaVersion") != SCHEMA_VERSION:
            raise ReportError(
                f"report schema {payload.get('schemaVersion')!r} "
                f"does not match {SCHEMA_VERSION}"
            )
        recs = [Record.from_dict(d) for d in payload.get("records", ())]
        return cls.build(recs)

    def summary(self) -> str:
        lines = []
        for r in self.records:
            mark = "ok " if r.passed else "XXX"
            lines.append(
                f"[{mark}] {r.tag:24s} {r.pair:26s} n={r.n}  {r.kind:10s}"
                f" {r.status:15s} metric {r.metric:.3e}"
                f" tol {r.tolerance:.1e}  {r.elapsed:6.2f}s"
            )
        npass = sum(1 for r in self.records if r.passed)
        lines.append(
            f"{npass}/{len(self.records)} checks passed"
        )
        return "\n".join(lines)
