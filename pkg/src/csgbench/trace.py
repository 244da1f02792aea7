"""Anytime traces shared by every solver."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

WORK_UNIT_KINDS = ("subsets_processed", "nodes_explored", "candidate_evals")
TRACE_CSV_HEADER = ("work_units", "wall_ns", "incumbent", "event")


class TraceViolation(AssertionError):
    """A solver tried to append a record that breaks trace monotonicity."""


@dataclass(frozen=True)
class TraceRecord:
    work_units: int
    wall_ns: int
    incumbent: float
    event: str
    oracle_queries: int


@dataclass
class AnytimeTrace:
    """Monotone log of incumbent values against a solver's native work unit.

    ``oracle`` is the counting oracle the solver queries through; each record
    snapshots its query count so traces from different solvers can be
    compared on the shared value-query currency.
    """

    solver_id: str
    work_unit_kind: str
    oracle: object = None
    records: list[TraceRecord] = field(default_factory=list)
    _t0: int = field(default_factory=time.perf_counter_ns, repr=False)

    def __post_init__(self):
        if self.work_unit_kind not in WORK_UNIT_KINDS:
            raise ValueError(f"unknown work unit kind {self.work_unit_kind!r}")

    @property
    def oracle_queries(self) -> int:
        return getattr(self.oracle, "queries", 0)

    def record(self, work_units: int, incumbent: float, event: str) -> TraceRecord:
        if self.records:
            last = self.records[-1]
            if work_units < last.work_units:
                raise TraceViolation(
                    f"{self.solver_id}: work units went back from {last.work_units} to {work_units}")
            if incumbent < last.incumbent:
                raise TraceViolation(
                    f"{self.solver_id}: incumbent dropped from {last.incumbent} to {incumbent}")
        rec = TraceRecord(int(work_units), time.perf_counter_ns() - self._t0,
                          float(incumbent), event, self.oracle_queries)
        self.records.append(rec)
        return rec

    @property
    def final(self) -> float | None:
        return self.records[-1].incumbent if self.records else None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_CSV_HEADER)
        for r in self.records:
            w.writerow([r.work_units, r.wall_ns, repr(r.incumbent), r.event])
        return buf.getvalue()


def read_trace_csv(text: str) -> list[tuple[int, int, float, str]]:
    rows = list(csv.reader(io.StringIO(text)))
    if tuple(rows[0]) != TRACE_CSV_HEADER:
        raise ValueError(f"unexpected trace header {rows[0]}")
    return [(int(a), int(b), float(c), d) for a, b, c, d in rows[1:]]
