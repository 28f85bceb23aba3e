"""Run tracing and the test-isolation audit.

Every data access the runner performs on behalf of a component is recorded
as a :class:`TraceEvent` naming the phase, the lifecycle step, the kind of
access and which partitions the touched rows belong to. The audit replays
the trace against the isolation contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PARTITIONS = ("train", "validation", "test")
ACTIONS = ("read", "fit", "apply", "predict", "select")


@dataclass(frozen=True)
class TraceEvent:
    phase: int
    step: str
    action: str
    partitions: tuple
    n_rows: int


@dataclass
class Trace:
    """Ordered access log; ``partition_of`` maps loaded row ids to partition names."""

    partition_of: np.ndarray | None = None
    events: list = field(default_factory=list)

    def partitions(self, row_ids) -> tuple:
        if self.partition_of is None or row_ids is None:
            return ()
        codes = np.unique(self.partition_of[np.asarray(row_ids, dtype=np.int64)])
        return tuple(PARTITIONS[c] for c in codes if c >= 0)

    def record(self, phase: int, step: str, action: str, *datas) -> None:
        parts: set = set()
        n = 0
        for d in datas:
            ids = getattr(d, "row_ids", None)
            parts.update(self.partitions(ids))
            n += 0 if ids is None else len(ids)
        ordered = tuple(p for p in PARTITIONS if p in parts)
        self.events.append(TraceEvent(phase, step, action, ordered, n))


@dataclass(frozen=True)
class Violation:
    step: str
    rule: str
    detail: str

    def __str__(self):
        return f"{self.step}: {self.rule} ({self.detail})"


@dataclass(frozen=True)
class AuditReport:
    violations: tuple
    n_events: int

    @property
    def ok(self) -> bool:
        return not self.violations


def isolation_audit(trace: Trace) -> AuditReport:
    """Check a run trace against the isolation contract.

    * no fit ever sees test rows;
    * only post-processing (phase 2) fits may see validation rows;
    * no step touches test rows before phase 3;
    * the test partition is released exactly once, in phase 3;
    * phases never go backwards.
    """
    out = []
    last_phase = 0
    test_reads = 0
    for ev in trace.events:
        if ev.phase < last_phase:
            out.append(Violation(ev.step, "phase order", f"phase {ev.phase} step after phase {last_phase}"))
        last_phase = max(last_phase, ev.phase)
        if ev.action == "fit" and "test" in ev.partitions:
            out.append(Violation(ev.step, "fit on test rows", f"{ev.n_rows} rows from {', '.join(ev.partitions)}"))
        elif ev.action == "fit" and "validation" in ev.partitions and ev.phase != 2:
            out.append(Violation(ev.step, "fit on validation rows", f"phase {ev.phase}"))
        if "test" in ev.partitions and ev.phase < 3 and ev.action != "fit":
            out.append(Violation(ev.step, "test rows touched before phase 3", ev.action))
        if ev.action == "read" and ev.partitions == ("test",):
            test_reads += 1
            if ev.phase != 3:
                out.append(Violation(ev.step, "test released outside phase 3", f"phase {ev.phase}"))
    if test_reads != 1:
        out.append(Violation("evaluate_test", "test released exactly once", f"released {test_reads} times"))
    return AuditReport(tuple(out), len(trace.events))
