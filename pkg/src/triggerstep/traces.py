"""Run traces: per-iteration records and CSV (de)serialization."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class IterationRecord:
    """One visited iterate.

    ``delta`` is the stepsize taken FROM this iterate (0.0 on the final
    record), ``a`` the displacement used for that step, and ``inner_retries``
    the number of displacement adjustments the adaptive algorithms made
    before accepting the step.  ``f_gap`` and ``lyapunov`` are diagnostics
    available only when the oracle knows its minimizer.
    """

    k: int
    t: float
    delta: float
    x: np.ndarray
    v: np.ndarray
    a: float
    grad_norm: float
    f_gap: Optional[float] = None
    lyapunov: Optional[float] = None
    inner_retries: int = 0


@dataclass
class RunTrace:
    """Ordered iteration records plus run metadata.

    Invariant: t_{k+1} = t_k + delta_k for consecutive records.
    """

    algorithm: str
    records: list[IterationRecord] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def final_record(self) -> IterationRecord:
        return self.records[-1]

    @property
    def iterations(self) -> int:
        """Number of steps taken (records minus the initial state)."""
        return len(self.records) - 1

    def stepsizes(self) -> np.ndarray:
        return np.array([r.delta for r in self.records[:-1]])

    def to_csv(self, path) -> None:
        n = self.records[0].x.size
        header = ["k", "t", "delta", "a", "grad_norm", "f_gap", "lyapunov"]
        header += [f"x{i}" for i in range(n)] + [f"v{i}" for i in range(n)]
        lines = [",".join(header)]
        for r in self.records:
            cells = [str(r.k), repr(float(r.t)), repr(float(r.delta)),
                     repr(float(r.a)), repr(float(r.grad_norm)),
                     "" if r.f_gap is None else repr(float(r.f_gap)),
                     "" if r.lyapunov is None else repr(float(r.lyapunov))]
            cells += [repr(float(c)) for c in r.x] + [repr(float(c)) for c in r.v]
            lines.append(",".join(cells))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def read_trace_csv(path) -> RunTrace:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    header = lines[0].split(",")
    n = sum(1 for name in header if name.startswith("x"))
    trace = RunTrace(algorithm="", metadata={"source": str(path)})
    for ln in lines[1:]:
        cells = ln.split(",")
        row = dict(zip(header, cells))
        trace.records.append(IterationRecord(
            k=int(row["k"]),
            t=float(row["t"]),
            delta=float(row["delta"]),
            x=np.array([float(row[f"x{i}"]) for i in range(n)]),
            v=np.array([float(row[f"v{i}"]) for i in range(n)]),
            a=float(row["a"]),
            grad_norm=float(row["grad_norm"]),
            f_gap=float(row["f_gap"]) if row["f_gap"] else None,
            lyapunov=float(row["lyapunov"]) if row["lyapunov"] else None,
        ))
    return trace
