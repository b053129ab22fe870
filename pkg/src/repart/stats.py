"""Cost-reduction statistics over a set of benchmark runs.

The reduction of a dataset is one minus the geometric mean of the per-instance
ratios ``final / baseline``.  Instances whose replicated cost is zero are
reported separately (a geometric mean with a zero factor says nothing), and so
are instances with zero baseline cost, which have no ratio at all.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Iterable, NamedTuple

CSV_COLUMNS = ("instance", "P", "g", "L", "eps", "mode", "baseline_cost", "final_cost", "ratio",
               "supersteps_before", "supersteps_after", "wall_ms")


def geomean(values: Iterable[float]) -> float:
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("geometric mean of nothing")
    if any(v <= 0 for v in vals):
        raise ValueError("geometric mean needs positive values")
    return math.exp(math.fsum(math.log(v) for v in vals) / len(vals))


@dataclass(frozen=True)
class CostRow:
    instance: str
    P: int
    g: object
    L: object
    eps: object
    mode: str
    baseline_cost: object
    final_cost: object
    supersteps_before: int | None = None
    supersteps_after: int | None = None
    wall_ms: int = 0

    @property
    def ratio(self) -> Fraction | None:
        if self.baseline_cost == 0:
            return None
        # a run that did not beat the baseline counts as no improvement
        return min(Fraction(self.final_cost) / Fraction(self.baseline_cost), Fraction(1))

    def cells(self) -> list[str]:
        def cell(x):
            return "" if x is None else str(x)

        r = self.ratio
        return [self.instance, str(self.P), cell(self.g), cell(self.L), cell(self.eps), self.mode,
                str(self.baseline_cost), str(self.final_cost), "" if r is None else f"{float(r):.6f}",
                cell(self.supersteps_before), cell(self.supersteps_after), str(self.wall_ms)]


class Aggregate(NamedTuple):
    instances: int
    geomean: float | None
    reduction_pct: float | None
    zero_cost: int
    zero_baseline: int


def aggregate(rows: Iterable[CostRow]) -> Aggregate:
    rows = list(rows)
    ratios = [r.ratio for r in rows]
    zero_base = sum(1 for x in ratios if x is None)
    zero_cost = sum(1 for x in ratios if x == 0)
    pos = [x for x in ratios if x]
    gm = geomean(pos) if pos else None
    return Aggregate(len(rows), gm, None if gm is None else round(100 * (1 - gm), 2), zero_cost, zero_base)


@dataclass
class CostReport:
    rows: list

    def groups(self) -> dict:
        out = {}
        for r in self.rows:
            key = (r.P, r.g, r.L, r.eps, r.mode)
            out.setdefault(key, []).append(r)
        return out

    def summary(self) -> dict:
        return {k: aggregate(v) for k, v in self.groups().items()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.cells())
        return buf.getvalue()

    def summary_text(self) -> str:
        lines = ["P,g,L,eps,mode,instances,geomean,reduction_pct,zero_cost,zero_baseline"]
        for (P, g, L, eps, mode), a in self.summary().items():
            gm = "" if a.geomean is None else f"{a.geomean:.6f}"
            red = "" if a.reduction_pct is None else f"{a.reduction_pct:.2f}"
            cells = [P, "" if g is None else g, "" if L is None else L, "" if eps is None else eps, mode,
                     a.instances, gm, red, a.zero_cost, a.zero_baseline]
            lines.append(",".join(map(str, cells)))
        return "\n".join(lines) + "\n"


def read_report(text: str) -> CostReport:
    rows = []
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError("not a cost report CSV")
    names = {f.name for f in fields(CostRow)}

    def num(x):
        return None if x == "" else (int(x) if x.lstrip("-").isdigit() else Fraction(x))

    for rec in reader:
        kw = {k: rec[k] for k in names}
        for k in ("P", "supersteps_before", "supersteps_after", "wall_ms"):
            kw[k] = num(kw[k])
        for k in ("g", "L", "eps", "baseline_cost", "final_cost"):
            kw[k] = num(kw[k])
        rows.append(CostRow(**kw))
    return CostReport(rows)
