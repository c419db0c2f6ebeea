"""
Dominance comparison across methods.

Records are grouped by (dataset, model, s); within a group every ordered pair
of methods is compared with `pareto_dominates`. The report carries the full
method-by-method matrix, the winning pairs, per-method tallies and flag
counts, and optionally a per-competitor table for one focus method.
"""

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from errors import IncomparableRecordsError
from evaluation.metrics import flag_record, pareto_dominates
from schemas import EvalRecord


@dataclass
class DominanceReport:
    methods: List[str]
    matrix: Dict[str, Dict[str, int]] = field(default_factory=dict)
    pairs: List[Dict[str, Any]] = field(default_factory=list)
    tallies: Dict[str, Dict[str, int]] = field(default_factory=dict)
    flags: Dict[str, Dict[str, int]] = field(default_factory=dict)
    record_flags: List[Dict[str, Any]] = field(default_factory=list)
    focus: Optional[str] = None
    focus_table: List[Dict[str, Any]] = field(default_factory=list)

    def dominated_by(self, method: str) -> List[Dict[str, Any]]:
        return [p for p in self.pairs if p["loser"] == method]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "methods": self.methods,
            "matrix": self.matrix,
            "pairs": self.pairs,
            "tallies": self.tallies,
            "flags": self.flags,
            "record_flags": self.record_flags,
            "focus": self.focus,
            "focus_table": self.focus_table,
        }


def check_records(records: Sequence[EvalRecord]) -> None:
    """Reject duplicate (method, dataset, model, s) entries and mixed s values."""
    counts = Counter((r.method,) + r.key for r in records)
    duplicates = [r for r in records if counts[(r.method,) + r.key] > 1]
    if duplicates:
        names = sorted({f"{r.method}@{r.dataset}/{r.model}/s={r.s}" for r in duplicates})
        raise IncomparableRecordsError(f"duplicate records: {', '.join(names)}", duplicates)
    sizes = sorted({r.s for r in records})
    if len(sizes) > 1:
        majority = Counter(r.s for r in records).most_common(1)[0][0]
        odd = [r for r in records if r.s != majority]
        names = sorted(f"{r.method}@{r.dataset}/{r.model}/s={r.s}" for r in odd)
        raise IncomparableRecordsError(f"records mix s values {sizes}: {', '.join(names)}", odd)


def compare_records(
    records: Sequence[EvalRecord],
    focus: Optional[str] = None,
    per_fold: bool = False,
) -> DominanceReport:
    check_records(records)
    methods = sorted({r.method for r in records})
    groups: Dict[Tuple[str, str, int], List[EvalRecord]] = defaultdict(list)
    for r in records:
        groups[r.key].append(r)

    matrix: Dict[str, Dict[str, int]] = defaultdict(dict)
    comparisons: Counter = Counter()
    pairs: List[Dict[str, Any]] = []
    for key in sorted(groups):
        group = sorted(groups[key], key=lambda r: r.method)
        for a in group:
            for b in group:
                if a.method == b.method:
                    continue
                comparisons[a.method] += 1
                matrix[a.method].setdefault(b.method, 0)
                if pareto_dominates(a, b, per_fold=per_fold):
                    matrix[a.method][b.method] += 1
                    pairs.append({"dataset": key[0], "model": key[1], "s": key[2],
                                  "winner": a.method, "loser": b.method})

    tallies: Dict[str, Dict[str, int]] = {}
    for m in methods:
        tallies[m] = {
            "dominates": sum(matrix.get(m, {}).values()),
            "dominated": sum(row.get(m, 0) for row in matrix.values()),
            "comparisons": comparisons[m],
        }

    flags: Dict[str, Dict[str, int]] = {
        m: {"records": 0, "impractical": 0, "non_robust": 0, "eff_non_robust": 0, "cost_non_robust": 0}
        for m in methods
    }
    record_flags: List[Dict[str, Any]] = []
    for r in sorted(records, key=lambda r: (r.method,) + r.key):
        f = flag_record(r)
        counts = flags[r.method]
        counts["records"] += 1
        counts["impractical"] += int(not f.practical)
        counts["non_robust"] += int(not f.robust)
        counts["eff_non_robust"] += int(not f.eff_robust)
        counts["cost_non_robust"] += int(not f.cost_robust)
        record_flags.append({"method": r.method, "dataset": r.dataset, "model": r.model, "s": r.s,
                             **f.model_dump()})

    focus_table: List[Dict[str, Any]] = []
    if focus is not None:
        if focus not in methods:
            raise IncomparableRecordsError(f"focus method '{focus}' has no records")
        total = {"competitor": "total", "dominates": 0, "dominated": 0, "comparisons": 0}
        for other in methods:
            if other == focus or other not in matrix.get(focus, {}):
                continue
            n = sum(1 for g in groups.values()
                    if {focus, other} <= {r.method for r in g})
            row = {
                "competitor": other,
                "dominates": matrix[focus][other],
                "dominated": matrix[other][focus],
                "comparisons": n,
            }
            focus_table.append(row)
            for k in ("dominates", "dominated", "comparisons"):
                total[k] += row[k]
        focus_table.append(total)

    return DominanceReport(
        methods=methods,
        matrix={m: dict(sorted(row.items())) for m, row in sorted(matrix.items())},
        pairs=pairs,
        tallies=tallies,
        flags=flags,
        record_flags=record_flags,
        focus=focus,
        focus_table=focus_table,
    )
