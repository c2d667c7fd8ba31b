"""Uniform check report: a verdict, a table of rows, and summary numbers."""

import csv
import io
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence

import numpy as np


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


@dataclass
class Report:
    name: str
    verdict: str
    columns: Sequence[str] = ()
    rows: List[tuple] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict in ("PASS", "IN_DHAT", "IN_B2", "CERTIFIED_PICK_UP_TO_N",
                                "RAW_PICK", "EQUIVALENT_PICK")

    def column(self, name):
        i = list(self.columns).index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def summary_text(self) -> str:
        lines = [f"name: {self.name}", f"verdict: {self.verdict}"]
        for key in sorted(self.summary):
            lines.append(f"{key}: {_fmt(self.summary[key])}")
        return "\n".join(lines) + "\n"


def verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"
