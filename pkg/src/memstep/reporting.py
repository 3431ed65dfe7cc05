"""Report containers shared by the diagnostics experiments and the CLI."""
from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass(frozen=True)
class ReportEntry:
    """One verified inequality: pass iff lhs <= rhs * (1 + rel_tol) + abs_tol."""

    name: str
    lhs: float
    rhs: float
    rel_tol: float = 0.0
    abs_tol: float = 0.0
    tag: str = ""

    @property
    def margin(self) -> float:
        return self.rhs * (1.0 + self.rel_tol) + self.abs_tol - self.lhs

    @property
    def passed(self) -> bool:
        return self.margin >= 0.0

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "pass": self.passed,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "tag": self.tag,
        }


@dataclass
class DiagnosticsReport:
    entries: list[ReportEntry] = field(default_factory=list)

    def add(self, entry: ReportEntry) -> None:
        self.entries.append(entry)

    def extend(self, other: "DiagnosticsReport") -> None:
        self.entries.extend(other.entries)

    @property
    def all_pass(self) -> bool:
        return all(e.passed for e in self.entries)

    def as_dict(self) -> dict:
        return {
            "all_pass": self.all_pass,
            "entries": [e.as_dict() for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)
