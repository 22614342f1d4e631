"""Structured pass/fail reports shared by every verification routine.

The stable schema is {check, status, worst_margin, location}; the CLI dumps
lists of these as JSON so CI can diff them byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class CheckItem:
    check: str
    status: str  # "pass" | "fail" | "info"
    worst_margin: float | None = None
    location: str = ""

    def to_dict(self) -> dict:
        margin = None if self.worst_margin is None else float(self.worst_margin)
        return {
            "check": self.check,
            "status": self.status,
            "worst_margin": margin,
            "location": self.location,
        }


@dataclass
class Report:
    items: list[CheckItem] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(item.status != "fail" for item in self.items)

    def add(self, check: str, passed: bool, margin: float | None = None, location: str = "") -> None:
        self.items.append(CheckItem(check, "pass" if passed else "fail", margin, location))

    def info(self, check: str, margin: float | None = None, location: str = "") -> None:
        self.items.append(CheckItem(check, "info", margin, location))

    def extend(self, other: "Report") -> None:
        self.items.extend(other.items)

    def failures(self) -> list[CheckItem]:
        return [item for item in self.items if item.status == "fail"]

    def to_json(self, **extra) -> str:
        payload = dict(extra)
        payload["ok"] = self.ok
        payload["checks"] = [item.to_dict() for item in self.items]
        return json.dumps(payload, indent=2, sort_keys=True)

    def summary_lines(self) -> list[str]:
        lines = []
        for item in self.items:
            margin = "" if item.worst_margin is None else f"  margin={item.worst_margin:.3e}"
            where = f"  [{item.location}]" if item.location else ""
            lines.append(f"{item.status.upper():5s} {item.check}{margin}{where}")
        return lines
