"""Verification reports shared by the classical and quantum layers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

SCHEMA_VERSION = 1


def _grid_text(grid):
    return [str(iv) for iv in grid] if grid is not None else []


@dataclass
class Report:
    """Result of a classical check: counts plus the first failing case."""

    check: str
    space: str
    grid: list
    cases_total: int = 0
    cases_failed: int = 0
    first_failure: object = None
    extra: dict = field(default_factory=dict)

    def record(self, ok, case=None):
        self.cases_total += 1
        if not ok:
            self.cases_failed += 1
            if self.first_failure is None:
                self.first_failure = case
        return ok

    @property
    def passed(self):
        return self.cases_failed == 0

    def to_dict(self):
        d = {
            "schema": SCHEMA_VERSION,
            "check": self.check,
            "space": self.space,
            "grid": _grid_text(self.grid),
            "cases_total": self.cases_total,
            "cases_failed": self.cases_failed,
            "first_failure": self.first_failure,
        }
        if self.extra:
            d["extra"] = self.extra
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=str)

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        line = f"[{status}] {self.check} ({self.space}): {self.cases_total - self.cases_failed}/{self.cases_total} ok"
        if self.first_failure is not None:
            line += f"; first failure: {self.first_failure}"
        return line


@dataclass
class QReport:
    """Result of a quantum suite, listing every failure."""

    suite: str
    space: str
    grid: list
    hbar_order: int = 0
    degree_bound: int = 0
    cases_total: int = 0
    cases_failed: int = 0
    failures: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    max_failures_kept: int = 50

    def record(self, ok, kind=None, pair=None, residual=None):
        self.cases_total += 1
        if not ok:
            self.cases_failed += 1
            if len(self.failures) < self.max_failures_kept:
                self.failures.append({
                    "kind": kind,
                    "pair": [str(p) for p in pair] if isinstance(pair, (tuple, list)) else str(pair),
                    "residual_rendered": str(residual),
                })
        return ok

    @property
    def passed(self):
        return self.cases_failed == 0

    @property
    def first_failure(self):
        return self.failures[0] if self.failures else None

    def to_dict(self):
        d = {
            "schema": SCHEMA_VERSION,
            "suite": self.suite,
            "space": self.space,
            "grid": _grid_text(self.grid),
            "hbar_order": self.hbar_order,
            "degree_bound": self.degree_bound,
            "cases_total": self.cases_total,
            "cases_failed": self.cases_failed,
            "failures": self.failures,
        }
        if self.extra:
            d["extra"] = self.extra
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=str)

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        line = f"[{status}] {self.suite} ({self.space}): {self.cases_total - self.cases_failed}/{self.cases_total} ok"
        if self.failures:
            f = self.failures[0]
            line += f"; first failure: {f['kind']} {f['pair']}"
        return line


def merge(reports, name):
    """Fold several reports into one classical report."""
    space = reports[0].space if reports else ""
    grid = reports[0].grid if reports else []
    out = Report(name, space, grid)
    for r in reports:
        out.cases_total += r.cases_total
        out.cases_failed += r.cases_failed
        ff = r.first_failure
        if out.first_failure is None and ff is not None:
            out.first_failure = ff
    return out
