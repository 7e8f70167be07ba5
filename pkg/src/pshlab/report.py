"""Structured run reports: report.txt, summary.csv, and JSONL logs.

Float formatting goes through repr (shortest round-trip), and no artifact
carries wall-clock data, so a fixed config and seed produce byte-identical
CSV/JSONL files.  Wall time appears only in the human-readable report.txt.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass


@dataclass
class RunReport:
    kind: str
    seed: int
    config_hash: str
    config_text: str
    results: list
    artifacts: list
    wall_time: float

    @property
    def passed(self):
        return all(r.passed for r in self.results) and len(self.results) > 0


def fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, complex):
        return f"{value.real!r}{value.imag:+}j".replace("+", "+").replace("j", "j")
    return str(value)


def summary_csv_text(results):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["name", "value", "threshold", "comparator", "passed", "detail"])
    for r in results:
        writer.writerow([r.name, repr(r.value), repr(r.threshold), r.comparator,
                         "true" if r.passed else "false", r.detail])
    return buf.getvalue()


def results_jsonl_text(results):
    lines = [json.dumps({
        "name": r.name, "value": r.value, "threshold": r.threshold,
        "comparator": r.comparator, "passed": r.passed, "detail": r.detail,
    }) for r in results]
    return "\n".join(lines) + "\n"


def rows_csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def report_txt(report: RunReport):
    lines = [
        "== pshlab run report ==",
        f"kind: {report.kind}",
        f"seed: {report.seed}",
        f"config sha256: {report.config_hash}",
        f"wall time: {report.wall_time:.3f} s",
        "",
        "[results]",
    ]
    for r in report.results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status}  {r.name}: value {fmt(r.value)} {r.comparator} "
                     f"threshold {fmt(r.threshold)}"
                     + (f"  ({r.detail})" if r.detail else ""))
    lines += ["", "[artifacts]"]
    lines += [f"  {name}" for name in report.artifacts] or ["  (none)"]
    n_pass = sum(1 for r in report.results if r.passed)
    lines += ["", f"summary: {'PASS' if report.passed else 'FAIL'} "
                  f"({n_pass}/{len(report.results)} checks)"]
    if report.config_text:
        lines += ["", "[config]"] + [f"  {ln}" for ln in
                                     report.config_text.rstrip().splitlines()]
    return "\n".join(lines) + "\n"
