"""Report emitters: CSV, JSON, and markdown tables.

CSV holds one row per dataset with full-precision floats (repr), so two
identical runs emit byte-identical files and a reparse recovers the exact
values. Markdown output renders one AMSE/NAMSE table and one
completion-rate table.
"""

from __future__ import annotations

import json
from typing import Sequence

from .metrics import MetricReport

CSV_COLUMNS = ("dataset", "amse", "namse", "completion_pct", "fallback_rate", "n")


def _fmt(value: float) -> str:
    return repr(float(value))


def reports_to_csv(reports: Sequence[MetricReport]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in reports:
        lines.append(
            ",".join(
                (
                    r.dataset,
                    _fmt(r.amse),
                    _fmt(r.namse),
                    _fmt(r.completion_rate * 100.0),
                    _fmt(r.fallback_rate),
                    str(r.n_trajectories),
                )
            )
        )
    return "\n".join(lines) + "\n"


def csv_to_rows(text: str) -> list[dict]:
    lines = [line for line in text.splitlines() if line]
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        row = dict(zip(header, parts))
        for key in ("amse", "namse", "completion_pct", "fallback_rate"):
            row[key] = float(row[key])
        row["n"] = int(row["n"])
        rows.append(row)
    return rows


def reports_to_json(reports: Sequence[MetricReport]) -> str:
    doc = {"reports": [r.to_dict() for r in reports]}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def reports_from_json(text: str) -> list[MetricReport]:
    doc = json.loads(text)
    return [MetricReport.from_dict(d) for d in doc.get("reports", [])]


def reports_to_markdown(reports: Sequence[MetricReport], adapter_name: str = "model") -> str:
    """Two tables: AMSE/NAMSE per dataset, then completion percentages."""
    out = ["# Performance Metrics", ""]
    out.append(f"| Dataset Name | {adapter_name} AMSE | {adapter_name} NAMSE |")
    out.append("| --- | --- | --- |")
    for r in reports:
        out.append(f"| {r.dataset} | {r.amse:.3f} | {r.namse:.3f} |")
    out.append("")
    out.append("# Task Completion Rates")
    out.append("")
    epsilons = {r.run_metadata.get("completion_epsilon") for r in reports}
    if len(epsilons) == 1 and reports:
        out.append(f"Final-step tolerance epsilon = {epsilons.pop()!r}.")
        out.append("")
    out.append(f"| Dataset Name | {adapter_name} |")
    out.append("| --- | --- |")
    for r in reports:
        out.append(f"| {r.dataset} | {r.completion_rate * 100.0:.3f}% |")
    out.append("")
    return "\n".join(out)
