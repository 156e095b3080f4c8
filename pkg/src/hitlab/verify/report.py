"""Verification report as CSV rows and as a plain-text table."""

from __future__ import annotations

import csv
import io
import math

__all__ = ["CSV_COLUMNS", "report_rows", "write_report_csv", "format_table", "suite_verdict"]

CSV_COLUMNS = ("scenario_id", "check", "claim_ref", "expected", "estimate", "std_error",
               "statistic", "verdict")


def _num(x) -> str:
    if isinstance(x, str):
        return x
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def report_rows(results):
    for res in results:
        for c in res.checks:
            yield {
                "scenario_id": res.scenario_id,
                "check": c.label,
                "claim_ref": res.claim_ref,
                "expected": _num(c.expected),
                "estimate": _num(c.value),
                "std_error": _num(c.std_error),
                "statistic": _num(c.statistic),
                "verdict": c.verdict,
            }


def write_report_csv(results, out) -> None:
    """Write one CSV row per check to the text stream ``out``."""
    writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in report_rows(results):
        writer.writerow(row)


def _short(x, digits=6) -> str:
    if isinstance(x, str):
        return x
    if x is None or not math.isfinite(x):
        return "" if x is None or math.isnan(x) else str(x)
    return f"{x:.{digits}g}"


def format_table(results) -> str:
    """Aligned text table; ``stat`` is z for mean tests and p for KS/chi2."""
    header = ("id", "check", "expected", "estimate", "se", "stat", "verdict")
    lines = [header]
    for res in results:
        for c in res.checks:
            stat = f"z={c.statistic:+.2f}" if c.kind in ("mean", "sanity") else f"p={c.statistic:.3g}"
            lines.append((res.scenario_id, c.label, _short(c.expected), _short(c.value),
                          _short(c.std_error, 2), stat, c.verdict))
    widths = [max(len(row[k]) for row in lines) for k in range(len(header))]
    out = io.StringIO()
    for i, row in enumerate(lines):
        out.write("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() + "\n")
        if i == 0:
            out.write("  ".join("-" * w for w in widths) + "\n")
    return out.getvalue()


def suite_verdict(results) -> str:
    verdicts = {r.verdict for r in results}
    if "fail" in verdicts:
        return "fail"
    if "inconclusive" in verdicts:
        return "inconclusive"
    return "pass"
