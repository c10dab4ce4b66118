"""Self-contained HTML report for a completed analysis session.

Output is deterministic: no timestamps, no session ids, fixed float
formatting, and plots drawn as inline SVG so identical sessions give
byte-identical files.
"""

from __future__ import annotations

import html
import math

import numpy as np

from .balance import BalanceReport, render_percent
from .data import AnalysisSpec, summarize
from .sensitivity import SensitivityGrid

_CSS = """
body { font-family: Georgia, serif; margin: 2em auto; max-width: 60em;
       color: #222; }
h1 { font-size: 1.6em; } h2 { font-size: 1.2em; margin-top: 2em; }
table { border-collapse: collapse; margin: 0.8em 0; }
th, td { border: 1px solid #999; padding: 0.25em 0.6em; text-align: right; }
th { background: #eee; } td.l, th.l { text-align: left; }
p.note { color: #555; font-style: italic; }
"""


def model_formulas(spec: AnalysisSpec) -> dict:
    """Display text of the two model formulas implied by the set-up."""
    confs = " + ".join(spec.confounder_names)
    return {
        "treatment_formula": f"{spec.treatment_var} ~ {confs}",
        "outcome_formula": f"{spec.outcome_var} ~ {spec.treatment_var} + {confs}",
    }


def _fmt(v: float, nd: int) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{nd}f}"


def _esc(s) -> str:
    return html.escape(str(s))


def _table(headers, rows, left_cols=1) -> str:
    out = ["<table><tr>"]
    for i, h in enumerate(headers):
        cls = ' class="l"' if i < left_cols else ""
        out.append(f"<th{cls}>{_esc(h)}</th>")
    out.append("</tr>")
    for row in rows:
        out.append("<tr>")
        for i, cell in enumerate(row):
            cls = ' class="l"' if i < left_cols else ""
            out.append(f"<td{cls}>{_esc(cell)}</td>")
        out.append("</tr>")
    out.append("</table>")
    return "".join(out)


def _summary_section(dataset, spec) -> str:
    s = summarize(dataset)
    rows = []
    for c in dataset.columns:
        miss = int(c.is_missing().sum())
        if c.kind == "numeric":
            st = s["numeric"][c.name]
            rows.append([c.name, "numeric", miss,
                         _fmt(st["mean"], 2), _fmt(st["sd"], 2),
                         _fmt(st["min"], 2), _fmt(st["max"], 2)])
        else:
            counts = s["categorical"][c.name]
            desc = ", ".join(f"{k}: {v}" for k, v in counts.items())
            rows.append([c.name, "categorical", miss, desc, "", "", ""])
    table = _table(["variable", "type", "missing", "mean / levels",
                    "sd", "min", "max"], rows)
    f = model_formulas(spec)
    return (
        f"<h2>Data</h2><p>{dataset.n_rows} rows, {len(dataset.columns)} columns.</p>"
        + table
        + "<h2>Model set-up</h2>"
        + f"<p>Estimand: <b>{_esc(spec.estimand)}</b></p>"
        + f"<p>Treatment model: <code>{_esc(f['treatment_formula'])}</code></p>"
        + f"<p>Outcome model: <code>{_esc(f['outcome_formula'])}</code></p>")


def _trim_section(session) -> str:
    parts = ["<h2>Overlap and trimming</h2>"]
    dropped = session.design_full.dropped_count
    parts.append(
        f"<p>{dropped} rows with missing values in the model columns were "
        "removed before analysis.</p>")
    if session.trim_rules:
        rows = [[r.confounder,
                 "" if r.lower_cut is None else _fmt(r.lower_cut, 3),
                 "" if r.upper_cut is None else _fmt(r.upper_cut, 3)]
                for r in session.trim_rules]
        parts.append(_table(["variable", "lower cut", "upper cut"], rows))
        parts.append(
            f"<p>{len(session.trimmed_row_ids)} rows fell outside the "
            "cut-offs and were removed; the analysis below uses "
            f"{session.design.n} rows.</p>")
    else:
        parts.append("<p class=note>No trimming applied.</p>")
    return "".join(parts)


def _balance_section(report: BalanceReport, failures: dict) -> str:
    headers = ["variable"] + list(report.columns)
    smd_rows = []
    ks_rows = []
    for i, name in enumerate(report.row_names):
        smd_rows.append([name] + [_fmt(v, 2) for v in report.smd[i]])
        ks_rows.append([name] + [_fmt(v, 2) for v in report.ks[i]])
    summary_rows = [
        ["mean SMD"] + [_fmt(v, 2) for v in report.mean_smd],
        ["max SMD"] + [_fmt(v, 2) for v in report.max_smd],
        ["mean KS"] + [_fmt(v, 2) for v in report.mean_ks],
        ["max KS"] + [_fmt(v, 2) for v in report.max_ks],
        ["ESS"] + [f"{report.ess[c].total:.0f} / {render_percent(report.ess[c].percent)}"
                   for c in report.columns],
    ]
    parts = [
        "<h2>Balance evaluation</h2>",
        "<h3>Standardized mean differences</h3>",
        _table(headers, smd_rows),
        "<h3>Kolmogorov-Smirnov statistics</h3>",
        _table(headers, ks_rows),
        "<h3>Summary</h3>",
        _table(["", *report.columns], summary_rows),
        f"<p>Recommended algorithm: <b>{_esc(report.recommended)}</b>. "
        f"{_esc(report.rationale)}.</p>",
    ]
    if failures:
        items = "; ".join(f"{k}: {v}" for k, v in sorted(failures.items()))
        parts.append(f"<p class=note>Algorithms without weights: {_esc(items)}</p>")
    return "".join(parts)


def _outcome_section(session) -> str:
    est = session.effect
    rows = [[r.term, _fmt(r.estimate, 3), _fmt(r.se, 3), _fmt(r.t, 3), _fmt(r.p, 3)]
            for r in est.rows]
    table = _table(["term", "estimate", "std. error", "t", "p"], rows)
    return (
        "<h2>Outcome analysis</h2>"
        + f"<p>Estimated {_esc(est.estimand)} of {_esc(session.spec.treatment_var)} "
        + f"on {_esc(session.spec.outcome_var)} using {_esc(est.algorithm_used)} "
        + f"weights: <b>{_fmt(est.effect, 3)}</b> "
        + f"(p = {_fmt(est.row(session.design.treatment_name).p, 3)}, "
        + f"n = {est.n_used}).</p>"
        + table)


def _ramp(v: float, lo_color, hi_color) -> str:
    v = min(max(v, 0.0), 1.0)
    rgb = [round(a + v * (b - a)) for a, b in zip(lo_color, hi_color)]
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def surface_svg(grid: SensitivityGrid, which: str, title: str,
                hi_color=(70, 110, 180)) -> str:
    """Heatmap of one sensitivity surface with observed-confounder dots."""
    surf = grid.effect_surface if which == "effect" else grid.pvalue_surface
    n_rho = len(grid.rho_axis)
    n_es = len(grid.es_axis)
    w, h = 520, 420
    ml, mr, mt, mb = 70, 20, 34, 50
    pw, ph = w - ml - mr, h - mt - mb
    cw, ch = pw / n_es, ph / n_rho
    finite = surf[np.isfinite(surf)]
    lo = float(finite.min()) if finite.size else 0.0
    hi = float(finite.max()) if finite.size else 1.0
    span = hi - lo if hi > lo else 1.0

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
           f'font-family="Georgia, serif" font-size="11">']
    out.append(f'<text x="{ml}" y="18" font-size="13">{_esc(title)} '
               f'(min {_fmt(lo, 3)}, max {_fmt(hi, 3)})</text>')
    for irho in range(n_rho):
        for ies in range(n_es):
            x = ml + ies * cw
            # rho grows upward
            y = mt + (n_rho - 1 - irho) * ch
            if grid.missing[irho, ies]:
                fill = "#cccccc"
            else:
                fill = _ramp((surf[irho, ies] - lo) / span, (248, 248, 246), hi_color)
            out.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{cw + 0.5:.1f}" '
                       f'height="{ch + 0.5:.1f}" fill="{fill}"/>')
    es0, es1 = grid.es_axis[0], grid.es_axis[-1]
    rho0, rho1 = grid.rho_axis[0], grid.rho_axis[-1]

    def sx(es):
        frac = (es - es0) / (es1 - es0) if es1 > es0 else 0.5
        return ml + cw / 2 + frac * (pw - cw)

    def sy(rho):
        frac = (rho - rho0) / (rho1 - rho0) if rho1 > rho0 else 0.5
        return mt + ph - ch / 2 - frac * (ph - ch)

    for name, es, rho in grid.observed_points:
        if es0 <= es <= es1 and rho0 <= rho <= rho1:
            out.append(f'<circle cx="{sx(es):.1f}" cy="{sy(rho):.1f}" r="4" '
                       f'fill="#1f4e9c" stroke="#fff"><title>{_esc(name)}'
                       f'</title></circle>')
    for i in range(0, n_es, 2):
        out.append(f'<text x="{sx(grid.es_axis[i]):.1f}" y="{h - mb + 16}" '
                   f'text-anchor="middle">{_fmt(grid.es_axis[i], 2)}</text>')
    for i in range(0, n_rho, 2):
        out.append(f'<text x="{ml - 6}" y="{sy(grid.rho_axis[i]) + 4:.1f}" '
                   f'text-anchor="end">{_fmt(grid.rho_axis[i], 2)}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{h - 12}" text-anchor="middle">'
               'association with treatment (SMD of U)</text>')
    out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {mt + ph / 2:.1f})">'
               'absolute association with outcome (corr with residuals)</text>')
    out.append("</svg>")
    return "".join(out)


def _sensitivity_section(grid: SensitivityGrid) -> str:
    base_e, base_p = grid.baseline
    return (
        "<h2>Sensitivity to an unobserved confounder</h2>"
        + f"<p>Baseline effect {_fmt(base_e, 3)} (p = {_fmt(base_p, 3)}); "
        + f"{grid.draws_per_cell} simulated confounders per grid cell. "
        + "Grey cells are infeasible combinations. Dots mark the observed "
        + "confounders.</p>"
        + surface_svg(grid, "effect", "Mean effect estimate")
        + surface_svg(grid, "pvalue", "Mean p-value", hi_color=(178, 58, 54)))


def render_report(session) -> bytes:
    """Single-file HTML for a session at stage ESTIMATED or later."""
    session.require("ESTIMATED")
    parts = [
        "<!DOCTYPE html><html><head><meta charset=\"utf-8\">",
        "<title>Weighted treatment-effect analysis</title>",
        f"<style>{_CSS}</style></head><body>",
        "<h1>Weighted treatment-effect analysis</h1>",
        _summary_section(session.dataset, session.spec),
        _trim_section(session),
        _balance_section(session.balance_report, session.engine_failures),
        _outcome_section(session),
    ]
    if session.sensitivity is not None:
        parts.append(_sensitivity_section(session.sensitivity))
    parts.append("</body></html>")
    return "".join(parts).encode("utf-8")
