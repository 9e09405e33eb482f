"""CSV and aligned-text rendering of test, simulation and power results.

Floats are written with ``repr`` so that reading a CSV back reproduces the
in-memory values exactly.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict

from .config import PowerCase
from .model import TestReport
from .power import (
    are_case_iii,
    fixed_alt_power,
    local_power_sf,
    local_power_zc,
    power_quantities,
)
from .simulation import SIM_METHODS, CellError

TEST_COLUMNS = (
    "method", "status", "statistic", "z_value", "p_value", "reject", "alpha",
    "trace_R2_hat", "sigma2_hat", "trace_S2_hat", "message",
)
SIM_COLUMNS = (
    "cell", "n", "p", "T", "scenario", "residual", "alternative", "beta_norm_sq",
    "master_seed", "replications", "alpha", "method", "rejection_rate",
    "mc_standard_error", "valid_replications", "failures", "error",
)
POWER_COLUMNS = ("case", "quantity", "value")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def _table(columns, rows) -> str:
    cells = [[str(c) for c in columns]]
    for row in rows:
        cells.append([_short(row.get(c)) for c in columns])
    widths = [max(len(r[j]) for r in cells) for j in range(len(columns))]
    lines = ["  ".join(v.rjust(w) for v, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _short(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


# ---------------------------------------------------------------------------
# test reports
# ---------------------------------------------------------------------------


def report_row(report: TestReport) -> dict:
    row = {
        "method": report.method,
        "status": "ok",
        "statistic": float(report.statistic),
        "z_value": None if report.z_value is None else float(report.z_value),
        "p_value": float(report.p_value),
        "reject": report.reject,
        "alpha": float(report.alpha),
        "message": "; ".join(report.warnings),
    }
    for key in ("trace_R2_hat", "sigma2_hat", "trace_S2_hat"):
        if key in report.nuisance:
            row[key] = float(report.nuisance[key])
    return row


def failed_report_row(method: str, status: str, message: str, alpha: float) -> dict:
    return {"method": method, "status": status, "alpha": float(alpha), "message": message}


def render_report_rows(rows, fmt: str = "csv") -> str:
    return _csv(TEST_COLUMNS, rows) if fmt == "csv" else _table(TEST_COLUMNS, rows)


# ---------------------------------------------------------------------------
# simulation results
# ---------------------------------------------------------------------------


def simulation_rows(results) -> list[dict]:
    rows = []
    for k, res in enumerate(results, start=1):
        cfg = res.config
        base = {
            "cell": k, "n": cfg.n, "p": cfg.p, "T": cfg.T, "scenario": cfg.scenario,
            "residual": cfg.residual, "alternative": cfg.alternative,
            "beta_norm_sq": float(cfg.beta_norm_sq), "master_seed": cfg.master_seed,
            "replications": cfg.replications, "alpha": float(cfg.alpha),
        }
        for method in SIM_METHODS:
            row = dict(base, method=method)
            if isinstance(res, CellError):
                row["error"] = res.message
            else:
                row.update(
                    rejection_rate=res.rejection_rate(method),
                    mc_standard_error=res.mc_standard_error(method),
                    valid_replications=res.replications,
                    failures=res.failures,
                )
            rows.append(row)
    return rows


def render_simulation_csv(results) -> str:
    return _csv(SIM_COLUMNS, simulation_rows(results))


_INT_COLS = {"cell", "n", "p", "T", "master_seed", "replications", "valid_replications", "failures"}
_FLOAT_COLS = {"beta_norm_sq", "alpha", "rejection_rate", "mc_standard_error"}


def read_simulation_csv(text: str) -> list[dict]:
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        row = {}
        for key, value in raw.items():
            if value == "":
                row[key] = None
            elif key in _INT_COLS:
                row[key] = int(value)
            elif key in _FLOAT_COLS:
                row[key] = float(value)
            else:
                row[key] = value
        rows.append(row)
    return rows


def _section(alternative: str) -> str:
    return "sparse" if alternative == "Sparse5" else "nonsparse"


def render_simulation_table(results) -> str:
    """Aligned size/power tables, one per (residual, scenario).

    Rows are (n, p) and ||beta||^2 within
    the nonsparse and sparse sections, columns are SF/ZC/EB for each MA order.
    """
    groups: dict = defaultdict(dict)
    for res in results:
        cfg = res.config
        key = (cfg.residual, cfg.scenario)
        row_key = (_section(cfg.alternative), cfg.n, cfg.p, cfg.beta_norm_sq)
        groups[key].setdefault(row_key, {})[cfg.T] = res

    out = []
    for (residual, scenario), rows in groups.items():
        Ts = sorted({T for cols in rows.values() for T in cols})
        header = ["(n,p)", "||b||^2"]
        for T in Ts:
            header += [f"SF T={T}", f"ZC T={T}", f"EB T={T}"]
        lines = [f"Empirical size and power at level alpha, {residual} residuals, scenario {scenario}"]
        body = []
        for section in ("nonsparse", "sparse"):
            keys = sorted(k for k in rows if k[0] == section)
            if not keys:
                continue
            body.append([f"({'a' if section == 'nonsparse' else 'b'}) {section}"])
            last_np = None
            for _, n, p, b in keys:
                np_label = f"({n},{p})" if (n, p) != last_np else ""
                last_np = (n, p)
                line = [np_label, f"{b:.2f}"]
                for T in Ts:
                    res = rows[(section, n, p, b)].get(T)
                    if res is None or isinstance(res, CellError):
                        line += ["-", "-", "-"] if res is None else ["err"] * 3
                    else:
                        line += [f"{res.rejection_rate(m):.3f}" for m in SIM_METHODS]
                body.append(line)
        width = len(header)
        cols = [header] + [r + [""] * (width - len(r)) if len(r) > 1 else r for r in body]
        widths = [max(len(r[j]) for r in cols if len(r) == width) for j in range(width)]
        lines.append("  ".join(h.rjust(w) for h, w in zip(header, widths)))
        lines.append("  ".join("-" * w for w in widths))
        for r in body:
            if len(r) == 1:
                lines.append(r[0])
            else:
                lines.append("  ".join(v.rjust(w) for v, w in zip(r, widths)).rstrip())
        out.append("\n".join(lines))
    return "\n\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# power cases
# ---------------------------------------------------------------------------


def power_rows(case: PowerCase, corrected_cross_term: bool = False) -> list[dict]:
    inputs, alpha = case.inputs, case.alpha
    q = power_quantities(inputs)
    rows = [
        {"case": case.name, "quantity": "alpha", "value": float(alpha)},
        {"case": case.name, "quantity": "local_power_SF", "value": local_power_sf(inputs, alpha)},
        {"case": case.name, "quantity": "local_power_ZC", "value": local_power_zc(inputs, alpha)},
        {"case": case.name, "quantity": "trace_R2", "value": q.trace_R2},
        {"case": case.name, "quantity": "B1", "value": q.B1},
        {"case": case.name, "quantity": "B2", "value": q.B2},
        {"case": case.name, "quantity": "B3", "value": q.B3},
    ]
    if case.are is not None:
        rows.append({"case": case.name, "quantity": "ARE_SF_vs_ZC",
                     "value": are_case_iii(*case.are)})
    for which in case.fixed:
        rows.append({
            "case": case.name,
            "quantity": f"fixed_power_{which}",
            "value": fixed_alt_power(which, inputs, alpha, corrected_cross_term),
        })
    return rows


def render_power_rows(rows, fmt: str = "csv") -> str:
    return _csv(POWER_COLUMNS, rows) if fmt == "csv" else _table(POWER_COLUMNS, rows)
