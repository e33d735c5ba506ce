"""Deterministic report files and figures."""
from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

REPORT_NAME = "report.json"
TIMINGS_NAME = "timings.json"


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return "%.17g" % x


def _plain(obj):
    """Convert numpy and complex values to JSON-ready Python objects."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"im": float(obj.imag), "re": float(obj.real)}
    return obj


def dumps(obj, indent: int = 1) -> str:
    """JSON text with sorted keys and 17 significant digits for every float."""
    def enc(o, depth):
        pad = "\n" + " " * (indent * (depth + 1))
        end = "\n" + " " * (indent * depth)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [json.dumps(k) + ": " + enc(o[k], depth + 1) for k in sorted(o)]
            return "{" + pad + ("," + pad).join(items) + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, depth + 1) for v in o) + "]"
            return "[" + pad + ("," + pad).join(enc(v, depth + 1) for v in o) + end + "]"
        if isinstance(o, float):
            return _fmt_float(o)
        return json.dumps(o)

    return enc(_plain(obj), 0) + "\n"


def _cell(v) -> str:
    v = _plain(v)
    if isinstance(v, float):
        return _fmt_float(v)
    if isinstance(v, (dict, list)):
        return dumps(v, indent=0).replace("\n", "")
    if v is None:
        return ""
    return str(v)


def emit_tables(report: dict, out_dir: str | os.PathLike, fmt: str = "json",
                timings: dict | None = None) -> list[Path]:
    """Write ``report.json`` and, for ``fmt="csv"``, one CSV per table plus ``checks.csv``.

    Timings go to a separate ``timings.json`` so the other files are
    identical between runs with the same configuration and seed.
    """
    if fmt not in ("json", "csv"):
        raise ValueError(f"format must be json or csv, got {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / REPORT_NAME]
    written[0].write_text(dumps(report))
    if fmt == "csv":
        path = out / "checks.csv"
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            cols = ["suite", "name", "computed", "expected", "tolerance", "comparison",
                    "passed", "informational", "note"]
            wr.writerow(cols)
            for s in report["suites"]:
                for rec in s["records"]:
                    wr.writerow([s["suite"]] + [_cell(rec[c]) for c in cols[1:]])
        written.append(path)
        for s in report["suites"]:
            for tname, table in sorted(s["tables"].items()):
                path = out / f"{s['suite']}__{tname}.csv"
                with open(path, "w", newline="") as fh:
                    wr = csv.writer(fh, lineterminator="\n")
                    wr.writerow(table["columns"])
                    for row in table["rows"]:
                        wr.writerow([_cell(v) for v in row])
                written.append(path)
    if timings is not None:
        (out / TIMINGS_NAME).write_text(dumps(timings))
    return written


def load_report(path: str | os.PathLike) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / REPORT_NAME
    with open(p) as fh:
        return json.load(fh)


def summarize(report: dict) -> list[str]:
    """One line per suite plus one per failing or informational record."""
    lines = []
    for s in report["suites"]:
        recs = s["records"]
        counted = [r for r in recs if not r["informational"]]
        ok = sum(r["passed"] for r in counted)
        lines.append(f"{s['suite']}: {'PASS' if s['passed'] else 'FAIL'} "
                     f"({ok}/{len(counted)} checks)")
        for r in recs:
            if r["informational"]:
                lines.append(f"  info {r['name']}: computed={_cell(r['computed'])} "
                             f"{'ok' if r['passed'] else 'differs'} {r['note']}".rstrip())
            elif not r["passed"]:
                lines.append(f"  FAIL {r['name']}: computed={_cell(r['computed'])} "
                             f"expected={_cell(r['expected'])} tol={_cell(r['tolerance'])}")
    lines.append(f"overall: {'PASS' if report['passed'] else 'FAIL'}")
    return lines


def _rows(table: dict) -> list[dict]:
    cols = table["columns"]
    return [dict(zip(cols, row)) for row in table["rows"]]


def render_figures(report: dict, out_dir: str | os.PathLike) -> list[Path]:
    """PNG figures for whichever tables the report contains."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.ticker import MaxNLocator

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = {(s["suite"], name): t for s in report["suites"] for name, t in s["tables"].items()}
    written = []

    def save(fig, name):
        path = out / name
        fig.tight_layout()
        fig.savefig(path, dpi=120, metadata={"Software": None})
        plt.close(fig)
        written.append(path)

    t = tables.get(("gamma-limit", "gamma_sweep"))
    if t:
        fig, ax = plt.subplots(figsize=(5.5, 4))
        rows = _rows(t)
        for key in sorted({(r["eta"], r["n"]) for r in rows}):
            sel = [r for r in rows if (r["eta"], r["n"]) == key]
            ax.loglog([r["kappa"] for r in sel], [r["relative_gap"] for r in sel], "o-",
                      label=f"eta={key[0]:g}, n={key[1]}")
        ax.axhline(0.01, color="grey", ls="--", lw=0.8)
        ax.set_xlabel("kappa")
        ax.set_ylabel("relative gap to gamma moment")
        ax.legend(fontsize=7)
        save(fig, "gamma_sweep.png")

    t = tables.get(("pointproc", "negbin_pmf"))
    if t:
        rows = _rows(t)
        cells = sorted({r["cell"] for r in rows})
        fig, axes = plt.subplots(1, len(cells), figsize=(3 * len(cells), 3), squeeze=False)
        for ax, c in zip(axes[0], cells):
            sel = [r for r in rows if r["cell"] == c]
            k = np.array([r["k"] for r in sel])
            ax.bar(k, [r["empirical"] for r in sel], color="lightsteelblue", label="sampled")
            ax.plot(k, [r["exact"] for r in sel], "k.", label="pmf")
            ax.set_yscale("log")
            ax.set_title(f"cell {c}", fontsize=9)
            ax.set_xlabel("count")
            ax.xaxis.set_major_locator(MaxNLocator(integer=True))
        axes[0][0].legend(fontsize=7)
        save(fig, "negbin_pmf.png")

    scaling = [(key, tables[key]) for key in (("qcr", "qcr_scaling"), ("quasifree", "quasifree_scaling"))
               if key in tables]
    if scaling:
        fig, ax = plt.subplots(figsize=(5, 4))
        for (suite, _), tab in scaling:
            rows = _rows(tab)
            ax.loglog([r["max_weight"] for r in rows], [r["residual"] for r in rows], "o-",
                      label=suite)
        ax.set_xlabel("largest cell mass")
        ax.set_ylabel("residual")
        ax.legend(fontsize=8)
        save(fig, "scaling.png")
    return written
