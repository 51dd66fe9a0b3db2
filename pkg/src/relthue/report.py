"""Run reports: a versioned JSON document plus TSV tables and PNG figures."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

SCHEMA = "relthue-report/1"


@dataclass
class RunReport:
    spec_name: str = ""
    sections: dict[str, Any] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    timing: dict[str, float] = field(default_factory=dict)

    def set(self, key: str, value: Any):
        self.sections[key] = value

    def flag(self, text: str):
        if text not in self.flags:
            self.flags.append(text)

    def to_dict(self) -> dict:
        out = {"schema": SCHEMA, "spec": self.spec_name}
        out.update(self.sections)
        out["flags"] = list(self.flags)
        out["timing_seconds"] = {k: round(v, 3) for k, v in self.timing.items()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False, default=_default)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        rep = cls(d.get("spec", ""))
        for k, v in d.items():
            if k in ("schema", "spec", "flags", "timing_seconds"):
                continue
            rep.sections[k] = v
        rep.flags = list(d.get("flags", []))
        rep.timing = dict(d.get("timing_seconds", {}))
        return rep


def _default(o):
    if hasattr(o, "coords"):
        return list(o.coords)
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    if hasattr(o, "tolist"):
        return o.tolist()
    return str(o)


# ---------------------------------------------------------------------------
# tables


def _equations(report: RunReport) -> list[dict]:
    return list(report.sections.get("unit_equations", []))


def reduction_rows(report: RunReport) -> list[dict]:
    rows = []
    for e, eq in enumerate(_equations(report)):
        for slot in eq.get("reduction", {}).get("slots", []):
            for k, st in enumerate(slot["steps"], start=1):
                row = {"equation": e, "slot": f"({slot['i'] + 1},{slot['j'] + 1})", "step": k}
                row.update(st)
                rows.append(row)
    return rows


def enumeration_rows(report: RunReport) -> list[dict]:
    rows = []
    for e, eq in enumerate(_equations(report)):
        for st in eq.get("enumeration", {}).get("steps", []):
            row = {"equation": e}
            row.update(st)
            rows.append(row)
    return rows


def absolute_rows(report: RunReport) -> list[dict]:
    return list(report.sections.get("absolute_search", {}).get("hits", []))


def write_tsv(path: Path, rows: list[dict]) -> None:
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, delimiter="\t", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(r.get(k)) for k in cols})


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return v


# ---------------------------------------------------------------------------
# figures


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams.update({"font.size": 9, "axes.grid": True, "grid.alpha": 0.3, "savefig.dpi": 120})
    return plt


def plot_reduction(report: RunReport, path: Path) -> bool:
    eqs = [e for e in _equations(report) if e.get("reduction") and e.get("baker")]
    if not eqs:
        return False
    E_B = eqs[0]["baker"]["E_B"]
    slots = eqs[0]["reduction"]["slots"]
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    for slot in slots:
        bounds = [E_B] + [s["new_bound"] for s in slot["steps"] if s.get("passed")]
        ax.plot(range(len(bounds)), [math.log10(max(b, 1)) for b in bounds], marker="o", ms=3, lw=1,
                label=f"({slot['i'] + 1},{slot['j'] + 1})")
    from matplotlib.ticker import MaxNLocator

    ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    ax.set_xlabel("accepted lattice step (H probes included)")
    ax.set_ylabel("log10 exponent bound")
    ax.set_title("Exponent bound per slot")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return True


def plot_enumeration(report: RunReport, path: Path) -> bool:
    steps = [r for r in enumeration_rows(report) if r["equation"] == 0]
    if not steps:
        return False
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    cases = sorted({s["case"] for s in steps})
    width = 0.8 / max(1, len(cases))
    for c_idx, case in enumerate(cases):
        rows = [s for s in steps if s["case"] == case]
        xs = [s["step"] + (c_idx - (len(cases) - 1) / 2) * width for s in rows]
        ys = [s["enumerated"] for s in rows]
        ax.bar(xs, [max(y, 0.5) for y in ys], width=width, label=f"Case {case}")
    ax.set_yscale("log")
    ax.set_xlabel("enumeration step")
    ax.set_ylabel("lattice points")
    ax.set_title("Points enumerated per step")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return True


def write_report(report: RunReport, outdir: str | Path, figures: bool = True) -> dict[str, str]:
    """Write report.json, the TSV tables and (optionally) PNG figures."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    p = out / "report.json"
    p.write_text(report.to_json() + "\n")
    files["report"] = str(p)
    for name, rows in (("reduction", reduction_rows(report)), ("enumeration", enumeration_rows(report)),
                       ("absolute", absolute_rows(report))):
        if rows:
            tp = out / f"{name}.tsv"
            write_tsv(tp, rows)
            files[f"{name}_tsv"] = str(tp)
    if figures:
        if plot_reduction(report, out / "reduction.png"):
            files["reduction_png"] = str(out / "reduction.png")
        if plot_enumeration(report, out / "enumeration.png"):
            files["enumeration_png"] = str(out / "enumeration.png")
    return files
