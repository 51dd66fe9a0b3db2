"""Stage orchestration shared by the command line and the tests.

Stages run in order: verify, forms, unit equation (baker, reduce, enumerate),
quartic Thue equations and generators.  The absolute-index search is a
separate entry point.  Each stage fills a section of a RunReport.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .checkpoint import CheckpointWriter, read_checkpoint
from .errors import CheckpointError, VerificationError
from .fieldspec import FieldSpec, spec_failures, verify_spec
from .indexform import (
    AbsoluteSearchSpec,
    GeneratorFamily,
    RelativeQuarticData,
    absolute_search,
    assemble_generators,
    build_forms,
    parametrize,
    quartic_instances,
    select_instance,
)
from .lattice import DEFAULT_POINT_CAP
from .order import OrderElement
from .report import RunReport
from .thue import (
    QuarticThueInstance,
    classify_resolvent,
    quartic_small_solutions,
    solve_resolvent,
    unit_normalize_rhs,
)
from .unitsolve import UnitSolveReport, build_sieve_plan, sieve_pass_single_prime

STAGES = ("verify", "baker", "reduce", "unit-eq", "thue", "all")


@dataclass
class RunOptions:
    precision: int | None = None
    schedule: list[float] | None = None  # None: spec value, [] : automatic
    threads: int = 1
    cap: int | None = None
    sieve_primes: list[int] | None = None
    stage: str = "all"
    reduced_bound: int | None = None
    checkpoint: Path | None = None
    sieve_samples: int = 20000
    seed: int = 20240229


@dataclass
class PipelineResult:
    report: RunReport
    uv: list[tuple[OrderElement, OrderElement]] = field(default_factory=list)
    unit_solutions: list[tuple[int, ...]] = field(default_factory=list)
    generators: list[GeneratorFamily] = field(default_factory=list)


def _el(x: OrderElement) -> list[int]:
    return [int(c) for c in x.coords]


class _Timer:
    def __init__(self, report: RunReport, name: str):
        self.report, self.name = report, name

    def __enter__(self):
        self.t = time.perf_counter()

    def __exit__(self, *exc):
        self.report.timing[self.name] = self.report.timing.get(self.name, 0.0) + time.perf_counter() - self.t


# ---------------------------------------------------------------------------
# stage: verify


def stage_verify(spec: FieldSpec, report: RunReport) -> None:
    with _Timer(report, "verify"):
        checks = verify_spec(spec)
    report.set("verify", {"checks": [{"name": c.name, "ok": c.ok, "detail": c.detail} for c in checks],
                          "passed": not spec_failures(checks)})
    for f in spec.flags:
        report.flag(f)
    bad = spec_failures(checks)
    if bad:
        raise VerificationError("; ".join(f"{c.name} ({c.detail})" if c.detail else c.name for c in bad))


# ---------------------------------------------------------------------------
# stage: resolvent and unit equation


def unit_report_dict(rep: UnitSolveReport, label: str) -> dict:
    out: dict = {"label": label}
    if rep.baker is not None:
        b = rep.baker
        out["baker"] = {"c1": b.c1, "C": b.C, "E_B": b.E_B, "c1_rows": list(b.c1_rows), "backend": b.backend,
                        "per_slot": b.per_conjugate}
    if rep.E_R is not None:
        out["reduction"] = {"E_R": rep.E_R, "slots": rep.reductions,
                            "max_rounds": max((s["rounds"] for s in rep.reductions), default=0)}
    if rep.schedule is not None:
        out["enumeration"] = {
            "log10_S0": rep.log_S0 / math.log(10),
            "schedule": rep.schedule.as_rows(),
            "steps": [
                {"case": s.case, "step": s.step, "log10_S": round(s.log10_S, 6),
                 "log10_s": None if s.log10_s is None else round(s.log10_s, 6), "enumerated": s.enumerated,
                 "per_ellipsoid": s.per_conjugate, "sieve_passed": s.sieve_passed}
                for s in rep.steps
            ],
            "residual_values": rep.residual_values,
            "residual_values_raw": rep.residual_values_raw,
            "residual_scanned": rep.residual_scanned,
        }
        out["sieve"] = dict(rep.sieve_stats)
        out["sieve"]["false_rejections"] = rep.false_rejections
        out["solutions"] = [{"exponents": list(s.exponents), "signs": list(s.signs), "exact": s.exact}
                            for s in rep.solutions.solutions]
    return out


def sieve_pass_rates(ueq, primes: Sequence[int], E: int, samples: int, seed: int,
                     exclude: set[tuple[int, ...]] = frozenset()) -> dict[int, float]:
    """Fraction of random exponent vectors in [-E, E]^n passing each prime alone."""
    if not primes or samples <= 0:
        return {}
    rng = np.random.default_rng(seed)
    V = rng.integers(-E, E + 1, size=(samples, ueq.n_exp), dtype=np.int64)
    if exclude:
        keep = np.array([tuple(v) not in exclude for v in V.tolist()])
        V = V[keep]
    plan = build_sieve_plan(ueq, primes)
    return {pd.p: float(sieve_pass_single_prime(pd, V, ueq.sign_choices).mean()) for pd in plan.primes}


def stage_unit_equation(spec: FieldSpec, opts: RunOptions, report: RunReport, stop_after: str | None = None):
    data = RelativeQuarticData(spec.M, spec.a, spec.d, spec.i0)
    forms = build_forms(data)
    with _Timer(report, "resolvent"):
        res = classify_resolvent(forms.F, spec.M, data.rhs_norm, spec.nu)
    report.set("forms", {
        "F": [_el(c) for c in forms.F],
        "Q1": [_el(c) for c in forms.Q1],
        "Q2": [_el(c) for c in forms.Q2],
        "rhs_norm": data.rhs_norm,
    })
    report.set("resolvent", {
        "case": res.case,
        "roots": [_el(r) for r in res.roots],
        "quadratic": None if res.quadratic is None else [_el(c) for c in res.quadratic],
        "nu": [_el(n) for n in res.nu_reps],
    })
    primes = opts.sieve_primes if opts.sieve_primes is not None else spec.sieve_primes
    if opts.schedule is not None:
        s_values = opts.schedule or None
    else:
        s_values = spec.schedule
    E_R = opts.reduced_bound if opts.reduced_bound is not None else spec.reduced_bound
    cap = opts.cap or spec.cap or DEFAULT_POINT_CAP
    writer = CheckpointWriter(opts.checkpoint) if opts.checkpoint else None
    cb = (lambda name, vecs: writer.write(name, vecs, dim=None)) if writer else None
    try:
        with _Timer(report, "unit_equation"):
            sol = solve_resolvent(
                res,
                us=spec.extension.us if spec.extension else None,
                base_units=spec.base_units,
                delta_data=spec.delta_pairs if res.case == "C" else spec.delta_triples,
                s_values=s_values,
                sieve_primes=primes,
                E_R=E_R,
                cap=cap,
                threads=opts.threads,
                stop_after=stop_after,
                checkpoint=cb,
            )
        eqs = []
        for k, (rep, ueq) in enumerate(zip(sol.unit_reports, sol.equations)):
            d = unit_report_dict(rep, ueq.label)
            if rep.schedule is not None and primes:
                found = {s.exponents for s in rep.solutions.solutions}
                d["sieve"]["pass_rate"] = {str(p): r for p, r in
                                           sieve_pass_rates(ueq, primes, rep.E_R, opts.sieve_samples, opts.seed + k, found).items()}
            eqs.append(d)
        if E_R is not None:
            report.flag(f"reduced bound preset to {E_R}; Baker and reduction stages skipped")
        report.set("unit_equations", eqs)
        if stop_after in ("baker", "reduce"):
            return sol, forms, data
        report.set("unit_solutions", [list(a) for a in sol.unit_solutions])
        report.set("uv", [{"U": _el(U), "V": _el(V)} for U, V in sol.pairs])
        report.set("uv_rejected", sol.rejected)
        if writer:
            writer.write("unit_solutions", sol.unit_solutions, dim=len(sol.unit_solutions[0]) if sol.unit_solutions else 0)
            writer.write("uv", [_el(U) + _el(V) for U, V in sol.pairs], dim=2 * spec.M.degree)
    finally:
        if writer:
            writer.close()
    return sol, forms, data


# ---------------------------------------------------------------------------
# stage: quartic Thue equations and generators


def stage_thue(spec: FieldSpec, uv: Sequence[tuple[OrderElement, OrderElement]], opts: RunOptions,
               report: RunReport) -> list[GeneratorFamily]:
    data = RelativeQuarticData(spec.M, spec.a, spec.d, spec.i0)
    forms = build_forms(data)
    sections = []
    gens: list[GeneratorFamily] = []
    cap = opts.cap or spec.cap or 10**7
    with _Timer(report, "thue"):
        for U, V in uv:
            pd = parametrize(U, V, forms, zero=spec.conic_zero)
            cands = quartic_instances(pd, forms, U, V)
            sel = select_instance(cands)
            reps = unit_normalize_rhs(sel.rhs_base, spec.base_units)
            kappas = spec.kappa or [spec.M.one]
            rhs = []
            for kap in kappas:
                for nu, _, _ in reps:
                    v = kap * kap * nu
                    if v not in rhs:
                        rhs.append(v)
            inst = QuarticThueInstance(spec.M, sel.form, rhs)
            sols = quartic_small_solutions(inst, cap=cap)
            fams = assemble_generators(sols, pd, data, forms, kappas)
            for f in fams:
                if not any(_same_family(f, g) for g in gens):
                    gens.append(f)
            sections.append({
                "U": _el(U), "V": _el(V),
                "Q0": [_el(c) for c in pd.Q0],
                "conic_zero": [_el(c) for c in pd.zero],
                "fX": [_el(c) for c in pd.fX], "fY": [_el(c) for c in pd.fY], "fZ": [_el(c) for c in pd.fZ],
                "identity_holds": pd.identity_holds(),
                "forms": [{"label": c.label, "coeffs": [_el(x) for x in c.form], "degenerate": c.degenerate} for c in cands],
                "selected": sel.label,
                "c0": inst.c0,
                "xi_bar": inst.xi_bar,
                "rhs_count": len(rhs),
                "solutions": [{"P": _el(s.X), "Q": _el(s.Y), "rhs": _el(s.nu)} for s in sols],
            })
    report.set("quartic", sections)
    report.set("generators", [g.as_dict() for g in gens])
    report.flag("quartic Thue solutions are listed as enumerated; each generator is checked directly against the norm condition")
    return gens


def _same_family(a: GeneratorFamily, b: GeneratorFamily) -> bool:
    from .thue import unit_ratio

    return unit_ratio(a.triple(), b.triple()) is not None


# ---------------------------------------------------------------------------
# entry points


def run_pipeline(spec: FieldSpec, opts: RunOptions) -> PipelineResult:
    report = RunReport(spec.name)
    report.set("options", {"stage": opts.stage, "threads": opts.threads, "precision": spec.precision,
                           "sieve_primes": opts.sieve_primes if opts.sieve_primes is not None else spec.sieve_primes})
    stage_verify(spec, report)
    result = PipelineResult(report)
    if opts.stage == "verify":
        return result
    stop = {"baker": "baker", "reduce": "reduce"}.get(opts.stage)
    sol, forms, data = stage_unit_equation(spec, opts, report, stop_after=stop)
    if stop:
        return result
    result.uv = sol.pairs
    result.unit_solutions = sol.unit_solutions
    if opts.stage == "unit-eq":
        return result
    result.generators = stage_thue(spec, sol.pairs, opts, report)
    return result


def load_uv_checkpoint(spec: FieldSpec, path: Path) -> list[tuple[OrderElement, OrderElement]]:
    data = read_checkpoint(path)
    if "uv" not in data:
        raise CheckpointError(f"{path} has no (U, V) section; run the unit-eq stage first")
    m = spec.M.degree
    out = []
    for row in data["uv"]:
        if len(row) != 2 * m:
            raise CheckpointError("(U, V) section does not match the base field degree")
        out.append((spec.M.element(row[:m]), spec.M.element(row[m:])))
    return out


def run_thue_from_checkpoint(spec: FieldSpec, opts: RunOptions, path: Path) -> PipelineResult:
    report = RunReport(spec.name)
    uv = load_uv_checkpoint(spec, path)
    gens = stage_thue(spec, uv, opts, report)
    return PipelineResult(report, uv, [], gens)


def run_absolute_search(spec: FieldSpec, opts: RunOptions, z_range: int | None = None, threshold: float | None = None,
                        report: RunReport | None = None) -> RunReport:
    if spec.absolute is None:
        raise VerificationError("the spec has no absolute section")
    ab = spec.absolute
    report = report or RunReport(spec.name)
    R = ab.range if z_range is None else z_range
    T = ab.threshold if threshold is None else threshold
    srch = AbsoluteSearchSpec(ab.K, ab.base_image, spec.M, spec.base_units, ab.D_K, ab.xi)
    with _Timer(report, "absolute_search"):
        hits, stats = absolute_search(srch, R, R, T, threads=opts.threads)
    report.set("absolute_search", {
        "range": R,
        "threshold": T,
        "D_K": str(ab.D_K),
        "stats": stats,
        "hits": [{"z1": h.z[0], "z2": h.z[1], "k": list(h.k), "index": h.index, "zeta": _el(h.zeta)} for h in hits],
    })
    return report
