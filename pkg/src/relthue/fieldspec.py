"""Field-spec files: YAML documents describing M, G, K and the solver knobs.

Grammar (keys marked * are required)::

    format: relthue-spec/1
    name: <text>
    precision: <int>                    working decimal digits, default 60
    base*:
      polynomial*: "<monic integer polynomial in x>"
      units: [[c0, c1, ...], ...]       fundamental units of M
    extension:                          quadratic extension G of M (Case C)
      polynomial*: "..."
      base_generator*: [...]            the generator of M written in G
      units*: [[...], ...]
      sigma*: [[...], ...]              row k: exponents of sigma(unit k)
      sigma_signs: [+-1, ...]           default all +1
      base_unit_count: <int>            leading units lying in M, default 0
    relative*:
      convention: a1-a4 | a0-a3         a1-a4: f = x^4+a1x^3+a2x^2+a3x+a4
      a1..a4 (or a0..a3)*: [...]        coordinates in M
      d: <int>, i0: <int>               default 1, 1
    resolvent:
      nu: [[...], ...]                  representatives of the right side
      delta_pairs: [[[dM], [dG]], ...]  Case C
      delta_triples: [[[d1], [d2], [d3]], ...]  Case A
    quartic:
      conic_zero: [[X0], [Y0], [Z0]]    optional point on Q0 = 0
      kappa: [[...], ...]               non-associate kappa classes, default [1]
    absolute:
      polynomial*: "..."                defining polynomial of K over Q
      base_generator*: [...]            generator of M written in K
      xi: [...]                         relative generator in K, default x
      discriminant*: "<integer expression>"
      range: <int>, threshold: <float>
    solver:
      sieve_primes: [...]
      schedule: [s1, s2, ...] | auto
      reduced_bound: <int>              skip Baker + reduction
      cap: <int>

Polynomial coordinates are listed from the constant term upwards.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .errors import ParseError, VerificationError
from .order import OrderContext, OrderElement, make_context
from .units import UnitSystem, verify_unit_system

FORMAT_TAG = "relthue-spec/1"


@dataclass
class ExtensionData:
    G: OrderContext
    us: UnitSystem


@dataclass
class AbsoluteData:
    K: OrderContext
    base_image: OrderElement
    xi: OrderElement
    D_K: int
    range: int = 25
    threshold: float = 1e15


@dataclass
class FieldSpec:
    name: str
    precision: int
    M: OrderContext
    base_units: list[OrderElement]
    a: tuple[OrderElement, ...]  # a1..a4
    convention: str
    d: int = 1
    i0: int = 1
    extension: ExtensionData | None = None
    absolute: AbsoluteData | None = None
    nu: list[OrderElement] | None = None
    delta_pairs: list[tuple[OrderElement, OrderElement]] | None = None
    delta_triples: list[tuple[OrderElement, ...]] | None = None
    conic_zero: tuple[OrderElement, ...] | None = None
    kappa: list[OrderElement] | None = None
    sieve_primes: list[int] = field(default_factory=list)
    schedule: list[float] | None = None
    reduced_bound: int | None = None
    cap: int | None = None
    flags: list[str] = field(default_factory=list)
    source: str = ""


def _req(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ParseError(f"missing key '{key}' in {where}")
    return d[key]


def _coords(ctx: OrderContext, v: Any, what: str) -> OrderElement:
    if isinstance(v, int):
        return ctx.from_int(v)
    if not isinstance(v, (list, tuple)) or not all(isinstance(c, int) for c in v):
        raise ParseError(f"{what}: expected a list of integers")
    if len(v) > ctx.degree:
        raise ParseError(f"{what}: {len(v)} coordinates for a field of degree {ctx.degree}")
    return ctx.element(list(v) + [0] * (ctx.degree - len(v)))


def _context(poly: Any, prec: int, name: str, where: str) -> OrderContext:
    try:
        return make_context(poly, precision=prec, name=name)
    except (ValueError, TypeError, SyntaxError) as exc:
        raise ParseError(f"{where}: {exc}") from exc
    except Exception as exc:  # sympy raises its own parse errors
        raise ParseError(f"{where}: cannot parse polynomial ({exc})") from exc


_INT_EXPR = re.compile(r"^[0-9\s\*\^\(\)\+\-]+$")


def parse_integer_expression(s: Any) -> int:
    """Integer literal or a product/power expression such as ``2^24 * 7^3``."""
    if isinstance(s, int):
        return s
    if not isinstance(s, str) or not _INT_EXPR.match(s):
        raise ParseError(f"not an integer expression: {s!r}")
    import sympy

    val = sympy.sympify(s.replace("^", "**"))
    if not val.is_integer:
        raise ParseError(f"not an integer expression: {s!r}")
    return int(val)


def parse_spec(text: str, source: str = "<string>", precision: int | None = None) -> FieldSpec:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"{source}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{source}: top level must be a mapping")
    fmt = doc.get("format", FORMAT_TAG)
    if fmt != FORMAT_TAG:
        raise ParseError(f"{source}: unsupported format {fmt!r}")
    prec = int(precision or doc.get("precision", 60))
    flags: list[str] = []

    base = _req(doc, "base", source)
    M = _context(_req(base, "polynomial", "base"), prec, "mu", "base.polynomial")
    base_units = [_coords(M, u, "base.units") for u in base.get("units", []) or []]

    rel = _req(doc, "relative", source)
    conv = str(rel.get("convention", "a1-a4"))
    if conv == "a1-a4":
        a = tuple(_coords(M, _req(rel, k, "relative"), f"relative.{k}") for k in ("a1", "a2", "a3", "a4"))
    elif conv == "a0-a3":
        # f = x^4 + a3 x^3 + a2 x^2 + a1 x + a0
        a0, a1, a2, a3 = (_coords(M, _req(rel, k, "relative"), f"relative.{k}") for k in ("a0", "a1", "a2", "a3"))
        a = (a3, a2, a1, a0)
        flags.append("relative coefficients given as a0..a3; mapped to a1..a4")
    else:
        raise ParseError(f"relative.convention must be a1-a4 or a0-a3, not {conv!r}")
    d = int(rel.get("d", 1))
    i0 = int(rel.get("i0", 1))
    if d < 1 or i0 < 1:
        raise ParseError("relative.d and relative.i0 must be positive")

    spec = FieldSpec(doc.get("name", Path(source).stem), prec, M, base_units, a, conv, d, i0, flags=flags, source=source)

    ext = doc.get("extension")
    if ext:
        G = _context(_req(ext, "polynomial", "extension"), prec, "gamma", "extension.polynomial")
        img = _coords(G, _req(ext, "base_generator", "extension"), "extension.base_generator")
        units = [_coords(G, u, "extension.units") for u in _req(ext, "units", "extension")]
        rows = _req(ext, "sigma", "extension")
        n = len(units)
        if len(rows) != n or any(not isinstance(r, list) or len(r) != n for r in rows):
            raise ParseError("extension.sigma must be a square matrix matching the unit count")
        C = [[int(rows[k][l]) for k in range(n)] for l in range(n)]
        signs = [int(s) for s in ext.get("sigma_signs", [1] * n)]
        if len(signs) != n or any(s not in (1, -1) for s in signs):
            raise ParseError("extension.sigma_signs must be +-1 per unit")
        try:
            us = UnitSystem(M, G, img, units, C, signs, base_count=int(ext.get("base_unit_count", 0)), base_units_M=base_units)
        except VerificationError:
            raise
        except Exception as exc:
            raise VerificationError(f"extension data: {exc}") from exc
        spec.extension = ExtensionData(G, us)

    res = doc.get("resolvent") or {}
    if "nu" in res:
        spec.nu = [_coords(M, v, "resolvent.nu") for v in res["nu"]]
    if "delta_pairs" in res:
        if spec.extension is None:
            raise ParseError("resolvent.delta_pairs needs an extension section")
        spec.delta_pairs = [(_coords(M, p[0], "delta_M"), _coords(spec.extension.G, p[1], "delta_G")) for p in res["delta_pairs"]]
    if "delta_triples" in res:
        spec.delta_triples = [tuple(_coords(M, x, "delta") for x in t) for t in res["delta_triples"]]

    qu = doc.get("quartic") or {}
    if "conic_zero" in qu:
        spec.conic_zero = tuple(_coords(M, x, "quartic.conic_zero") for x in qu["conic_zero"])
        if len(spec.conic_zero) != 3:
            raise ParseError("quartic.conic_zero needs three coordinates")
    if "kappa" in qu:
        spec.kappa = [_coords(M, x, "quartic.kappa") for x in qu["kappa"]]

    ab = doc.get("absolute")
    if ab:
        K = _context(_req(ab, "polynomial", "absolute"), prec, "xi", "absolute.polynomial")
        bimg = _coords(K, _req(ab, "base_generator", "absolute"), "absolute.base_generator")
        xi = _coords(K, ab["xi"], "absolute.xi") if "xi" in ab else K.theta
        DK = parse_integer_expression(_req(ab, "discriminant", "absolute"))
        spec.absolute = AbsoluteData(K, bimg, xi, DK, int(ab.get("range", 25)), float(ab.get("threshold", 1e15)))

    so = doc.get("solver") or {}
    spec.sieve_primes = [int(p) for p in so.get("sieve_primes", []) or []]
    sch = so.get("schedule")
    if sch is not None and sch != "auto":
        try:
            spec.schedule = [float(x) for x in sch]
        except (TypeError, ValueError) as exc:
            raise ParseError("solver.schedule must be a list of numbers or 'auto'") from exc
    if so.get("reduced_bound") is not None:
        spec.reduced_bound = int(so["reduced_bound"])
    if so.get("cap") is not None:
        spec.cap = int(so["cap"])
    return spec


def load_spec(path: str | Path, precision: int | None = None) -> FieldSpec:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {p}: {exc}") from exc
    return parse_spec(text, str(p), precision)


def example_spec_path() -> Path:
    return Path(__file__).parent / "data" / "example-shanks.spec"


@dataclass
class SpecCheck:
    name: str
    ok: bool
    detail: str = ""


def verify_spec(spec: FieldSpec) -> list[SpecCheck]:
    """All structural checks on a parsed spec; never raises."""
    out: list[SpecCheck] = []
    M = spec.M
    out.append(SpecCheck("base field totally real", M.is_totally_real))
    for k, u in enumerate(spec.base_units):
        nm = u.norm()
        out.append(SpecCheck(f"base unit {k + 1} has norm +-1", abs(nm) == 1, f"norm {nm}"))
    if spec.extension is not None:
        for c in verify_unit_system(spec.extension.us):
            out.append(SpecCheck(c.name, c.ok, c.detail))
    if spec.absolute is not None:
        ab = spec.absolute
        acc = ab.K.zero
        for c in reversed(M.coeffs):
            acc = acc * ab.base_image + ab.K.from_int(c)
        out.append(SpecCheck("absolute field contains the base generator", acc.is_zero()))
        # xi satisfies the relative quartic
        a1, a2, a3, a4 = spec.a
        from .units import embed_base

        lift = [embed_base(M, ab.K, ab.base_image, c) for c in (a4, a3, a2, a1)]
        x = ab.xi
        val = lift[0] + lift[1] * x + lift[2] * x * x + lift[3] * x * x * x + x * x * x * x
        out.append(SpecCheck("xi is a root of the relative quartic", val.is_zero()))
        disc = ab.K.discriminant
        ok = disc % ab.D_K == 0 if ab.D_K else False
        out.append(SpecCheck("field discriminant divides the polynomial discriminant", ok, f"disc(f) = {disc}"))
    return out


def spec_failures(checks: list[SpecCheck]) -> list[SpecCheck]:
    return [c for c in checks if not c.ok]
