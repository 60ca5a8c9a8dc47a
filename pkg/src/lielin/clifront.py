"""Problem files, JSON reports and the ``lielin`` command line.

A problem file is line oriented::

    # comments start with '#'
    vars x y
    params a = 2 where a != -3, a != 0
    define b = (a^2 - 3*a)/9
    field e1 = x*dx
    field e2 = 1*dx + 0*dy
    ode 3: y^2*y''' + a*y*y'*y'' + b*y'^3 = 0
    transform: X = x, Y = exp(y)
    inverse: x = X, y = log(Y)
    option seed = 1

``field`` right-hand sides must be linear in the markers ``dx`` and ``dy``
(standing for the basis derivations).  Errors carry 1-based line and
column numbers.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import sympy as sp

from . import __version__
from .liestruct import LieAlgebraError, structure_constants
from .linearizer import NOT_COVERED, LinearizationResult, analyze, linearize
from .planefield import OdeSpec, PointTransformation, VectorField, is_symmetry
from .symexpr import DX, DY, FAILED, PROBABILISTIC, PROVED, ParameterTable, ParseError, parse, to_text

__all__ = [
    "InputError",
    "ProblemFile",
    "load_problem",
    "main",
    "parse_problem",
    "run_check",
    "run_classify",
    "run_linearize",
]

SCHEMA_ID = "lielin-report/1"
EXIT_OK, EXIT_NOT_COVERED, EXIT_VERIFY, EXIT_INPUT = 0, 2, 3, 4
_PASSING = (PROVED, PROBABILISTIC)


class InputError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None, path: str = "<input>"):
        self.message, self.line, self.column, self.path = message, line, column, path
        where = f"{path}:{line}:{column}" if line is not None else path
        super().__init__(f"{where}: {message}")


@dataclass
class ProblemFile:
    path: str
    variables: list = field(default_factory=lambda: ["x", "y"])
    params: ParameterTable = field(default_factory=ParameterTable)
    labels: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    field_texts: list = field(default_factory=list)
    order: int | None = None
    ode: OdeSpec | None = None
    ode_text: str = ""
    transform: PointTransformation | None = None
    transform_texts: dict = field(default_factory=dict)
    extension: int | None = None
    options: dict = field(default_factory=dict)


_KEYWORDS = ("vars", "params", "define", "field", "ode", "transform", "inverse", "extension", "option")


def _expr(text: str, offset: int, lineno: int, path: str, params, variables=("x", "y"), jets=None):
    try:
        return parse(text, params, variables, jets)
    except ParseError as exc:
        raise InputError(exc.message, lineno, offset + exc.pos + 1, path) from None
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"cannot interpret expression: {exc}", lineno, offset + 1, path) from None


def _strip(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def _assignments(body: str, offset: int, names: tuple, lineno: int, path: str):
    """Split ``A = e1, B = e2`` on top-level commas; returns {name: (text, column offset)}."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append((body[start:i], start))
            start = i + 1
    parts.append((body[start:], start))
    out = {}
    for text, pos in parts:
        m = re.match(r"\s*([A-Za-z]\w*)\s*=", text)
        if not m or m.group(1) not in names:
            raise InputError(f"expected '{names[0]} = ...' or '{names[1]} = ...'", lineno, offset + pos + 1, path)
        out[m.group(1)] = (text[m.end():], offset + pos + m.end())
    if set(out) != set(names):
        raise InputError(f"need both {names[0]} and {names[1]}", lineno, offset + 1, path)
    return out


def parse_problem(text: str, path: str = "<input>", overrides: dict | None = None) -> ProblemFile:
    prob = ProblemFile(path)
    inverse_line = None
    pending_defines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line.strip():
            continue
        m = re.match(r"\s*([A-Za-z]+)", line)
        kw = m.group(1) if m else ""
        if kw not in _KEYWORDS:
            raise InputError(f"unknown keyword '{kw or line.strip()[:10]}'", lineno, (m.start(1) if m else 0) + 1, path)
        rest_at = m.end()
        rest = line[rest_at:]
        if kw == "vars":
            names = rest.split()
            if sorted(names) != ["x", "y"]:
                raise InputError("only the variables 'x y' are supported", lineno, rest_at + 1, path)
            prob.variables = names
        elif kw == "params":
            body = rest.strip()
            mm = re.match(r"([A-Za-z_]\w*)\s*(?:=\s*([-+]?\d+(?:/\d+)?))?\s*(?:where\s+(.*))?$", body)
            if not mm:
                raise InputError("expected 'params <name> [= <rational>] [where <constraints>]'", lineno, rest_at + 2, path)
            name, sample, cons = mm.group(1), mm.group(2), mm.group(3)
            constraints = [c.strip() for c in cons.split(",")] if cons else []
            try:
                prob.params.declare(name, Fraction(sample) if sample else None, constraints)
            except ValueError as exc:
                raise InputError(str(exc), lineno, rest_at + 2, path) from None
        elif kw == "define":
            mm = re.match(r"\s*([A-Za-z_]\w*)\s*=", rest)
            if not mm:
                raise InputError("expected 'define <name> = <expr>'", lineno, rest_at + 1, path)
            value = _expr(rest[mm.end():], rest_at + mm.end(), lineno, path, prob.params)
            prob.params.define(mm.group(1), value)
            pending_defines.append(mm.group(1))
        elif kw == "field":
            mm = re.match(r"\s*([A-Za-z_]\w*)\s*=", rest)
            if not mm:
                raise InputError("expected 'field <label> = <expr>*dx + <expr>*dy'", lineno, rest_at + 1, path)
            label = mm.group(1)
            if label in prob.labels:
                raise InputError(f"duplicate generator label '{label}'", lineno, rest_at + mm.start(1) + 1, path)
            body = rest[mm.end():]
            e = _expr(body, rest_at + mm.end(), lineno, path, prob.params, ("x", "y", "dx", "dy"))
            e = sp.expand(e)
            xi, eta = e.coeff(DX), e.coeff(DY)
            leftover = sp.expand(e - xi * DX - eta * DY)
            if leftover != 0 or xi.has(DX, DY) or eta.has(DX, DY):
                raise InputError("field must be linear in dx and dy", lineno, rest_at + mm.end() + 1, path)
            prob.labels.append(label)
            prob.fields.append(VectorField(xi, eta))
            prob.field_texts.append(body.strip())
        elif kw == "ode":
            mm = re.match(r"\s*(\d+)\s*:", rest)
            if not mm:
                raise InputError("expected 'ode <order>: <lhs> = <rhs>'", lineno, rest_at + 1, path)
            N = int(mm.group(1))
            if N < 1:
                raise InputError("order must be positive", lineno, rest_at + 1, path)
            body = rest[mm.end():]
            if body.count("=") != 1:
                raise InputError("equation needs exactly one '='", lineno, rest_at + mm.end() + 1, path)
            lhs, rhs = body.split("=")
            off = rest_at + mm.end()
            le = _expr(lhs, off, lineno, path, prob.params, jets=N)
            re_ = _expr(rhs, off + len(lhs) + 1, lineno, path, prob.params, jets=N)
            try:
                prob.ode = OdeSpec.from_equation(le - re_, N)
            except ValueError as exc:
                raise InputError(str(exc), lineno, off + 1, path) from None
            prob.order = N
            prob.ode_text = body.strip()
        elif kw in ("transform", "inverse"):
            mm = re.match(r"\s*:", rest)
            if not mm:
                raise InputError(f"expected '{kw}:'", lineno, rest_at + 1, path)
            names = ("X", "Y") if kw == "transform" else ("x", "y")
            parts = _assignments(rest[mm.end():], rest_at + mm.end(), names, lineno, path)
            variables = ("x", "y") if kw == "transform" else ("X", "Y")
            vals = {k: _expr(t, off, lineno, path, prob.params, variables) for k, (t, off) in parts.items()}
            prob.transform_texts[kw] = {k: t.strip() for k, (t, _) in parts.items()}
            if kw == "transform":
                prob.transform = PointTransformation(vals["X"], vals["Y"])
            else:
                inverse_line = (lineno, (vals["x"], vals["y"]))
        elif kw == "extension":
            mm = re.match(r"\s*sqrt\((\d+)\)\s*$", rest)
            if not mm:
                raise InputError("expected 'extension sqrt(<n>)'", lineno, rest_at + 1, path)
            prob.extension = int(mm.group(1))
        elif kw == "option":
            mm = re.match(r"\s*([a-z][\w-]*)\s*(?:=\s*(\S+))?\s*$", rest)
            if not mm or mm.group(1) not in ("seed", "force", "no-integrate"):
                raise InputError("known options: seed, force, no-integrate", lineno, rest_at + 1, path)
            prob.options[mm.group(1)] = mm.group(2) if mm.group(2) is not None else True
    if inverse_line is not None:
        if prob.transform is None:
            raise InputError("'inverse:' given without 'transform:'", inverse_line[0], 1, path)
        prob.transform = PointTransformation(prob.transform.P, prob.transform.Q, inverse_line[1])
    if not prob.fields:
        raise InputError("no 'field' lines", None, None, path)
    if prob.ode is None:
        raise InputError("no 'ode' line", None, None, path)
    if overrides:
        try:
            prob.params = prob.params.with_samples(**overrides)
        except (KeyError, ValueError) as exc:
            raise InputError(f"--param: {exc}", None, None, path) from None
    return prob


def load_problem(path, overrides: dict | None = None) -> ProblemFile:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read file: {exc.strerror}", None, None, str(path)) from None
    return parse_problem(text, str(path), overrides)


# ---------------------------------------------------------------------------
# reports


def _echo(prob: ProblemFile) -> dict:
    return {
        "file": prob.path,
        "vars": prob.variables,
        "params": {
            n: {
                "sample": None if v is None else str(v),
                "constraints": prob.params.constraints.get(n, []),
            }
            for n, v in prob.params.samples.items()
        },
        "derived": {n: to_text(e) for n, e in prob.params.derived.items()},
        "generators": dict(zip(prob.labels, prob.field_texts)),
        "ode": {"order": prob.order, "equation": prob.ode_text, "solved": str(prob.ode)},
        "transform": prob.transform_texts or None,
    }


def _empty_report(command: str, prob: ProblemFile, seed: int) -> dict:
    return {
        "schema": SCHEMA_ID,
        "version": __version__,
        "command": command,
        "seed": seed,
        "input": _echo(prob),
        "structure": None,
        "derived_algebra": None,
        "levi": None,
        "sl2_triple": None,
        "module": None,
        "case": None,
        "eigen": {},
        "pair": None,
        "transformation": None,
        "normalization": None,
        "target": None,
        "verdicts": [],
        "status": "pending",
        "messages": [],
        "residual": [],
        "timing": {},
    }


def _structure_section(L) -> dict:
    return {
        "dimension": L.dim,
        "field": "QQ" if str(L.K) == "QQ" else str(L.K),
        "labels": L.labels,
        "relations": L.relations(),
        "closure": {f"[{a}, {b}]": v for (a, b), v in L.closure.items()},
    }


def _fill_analysis(rep: dict, an) -> None:
    L = an.L
    if L is None:
        return
    rep["structure"] = _structure_section(L)
    if an.derived:
        rep["derived_algebra"] = [L.describe(v) for v in an.derived]
    if an.levi is not None:
        rep["levi"] = {
            "radical": [L.describe(v) for v in an.levi.radical],
            "levi": [L.describe(v) for v in an.levi.levi],
        }
    if an.triple is not None:
        rep["sl2_triple"] = {k: L.describe(getattr(an.triple, k)) for k in ("X", "Y", "H")}
    if an.decomposition is not None:
        dec = an.decomposition
        rep["module"] = {
            "swapped": dec.swapped,
            "components": [
                {"weight": c.weight, "highest": L.describe(c.highest), "basis": [L.describe(b) for b in c.basis]}
                for c in dec.components
            ],
        }
    if an.eigenvalues:
        rep["eigen"]["eigenvalues"] = [to_text(v) for v in an.eigenvalues]


def _case(tag) -> dict:
    return {"kind": tag.kind, "N": tag.N, "reason": tag.reason, "text": str(tag)}


def _transformation(T: PointTransformation | None):
    if T is None:
        return None
    return {
        "X": to_text(T.P),
        "Y": to_text(T.Q),
        "inverse": None if T.inverse is None else {"x": to_text(T.inverse[0]), "y": to_text(T.inverse[1])},
    }


def _verdict_list(d: dict) -> list:
    return [{"check": k, "verdict": v} for k, v in d.items()]


def _seed(prob: ProblemFile, seed: int | None) -> int:
    if seed is not None:
        return seed
    return int(prob.options.get("seed", 0))


def run_check(prob: ProblemFile, seed: int | None = None) -> tuple[dict, int]:
    seed = _seed(prob, seed)
    rep = _empty_report("check", prob, seed)
    verdicts = {}
    for lab, f in zip(prob.labels, prob.fields):
        verdicts[f"symmetry:{lab}"] = is_symmetry(f, prob.ode, prob.params, seed).verdict
    try:
        L = structure_constants(prob.fields, prob.labels, prob.params, prob.extension, seed)
        rep["structure"] = _structure_section(L)
        verdicts["closure"] = "proved" if all(v == PROVED for v in L.closure.values()) else PROBABILISTIC
    except LieAlgebraError as exc:
        verdicts["closure"] = FAILED
        rep["messages"].append(str(exc))
    rep["verdicts"] = _verdict_list(verdicts)
    bad = [k for k, v in verdicts.items() if v not in _PASSING]
    rep["status"] = "verified" if not bad else "verification-failed"
    for k in bad:
        rep["messages"].append(f"{k}: {verdicts[k]}")
    return rep, EXIT_OK if not bad else EXIT_VERIFY


def run_classify(prob: ProblemFile, seed: int | None = None) -> tuple[dict, int]:
    seed = _seed(prob, seed)
    rep = _empty_report("classify", prob, seed)
    tag, an = analyze(prob.fields, prob.order, prob.params, seed, prob.labels, prob.extension)
    _fill_analysis(rep, an)
    rep["case"] = _case(tag)
    if an.lam_sum is not None:
        rep["eigen"]["lambda+mu"] = to_text(an.lam_sum)
        rep["eigen"]["lambda*mu"] = to_text(an.lam_prod)
    if an.pair is not None:
        rep["pair"] = [an.L.describe(an.pair.A), an.L.describe(an.pair.B)]
    rep["status"] = "classified" if tag.covered else "not-covered"
    if not tag.covered:
        rep["messages"].append(tag.reason)
    return rep, EXIT_OK if tag.covered else EXIT_NOT_COVERED


def run_linearize(
    prob: ProblemFile,
    seed: int | None = None,
    force: bool | None = None,
    integrate: bool | None = None,
) -> tuple[dict, int]:
    seed = _seed(prob, seed)
    force = bool(prob.options.get("force")) if force is None else force
    if integrate is None:
        integrate = not prob.options.get("no-integrate")
    rep = _empty_report("linearize", prob, seed)
    candidate = None if integrate else prob.transform
    res: LinearizationResult = linearize(
        prob.fields,
        prob.order,
        prob.ode,
        prob.params,
        seed,
        prob.labels,
        force=force,
        integrate=integrate,
        candidate=candidate,
        extension=prob.extension,
    )
    if res.analysis is not None:
        _fill_analysis(rep, res.analysis)
    rep["case"] = _case(res.case)
    rep["eigen"].update(res.eigen)
    rep["pair"] = list(res.pair) if res.pair else None
    rep["transformation"] = _transformation(res.transformation)
    rep["normalization"] = res.trace.as_dict() if res.trace is not None else None
    rep["target"] = None if res.target is None else {"order": res.target.order, "equation": str(res.target)}
    rep["verdicts"] = _verdict_list(res.verified)
    rep["status"] = res.status
    rep["messages"].extend(res.messages)
    rep["residual"] = list(res.residual)
    rep["timing"] = {k: round(v, 4) for k, v in res.timing.items()}
    if res.status == "solved":
        code = EXIT_OK
    elif res.status in ("not-covered", "hypothesis-failure") or res.case.kind == NOT_COVERED and res.status != "refused":
        code = EXIT_NOT_COVERED
    else:
        code = EXIT_VERIFY
    return rep, code


# ---------------------------------------------------------------------------
# command line


def _summary(rep: dict) -> str:
    lines = [f"{rep['command']}: {rep['input']['file']}  [{rep['status']}]"]
    if rep["structure"]:
        lines.append(f"  algebra: dim {rep['structure']['dimension']} over {rep['structure']['field']}")
        lines += [f"    {r}" for r in rep["structure"]["relations"]]
    if rep["case"]:
        lines.append(f"  case: {rep['case']['text']}")
    if rep["pair"]:
        lines.append(f"  pair: ({rep['pair'][0]}, {rep['pair'][1]})")
    for k, v in rep["eigen"].items():
        lines.append(f"  {k}: {v}")
    T = rep["transformation"]
    if T:
        lines.append(f"  transformation: X = {T['X']}, Y = {T['Y']}")
        if T["inverse"]:
            lines.append(f"  inverse: x = {T['inverse']['x']}, y = {T['inverse']['y']}")
    if rep["target"]:
        lines.append(f"  target: {rep['target']['equation']}")
    for v in rep["verdicts"]:
        lines.append(f"  {v['check']}: {v['verdict']}")
    for m in rep["messages"]:
        lines.append(f"  note: {m}")
    for r in rep["residual"]:
        lines.append(f"  unsolved: {r}")
    return "\n".join(lines)


def _param(text: str):
    m = re.match(r"^([A-Za-z_]\w*)=([-+]?\d+(?:/\d+)?)$", text.strip())
    if not m:
        raise argparse.ArgumentTypeError(f"expected name=rational, got '{text}'")
    return m.group(1), Fraction(m.group(2))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lielin", description="Linearize ODEs from their point-symmetry algebras.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("check", "verify closure and symmetry of the generators"),
        ("classify", "classify the symmetry algebra"),
        ("linearize", "compute and certify a linearizing transformation"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("file")
        p.add_argument("--json", metavar="PATH", help="write the JSON report here ('-' for stdout)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--param", type=_param, action="append", default=[], metavar="NAME=RATIONAL")
        if name == "linearize":
            p.add_argument("--force", action="store_true", help="continue past failed symmetry checks")
            p.add_argument(
                "--no-integrate", action="store_true", help="verify the file's transform instead of computing one"
            )
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        prob = load_problem(args.file, dict(args.param) or None)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.command == "check":
        rep, code = run_check(prob, args.seed)
    elif args.command == "classify":
        rep, code = run_classify(prob, args.seed)
    else:
        if args.no_integrate and prob.transform is None:
            print(f"error: {prob.path}: --no-integrate needs a 'transform:' line", file=sys.stderr)
            return EXIT_INPUT
        rep, code = run_linearize(prob, args.seed, args.force or None, False if args.no_integrate else None)
    if args.json == "-":
        print(json.dumps(rep, indent=2))
    else:
        print(_summary(rep))
        if args.json:
            Path(args.json).write_text(json.dumps(rep, indent=2) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
