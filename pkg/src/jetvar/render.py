"""Text, LaTeX and JSON renderings of expressions.

The text form is valid theory-file syntax, so ``parse_expr(to_text(e)) == e``.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from typing import Any

from .errors import JetvarError, JetvarParseError
from .symkernel import Coord, Expr, Func, Jet, Param, as_expr

__all__ = ["to_text", "to_latex", "to_json_obj", "from_json_obj", "to_json", "from_json", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1

GREEK = {
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa", "lambda",
    "mu", "nu", "xi", "pi", "rho", "sigma", "tau", "upsilon", "phi", "chi", "psi", "omega",
    "Gamma", "Delta", "Theta", "Lambda", "Xi", "Pi", "Sigma", "Upsilon", "Phi", "Psi", "Omega",
}


# ---------------------------------------------------------------------------
# names
# ---------------------------------------------------------------------------
def _base_names(bundle, n_hint: int) -> tuple[str, ...]:
    if bundle is not None:
        return bundle.base
    return tuple(f"x{k}" for k in range(n_hint))


def _field_name(bundle, i: int) -> str:
    if bundle is not None and i < len(bundle.fields):
        return bundle.fields[i]
    return f"y{i}"


def _short_suffix_ok(base: tuple[str, ...]) -> bool:
    return all(len(b) == 1 for b in base)


def jet_text(bundle, a: Jet) -> str:
    name = _field_name(bundle, a.field)
    if a.order == 0:
        return name
    base = _base_names(bundle, len(a.mi))
    if bundle is not None and _short_suffix_ok(base):
        return name + "_" + "".join(base[s] * k for s, k in enumerate(a.mi))
    return name + "[" + ",".join(str(k) for k in a.mi) + "]"


def _coeff_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


# ---------------------------------------------------------------------------
# text
# ---------------------------------------------------------------------------
def _factor_text(f, bundle) -> str:
    if isinstance(f, Coord):
        return _base_names(bundle, f.index + 1)[f.index]
    if isinstance(f, Jet):
        return jet_text(bundle, f)
    if isinstance(f, Param):
        return f.name
    return f"{f.name}({to_text(f.arg, bundle)})"


def to_text(e, bundle=None) -> str:
    e = as_expr(e)
    bundle = bundle if bundle is not None else e.bundle
    if not e:
        return "0"
    pieces = []
    for k, (m, c) in enumerate(e.terms):
        neg = c < 0
        mag = -c if neg else c
        factors = [_factor_text(f, bundle) + (f"^{p}" if p != 1 else "") for f, p in m]
        if not factors:
            body = _coeff_text(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = _coeff_text(mag) + "*" + "*".join(factors)
        if k == 0:
            pieces.append(("-" if neg else "") + body)
        else:
            pieces.append((" - " if neg else " + ") + body)
    return "".join(pieces)


# ---------------------------------------------------------------------------
# LaTeX
# ---------------------------------------------------------------------------
_NAME_RE = re.compile(r"^([A-Za-z]+?)([0-9]*)$")


def latex_name(name: str) -> tuple[str, str]:
    """Split an identifier into a LaTeX head and a subscript payload."""
    m = _NAME_RE.match(name)
    head, digits = (m.group(1), m.group(2)) if m else (name, "")
    if head in GREEK:
        head = "\\" + head
    elif len(head) > 1:
        head = "\\mathrm{" + head + "}"
    return head, digits


def _join_sub(*parts: str) -> str:
    parts = [p for p in parts if p]
    return "_{" + ",".join(parts) + "}" if parts else ""


def _factor_latex(f, bundle) -> str:
    if isinstance(f, Coord):
        head, digits = latex_name(_base_names(bundle, f.index + 1)[f.index])
        return head + _join_sub(digits)
    if isinstance(f, Param):
        head, digits = latex_name(f.name)
        return head + _join_sub(digits)
    if isinstance(f, Jet):
        head, digits = latex_name(_field_name(bundle, f.field))
        base = _base_names(bundle, len(f.mi))
        letters = [base[s] for s, k in enumerate(f.mi) for _ in range(k)]
        if _short_suffix_ok(base):
            deriv = "".join(letters)
        else:
            deriv = "\\,".join(latex_name(x)[0] + _join_sub(latex_name(x)[1]) for x in letters)
        return head + _join_sub(digits, deriv)
    inner = to_latex(f.arg, bundle)
    return f"\\{f.name}\\left({inner}\\right)"


def _coeff_latex(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"\\frac{{{c.numerator}}}{{{c.denominator}}}"


def to_latex(e, bundle=None) -> str:
    e = as_expr(e)
    bundle = bundle if bundle is not None else e.bundle
    if not e:
        return "0"
    pieces = []
    for k, (m, c) in enumerate(e.terms):
        neg = c < 0
        mag = -c if neg else c
        factors = []
        for f, p in m:
            body = _factor_latex(f, bundle)
            if p != 1:
                if isinstance(f, Func):
                    body = "\\left(" + body + "\\right)"
                body += f"^{{{p}}}"
            factors.append(body)
        if not factors:
            body = _coeff_latex(mag)
        elif mag == 1:
            body = " ".join(factors)
        else:
            body = _coeff_latex(mag) + " " + " ".join(factors)
        if k == 0:
            pieces.append(("-" if neg else "") + body)
        else:
            pieces.append(("-" if neg else "+") + body)
    return "".join(pieces)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------
def _factor_json(f, bundle) -> dict[str, Any]:
    if isinstance(f, Coord):
        return {"coord": _base_names(bundle, f.index + 1)[f.index]}
    if isinstance(f, Jet):
        return {"field": _field_name(bundle, f.field), "mi": list(f.mi)}
    if isinstance(f, Param):
        return {"param": f.name}
    return {"func": f.name, "arg": to_json_obj(f.arg, bundle)}


def to_json_obj(e, bundle=None) -> dict[str, Any]:
    e = as_expr(e)
    bundle = bundle if bundle is not None else e.bundle
    terms = []
    for m, c in e.terms:
        atoms = []
        for f, p in m:
            entry = _factor_json(f, bundle)
            if p != 1:
                entry["pow"] = p
            atoms.append(entry)
        terms.append({"coeff": _coeff_text(c), "atoms": atoms})
    return {"terms": terms}


def from_json_obj(obj: Any, bundle) -> Expr:
    """Inverse of :func:`to_json_obj`; names are resolved against ``bundle``."""
    from .symkernel import cos, exp, sin

    funcs = {"sin": sin, "cos": cos, "exp": exp}
    try:
        total = bundle.zero()
        for term in obj["terms"]:
            coeff = Fraction(term["coeff"])
            value = bundle.lift(coeff)
            for atom in term["atoms"]:
                p = atom.get("pow", 1)
                if not isinstance(p, int) or p < 1:
                    raise JetvarParseError(f"invalid power {p!r}")
                if "coord" in atom:
                    base = bundle.coord(atom["coord"])
                elif "field" in atom:
                    base = bundle.jet(atom["field"], atom["mi"])
                elif "param" in atom:
                    base = bundle.param(atom["param"])
                elif "func" in atom:
                    if atom["func"] not in funcs:
                        raise JetvarParseError(f"unknown function {atom['func']!r}")
                    base = funcs[atom["func"]](from_json_obj(atom["arg"], bundle)).with_bundle(bundle)
                else:
                    raise JetvarParseError(f"unrecognised atom {atom!r}")
                value = value * base**p
            total = total + value
        return total
    except JetvarParseError:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError, JetvarError) as exc:
        raise JetvarParseError(f"malformed expression JSON: {exc}") from None


def to_json(e, bundle=None) -> str:
    doc = {"schema": SCHEMA_VERSION, **to_json_obj(e, bundle)}
    return json.dumps(doc, sort_keys=False, separators=(",", ":"))


def from_json(text: str, bundle) -> Expr:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise JetvarParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA_VERSION:
        raise JetvarParseError(f"expected a JSON object with \"schema\": {SCHEMA_VERSION}")
    return from_json_obj(doc, bundle)
