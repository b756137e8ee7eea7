"""Model exchange formats: LP text and fixed-format MPS.

Emission is byte-deterministic.  ``parse_model`` reads back our own
emissions (either format), recovering variables, bounds, integrality,
rows, and objective, so external adapters and the solution checker can
work from files alone.
"""

from __future__ import annotations

from ..milp.model import MilpModel
from ..milp.variables import VarDef, VariableIndex, VariableKey

MPS_NAME_LIMIT = 8


class NameLengthError(ValueError):
    """A name does not fit fixed-format MPS; use lp-text instead."""


class ModelFormatError(ValueError):
    """Model file is not in a recognized/parseable format."""


def _num(x: float) -> str:
    return repr(float(x))


def _terms_text(terms, names) -> str:
    parts = []
    for col, coef in terms:
        if coef >= 0:
            parts.append(f"+ {_num(coef)} {names[col]}")
        else:
            parts.append(f"- {_num(-coef)} {names[col]}")
    return " ".join(parts)


def emit_model(model: MilpModel, fmt: str = "lp") -> str:
    """Serialize ``model``; ``fmt`` is "lp" (default) or "mps"."""
    if fmt == "lp":
        return _emit_lp(model)
    if fmt == "mps":
        return _emit_mps(model)
    raise ValueError(f"unknown model format {fmt!r}; expected 'lp' or 'mps'")


def _emit_lp(model: MilpModel) -> str:
    names = [d.name for d in model.index.defs]
    out = ["\\ gridshield model"]
    out.append("Minimize")
    obj = sorted(model.objective.items())
    out.append(" obj: " + (_terms_text(obj, names) if obj else "+ 0.0 " + names[0]))
    out.append("Subject To")
    for row in model.constraints:
        if not row.terms:
            raise ValueError(f"row {row.name} has no terms")
        op = {"<=": "<=", ">=": ">=", "=": "="}[row.sense]
        out.append(f" {row.name}: {_terms_text(row.terms, names)} {op} {_num(row.rhs)}")
    out.append("Bounds")
    for d in model.index.defs:
        out.append(f" {_num(d.lb)} <= {d.name} <= {_num(d.ub)}")
    binaries = [d.name for d in model.index.defs if d.binary]
    if binaries:
        out.append("Binaries")
        for name in binaries:
            out.append(f" {name}")
    out.append("End")
    return "\n".join(out) + "\n"


def _mps_name(name: str) -> str:
    if len(name) > MPS_NAME_LIMIT:
        raise NameLengthError(
            f"name {name!r} exceeds {MPS_NAME_LIMIT} characters allowed by "
            f"fixed-format MPS; emit as lp-text instead")
    return name


def _emit_mps(model: MilpModel) -> str:
    names = [_mps_name(d.name) for d in model.index.defs]
    for row in model.constraints:
        _mps_name(row.name)
    sense_code = {"<=": "L", ">=": "G", "=": "E"}
    out = ["NAME          GRIDSHLD", "ROWS", " N  COST"]
    for row in model.constraints:
        out.append(f" {sense_code[row.sense]}  {row.name}")
    # column-major entries: objective first, then each row this column hits
    by_col: dict[int, list[tuple[str, float]]] = {i: [] for i in range(len(names))}
    for col, coef in sorted(model.objective.items()):
        by_col[col].append(("COST", coef))
    for row in model.constraints:
        for col, coef in row.terms:
            by_col[col].append((row.name, coef))
    out.append("COLUMNS")
    in_int = False
    marker = 0
    for i, d in enumerate(model.index.defs):
        if d.binary != in_int:
            kind = "INTORG" if d.binary else "INTEND"
            out.append(f"    MARKER{marker:02d}  'MARKER'                 '{kind}'")
            marker += 1
            in_int = d.binary
        entries = by_col[i]
        if not entries:
            entries = [("COST", 0.0)]
        for rname, coef in entries:
            out.append(f"    {names[i]:<8}  {rname:<8}  {_num(coef)}")
    if in_int:
        out.append(f"    MARKER{marker:02d}  'MARKER'                 'INTEND'")
    out.append("RHS")
    for row in model.constraints:
        if row.rhs != 0.0:
            out.append(f"    RHS       {row.name:<8}  {_num(row.rhs)}")
    out.append("BOUNDS")
    for i, d in enumerate(model.index.defs):
        if d.lb == d.ub:
            out.append(f" FX BND       {names[i]:<8}  {_num(d.lb)}")
        elif d.binary and d.lb == 0.0 and d.ub == 1.0:
            out.append(f" BV BND       {names[i]:<8}")
        else:
            out.append(f" LO BND       {names[i]:<8}  {_num(d.lb)}")
            out.append(f" UP BND       {names[i]:<8}  {_num(d.ub)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Parsing (round trip of our own emissions)
# ---------------------------------------------------------------------------

def _parsed_index(order, bounds, binaries) -> VariableIndex:
    defs = []
    for name in order:
        lb, ub = bounds[name]
        defs.append(VarDef(VariableKey("parsed", None, None, (name,)),
                           name, lb, ub, name in binaries))
    return VariableIndex(defs)


def _tag_of(row_name: str) -> str:
    return row_name.split(".", 1)[0]


def parse_model(text: str) -> MilpModel:
    """Parse an emitted model file (LP or MPS, auto-detected)."""
    stripped = text.lstrip()
    if stripped.startswith("NAME") or stripped.startswith("ROWS"):
        return _parse_mps(text)
    return _parse_lp(text)


def _parse_terms(tokens, name_to_col):
    """Token stream like ['+', '1.0', 'x', '-', '2', 'y'] -> [(col, coef)]."""
    terms = []
    sign = 1.0
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok == "+":
            sign = 1.0
            i += 1
            continue
        if tok == "-":
            sign = -1.0
            i += 1
            continue
        coef = sign * float(tok)
        name = tokens[i + 1]
        if name not in name_to_col:
            raise ModelFormatError(f"term references unknown variable {name!r}")
        terms.append((name_to_col[name], coef))
        sign = 1.0
        i += 2
    return terms


def _parse_lp(text: str) -> MilpModel:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("\\")]
    section = None
    obj_tokens: list[str] = []
    rows: list[tuple[str, list[str], str, float]] = []
    order: list[str] = []
    bounds: dict[str, tuple[float, float]] = {}
    binaries: set[str] = set()
    for ln in lines:
        low = ln.lower()
        if low in ("minimize", "maximize"):
            if low == "maximize":
                raise ModelFormatError("only minimization models are emitted")
            section = "obj"
            continue
        if low == "subject to":
            section = "rows"
            continue
        if low == "bounds":
            section = "bounds"
            continue
        if low in ("binaries", "binary"):
            section = "bin"
            continue
        if low in ("generals", "general"):
            section = "gen"
            continue
        if low == "end":
            break
        if section == "obj":
            # emissions always put signs as standalone tokens, so plain
            # whitespace splitting is safe (exponents like 1e-06 survive)
            body = ln.split(":", 1)[1] if ":" in ln else ln
            obj_tokens.extend(body.split())
        elif section == "rows":
            if ":" not in ln:
                raise ModelFormatError(f"constraint line missing name: {ln!r}")
            name, body = ln.split(":", 1)
            for op in ("<=", ">=", "="):
                if f" {op} " in body:
                    expr, rhs = body.rsplit(f" {op} ", 1)
                    rows.append((name.strip(), expr.split(), op, float(rhs)))
                    break
            else:
                raise ModelFormatError(f"constraint line missing sense: {ln!r}")
        elif section == "bounds":
            parts = ln.split()
            if len(parts) == 5 and parts[1] == "<=" and parts[3] == "<=":
                name = parts[2]
                lo, hi = float(parts[0]), float(parts[4])
            elif len(parts) == 3 and parts[1] == "=":
                name = parts[0]
                lo = hi = float(parts[2])
            elif len(parts) == 2 and parts[1].lower() == "free":
                name = parts[0]
                lo, hi = -float("inf"), float("inf")
            else:
                raise ModelFormatError(f"unsupported bounds line: {ln!r}")
            if name not in bounds:
                order.append(name)
            bounds[name] = (lo, hi)
        elif section == "bin":
            binaries.add(ln.split()[0])
        elif section == "gen":
            raise ModelFormatError("general integer variables are not supported")
    index = _parsed_index(order, bounds, binaries)
    model = MilpModel(index, meta={"parsed_from": "lp"})
    name_to_col = {d.name: i for i, d in enumerate(index.defs)}
    for col, coef in _parse_terms(obj_tokens, name_to_col):
        model.add_objective_term(col, coef)
    for name, tokens, op, rhs in rows:
        model.add_constraint(name, _parse_terms(tokens, name_to_col), op, rhs,
                             _tag_of(name))
    return model


def _parse_mps(text: str) -> MilpModel:
    section = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    col_entries: dict[str, list[tuple[str, float]]] = {}
    col_order: list[str] = []
    integer_cols: set[str] = set()
    rhs: dict[str, float] = {}
    bounds: dict[str, list] = {}
    in_int = False
    obj_row = None
    for raw in text.splitlines():
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        if not raw.startswith((" ", "\t")):
            section = raw.split()[0]
            if section == "ENDATA":
                break
            continue
        parts = raw.split()
        if section == "ROWS":
            code, name = parts[0], parts[1]
            if code == "N":
                obj_row = name
            else:
                row_sense[name] = {"L": "<=", "G": ">=", "E": "="}[code]
                row_order.append(name)
        elif section == "COLUMNS":
            if len(parts) >= 3 and parts[1] == "'MARKER'":
                in_int = parts[2] == "'INTORG'"
                continue
            col = parts[0]
            if col not in col_entries:
                col_entries[col] = []
                col_order.append(col)
                if in_int:
                    integer_cols.add(col)
            for j in range(1, len(parts) - 1, 2):
                col_entries[col].append((parts[j], float(parts[j + 1])))
        elif section == "RHS":
            for j in range(1, len(parts) - 1, 2):
                rhs[parts[j]] = float(parts[j + 1])
        elif section == "BOUNDS":
            kind, name = parts[0], parts[2]
            entry = bounds.setdefault(name, [0.0, float("inf")])
            if kind == "FX":
                entry[0] = entry[1] = float(parts[3])
            elif kind == "BV":
                entry[0], entry[1] = 0.0, 1.0
            elif kind == "LO":
                entry[0] = float(parts[3])
            elif kind == "UP":
                entry[1] = float(parts[3])
            elif kind == "MI":
                entry[0] = -float("inf")
            elif kind == "PL":
                entry[1] = float("inf")
            else:
                raise ModelFormatError(f"unsupported bound type {kind!r}")
    bmap = {}
    for name in col_order:
        default_hi = 1.0 if name in integer_cols else float("inf")
        lo, hi = bounds.get(name, [0.0, default_hi])
        bmap[name] = (lo, hi)
    index = _parsed_index(col_order, bmap, integer_cols)
    model = MilpModel(index, meta={"parsed_from": "mps"})
    name_to_col = {d.name: i for i, d in enumerate(index.defs)}
    row_terms: dict[str, list[tuple[int, float]]] = {name: [] for name in row_order}
    for col in col_order:
        for row_name, coef in col_entries[col]:
            if row_name == obj_row:
                if coef != 0.0:
                    model.add_objective_term(name_to_col[col], coef)
            else:
                row_terms[row_name].append((name_to_col[col], coef))
    for name in row_order:
        model.add_constraint(name, row_terms[name], row_sense[name],
                             rhs.get(name, 0.0), _tag_of(name))
    return model


def model_signature(model: MilpModel) -> dict:
    """Structural fingerprint used by round-trip tests: everything except
    internal keys, tags, and ordering metadata."""
    names = [d.name for d in model.index.defs]
    return {
        "variables": {
            d.name: (d.lb, d.ub, d.binary) for d in model.index.defs
        },
        "objective": {
            names[col]: coef for col, coef in sorted(model.objective.items())
        },
        "rows": {
            row.name: (
                tuple((names[col], coef) for col, coef in row.terms),
                row.sense,
                row.rhs,
            )
            for row in model.constraints
        },
    }
