"""Instance types and their text formats (blp1/v1 JSON, DIMACS CNF, ILP JSON)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence, Union

from .exact_arith import NonCanonicalRational, format_rational, parse_rational

FORMAT_TAG = "blp1/v1"


class FormatError(ValueError):
    """Malformed document or schema violation."""


def _frac(v) -> Fraction:
    return v if type(v) is Fraction else Fraction(v)


def _vec(values) -> tuple:
    return tuple(map(_frac, values))


def _mat(rows) -> tuple:
    return tuple(_vec(r) for r in rows)


@dataclass(frozen=True)
class BlpSingle:
    """min c21.x1 + c22*x2 over x1 in argmin{c11.x1' : A11 x1' + A12 x2 >= b1,
    0 <= x1' <= 1, 0 <= x2 <= 1}.

    The unit boxes on x1 and x2 are implicit and never stored in A11.
    """

    n: int
    m: int
    c11: tuple
    c21: tuple
    c22: Fraction
    A11: tuple
    A12: tuple
    b1: tuple
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "c11", _vec(self.c11))
        object.__setattr__(self, "c21", _vec(self.c21))
        object.__setattr__(self, "c22", Fraction(self.c22))
        object.__setattr__(self, "A11", _mat(self.A11))
        object.__setattr__(self, "A12", _vec(self.A12))
        object.__setattr__(self, "b1", _vec(self.b1))
        if len(self.c11) != self.n or len(self.c21) != self.n:
            raise FormatError("cost vectors must have length n")
        if len(self.A11) != self.m or len(self.A12) != self.m or len(self.b1) != self.m:
            raise FormatError("constraint data must have m rows")
        if any(len(row) != self.n for row in self.A11):
            raise FormatError("A11 rows must have length n")


@dataclass(frozen=True)
class BlpGeneral:
    """Bilevel LP with plain upper rows (A21, A22, b2) and penalizable upper
    rows (Ab21, Ab22, bb2).  No implicit bounds on any variable."""

    c11: tuple
    A11: tuple
    A12: tuple
    b1: tuple
    c21: tuple
    c22: tuple
    A21: tuple
    A22: tuple
    b2: tuple
    Ab21: tuple = ()
    Ab22: tuple = ()
    bb2: tuple = ()
    lower_names: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("c11", "b1", "c21", "c22", "b2", "bb2"):
            object.__setattr__(self, name, _vec(getattr(self, name)))
        for name in ("A11", "A12", "A21", "A22", "Ab21", "Ab22"):
            object.__setattr__(self, name, _mat(getattr(self, name)))
        n1, n2 = len(self.c11), len(self.c22)
        if len(self.c21) != n1:
            raise FormatError("c21 must match the lower variable count")
        for A, B, rhs, tag in (
            (self.A11, self.A12, self.b1, "lower"),
            (self.A21, self.A22, self.b2, "upper"),
            (self.Ab21, self.Ab22, self.bb2, "penalizable"),
        ):
            if len(A) != len(rhs) or len(B) != len(rhs):
                raise FormatError(f"{tag} block row counts disagree")
            if any(len(r) != n1 for r in A) or any(len(r) != n2 for r in B):
                raise FormatError(f"{tag} block column counts disagree")

    @property
    def n1(self) -> int:
        return len(self.c11)

    @property
    def n2(self) -> int:
        return len(self.c22)

    @property
    def m1(self) -> int:
        return len(self.b1)

    @property
    def m2(self) -> int:
        return len(self.b2)

    @property
    def m2p(self) -> int:
        return len(self.bb2)


@dataclass(frozen=True)
class LexLp:
    """Equality rows A x = b, bounds lo <= x <= hi (None = infinite), and an
    ordered list of cost vectors minimized lexicographically."""

    nvars: int
    A: tuple
    b: tuple
    lo: tuple
    hi: tuple
    objectives: tuple
    names: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "A", _mat(self.A))
        object.__setattr__(self, "b", _vec(self.b))
        object.__setattr__(self, "lo", tuple(None if v is None else _frac(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(None if v is None else _frac(v) for v in self.hi))
        object.__setattr__(self, "objectives", _mat(self.objectives))
        if not self.objectives:
            raise FormatError("a LexLp needs at least one objective")
        if any(len(c) != self.nvars for c in self.objectives):
            raise FormatError("objective length must equal the variable count")
        if len(self.lo) != self.nvars or len(self.hi) != self.nvars:
            raise FormatError("bounds must cover every variable")
        if len(self.A) != len(self.b) or any(len(r) != self.nvars for r in self.A):
            raise FormatError("equality block has inconsistent dimensions")

    def with_objectives(self, objectives) -> "LexLp":
        return LexLp(self.nvars, self.A, self.b, self.lo, self.hi, tuple(objectives), self.names)

    def with_fixed(self, column: int, value) -> "LexLp":
        lo = list(self.lo)
        hi = list(self.hi)
        lo[column] = hi[column] = Fraction(value)
        return LexLp(self.nvars, self.A, self.b, tuple(lo), tuple(hi), self.objectives, self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True)
class Cnf:
    nvars: int
    clauses: tuple

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(tuple(int(l) for l in c) for c in self.clauses))
        for clause in self.clauses:
            if not clause:
                raise FormatError("empty clause")
            if len(clause) > 3:
                raise FormatError(f"clause length {len(clause)} > 3: {clause}")
            for lit in clause:
                if lit == 0 or abs(lit) > self.nvars:
                    raise FormatError(f"literal {lit} out of range 1..{self.nvars}")

    @property
    def p(self) -> int:
        return len(self.clauses)

    def satisfied_by(self, mu: Sequence[int]) -> bool:
        return all(any((mu[abs(l) - 1] == 1) == (l > 0) for l in c) for c in self.clauses)


@dataclass(frozen=True)
class ZeroOneIlp:
    """min c.z s.t. A z >= a, z binary."""

    r: int
    c: tuple
    A: tuple
    a: tuple

    def __post_init__(self):
        object.__setattr__(self, "c", _vec(self.c))
        object.__setattr__(self, "A", _mat(self.A))
        object.__setattr__(self, "a", _vec(self.a))
        if len(self.c) != self.r:
            raise FormatError("c must have length r")
        if len(self.A) != len(self.a) or any(len(row) != self.r for row in self.A):
            raise FormatError("A/a dimensions disagree")

    @property
    def m(self) -> int:
        return len(self.a)


# -- DIMACS -----------------------------------------------------------------


def parse_dimacs(data: Union[bytes, str]) -> Cnf:
    """Parse a DIMACS CNF document (clauses may span lines, 0-terminated)."""
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    header = None
    clauses = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if header is not None:
                raise FormatError(f"line {lineno}: duplicate header")
            if len(parts) != 4 or parts[1] != "cnf":
                raise FormatError(f"line {lineno}: malformed header {line!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError as exc:
                raise FormatError(f"line {lineno}: malformed header {line!r}") from exc
            if header[0] < 1 or header[1] < 0:
                raise FormatError(f"line {lineno}: malformed header {line!r}")
            continue
        if header is None:
            raise FormatError(f"line {lineno}: clause before header")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError as exc:
                raise FormatError(f"line {lineno}: bad literal {tok!r}") from exc
            if lit == 0:
                if not current:
                    raise FormatError(f"line {lineno}: empty clause")
                if len(current) > 3:
                    raise FormatError(f"line {lineno}: clause length {len(current)} > 3")
                clauses.append(tuple(current))
                current = []
                continue
            if abs(lit) > header[0]:
                raise FormatError(f"line {lineno}: literal {lit} out of range 1..{header[0]}")
            current.append(lit)
    if header is None:
        raise FormatError("missing 'p cnf' header")
    if current:
        # a final clause without its terminating 0 is still a clause
        if len(current) > 3:
            raise FormatError(f"clause length {len(current)} > 3")
        clauses.append(tuple(current))
    if header[1] != len(clauses):
        raise FormatError(f"header declares {header[1]} clauses, found {len(clauses)}")
    return Cnf(header[0], tuple(clauses))


def format_dimacs(cnf: Cnf) -> str:
    lines = [f"p cnf {cnf.nvars} {cnf.p}"]
    lines += [" ".join(str(l) for l in c) + " 0" for c in cnf.clauses]
    return "\n".join(lines) + "\n"


# -- blp1/v1 ----------------------------------------------------------------


def _scalar(value: Any, where: str) -> Fraction:
    if not isinstance(value, str):
        raise FormatError(f"{where}: scalars must be 'p/q' strings")
    try:
        return parse_rational(value)
    except NonCanonicalRational as exc:
        raise FormatError(f"{where}: non-canonical rational {value!r}") from exc
    except ValueError as exc:
        raise FormatError(f"{where}: {exc}") from exc


def _scalars(values: Any, length: Optional[int], where: str) -> list:
    if not isinstance(values, list):
        raise FormatError(f"{where}: expected an array")
    if length is not None and len(values) != length:
        raise FormatError(f"{where}: expected {length} entries, got {len(values)}")
    return [_scalar(v, f"{where}[{i}]") for i, v in enumerate(values)]


def _meta_to_json(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, dict):
        return {str(k): _meta_to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_meta_to_json(v) for v in obj]
    return obj


def instance_to_dict(inst: BlpSingle) -> dict:
    doc = {
        "format": FORMAT_TAG,
        "n": inst.n,
        "m": inst.m,
        "c11": [format_rational(v) for v in inst.c11],
        "c21": [format_rational(v) for v in inst.c21],
        "c22": format_rational(inst.c22),
        "A11": [[format_rational(v) for v in row] for row in inst.A11],
        "A12": [format_rational(v) for v in inst.A12],
        "b1": [format_rational(v) for v in inst.b1],
    }
    if inst.meta:
        doc["meta"] = _meta_to_json(inst.meta)
    return doc


def serialize_instance(inst: BlpSingle) -> bytes:
    return (json.dumps(instance_to_dict(inst), indent=1) + "\n").encode("utf-8")


def parse_instance(data: Union[bytes, str]) -> BlpSingle:
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("document must be an object")
    if doc.get("format") != FORMAT_TAG:
        raise FormatError(f"format must be {FORMAT_TAG!r}")
    required = ("n", "m", "c11", "c21", "c22", "A11", "A12", "b1")
    missing = [k for k in required if k not in doc]
    if missing:
        raise FormatError(f"missing fields: {missing}")
    n, m = doc["n"], doc["m"]
    if not isinstance(n, int) or not isinstance(m, int) or n < 0 or m < 0:
        raise FormatError("n and m must be non-negative integers")
    A11 = doc["A11"]
    if not isinstance(A11, list) or len(A11) != m:
        raise FormatError(f"A11: expected {m} rows")
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise FormatError("meta must be an object")
    return BlpSingle(
        n=n,
        m=m,
        c11=_scalars(doc["c11"], n, "c11"),
        c21=_scalars(doc["c21"], n, "c21"),
        c22=_scalar(doc["c22"], "c22"),
        A11=[_scalars(row, n, f"A11[{i}]") for i, row in enumerate(A11)],
        A12=_scalars(doc["A12"], m, "A12"),
        b1=_scalars(doc["b1"], m, "b1"),
        meta=meta,
    )


def parse_ilp(data: Union[bytes, str]) -> ZeroOneIlp:
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not JSON: {exc}") from exc
    if not isinstance(doc, dict) or not all(k in doc for k in ("r", "c", "A", "a")):
        raise FormatError("ILP document needs fields r, c, A, a")
    r = doc["r"]
    if not isinstance(r, int) or r < 1:
        raise FormatError("r must be a positive integer")
    rows = doc["A"]
    if not isinstance(rows, list):
        raise FormatError("A must be an array of rows")
    a = _scalars(doc["a"], len(rows), "a")
    return ZeroOneIlp(
        r=r,
        c=_scalars(doc["c"], r, "c"),
        A=[_scalars(row, r, f"A[{i}]") for i, row in enumerate(rows)],
        a=a,
    )


def serialize_ilp(ilp: ZeroOneIlp) -> bytes:
    doc = {
        "r": ilp.r,
        "c": [format_rational(v) for v in ilp.c],
        "A": [[format_rational(v) for v in row] for row in ilp.A],
        "a": [format_rational(v) for v in ilp.a],
    }
    return (json.dumps(doc, indent=1) + "\n").encode("utf-8")
