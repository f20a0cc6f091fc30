"""Direct span programs: construction, normalization and witness sizes.

A direct span program has one input vector (column of ``A``) per input bit.
The target is always the first standard basis vector.  Column ``j`` is
available when its label ``chi_j`` is 1, where ``chi_j = x_j`` if
``polarity[j]`` is true and ``chi_j = 1 - x_j`` otherwise.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

TOL = 1e-9
TRIVIAL_TOL = 1e-6

KINDS = ("threshold", "negated_threshold", "custom")


class SpanProgramError(ValueError):
    """Raised for invalid function specs or degenerate span programs."""


def input_bits(code: int, arity: int) -> tuple[int, ...]:
    """Bits of an input code, most significant bit is input 0."""
    return tuple((code >> (arity - 1 - j)) & 1 for j in range(arity))


def input_code(bits) -> int:
    code = 0
    for b in bits:
        code = (code << 1) | int(b)
    return code


@dataclass(frozen=True)
class DirectFunctionSpec:
    arity: int
    kind: str
    h: int | None = None
    truth_table: tuple[int, ...] | None = None
    polarity: tuple[bool, ...] | None = None
    matrix: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        if self.arity < 2:
            raise SpanProgramError(f"arity must be >= 2, got {self.arity}")
        if self.kind not in KINDS:
            raise SpanProgramError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("threshold", "negated_threshold"):
            if self.h is None or not 1 <= self.h <= self.arity:
                raise SpanProgramError(f"threshold h must lie in 1..{self.arity}, got {self.h}")
        else:
            if self.truth_table is None or len(self.truth_table) != 2**self.arity:
                raise SpanProgramError("custom kind needs a truth table of length 2**arity")
            object.__setattr__(self, "truth_table", tuple(int(b) & 1 for b in self.truth_table))
        if self.polarity is not None:
            if len(self.polarity) != self.arity:
                raise SpanProgramError("polarity must have one flag per input")
            object.__setattr__(self, "polarity", tuple(bool(p) for p in self.polarity))
        if self.matrix is not None:
            object.__setattr__(self, "matrix", tuple(tuple(float(v) for v in row) for row in self.matrix))

    @classmethod
    def nand(cls) -> "DirectFunctionSpec":
        return cls(arity=2, kind="negated_threshold", h=2)

    @classmethod
    def threshold(cls, arity: int, h: int) -> "DirectFunctionSpec":
        return cls(arity=arity, kind="threshold", h=h)

    @classmethod
    def majority(cls, arity: int = 3) -> "DirectFunctionSpec":
        return cls(arity=arity, kind="threshold", h=arity // 2 + 1)

    def evaluate(self, bits) -> int:
        """Reference truth-table evaluation (no span program involved)."""
        bits = tuple(int(b) for b in bits)
        if len(bits) != self.arity:
            raise SpanProgramError(f"expected {self.arity} input bits, got {len(bits)}")
        if self.kind == "custom":
            return self.truth_table[input_code(bits)]
        pol = self.polarity or (True,) * self.arity
        count = sum(b if p else 1 - b for b, p in zip(bits, pol))
        value = int(count >= self.h)
        return 1 - value if self.kind == "negated_threshold" else value

    def table(self) -> np.ndarray:
        return np.array([self.evaluate(input_bits(code, self.arity)) for code in range(2**self.arity)],
                        dtype=np.int8)

    def to_dict(self) -> dict:
        out = {"arity": self.arity, "kind": self.kind}
        if self.h is not None:
            out["h"] = self.h
        if self.truth_table is not None:
            out["truth_table"] = list(self.truth_table)
        if self.polarity is not None:
            out["polarity"] = list(self.polarity)
        if self.matrix is not None:
            out["matrix"] = [list(row) for row in self.matrix]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DirectFunctionSpec":
        kind = data.get("kind")
        if kind == "nand":
            return cls.nand()
        unknown = set(data) - {"arity", "kind", "h", "truth_table", "polarity", "matrix"}
        if unknown:
            raise SpanProgramError(f"unknown function spec fields: {sorted(unknown)}")
        return cls(
            arity=int(data["arity"]),
            kind=kind,
            h=data.get("h"),
            truth_table=tuple(data["truth_table"]) if data.get("truth_table") is not None else None,
            polarity=tuple(data["polarity"]) if data.get("polarity") is not None else None,
            matrix=tuple(map(tuple, data["matrix"])) if data.get("matrix") is not None else None,
        )


@dataclass(frozen=True)
class SpanProgram:
    matrix: np.ndarray
    polarity: tuple[bool, ...]
    normalized: bool = False

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        if A.ndim != 2 or A.shape[1] != len(self.polarity):
            raise SpanProgramError("matrix must have one column per input")
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "polarity", tuple(bool(p) for p in self.polarity))

    @property
    def arity(self) -> int:
        return self.matrix.shape[1]

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    def chi(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.int8)
        if x.shape != (self.arity,):
            raise SpanProgramError(f"expected {self.arity} input bits")
        pol = np.array(self.polarity)
        return np.where(pol, x, 1 - x).astype(np.int8)

    @property
    def x0(self) -> tuple[int, ...]:
        """Input making every label 0."""
        return tuple(0 if p else 1 for p in self.polarity)

    @property
    def x1(self) -> tuple[int, ...]:
        """Input making every label 1."""
        return tuple(1 if p else 0 for p in self.polarity)

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.tolist(), "polarity": list(self.polarity),
                "normalized": self.normalized}

    @classmethod
    def from_dict(cls, data: dict) -> "SpanProgram":
        return cls(np.array(data["matrix"], dtype=float), tuple(data["polarity"]),
                   bool(data.get("normalized", False)))


@dataclass(frozen=True)
class WitnessReport:
    value: float
    witness: np.ndarray
    branch: str
    costs: np.ndarray


@dataclass(frozen=True)
class FunctionAnalysis:
    """Witness sizes and trivial/fault/strong classification for all inputs.

    Arrays are indexed by input code (see :func:`input_code`).
    """

    program: SpanProgram
    omega: float
    values: np.ndarray
    wsize: np.ndarray
    trivial: np.ndarray
    strong: np.ndarray = field(repr=False)

    @property
    def arity(self) -> int:
        return self.program.arity

    def per_input(self) -> dict:
        out = {}
        for code in range(2**self.arity):
            bits = "".join(map(str, input_bits(code, self.arity)))
            out[bits] = {
                "value": int(self.values[code]),
                "wsize": float(self.wsize[code]),
                "trivial": bool(self.trivial[code]),
                "strong": [bool(s) for s in self.strong[code]],
            }
        return out

    def to_dict(self) -> dict:
        return {"omega": float(self.omega), "program": self.program.to_dict(),
                "per_input": self.per_input()}


def _rank(M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    return int(np.linalg.matrix_rank(M, tol=TOL))


def _in_span(A: np.ndarray, cols, target: np.ndarray) -> bool:
    cols = list(cols)
    if not cols:
        return bool(np.linalg.norm(target) <= TOL)
    sub = A[:, cols]
    return _rank(np.column_stack([sub, target])) == _rank(sub)


def sp_evaluate(p: SpanProgram, x) -> int:
    """1 iff the target lies in the span of the available columns."""
    chi = p.chi(x)
    t = np.zeros(p.rows)
    t[0] = 1.0
    return int(_in_span(p.matrix, np.flatnonzero(chi), t))


def vandermonde_columns(arity: int, h: int) -> np.ndarray:
    nodes = np.arange(1, arity + 1, dtype=float)
    return np.vander(nodes, h, increasing=True).T


def _check_threshold_columns(A: np.ndarray, h: int) -> None:
    c = A.shape[1]
    t = np.zeros(A.shape[0])
    t[0] = 1.0
    for size in (h - 1, h):
        if size < 1:
            continue
        for cols in itertools.combinations(range(c), size):
            if _in_span(A, cols, t) != (size == h):
                raise SpanProgramError(f"threshold realization not in generic position at columns {cols}")


def _direct_polarities(table: np.ndarray, arity: int) -> list[tuple[bool, ...]]:
    """Polarity assignments under which the truth table is direct."""
    found = []
    for pol in itertools.product((True, False), repeat=arity):
        def g(chi):
            x = tuple(c if p else 1 - c for c, p in zip(chi, pol))
            return int(table[input_code(x)])
        if g((0,) * arity) != 0 or g((1,) * arity) != 1:
            continue
        monotone = True
        for code in range(2**arity):
            chi = input_bits(code, arity)
            if g(chi) == 0:
                continue
            for j in range(arity):
                if chi[j] == 0:
                    up = chi[:j] + (1,) + chi[j + 1:]
                    if g(up) == 0:
                        monotone = False
                        break
            if not monotone:
                break
        if monotone:
            found.append(pol)
    return found


def _threshold_of(table: np.ndarray, arity: int, pol) -> int | None:
    for h in range(1, arity + 1):
        ok = True
        for code in range(2**arity):
            x = input_bits(code, arity)
            count = sum(b if p else 1 - b for b, p in zip(x, pol))
            if int(count >= h) != int(table[code]):
                ok = False
                break
        if ok:
            return h
    return None


def build_program(spec: DirectFunctionSpec) -> SpanProgram:
    """Span program realizing ``spec``.

    Thresholds over the labels use Vandermonde columns ``(1, a, ..., a**(h-1))``
    with nodes ``a = 1..c``; a negated threshold ``h`` is the threshold
    ``c - h + 1`` over the complemented labels.
    """
    c = spec.arity
    if spec.kind == "custom":
        table = spec.table()
        pols = [spec.polarity] if spec.polarity is not None else _direct_polarities(table, c)
        if spec.polarity is not None and spec.polarity not in _direct_polarities(table, c):
            pols = []
        if not pols:
            raise SpanProgramError("truth table is not a direct boolean function under any polarity")
        if spec.matrix is not None:
            prog = SpanProgram(np.array(spec.matrix), pols[0])
            _check_represents(prog, table)
            return prog
        for pol in pols:
            h = _threshold_of(table, c, pol)
            if h is not None:
                A = vandermonde_columns(c, h)
                _check_threshold_columns(A, h)
                return SpanProgram(A, pol)
        raise SpanProgramError("direct truth table is not a threshold of its labels; supply an explicit matrix")

    base = spec.polarity or (True,) * c
    if spec.kind == "threshold":
        h, pol = spec.h, base
    else:
        h, pol = c - spec.h + 1, tuple(not p for p in base)
    A = vandermonde_columns(c, h)
    _check_threshold_columns(A, h)
    return SpanProgram(A, pol)


def _check_represents(p: SpanProgram, table: np.ndarray) -> None:
    for code in range(2**p.arity):
        if sp_evaluate(p, input_bits(code, p.arity)) != int(table[code]):
            raise SpanProgramError(f"matrix does not represent the truth table at input {code}")


def normalize_trivial(p: SpanProgram) -> SpanProgram:
    """Project ``r0`` off the other rows and rescale it to unit length."""
    A = p.matrix.copy()
    r0 = A[0]
    others = A[1:]
    if others.shape[0]:
        basis = null_space(others).T  # orthonormal complement of the row space
        proj = basis.T @ (basis @ r0) if basis.size else np.zeros_like(r0)
    else:
        proj = r0
    norm = np.linalg.norm(proj)
    if norm <= TOL:
        raise SpanProgramError("r0 lies in the span of the other rows; program is degenerate")
    A[0] = proj / norm
    return SpanProgram(A, p.polarity, normalized=True)


def _min_weighted_norm(G: np.ndarray, u: np.ndarray, costs: np.ndarray,
                       B: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """argmin_y sum_j costs_j (u + G y)_j**2 subject to B y = rhs."""
    n = G.shape[1]
    if B.shape[0]:
        y0, *_ = np.linalg.lstsq(B, rhs, rcond=None)
        if np.linalg.norm(B @ y0 - rhs) > TOL:
            raise SpanProgramError("witness constraints are infeasible")
        N = null_space(B)
    else:
        y0 = np.zeros(n)
        N = np.eye(n)
    if N.shape[1] == 0:
        return y0
    d = np.sqrt(costs)
    z, *_ = np.linalg.lstsq(d[:, None] * (G @ N), -d * (u + G @ y0), rcond=None)
    return y0 + N @ z


def witness_size(p: SpanProgram, x, costs=None, branch: str | None = None) -> WitnessReport:
    """Cost-weighted witness size of ``p`` on input ``x``.

    ``branch`` defaults to the one selected by :func:`sp_evaluate`; forcing
    the other branch raises :class:`SpanProgramError` (it is infeasible).
    """
    c = p.arity
    s = np.ones(c) if costs is None else np.asarray(costs, dtype=float)
    if s.shape != (c,) or np.any(s < 0):
        raise SpanProgramError("costs must be a nonnegative vector with one entry per input")
    chi = p.chi(x)
    if branch is None:
        branch = "true_case" if sp_evaluate(p, x) else "false_case"
    A = p.matrix
    if branch == "true_case":
        avail = np.flatnonzero(chi == 1)
        G = np.eye(c)[:, avail]
        e = np.zeros(p.rows)
        e[0] = 1.0
        y = _min_weighted_norm(G, np.zeros(c), s, A[:, avail], e)
        w = G @ y
    elif branch == "false_case":
        blocked = np.flatnonzero(chi == 1)
        R1 = A[1:]
        G = R1.T
        B = R1[:, blocked].T
        y = _min_weighted_norm(G, A[0], s, B, -A[0, blocked])
        w = A[0] + G @ y
    else:
        raise SpanProgramError(f"unknown branch {branch!r}")
    return WitnessReport(float(np.sum(s * w**2)), w, branch, s)


def analyze(p: SpanProgram) -> FunctionAnalysis:
    c = p.arity
    n_inputs = 2**c
    values = np.zeros(n_inputs, dtype=np.int8)
    wsize = np.zeros(n_inputs)
    strong = np.zeros((n_inputs, c), dtype=bool)
    for code in range(n_inputs):
        x = input_bits(code, c)
        values[code] = sp_evaluate(p, x)
        wsize[code] = witness_size(p, x).value
        strong[code] = p.chi(x) == values[code]
    # wsize below 1 is not a fault either; the classification only separates out costly inputs
    trivial = wsize <= 1.0 + TRIVIAL_TOL
    return FunctionAnalysis(p, float(wsize.max()), values, wsize, trivial, strong)


def analyze_spec(spec: DirectFunctionSpec) -> FunctionAnalysis:
    """Build, normalize and analyze in one step."""
    return analyze(normalize_trivial(build_program(spec)))


def dumps_spec(spec: DirectFunctionSpec) -> str:
    return json.dumps(spec.to_dict(), sort_keys=True)
