"""Numeric kernels for compiled expression programs.

Expressions are compiled (expr.compile_expr) to a tiny postfix bytecode;
the interpreters here are the hot path of the geodesic integrator and of
grid scans for implicit curves.  When numba is importable and the
environment variable FINSLERFLOW_DISABLE_NUMBA is unset (or "0"), the
scalar interpreters are jitted; otherwise pure Python versions are used.
Grid scans always go through the vectorized numpy interpreter.  Both
implementations are importable for testing and benchmarking: the
``_py_``-prefixed names are always the plain versions.

The kernels perform raw IEEE arithmetic: a vanishing denominator yields
inf/nan instead of raising.  The guarded evaluator is expr.evaluate.
"""

from __future__ import annotations

import os

import numpy as np

OP_CONST = 0
OP_X = 1
OP_Y = 2
OP_ADD = 3
OP_MUL = 4
OP_DIV = 5
OP_NEG = 6
OP_POW = 7

_flag = os.environ.get("FINSLERFLOW_DISABLE_NUMBA", "0")
_want_numba = _flag in ("", "0")

try:
    import numba

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False

NUMBA_ENABLED = HAS_NUMBA and _want_numba


def _py_eval_program(code, consts, x, y):
    stack = np.empty(code.size // 2 + 1, dtype=np.float64)
    top = -1
    i = 0
    while i < code.size:
        op = code[i]
        arg = code[i + 1]
        i += 2
        if op == OP_CONST:
            top += 1
            stack[top] = consts[arg]
        elif op == OP_X:
            top += 1
            stack[top] = x
        elif op == OP_Y:
            top += 1
            stack[top] = y
        elif op == OP_ADD:
            stack[top - 1] = stack[top - 1] + stack[top]
            top -= 1
        elif op == OP_MUL:
            stack[top - 1] = stack[top - 1] * stack[top]
            top -= 1
        elif op == OP_DIV:
            stack[top - 1] = stack[top - 1] / stack[top]
            top -= 1
        elif op == OP_NEG:
            stack[top] = -stack[top]
        else:
            b = stack[top]
            k = arg
            if k < 0:
                b = 1.0 / b
                k = -k
            r = 1.0
            while k > 0:
                if k & 1:
                    r *= b
                b *= b
                k >>= 1
            stack[top] = r
    return stack[0]


def _py_eval_packed(codes, coffs, consts, koffs, idx, x, y):
    code = codes[coffs[idx] : coffs[idx + 1]]
    cons = consts[koffs[idx] : koffs[idx + 1]]
    return _py_eval_program(code, cons, x, y)


def _py_eval_table_point(codes, coffs, consts, koffs, x, y, out):
    for i in range(coffs.size - 1):
        out[i] = _py_eval_packed(codes, coffs, consts, koffs, i, x, y)
    return out


def _py_horner(coeffs, p):
    acc = 0.0
    for i in range(coeffs.size - 1, -1, -1):
        acc = acc * p + coeffs[i]
    return acc


def _py_eval_poly_point(codes, coffs, consts, koffs, x, y, p):
    acc = 0.0
    for i in range(coffs.size - 2, -1, -1):
        acc = acc * p + _py_eval_packed(codes, coffs, consts, koffs, i, x, y)
    return acc


def _py_eval_program_grid(code, consts, xs, ys):
    """Vectorized interpretation: the stack holds full arrays."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    stack: list[np.ndarray] = []
    i = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        while i < code.size:
            op = code[i]
            arg = code[i + 1]
            i += 2
            if op == OP_CONST:
                stack.append(np.full(xs.shape, consts[arg]))
            elif op == OP_X:
                stack.append(xs.copy())
            elif op == OP_Y:
                stack.append(ys.copy())
            elif op == OP_ADD:
                b = stack.pop()
                stack[-1] = stack[-1] + b
            elif op == OP_MUL:
                b = stack.pop()
                stack[-1] = stack[-1] * b
            elif op == OP_DIV:
                b = stack.pop()
                stack[-1] = stack[-1] / b
            elif op == OP_NEG:
                stack[-1] = -stack[-1]
            else:
                stack[-1] = stack[-1] ** float(arg)
    return stack[0]


def _py_eval_table_grid(codes, coffs, consts, koffs, xs, ys):
    n = coffs.size - 1
    xs = np.asarray(xs, dtype=np.float64)
    out = np.empty((n,) + xs.shape, dtype=np.float64)
    for i in range(n):
        code = codes[coffs[i] : coffs[i + 1]]
        cons = consts[koffs[i] : koffs[i + 1]]
        out[i] = _py_eval_program_grid(code, cons, xs, ys)
    return out


if NUMBA_ENABLED:
    _jit = numba.njit(cache=True, fastmath=False)

    eval_program = _jit(_py_eval_program)

    @_jit
    def _nb_eval_packed(codes, coffs, consts, koffs, idx, x, y):
        stack = np.empty((coffs[idx + 1] - coffs[idx]) // 2 + 1, np.float64)
        kbase = koffs[idx]
        top = -1
        i = coffs[idx]
        end = coffs[idx + 1]
        while i < end:
            op = codes[i]
            arg = codes[i + 1]
            i += 2
            if op == OP_CONST:
                top += 1
                stack[top] = consts[kbase + arg]
            elif op == OP_X:
                top += 1
                stack[top] = x
            elif op == OP_Y:
                top += 1
                stack[top] = y
            elif op == OP_ADD:
                stack[top - 1] = stack[top - 1] + stack[top]
                top -= 1
            elif op == OP_MUL:
                stack[top - 1] = stack[top - 1] * stack[top]
                top -= 1
            elif op == OP_DIV:
                stack[top - 1] = stack[top - 1] / stack[top]
                top -= 1
            elif op == OP_NEG:
                stack[top] = -stack[top]
            else:
                b = stack[top]
                k = arg
                if k < 0:
                    b = 1.0 / b
                    k = -k
                r = 1.0
                while k > 0:
                    if k & 1:
                        r *= b
                    b *= b
                    k >>= 1
                stack[top] = r
        return stack[0]

    @_jit
    def eval_table_point(codes, coffs, consts, koffs, x, y, out):
        for i in range(coffs.size - 1):
            out[i] = _nb_eval_packed(codes, coffs, consts, koffs, i, x, y)
        return out

    horner = _jit(_py_horner)

    @_jit
    def eval_poly_point(codes, coffs, consts, koffs, x, y, p):
        acc = 0.0
        for i in range(coffs.size - 2, -1, -1):
            acc = acc * p + _nb_eval_packed(codes, coffs, consts, koffs, i, x, y)
        return acc

else:
    eval_program = _py_eval_program
    eval_table_point = _py_eval_table_point
    horner = _py_horner
    eval_poly_point = _py_eval_poly_point


# Grid scans stay on the vectorized interpreter under both backends: the
# whole-array ops amortize the bytecode dispatch, while a jitted per-point
# loop pays it for every grid cell and comes out slower.
eval_program_grid = _py_eval_program_grid


def eval_table_grid(codes, coffs, consts, koffs, xs, ys):
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    return _py_eval_table_grid(codes, coffs, consts, koffs, xs, ys)


class ProgramTable:
    """A batch of compiled expressions packed into flat arrays.

    Index i holds the coefficient of p^i when the table represents a
    polynomial in the slope p with coefficient fields over (x, y).
    """

    def __init__(self, programs):
        self.n = len(programs)
        codes = []
        coffs = [0]
        consts = []
        koffs = [0]
        for prog in programs:
            codes.append(prog.code)
            consts.append(prog.consts)
            coffs.append(coffs[-1] + prog.code.size)
            koffs.append(koffs[-1] + prog.consts.size)
        self.codes = (
            np.concatenate(codes) if codes else np.empty(0, dtype=np.int64)
        )
        self.coffs = np.asarray(coffs, dtype=np.int64)
        self.consts = (
            np.concatenate(consts) if consts else np.empty(0, dtype=np.float64)
        )
        self.koffs = np.asarray(koffs, dtype=np.int64)

    def values_at(self, x: float, y: float) -> np.ndarray:
        out = np.empty(self.n, dtype=np.float64)
        return eval_table_point(
            self.codes, self.coffs, self.consts, self.koffs, float(x), float(y), out
        )

    def poly_value(self, x: float, y: float, p: float) -> float:
        return eval_poly_point(
            self.codes, self.coffs, self.consts, self.koffs,
            float(x), float(y), float(p),
        )

    def values_on_grid(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        shape = xs.shape
        flat = eval_table_grid(
            self.codes, self.coffs, self.consts, self.koffs,
            xs.ravel(), np.asarray(ys, dtype=np.float64).ravel(),
        )
        return flat.reshape((self.n,) + shape)


def warmup() -> None:
    """Trigger jit compilation of all kernels on toy input."""
    code = np.array(
        [OP_X, 0, OP_Y, 0, OP_ADD, 0, OP_CONST, 0, OP_MUL, 0, OP_POW, 2],
        dtype=np.int64,
    )
    consts = np.array([0.5], dtype=np.float64)
    eval_program(code, consts, 1.0, 2.0)
    coffs = np.array([0, code.size], dtype=np.int64)
    koffs = np.array([0, 1], dtype=np.int64)
    out = np.empty(1, dtype=np.float64)
    eval_table_point(code, coffs, consts, koffs, 1.0, 2.0, out)
    eval_poly_point(code, coffs, consts, koffs, 1.0, 2.0, 0.3)
    xs = np.linspace(0.0, 1.0, 4)
    eval_table_grid(code, coffs, consts, koffs, xs, xs)
    horner(consts, 0.5)
