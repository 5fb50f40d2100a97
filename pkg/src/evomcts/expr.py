"""Expression trees used as node-selection policies during tree search.

A policy is a small typed tree over the statistics visible when scoring one
child of a node: the child's mean reward Q, the parent visit count Np, and
the child visit count Nc. The function set is arithmetic with protected
division, log and sqrt, so evaluation is total over the finite reals: no
NaN, no infinities (overflow saturates to the largest finite float).
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

MAX_FLOAT = sys.float_info.max
PROTECT_EPS = 0.001  # operand magnitudes below this trigger the protected fallbacks
MAX_DEPTH = 8  # counting the root as depth 1

# values a Const leaf may take when a tree is grown or mutated
CONST_POOL = (0.5, 1.0, math.sqrt(2.0), 2.0, 3.0)

FUNCTIONS = ("+", "-", "*", "pdiv", "plog", "psqrt")
ARITY = {"+": 2, "-": 2, "*": 2, "pdiv": 2, "plog": 1, "psqrt": 1}
TERMINALS = ("Q", "Np", "Nc", "const")


@dataclass(frozen=True, slots=True)
class EvalContext:
    """Selection-time statistics for one (parent, child) pair.

    Counts are visit counts, so integers in practice, but any real >= 1 is
    accepted (evaluation is defined on the reals anyway).
    """

    q: float  # child mean reward, expected in [0, 1]
    n_parent: float  # parent visit count
    n_child: float  # child visit count

    def __post_init__(self):
        if self.n_parent < 1 or self.n_child < 1:
            raise ValueError(
                f"visit counts must be >= 1, got {self.n_parent}, {self.n_child}"
            )


@dataclass(frozen=True, slots=True)
class Expr:
    """One node of an immutable policy expression tree.

    op is a function symbol from FUNCTIONS, a variable terminal
    ("Q", "Np", "Nc"), or "const" with a numeric value.
    """

    op: str
    value: Optional[float] = None
    children: Tuple["Expr", ...] = ()

    def __post_init__(self):
        if self.op in ARITY:
            if len(self.children) != ARITY[self.op]:
                raise ValueError(f"{self.op} takes {ARITY[self.op]} children")
            if self.value is not None:
                raise ValueError("function nodes carry no value")
        elif self.op == "const":
            if self.children:
                raise ValueError("const is a leaf")
            if self.value is None or not math.isfinite(self.value):
                raise ValueError("const needs a finite value")
        elif self.op in ("Q", "Np", "Nc"):
            if self.children or self.value is not None:
                raise ValueError(f"{self.op} is a bare leaf")
        else:
            raise ValueError(f"unknown op {self.op!r}")


def depth(e: Expr) -> int:
    """Depth of the tree rooted at e; a lone leaf has depth 1."""
    if not e.children:
        return 1
    return 1 + max(depth(c) for c in e.children)


def size(e: Expr) -> int:
    return 1 + sum(size(c) for c in e.children)


# ---------------------------------------------------------------------------
# evaluation

def _fin(x: float) -> float:
    # saturate overflow so downstream arithmetic stays inside the finite reals
    if x == math.inf:
        return MAX_FLOAT
    if x == -math.inf:
        return -MAX_FLOAT
    return x


def _pdiv(a: float, b: float) -> float:
    return 1.0 if -PROTECT_EPS < b < PROTECT_EPS else _fin(a / b)


def _plog(a: float) -> float:
    return 1.0 if -PROTECT_EPS < a < PROTECT_EPS else math.log(abs(a))


def _psqrt(a: float) -> float:
    return math.sqrt(abs(a))


def evaluate(e: Expr, ctx: EvalContext) -> float:
    """Value of e at ctx. Total: finite output for finite inputs."""
    return _eval(e, ctx.q, ctx.n_parent, ctx.n_child)


def _eval(e: Expr, q, np, nc) -> float:
    op = e.op
    if op == "Q":
        return q
    if op == "Np":
        return np
    if op == "Nc":
        return nc
    if op == "const":
        return e.value
    a = _eval(e.children[0], q, np, nc)
    if op == "plog":
        return _plog(a)
    if op == "psqrt":
        return _psqrt(a)
    b = _eval(e.children[1], q, np, nc)
    if op == "+":
        return _fin(a + b)
    if op == "-":
        return _fin(a - b)
    if op == "*":
        return _fin(a * b)
    return _pdiv(a, b)


def compile_expr(e: Expr) -> Callable[[float, float, float], float]:
    """Compile e to a fast (q, n_parent, n_child) -> float callable.

    Returns bit-identical values to evaluate(); meant for hot loops where
    the tree-walking interpreter is too slow.
    """
    ns = {"_fin": _fin, "_pdiv": _pdiv, "_plog": _plog, "_psqrt": _psqrt}
    exec(f"def _policy(q, np, nc):\n    return {_emit(e)}", ns)
    return ns["_policy"]


def _emit(e: Expr) -> str:
    op = e.op
    if op == "Q":
        return "q"
    if op == "Np":
        return "np"
    if op == "Nc":
        return "nc"
    if op == "const":
        return repr(e.value)
    a = _emit(e.children[0])
    if op == "plog":
        return f"_plog({a})"
    if op == "psqrt":
        return f"_psqrt({a})"
    b = _emit(e.children[1])
    if op == "pdiv":
        return f"_pdiv({a}, {b})"
    return f"_fin({a} {op} {b})"


# ---------------------------------------------------------------------------
# construction and variation

def ucb1_seed(c: float) -> Expr:
    """The classic UCB1 rule Q + c * sqrt(2 * ln(Np) / Nc) as a tree.

    c must come from CONST_POOL, the same pool mutation draws from.
    """
    if c not in CONST_POOL:
        raise ValueError(f"c must be one of {CONST_POOL}, got {c!r}")
    bound = Expr(
        "psqrt",
        children=(
            Expr(
                "pdiv",
                children=(
                    Expr("*", children=(Expr("const", 2.0), Expr("plog", children=(Expr("Np"),)))),
                    Expr("Nc"),
                ),
            ),
        ),
    )
    return Expr("+", children=(Expr("Q"), Expr("*", children=(Expr("const", c), bound))))


def random_subtree(depth_budget: int, rng) -> Expr:
    """Grow a random tree of depth at most depth_budget (>= 1).

    At each point with budget left: 50/50 function versus terminal, uniform
    within each set; Const leaves draw uniformly from CONST_POOL.
    """
    if depth_budget < 1:
        raise ValueError("depth budget must be >= 1")
    if depth_budget == 1 or rng.random() < 0.5:
        return _random_terminal(rng)
    op = FUNCTIONS[rng.randrange(len(FUNCTIONS))]
    kids = tuple(random_subtree(depth_budget - 1, rng) for _ in range(ARITY[op]))
    return Expr(op, children=kids)


def _random_terminal(rng) -> Expr:
    tag = TERMINALS[rng.randrange(len(TERMINALS))]
    if tag == "const":
        return Expr("const", CONST_POOL[rng.randrange(len(CONST_POOL))])
    return Expr(tag)


def subtree_mutate(e: Expr, rng) -> Expr:
    """Return a copy of e with one random subtree regrown.

    The mutation point is an internal node with probability 0.9 and a leaf
    with probability 0.1 (the root leaf if e has no internal nodes). The
    replacement is grown within the remaining depth budget so the result
    never exceeds MAX_DEPTH. e itself is not modified.
    """
    path, d = _choose_point(e, rng)
    sub = random_subtree(MAX_DEPTH - d + 1, rng)
    return _replace(e, path, sub)


def _choose_point(e: Expr, rng) -> Tuple[Tuple[int, ...], int]:
    """Pick the mutation point: (path from root, depth of that node)."""
    internal: List[Tuple[Tuple[int, ...], int]] = []
    leaves: List[Tuple[Tuple[int, ...], int]] = []
    _index(e, (), 1, internal, leaves)
    if not internal:
        return leaves[0]
    pool = internal if rng.random() < 0.9 else leaves
    return pool[rng.randrange(len(pool))]


def _index(e, path, d, internal, leaves):
    if e.children:
        internal.append((path, d))
        for i, c in enumerate(e.children):
            _index(c, path + (i,), d + 1, internal, leaves)
    else:
        leaves.append((path, d))


def _replace(e: Expr, path: Tuple[int, ...], sub: Expr) -> Expr:
    if not path:
        return sub
    i = path[0]
    kids = tuple(
        _replace(c, path[1:], sub) if j == i else c for j, c in enumerate(e.children)
    )
    return Expr(e.op, e.value, kids)


# ---------------------------------------------------------------------------
# text form: prefix notation, e.g. (+ Q (* 2 (psqrt Nc)))

class ExprParseError(ValueError):
    """Malformed policy text; pos is a character offset into the input."""

    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} (at position {pos})")
        self.pos = pos


def to_text(e: Expr) -> str:
    """Render e in prefix notation; parse_text inverts this exactly."""
    if e.op == "const":
        v = e.value
        return str(int(v)) if v == int(v) else repr(v)
    if not e.children:
        return e.op
    return "(" + " ".join([e.op] + [to_text(c) for c in e.children]) + ")"


def parse_text(text: str) -> Expr:
    toks = _tokenize(text)
    e, i = _parse(toks, 0, len(text))
    if i != len(toks):
        raise ExprParseError(f"unexpected {toks[i][0]!r} after expression", toks[i][1])
    return e


def _tokenize(text: str) -> List[Tuple[str, int]]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            toks.append((ch, i))
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            toks.append((text[i:j], i))
            i = j
    return toks


def _parse(toks, i, end) -> Tuple[Expr, int]:
    if i >= len(toks):
        raise ExprParseError("unexpected end of input", end)
    tok, pos = toks[i]
    if tok == ")":
        raise ExprParseError("unexpected ')'", pos)
    if tok != "(":
        return _parse_atom(tok, pos), i + 1
    if i + 1 >= len(toks):
        raise ExprParseError("unexpected end of input", end)
    op, oppos = toks[i + 1]
    if op not in ARITY:
        raise ExprParseError(f"expected an operator, got {op!r}", oppos)
    i += 2
    kids = []
    for _ in range(ARITY[op]):
        child, i = _parse(toks, i, end)
        kids.append(child)
    if i >= len(toks):
        raise ExprParseError("missing ')'", end)
    if toks[i][0] != ")":
        raise ExprParseError(f"expected ')', got {toks[i][0]!r}", toks[i][1])
    return Expr(op, children=tuple(kids)), i + 1


def _parse_atom(tok: str, pos: int) -> Expr:
    if tok in ("Q", "Np", "Nc"):
        return Expr(tok)
    try:
        v = float(tok)
    except ValueError:
        raise ExprParseError(f"unknown terminal {tok!r}", pos) from None
    if not math.isfinite(v):
        raise ExprParseError(f"constant must be finite, got {tok!r}", pos)
    return Expr("const", v)
