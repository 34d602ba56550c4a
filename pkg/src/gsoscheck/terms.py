"""Expressions, instructions and program terms shared by every language.

Terms are plain immutable trees: a ``Node`` carries a constructor tag, a
tuple of child terms and a tuple of payload values (expressions, store
locations, instructions).  ``Var`` marks a program variable, so a closed
program is a ``Node`` tree with no ``Var`` anywhere.  Which tags are legal,
and with what payload shapes, is decided by each language definition; the
tree type itself is untyped on purpose so that syntax-preserving compilers
are the identity on trees.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union


class IllFormed(Exception):
    """A term, payload or machine state violates a language's rules."""


# ---------------------------------------------------------------------------
# expressions

BIN_OPS = ("add", "sub", "mul", "lt", "eq", "min")
UN_OPS = ("not",)

BIN_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "lt": "<", "eq": "=", "min": "min"}


@dataclass(frozen=True)
class Lit:
    n: int


@dataclass(frozen=True)
class Loc:
    """Dereference of store cell ``l`` (the ``var`` expression)."""

    l: int


@dataclass(frozen=True)
class Bin:
    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Un:
    op: str
    e: "Expr"


Expr = Union[Lit, Loc, Bin, Un]


def expr_locs(e: Expr) -> set[int]:
    match e:
        case Lit():
            return set()
        case Loc(l):
            return {l}
        case Bin(_, lhs, rhs):
            return expr_locs(lhs) | expr_locs(rhs)
        case Un(_, inner):
            return expr_locs(inner)
    raise IllFormed(f"not an expression: {e!r}")


def expr_size(e: Expr) -> int:
    match e:
        case Lit() | Loc():
            return 1
        case Bin(_, lhs, rhs):
            return 1 + expr_size(lhs) + expr_size(rhs)
        case Un(_, inner):
            return 1 + expr_size(inner)
    raise IllFormed(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Low instructions

@dataclass(frozen=True)
class Nop:
    pass


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class IAssign:
    loc: int
    e: Expr


@dataclass(frozen=True)
class Br:
    e: Expr
    off: int


Inst = Union[Nop, Stop, IAssign, Br]


# ---------------------------------------------------------------------------
# terms

@dataclass(frozen=True)
class Var:
    name: object


@dataclass(frozen=True)
class Node:
    tag: str
    children: tuple = ()
    payload: tuple = ()


Term = Node  # a closed term: no Var inside
OpenTerm = Union[Var, Node]


def skip() -> Node:
    return Node("skip")


def assign(l: int, e: Expr) -> Node:
    return Node("assign", (), (l, e))


def seq(p: OpenTerm, q: OpenTerm) -> Node:
    return Node("seq", (p, q))


def while_(e: Expr, p: OpenTerm) -> Node:
    return Node("while", (p,), (e,))


def obs(n: int, p: OpenTerm) -> Node:
    return Node("obs", (p,), (n,))


def sandbox(p: OpenTerm) -> Node:
    return Node("sandbox", (p,))


def isandbox(p: OpenTerm) -> Node:
    return Node("isandbox", (p,))


def frame() -> Node:
    return Node("frame")


def ret() -> Node:
    return Node("return")


def instr(i: Inst, tail: Optional[OpenTerm] = None) -> Node:
    if tail is None:
        return Node("instr", (), (i,))
    return Node("instr", (tail,), (i,))


def instr_list(insts: list[Inst]) -> Node:
    """Right-nested instruction sequence; ``insts`` must be nonempty."""
    if not insts:
        raise IllFormed("Low programs are nonempty instruction sequences")
    out = instr(insts[-1])
    for i in reversed(insts[:-1]):
        out = instr(i, out)
    return out


def instr_flatten(t: Node) -> list[Inst]:
    out = []
    while True:
        if t.tag != "instr":
            raise IllFormed(f"not an instruction sequence: {t.tag}")
        out.append(t.payload[0])
        if not t.children:
            return out
        t = t.children[0]


def sseq(p: OpenTerm, q: OpenTerm) -> Node:
    return Node("sseq", (p, q))


def loop(e: Expr, p: OpenTerm) -> Node:
    return Node("loop", (p,), (e,))


def is_closed(t: OpenTerm) -> bool:
    if isinstance(t, Var):
        return False
    return all(is_closed(c) for c in t.children)


def term_size(t: OpenTerm) -> int:
    if isinstance(t, Var):
        return 1
    return 1 + sum(term_size(c) for c in t.children)


def term_vars(t: OpenTerm) -> list[object]:
    """Variables in left-to-right order, duplicates kept."""
    if isinstance(t, Var):
        return [t.name]
    out: list[object] = []
    for c in t.children:
        out.extend(term_vars(c))
    return out


def subst(t: OpenTerm, env: dict) -> OpenTerm:
    """Replace every ``Var x`` with ``env[x]`` (the free-monad multiplication)."""
    if isinstance(t, Var):
        return env[t.name]
    if not t.children:
        return t
    return Node(t.tag, tuple(subst(c, env) for c in t.children), t.payload)


def subterms(t: OpenTerm) -> Iterator[OpenTerm]:
    yield t
    if isinstance(t, Node):
        for c in t.children:
            yield from subterms(c)


# ---------------------------------------------------------------------------
# s-expression printing and parsing
#
# Canonical grammar (one line per language, shared tags):
#   prog := skip | frame | return
#         | (assign LOC expr) | (seq prog prog) | (while expr prog)
#         | (obs NAT prog) | (sandbox prog) | (isandbox prog)
#         | (instr inst inst ...)            -- nonempty, flattened
#         | (sseq prog prog) | (loop expr prog)
#   inst := (nop) | (stop) | (assign LOC expr) | (br expr INT)
#   expr := (lit INT) | (var NAT) | (not expr)
#         | (add|sub|mul|lt|eq|min expr expr)
# Printing produces exactly this form and parsing round-trips it.

def print_expr(e: Expr) -> str:
    match e:
        case Lit(n):
            return f"(lit {n})"
        case Loc(l):
            return f"(var {l})"
        case Bin(op, lhs, rhs):
            return f"({op} {print_expr(lhs)} {print_expr(rhs)})"
        case Un(op, inner):
            return f"({op} {print_expr(inner)})"
    raise IllFormed(f"not an expression: {e!r}")


def print_inst(i: Inst) -> str:
    match i:
        case Nop():
            return "(nop)"
        case Stop():
            return "(stop)"
        case IAssign(loc, e):
            return f"(assign {loc} {print_expr(e)})"
        case Br(e, off):
            return f"(br {print_expr(e)} {off})"
    raise IllFormed(f"not an instruction: {i!r}")


def print_term(t: OpenTerm) -> str:
    if isinstance(t, Var):
        return f"?{t.name}"
    match t.tag:
        case "skip" | "frame" | "return":
            return t.tag
        case "assign":
            l, e = t.payload
            return f"(assign {l} {print_expr(e)})"
        case "seq" | "sseq":
            return f"({t.tag} {print_term(t.children[0])} {print_term(t.children[1])})"
        case "while" | "loop":
            return f"({t.tag} {print_expr(t.payload[0])} {print_term(t.children[0])})"
        case "obs":
            return f"(obs {t.payload[0]} {print_term(t.children[0])})"
        case "sandbox" | "isandbox":
            return f"({t.tag} {print_term(t.children[0])})"
        case "instr":
            insts = " ".join(print_inst(i) for i in instr_flatten(t))
            return f"(instr {insts})"
    raise IllFormed(f"unknown constructor: {t.tag}")


# display form used by `compile` for Low targets: instructions joined by ";;"
# with infix expressions, e.g.
#   br !(var 0 < 2) 3 ;; assign 1 (var 1 + 1) ;; br (lit 1) -2

def _infix(e: Expr) -> str:
    # operands of a binary operator: bare numerals for literals
    def atom(a: Expr) -> str:
        match a:
            case Lit(n):
                return str(n)
            case Loc(l):
                return f"var {l}"
        return f"({_infix(a)})"

    match e:
        case Lit(n):
            return f"lit {n}"
        case Loc(l):
            return f"var {l}"
        case Bin("min", lhs, rhs):
            return f"min({_infix(lhs)}, {_infix(rhs)})"
        case Bin(op, lhs, rhs):
            return f"{atom(lhs)} {BIN_SYMBOL[op]} {atom(rhs)}"
        case Un("not", inner):
            return f"!({_infix(inner)})"
    raise IllFormed(f"not an expression: {e!r}")


def _guard(e: Expr) -> str:
    # branch guards keep `!` bare, everything else parenthesised
    if isinstance(e, Un) and e.op == "not":
        return f"!({_infix(e.e)})"
    return f"({_infix(e)})"


def show_inst(i: Inst) -> str:
    match i:
        case Nop():
            return "nop"
        case Stop():
            return "stop"
        case IAssign(loc, e):
            return f"assign {loc} ({_infix(e)})"
        case Br(e, off):
            return f"br {_guard(e)} {off}"
    raise IllFormed(f"not an instruction: {i!r}")


def show_low(t: Node) -> str:
    return " ;; ".join(show_inst(i) for i in instr_flatten(t))


# --- parsing ---

def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _read(tokens: list[str], pos: int):
    if pos >= len(tokens):
        raise IllFormed("unexpected end of input")
    tok = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            item, pos = _read(tokens, pos)
            items.append(item)
        if pos >= len(tokens):
            raise IllFormed("missing )")
        return items, pos + 1
    if tok == ")":
        raise IllFormed("unexpected )")
    return tok, pos + 1


def _int(tok) -> int:
    try:
        return int(tok)
    except (TypeError, ValueError):
        raise IllFormed(f"expected an integer, got {tok!r}") from None


def parse_expr(sx) -> Expr:
    if not isinstance(sx, list) or not sx:
        raise IllFormed(f"bad expression: {sx!r}")
    head = sx[0]
    if head == "lit" and len(sx) == 2:
        return Lit(_int(sx[1]))
    if head == "var" and len(sx) == 2:
        return Loc(_int(sx[1]))
    if head in UN_OPS and len(sx) == 2:
        return Un(head, parse_expr(sx[1]))
    if head in BIN_OPS and len(sx) == 3:
        return Bin(head, parse_expr(sx[1]), parse_expr(sx[2]))
    raise IllFormed(f"bad expression: {sx!r}")


def parse_inst(sx) -> Inst:
    if not isinstance(sx, list) or not sx:
        raise IllFormed(f"bad instruction: {sx!r}")
    head = sx[0]
    if head == "nop" and len(sx) == 1:
        return Nop()
    if head == "stop" and len(sx) == 1:
        return Stop()
    if head == "assign" and len(sx) == 3:
        return IAssign(_int(sx[1]), parse_expr(sx[2]))
    if head == "br" and len(sx) == 3:
        return Br(parse_expr(sx[1]), _int(sx[2]))
    raise IllFormed(f"bad instruction: {sx!r}")


def _build_term(sx):
    if isinstance(sx, str):
        if sx in ("skip", "frame", "return"):
            return Node(sx)
        if sx.startswith("?"):
            return Var(sx[1:])
        raise IllFormed(f"unknown term: {sx!r}")
    if not sx:
        raise IllFormed("empty term")
    head = sx[0]
    if head in ("skip", "frame", "return") and len(sx) == 1:
        return Node(head)
    if head == "assign" and len(sx) == 3:
        return assign(_int(sx[1]), parse_expr(sx[2]))
    if head in ("seq", "sseq") and len(sx) == 3:
        return Node(head, (_build_term(sx[1]), _build_term(sx[2])))
    if head in ("while", "loop") and len(sx) == 3:
        return Node(head, (_build_term(sx[2]),), (parse_expr(sx[1]),))
    if head == "obs" and len(sx) == 3:
        return obs(_int(sx[1]), _build_term(sx[2]))
    if head in ("sandbox", "isandbox") and len(sx) == 2:
        return Node(head, (_build_term(sx[1]),))
    if head == "instr" and len(sx) >= 2:
        return instr_list([parse_inst(i) for i in sx[1:]])
    raise IllFormed(f"bad term: {sx!r}")


def parse_term(text: str) -> Node:
    tokens = _tokenize(text)
    sx, pos = _read(tokens, 0)
    if pos != len(tokens):
        raise IllFormed(f"trailing input: {' '.join(tokens[pos:])}")
    return _build_term(sx)
