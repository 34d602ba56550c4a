"""The eight-plus-one concrete languages: expression evaluators, syntax
functors and rule functions.

Store-machine family: ``while`` (nat store), ``while-flag`` (labelled
outputs plus obs blocks), ``while-sec`` (while-flag plus label-erasing
sandboxes), ``while-int`` (int store plus the negative-forgetting sandbox).
Counter machine: ``low`` (program counter discipline) and ``low-sec`` (low
plus the structured sequencing/looping primitives and the one-step
assignment).  Frame machines: ``while-b`` (stack of private frames),
``stack`` (one store partitioned by a stack pointer) and ``stack-clear``
(stack with the zeroing frame rule).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .terms import (
    Bin, Br, Expr, IAssign, IllFormed, Inst, Lit, Loc, Nop, Node, OpenTerm,
    Stop, Un, expr_locs, instr, loop, obs, sandbox, isandbox, seq, skip,
    sseq, while_,
)
from .states import FrameState, LowState, StackState, Store, clamp_negatives
from .semantics import StepOutcome
from .spf import LanguageFunctor


# ---------------------------------------------------------------------------
# expression evaluation

def _bin_nat(op: str, a: int, b: int) -> int:
    match op:
        case "add":
            return a + b
        case "sub":
            return max(0, a - b)
        case "mul":
            return a * b
        case "lt":
            return 1 if a < b else 0
        case "eq":
            return 1 if a == b else 0
        case "min":
            return min(a, b)
    raise IllFormed(f"unknown operator {op}")


def _bin_int(op: str, a: int, b: int) -> int:
    if op == "sub":
        return a - b
    return _bin_nat(op, a, b)


def _un(op: str, a: int) -> int:
    if op == "not":
        return 1 if a == 0 else 0
    raise IllFormed(f"unknown operator {op}")


def eval_nat(store: Store, e: Expr) -> int:
    """Natural-valued evaluation; subtraction truncates at 0."""
    match e:
        case Lit(n):
            return n
        case Loc(l):
            return store.get(l)
        case Bin(op, lhs, rhs):
            return _bin_nat(op, eval_nat(store, lhs), eval_nat(store, rhs))
        case Un(op, inner):
            return _un(op, eval_nat(store, inner))
    raise IllFormed(f"not an expression: {e!r}")


def eval_int(store: Store, e: Expr) -> int:
    match e:
        case Lit(n):
            return n
        case Loc(l):
            return store.get(l)
        case Bin(op, lhs, rhs):
            return _bin_int(op, eval_int(store, lhs), eval_int(store, rhs))
        case Un(op, inner):
            return _un(op, eval_int(store, inner))
    raise IllFormed(f"not an expression: {e!r}")


def eval_frames(stack: FrameState, e: Expr, L: int) -> int:
    """Evaluation against the topmost frame; the empty stack reads 0."""
    match e:
        case Lit(n):
            return n
        case Loc(l):
            if l >= L:
                raise IllFormed(f"var {l} outside frame length {L}")
            return stack.frames[0][l] if stack.frames else 0
        case Bin(op, lhs, rhs):
            return _bin_nat(op, eval_frames(stack, lhs, L), eval_frames(stack, rhs, L))
        case Un(op, inner):
            return _un(op, eval_frames(stack, inner, L))
    raise IllFormed(f"not an expression: {e!r}")


def update_frames(stack: FrameState, l: int, v: int, L: int) -> FrameState:
    if l >= L:
        raise IllFormed(f"var {l} outside frame length {L}")
    if not stack.frames:
        return stack
    head = list(stack.frames[0])
    head[l] = v
    return FrameState((tuple(head),) + stack.frames[1:])


def eval_sp(store: Store, sp: int, e: Expr, L: int) -> int:
    """Evaluation against the active block: ``var l`` reads l + L*(sp-1)."""
    match e:
        case Lit(n):
            return n
        case Loc(l):
            if l >= L:
                raise IllFormed(f"var {l} outside frame length {L}")
            if sp == 0:
                raise IllFormed("var read with no live frame (sp = 0)")
            return store.get(l + L * (sp - 1))
        case Bin(op, lhs, rhs):
            return _bin_nat(op, eval_sp(store, sp, lhs, L), eval_sp(store, sp, rhs, L))
        case Un(op, inner):
            return _un(op, eval_sp(store, sp, inner, L))
    raise IllFormed(f"not an expression: {e!r}")


def update_sp(store: Store, sp: int, l: int, v: int, L: int) -> Store:
    if l >= L:
        raise IllFormed(f"var {l} outside frame length {L}")
    if sp == 0:
        raise IllFormed("assignment with no live frame (sp = 0)")
    return store.set(l + L * (sp - 1), v)


def zero_frame(L: int) -> tuple:
    return (0,) * L


def clear_block(store: Store, sp: int, L: int) -> Store:
    out = store
    for i in range(L * sp, L * (sp + 1)):
        out = out.set(i, 0)
    return out


# ---------------------------------------------------------------------------
# language definitions

@dataclass
class LangDef:
    name: str
    constructors: list  # [(tag, payload_kinds, arity)] in enumeration order
    state_kind: str  # store | int-store | pc | sp | frames
    has_label: bool
    rule: Callable  # (tag, payload, children, state) -> StepOutcome
    L: int = 2

    def __post_init__(self):
        self.functor = LanguageFunctor(self.constructors)

    @property
    def spf(self):
        return self.functor.spf

    def signature(self):
        return {(tag, arity) for tag, _, arity in self.constructors}

    def validate(self, term: OpenTerm):
        """Well-formedness; raises IllFormed with the offending part."""
        from .terms import Var

        if isinstance(term, Var):
            return
        if (term.tag, len(term.children)) not in self.signature():
            raise IllFormed(f"{term.tag}/{len(term.children)} is not a {self.name} constructor")
        tag = term.tag
        if tag == "assign":
            l, e = term.payload
            self._check_loc(l)
            self._check_expr(e)
        elif tag in ("while", "loop"):
            self._check_expr(term.payload[0])
        elif tag == "obs":
            if term.payload[0] < 0:
                raise IllFormed("obs target must be a natural number")
        elif tag == "instr":
            self._check_inst(term.payload[0])
        for c in term.children:
            self.validate(c)

    def _check_loc(self, l: int):
        if l < 0:
            raise IllFormed("negative store location")
        if self.state_kind in ("frames", "sp") and l >= self.L:
            raise IllFormed(f"location {l} outside frame length {self.L}")

    def _check_expr(self, e: Expr):
        if self.state_kind != "int-store":
            for sub in _expr_lits(e):
                if sub < 0:
                    raise IllFormed("negative literal in a nat-valued language")
        if self.state_kind in ("frames", "sp"):
            for l in expr_locs(e):
                if l >= self.L:
                    raise IllFormed(f"var {l} outside frame length {self.L}")

    def _check_inst(self, i: Inst):
        match i:
            case Nop() | Stop():
                return
            case IAssign(l, e):
                self._check_loc(l)
                self._check_expr(e)
            case Br(e, _):
                self._check_expr(e)
            case _:
                raise IllFormed(f"not an instruction: {i!r}")


def _expr_lits(e: Expr):
    match e:
        case Lit(n):
            yield n
        case Loc(_):
            return
        case Bin(_, lhs, rhs):
            yield from _expr_lits(lhs)
            yield from _expr_lits(rhs)
        case Un(_, inner):
            yield from _expr_lits(inner)


# --- rule functions -------------------------------------------------------

def _while_rule(tag, payload, children, s: Store) -> StepOutcome:
    match tag:
        case "skip":
            return StepOutcome(s)
        case "assign":
            l, e = payload
            return StepOutcome(s.set(l, eval_nat(s, e)))
        case "seq":
            (p, fp), (q, _) = children
            o = fp(s)
            cont = q if o.cont is None else seq(o.cont, q)
            return StepOutcome(o.state, cont=cont, flags=o.flags)
        case "while":
            (e,) = payload
            (x, _) = children[0]
            if eval_nat(s, e) != 0:
                return StepOutcome(s, cont=seq(x, while_(e, x)))
            return StepOutcome(s, cont=skip())
    raise IllFormed(f"no while rule for {tag}")


def _flag_rule_base(tag, payload, children, s: Store) -> StepOutcome:
    # while-flag: every transition carries the evaluated label
    match tag:
        case "skip":
            return StepOutcome(s, label=0)
        case "assign":
            l, e = payload
            v = eval_nat(s, e)
            return StepOutcome(s.set(l, v), label=v)
        case "seq":
            (p, fp), (q, _) = children
            o = fp(s)
            cont = q if o.cont is None else seq(o.cont, q)
            return StepOutcome(o.state, label=o.label, cont=cont, flags=o.flags)
        case "while":
            (e,) = payload
            (x, _) = children[0]
            v = eval_nat(s, e)
            if v != 0:
                return StepOutcome(s, label=v, cont=seq(x, while_(e, x)))
            return StepOutcome(s, label=v, cont=skip())
        case "obs":
            (n,) = payload
            (x, fx) = children[0]
            o = fx(s)
            logged = o.state.set(n, o.label)
            if o.cont is None:
                return StepOutcome(logged, label=o.label, cont=skip(), flags=o.flags)
            return StepOutcome(logged, label=o.label, cont=obs(n + 1, o.cont), flags=o.flags)
    raise IllFormed(f"no while-flag rule for {tag}")


def _sec_rule(tag, payload, children, s: Store) -> StepOutcome:
    if tag == "sandbox":
        (x, fx) = children[0]
        o = fx(s)
        cont = None if o.cont is None else sandbox(o.cont)
        return StepOutcome(o.state, label=0, cont=cont, flags=o.flags)
    return _flag_rule_base(tag, payload, children, s)


def _int_rule(tag, payload, children, s: Store) -> StepOutcome:
    match tag:
        case "skip":
            return StepOutcome(s)
        case "assign":
            l, e = payload
            return StepOutcome(s.set(l, eval_int(s, e)))
        case "seq":
            (p, fp), (q, _) = children
            o = fp(s)
            cont = q if o.cont is None else seq(o.cont, q)
            return StepOutcome(o.state, cont=cont, flags=o.flags)
        case "while":
            (e,) = payload
            (x, _) = children[0]
            if eval_int(s, e) != 0:
                return StepOutcome(s, cont=seq(x, while_(e, x)))
            return StepOutcome(s, cont=skip())
        case "isandbox":
            # the inner term runs against the store with negatives forgotten
            (x, fx) = children[0]
            o = fx(clamp_negatives(s))
            cont = None if o.cont is None else isandbox(o.cont)
            return StepOutcome(o.state, cont=cont, flags=o.flags)
    raise IllFormed(f"no while-int rule for {tag}")


def _make_whileb_rule(L: int):
    def rule(tag, payload, children, m: FrameState) -> StepOutcome:
        empty = not m.frames
        match tag:
            case "skip":
                return StepOutcome(m)
            case "assign":
                l, e = payload
                v = eval_frames(m, e, L)
                flags = frozenset({"whileb-empty-stack"}) if empty else frozenset()
                return StepOutcome(update_frames(m, l, v, L), flags=flags)
            case "seq":
                (p, fp), (q, _) = children
                o = fp(m)
                cont = q if o.cont is None else seq(o.cont, q)
                return StepOutcome(o.state, cont=cont, flags=o.flags)
            case "while":
                (e,) = payload
                (x, _) = children[0]
                flags = (
                    frozenset({"whileb-empty-stack"})
                    if empty and expr_locs(e)
                    else frozenset()
                )
                if eval_frames(m, e, L) != 0:
                    return StepOutcome(m, cont=seq(x, while_(e, x)), flags=flags)
                return StepOutcome(m, cont=skip(), flags=flags)
            case "frame":
                return StepOutcome(FrameState((zero_frame(L),) + m.frames))
            case "return":
                if empty:
                    return StepOutcome(m, flags=frozenset({"whileb-empty-stack"}))
                return StepOutcome(FrameState(m.frames[1:]))
        raise IllFormed(f"no while-b rule for {tag}")

    return rule


def _make_stack_rule(L: int, clearing: bool):
    def rule(tag, payload, children, st: StackState) -> StepOutcome:
        s, sp = st.store, st.sp
        match tag:
            case "skip":
                return StepOutcome(st)
            case "assign":
                l, e = payload
                v = eval_sp(s, sp, e, L)
                return StepOutcome(StackState(update_sp(s, sp, l, v, L), sp))
            case "seq":
                (p, fp), (q, _) = children
                o = fp(st)
                cont = q if o.cont is None else seq(o.cont, q)
                return StepOutcome(o.state, cont=cont, flags=o.flags)
            case "while":
                (e,) = payload
                (x, _) = children[0]
                if eval_sp(s, sp, e, L) != 0:
                    return StepOutcome(st, cont=seq(x, while_(e, x)))
                return StepOutcome(st, cont=skip())
            case "frame":
                if clearing:
                    return StepOutcome(StackState(clear_block(s, sp, L), sp + 1))
                return StepOutcome(StackState(s, sp + 1))
            case "return":
                if sp > 0:
                    return StepOutcome(StackState(s, sp - 1))
                return StepOutcome(st, flags=frozenset({"stack-empty-return"}))
        raise IllFormed(f"no stack rule for {tag}")

    return rule


def _inst_step(i: Inst, s: Store, same: Node) -> StepOutcome:
    """Fig-style dispatch of the head instruction at pc 0; ``same`` is the
    unchanged program re-used as the continuation."""
    match i:
        case Stop():
            return StepOutcome(LowState(s, 0))
        case Nop():
            return StepOutcome(LowState(s, 1), cont=same)
        case IAssign(l, e):
            return StepOutcome(LowState(s.set(l, eval_nat(s, e)), 1), cont=same)
        case Br(e, z):
            v = eval_nat(s, e)
            return StepOutcome(LowState(s, 1 if v == 0 else z), cont=same)
    raise IllFormed(f"not an instruction: {i!r}")


def _low_rule(tag, payload, children, st: LowState) -> StepOutcome:
    if tag != "instr":
        raise IllFormed(f"no low rule for {tag}")
    s, pc = st.store, st.pc
    (i,) = payload
    if not children:  # singleton instruction
        if pc != 0:
            return StepOutcome(LowState(s, pc))
        return _inst_step(i, s, instr(i))
    (x, fx) = children[0]
    if pc < 0:
        return StepOutcome(LowState(s, pc))
    if pc == 0:
        return _inst_step(i, s, instr(i, x))
    o = fx(LowState(s, pc - 1))
    shifted = LowState(o.state.store, o.state.pc + 1)
    if o.cont is None:
        return StepOutcome(shifted, flags=o.flags)
    return StepOutcome(shifted, cont=instr(i, o.cont), flags=o.flags)


def _lowsec_rule(tag, payload, children, st: LowState) -> StepOutcome:
    s, pc = st.store, st.pc
    match tag:
        case "instr" if not children:
            if pc != 0:
                return StepOutcome(LowState(s, pc))
            # stop and the one-step assignment terminate, landing past the
            # single statement (pc 1), mirroring the source machine
            match payload[0]:
                case Stop():
                    return StepOutcome(LowState(s, 1))
                case IAssign(l, e):
                    return StepOutcome(LowState(s.set(l, eval_nat(s, e)), 1))
            return _inst_step(payload[0], s, instr(payload[0]))
        case "instr":
            return _low_rule(tag, payload, children, st)
        case "sseq":
            (x, fx), (y, _) = children
            if pc != 0:
                return StepOutcome(LowState(s, pc))
            o = fx(LowState(s, 0))
            out = LowState(o.state.store, 0)
            cont = y if o.cont is None else sseq(o.cont, y)
            return StepOutcome(out, cont=cont, flags=o.flags)
        case "loop":
            (e,) = payload
            (x, _) = children[0]
            if pc != 0:
                return StepOutcome(LowState(s, pc))
            if eval_nat(s, e) == 0:
                return StepOutcome(LowState(s, 0), cont=instr(Stop()))
            return StepOutcome(LowState(s, 0), cont=sseq(x, loop(e, x)))
    raise IllFormed(f"no low-sec rule for {tag}")


# --- the registry ---------------------------------------------------------

_WHILE_CONS = [
    ("skip", (), 0),
    ("assign", ("loc", "expr"), 0),
    ("seq", (), 2),
    ("while", ("expr",), 1),
]

_LOW_CONS = [
    ("instr", ("inst",), 0),
    ("instr", ("inst",), 1),
]


def language_registry(L: int = 2) -> dict[str, LangDef]:
    """All nine languages, keyed by name; ``L`` is the frame length shared by
    the frame machines."""
    langs = [
        LangDef("while", list(_WHILE_CONS), "store", False, _while_rule, L),
        LangDef("while-flag", list(_WHILE_CONS) + [("obs", ("nat",), 1)],
                "store", True, _flag_rule_base, L),
        LangDef("while-sec",
                list(_WHILE_CONS) + [("obs", ("nat",), 1), ("sandbox", (), 1)],
                "store", True, _sec_rule, L),
        LangDef("while-int", list(_WHILE_CONS) + [("isandbox", (), 1)],
                "int-store", False, _int_rule, L),
        LangDef("low", list(_LOW_CONS), "pc", False, _low_rule, L),
        LangDef("low-sec", list(_LOW_CONS) + [("sseq", (), 2), ("loop", ("expr",), 1)],
                "pc", False, _lowsec_rule, L),
        LangDef("while-b", list(_WHILE_CONS) + [("frame", (), 0), ("return", (), 0)],
                "frames", False, _make_whileb_rule(L), L),
        LangDef("stack", list(_WHILE_CONS) + [("frame", (), 0), ("return", (), 0)],
                "sp", False, _make_stack_rule(L, clearing=False), L),
        LangDef("stack-clear", list(_WHILE_CONS) + [("frame", (), 0), ("return", (), 0)],
                "sp", False, _make_stack_rule(L, clearing=True), L),
    ]
    return {l.name: l for l in langs}
