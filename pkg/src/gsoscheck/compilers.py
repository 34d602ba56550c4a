"""The translation pairs: a syntax translation plus a behavior translation.

Layer maps send one source constructor (over whatever its children are) to
an open target term and extend homomorphically, so they satisfy the monad
laws by construction.  The flattening compiler to Low is genuinely
whole-term recursion and is checked in closed mode only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .terms import (
    Br, IAssign, IllFormed, Lit, Node, Nop, OpenTerm, Stop, Un, Var,
    instr, instr_list, isandbox, loop, sandbox, sseq,
)
from .states import FrameState, LowState, StackState, Store, clamp_negatives
from .semantics import StepOutcome
from .languages import LangDef, language_registry


@dataclass
class LayerMap:
    """Per-constructor translation, applied homomorphically."""

    fn: Callable[[str, tuple, tuple], OpenTerm]  # (tag, payload, children) -> open term


@dataclass
class WholeTerm:
    """Structural recursion over closed terms, not necessarily layer-wise."""

    fn: Callable[[Node], Node]


@dataclass
class BehaviorTranslation:
    """Input-side state map, output-side outcome map, and the inputs the
    translation answers without consulting the source behavior at all."""

    input_map: Callable
    output_map: Callable  # (target input, source StepOutcome) -> target StepOutcome
    pass_through: Callable = lambda i2: None  # target input -> StepOutcome | None


@dataclass
class CompilerPair:
    name: str
    source: LangDef
    target: LangDef
    syntax: LayerMap | WholeTerm
    behavior: BehaviorTranslation
    open_checkable: bool


def compile_open(cp: CompilerPair, t: OpenTerm) -> OpenTerm:
    """Homomorphic extension of the layer map; variables map to themselves."""
    if not isinstance(cp.syntax, LayerMap):
        raise IllFormed(f"{cp.name} has no layer-wise syntax translation")
    if isinstance(t, Var):
        return t
    children = tuple(compile_open(cp, c) for c in t.children)
    return cp.syntax.fn(t.tag, t.payload, children)


def compile_term(cp: CompilerPair, p: Node) -> Node:
    """Translate a closed source program."""
    cp.source.validate(p)
    if isinstance(cp.syntax, WholeTerm):
        out = cp.syntax.fn(p)
    else:
        out = compile_open(cp, p)
    cp.target.validate(out)
    return out


def translate_behavior(cp: CompilerPair, f: Callable, i2) -> StepOutcome:
    """Run the source behavior through the translation at a target input.

    The returned outcome's continuation is still a source term; callers
    compile it when they need the target-side term.
    """
    shortcut = cp.behavior.pass_through(i2)
    if shortcut is not None:
        return shortcut
    o1 = f(cp.behavior.input_map(i2))
    return cp.behavior.output_map(i2, o1)


# --- behavior translations -------------------------------------------------

def _b_flag() -> BehaviorTranslation:
    # label the unlabelled with the designated value 0
    return BehaviorTranslation(
        input_map=lambda s: s,
        output_map=lambda i2, o: StepOutcome(o.state, label=0, cont=o.cont, flags=o.flags),
    )


def _b_identity() -> BehaviorTranslation:
    return BehaviorTranslation(
        input_map=lambda s: s,
        output_map=lambda i2, o: o,
    )


def _b_int() -> BehaviorTranslation:
    # run the source on the store with negatives forgotten; include the
    # nat-valued result back into the int store
    return BehaviorTranslation(
        input_map=clamp_negatives,
        output_map=lambda i2, o: StepOutcome(o.state, cont=o.cont, flags=o.flags),
    )


def _b_low() -> BehaviorTranslation:
    def pass_through(i2: LowState):
        if i2.pc != 0:
            return StepOutcome(LowState(i2.store, i2.pc))
        return None

    def output_map(i2: LowState, o: StepOutcome):
        if o.cont is None:
            return StepOutcome(LowState(o.state, 1), cont=None, flags=o.flags)
        return StepOutcome(LowState(o.state, 0), cont=o.cont, flags=o.flags)

    return BehaviorTranslation(lambda i2: i2.store, output_map, pass_through)


def div_blocks(s: Store, sp: int, L: int) -> FrameState:
    """Slice the first sp L-sized blocks out of a store, newest first: the
    active block sp-1 becomes the top frame."""
    frames = tuple(
        tuple(s.get(L * i + j) for j in range(L)) for i in reversed(range(sp))
    )
    return FrameState(frames)


def override_blocks(frames: tuple, s: Store, L: int) -> Store:
    """Lay the frames back down ascending from offset 0, keeping the part of
    the store beyond the active stack."""
    cells = dict(s.cells)
    k = len(frames)
    for i in range(k):
        frame = frames[k - 1 - i]  # block i is the (k-1-i)-th newest
        for j in range(L):
            cells[L * i + j] = frame[j]
    return Store.of(cells)


def _b_stack(L: int) -> BehaviorTranslation:
    def output_map(i2: StackState, o: StepOutcome):
        frames = o.state.frames
        out = StackState(override_blocks(frames, i2.store, L), len(frames))
        return StepOutcome(out, cont=o.cont, flags=o.flags)

    return BehaviorTranslation(lambda i2: div_blocks(i2.store, i2.sp, L), output_map)


# --- syntax translations ---------------------------------------------------

def _identity_layer(tag, payload, children):
    return Node(tag, children, payload)


def _sandbox_layer(tag, payload, children):
    return sandbox(Node(tag, children, payload))


def _unsandbox_layer(tag, payload, children):
    if tag == "sandbox":
        return children[0]
    return Node(tag, children, payload)


def _isandbox_layer(tag, payload, children):
    return isandbox(Node(tag, children, payload))


def _secure_low_layer(tag, payload, children):
    match tag:
        case "skip":
            return instr(Stop())
        case "assign":
            l, e = payload
            return instr(IAssign(l, e))
        case "seq":
            return sseq(children[0], children[1])
        case "while":
            return loop(payload[0], children[0])
    raise IllFormed(f"no low-sec image for {tag}")


def flatten_to_low(p: Node) -> Node:
    """The flattening compiler: sequences concatenate and loops become a
    guarded forward branch over the body plus an unconditional back branch,
    as in `br !(guard) (len body + 2) ;; body ;; br (lit 1) -(len body + 1)`.
    """
    return instr_list(_flatten(p))


def _flatten(p: Node) -> list:
    match p.tag:
        case "skip":
            return [Nop()]
        case "assign":
            l, e = p.payload
            return [IAssign(l, e)]
        case "seq":
            return _flatten(p.children[0]) + _flatten(p.children[1])
        case "while":
            body = _flatten(p.children[0])
            n = len(body)
            guard = Un("not", p.payload[0])
            return [Br(guard, n + 2)] + body + [Br(Lit(1), -(n + 1))]
    raise IllFormed(f"cannot flatten {p.tag}")


# --- the registry ----------------------------------------------------------

def compiler_registry(langs: Optional[dict] = None, L: int = 2) -> dict[str, CompilerPair]:
    langs = langs or language_registry(L)

    def pair(name, src, tgt, syntax, behavior, open_checkable=True):
        return CompilerPair(name, langs[src], langs[tgt], syntax, behavior, open_checkable)

    pairs = [
        pair("embed-flag", "while", "while-flag", LayerMap(_identity_layer), _b_flag()),
        pair("sandbox", "while", "while-sec", LayerMap(_sandbox_layer), _b_flag()),
        pair("unsandbox", "while-sec", "while-sec", LayerMap(_unsandbox_layer), _b_identity()),
        pair("embed-int", "while", "while-int", LayerMap(_identity_layer), _b_int()),
        pair("sandbox-int", "while", "while-int", LayerMap(_isandbox_layer), _b_int()),
        pair("flatten-low", "while", "low", WholeTerm(flatten_to_low), _b_low(),
             open_checkable=False),
        pair("embed-low-sec", "while", "low-sec", LayerMap(_secure_low_layer), _b_low()),
        pair("embed-stack", "while-b", "stack", LayerMap(_identity_layer), _b_stack(L)),
        pair("embed-stack-clear", "while-b", "stack-clear", LayerMap(_identity_layer),
             _b_stack(L)),
    ]
    return {p.name: p for p in pairs}
