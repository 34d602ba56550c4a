"""The generic engine: one-step rule application, its extension to whole
terms, bounded unfolding and bounded bisimilarity.

A language's rule function is consulted one syntax layer at a time.  It
receives the layer's children as (subject, behavior) pairs and may only use
a child through its subject (to embed it in a continuation) or through its
queried behavior — never by inspecting its structure.  The extension to
arbitrary terms is the usual inductive one: a bare variable answers from
its behavior table with the variable re-injected as the continuation, and
a node recursively turns each child into such a pair before applying the
one-layer rule.  Continuations built from subjects come out already
flattened, which is the multiplication step of the extension.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .terms import IllFormed, Node, OpenTerm, Var, is_closed
from .states import MachineState


class IncompleteTable(Exception):
    """A behavior table was consulted outside its sampled domain."""

    def __init__(self, var, state):
        super().__init__(f"table for {var!r} has no entry for {state!r}")
        self.var = var
        self.state = state


@dataclass(frozen=True)
class StepOutcome:
    """Result of one transition: output state, optional label, optional
    continuation; no continuation means the step terminated."""

    state: MachineState
    label: Optional[int] = None
    cont: Optional[OpenTerm] = None
    flags: frozenset = frozenset()


Behavior = Callable[[MachineState], StepOutcome]


class BehaviorTable:
    """Finite map from input states to outcomes over variables.

    Entries are (label, output state, continuation variable or None); the
    continuation is an element of the variable set, re-injected as a Var
    when the table answers.
    """

    def __init__(self, var, entries: dict, has_label: bool):
        self.var = var
        self.entries = dict(entries)
        self.has_label = has_label

    def __call__(self, state: MachineState) -> StepOutcome:
        if state not in self.entries:
            raise IncompleteTable(self.var, state)
        label, out, cont = self.entries[state]
        return StepOutcome(out, label if self.has_label else None,
                           Var(cont) if cont is not None else None)

    def widen(self, state: MachineState, entry) -> "BehaviorTable":
        entries = dict(self.entries)
        entries[state] = entry
        return BehaviorTable(self.var, entries, self.has_label)


def apply_law(lang, tag: str, payload: tuple, children, state: MachineState) -> StepOutcome:
    """Apply one syntax layer of ``lang``'s rule function.

    ``children``: sequence of (subject, behavior) pairs.  The outcome's
    continuation is an open term over the subjects.
    """
    return lang.rule(tag, payload, tuple(children), state)


def extend_law(lang, term: OpenTerm, behaviors: dict, state: MachineState) -> StepOutcome:
    """Inductive extension of the one-layer law to whole open terms."""
    if isinstance(term, Var):
        if term.name not in behaviors:
            raise IncompleteTable(term.name, state)
        return behaviors[term.name](state)
    pairs = []
    for child in term.children:
        if isinstance(child, Var) and child.name in behaviors:
            pairs.append((child, behaviors[child.name]))
        else:
            pairs.append((child, _closure(lang, child, behaviors)))
    return apply_law(lang, term.tag, term.payload, pairs, state)


def _closure(lang, term, behaviors):
    def behave(state):
        return extend_law(lang, term, behaviors, state)

    return behave


def extend_law_checked(lang, term, behaviors, state):
    """Extension that also rebuilds the subject threaded through the law and
    checks the engine never rewrites it (the copointed identity)."""
    subject = _rebuild_subject(term)
    if subject != term:
        raise AssertionError("engine rewrote the consulted term")
    return subject, extend_law(lang, term, behaviors, state)


def _rebuild_subject(term):
    if isinstance(term, Var):
        return term
    return Node(term.tag, tuple(_rebuild_subject(c) for c in term.children), term.payload)


# --- closed terms ---

_step_cache: dict = {}


def step(lang, term: Node, state: MachineState) -> StepOutcome:
    """One small-step transition of a closed program."""
    key = (id(lang), term, state)
    hit = _step_cache.get(key)
    if hit is not None:
        return hit
    if not is_closed(term):
        raise IllFormed("step requires a closed term")
    out = extend_law(lang, term, {}, state)
    _step_cache[key] = out
    return out


def clear_step_cache():
    _step_cache.clear()


@dataclass
class RunResult:
    trace: list  # [(state_in, StepOutcome), ...]
    terminated: bool
    final: MachineState
    residual: Optional[Node] = None

    @property
    def steps(self) -> int:
        return len(self.trace)


def run(lang, term: Node, state: MachineState, fuel: int) -> RunResult:
    """Iterate ``step``, feeding each output state back in, until the program
    terminates or the fuel runs out."""
    trace = []
    current = term
    for _ in range(fuel):
        out = step(lang, current, state)
        trace.append((state, out))
        state = out.state
        if out.cont is None:
            return RunResult(trace, True, state)
        current = out.cont
    return RunResult(trace, False, state, current)


@dataclass
class BehaviorTree:
    """Depth-bounded unfolding of a program's behavior on an input set."""

    branches: dict  # state -> (StepOutcome, BehaviorTree | None)

    def __eq__(self, other):
        return isinstance(other, BehaviorTree) and self.branches == other.branches


def unfold(lang, term: Node, inputs, depth: int) -> BehaviorTree:
    if depth <= 0:
        return BehaviorTree({})
    branches = {}
    for s in inputs:
        out = step(lang, term, s)
        sub = unfold(lang, out.cont, inputs, depth - 1) if out.cont is not None else None
        branches[s] = (out, sub)
    return BehaviorTree(branches)


# --- bounded bisimilarity ---

@dataclass(frozen=True)
class Equivalent:
    depth: int
    inputs: int

    def __bool__(self):
        return True


@dataclass(frozen=True)
class Distinguished:
    path: tuple  # input states consumed, outermost first
    left: StepOutcome
    right: StepOutcome
    reason: str

    def __bool__(self):
        return False


BisimResult = Equivalent | Distinguished


def _observline(o: StepOutcome):
    return (o.label, o.state, o.cont is None)


def check_bisim(lang, p: OpenTerm, q: OpenTerm, inputs, depth: int,
                behaviors: Optional[dict] = None) -> BisimResult:
    """Bounded stepwise comparison: equal outputs and agreeing termination at
    every level, recursing on continuations.  A Distinguished verdict is a
    real inequivalence; Equivalent only speaks to the given bound.
    """
    behaviors = behaviors or {}
    inputs = list(inputs)
    seen = set()

    def stepper(t, s):
        if behaviors or not is_closed(t):
            return extend_law(lang, t, behaviors, s)
        return step(lang, t, s)

    def compare(a, b, d, path):
        if a == b or d <= 0 or (a, b) in seen:
            return None
        seen.add((a, b))
        pending = []
        for s in inputs:
            oa = stepper(a, s)
            ob = stepper(b, s)
            if oa.label != ob.label:
                return Distinguished(path + (s,), oa, ob, "label")
            if oa.state != ob.state:
                return Distinguished(path + (s,), oa, ob, "state")
            if (oa.cont is None) != (ob.cont is None):
                return Distinguished(path + (s,), oa, ob, "termination")
            if oa.cont is not None:
                pending.append((s, oa.cont, ob.cont))
        for s, ca, cb in pending:
            found = compare(ca, cb, d - 1, path + (s,))
            if found is not None:
                return found
        return None

    witness = compare(p, q, depth, ())
    if witness is not None:
        return witness
    return Equivalent(depth, len(inputs))
