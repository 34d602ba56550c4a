"""Coherence, bisimilarity-preservation and context-closure campaigns.

The coherence check evaluates one square per case.  Upper path: extend the
source law, translate the outcome, compile the continuation.  Lower path:
translate the syntax layer (open mode) or the whole term (closed mode),
then extend the target law at the target input.  A case fails on the first
divergence in label, output state, termination, or continuation term.

Continuation terms are compared syntactically first.  The layer-wise
sandboxing translations step to continuations that differ from the
compiled source continuation only by redundant sandbox layers, so a
syntactic mismatch falls back to a bounded behavioral comparison over the
case's window; a pass obtained this way is counted and reported.  Every
other registered translation either matches continuations exactly or
diverges in an observable.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Optional

from .terms import (
    IllFormed, Node, OpenTerm, instr_flatten, print_term, term_size, term_vars,
)
from .states import LowState, show_state
from .semantics import (
    Distinguished, Equivalent, IncompleteTable, StepOutcome, check_bisim,
    extend_law, step,
)
from .compilers import CompilerPair, compile_open, compile_term, translate_behavior
from .spf import plug
from . import gen


@dataclass(frozen=True)
class CampaignConfig:
    store_cells: int = 2
    max_value: int = 3
    max_expr_depth: int = 2
    max_term_size: int = 4
    depth: int = 20
    samples: int = 1000
    L: int = 2
    sp_max: int = 3          # also bounds the open-mode pc window
    seed: int = 0xC0FFEE
    mode: str = "auto"       # open | closed | auto
    exprs_per_slot: int = 12
    table_variants: int = 2
    fallback_depth: int = 8
    fuel: int = 10_000
    threads: int = 1

    def echo(self) -> dict:
        return {
            "store_cells": self.store_cells,
            "max_value": self.max_value,
            "max_expr_depth": self.max_expr_depth,
            "max_term_size": self.max_term_size,
            "depth": self.depth,
            "samples": self.samples,
            "L": self.L,
            "sp_max": self.sp_max,
            "seed": self.seed,
            "mode": self.mode,
            "exprs_per_slot": self.exprs_per_slot,
            "table_variants": self.table_variants,
            "fallback_depth": self.fallback_depth,
            "fuel": self.fuel,
            "threads": self.threads,
        }


@dataclass
class CoherenceCase:
    """Open mode: one source layer over variables plus their sampled tables.
    Closed mode: a closed source term.  Both carry the target input."""

    subject: OpenTerm
    target_input: object
    tables: dict = field(default_factory=dict)

    def describe(self) -> dict:
        out = {
            "term": print_term(self.subject),
            "input": show_state(self.target_input),
        }
        if self.tables:
            out["tables"] = {
                str(v): {
                    show_state(s): [e[0], show_state(e[1]), e[2]]
                    for s, e in t.entries.items()
                }
                for v, t in self.tables.items()
            }
        return out


@dataclass
class Divergence:
    field_name: str  # label | state | termination | continuation
    upper: StepOutcome
    lower: StepOutcome
    upper_cont: Optional[OpenTerm] = None
    lower_cont: Optional[OpenTerm] = None

    def describe(self) -> dict:
        return {
            "field": self.field_name,
            "upper": describe_outcome(self.upper, self.upper_cont),
            "lower": describe_outcome(self.lower, self.lower_cont),
        }


def describe_outcome(o: StepOutcome, cont: Optional[OpenTerm] = None) -> dict:
    shown = cont if cont is not None else o.cont
    return {
        "state": show_state(o.state),
        "label": o.label,
        "continuation": print_term(shown) if shown is not None else None,
    }


@dataclass
class Pass:
    cases: int
    exhausted: bool
    inconclusive: int = 0
    illformed: int = 0
    fallback_cases: int = 0
    flags: frozenset = frozenset()

    def __bool__(self):
        return True


@dataclass
class Fail:
    case: CoherenceCase
    divergence: Divergence
    cases_before: int
    flags: frozenset = frozenset()

    def __bool__(self):
        return False


Verdict = Pass | Fail


# ---------------------------------------------------------------------------
# case evaluation

def _target_behaviors(cp: CompilerPair, tables: dict) -> dict:
    # the same sampled tables serve both paths, re-indexed through the
    # behavior translation on the lower one
    return {
        x: (lambda i2, t=t: translate_behavior(cp, t, i2)) for x, t in tables.items()
    }


def _compare(cp: CompilerPair, upper: StepOutcome, upper_cont, lower: StepOutcome,
             window, behaviors, cfg) -> tuple[Optional[Divergence], bool]:
    """Compare the two paths' outcomes; returns (divergence, used_fallback)."""
    if upper.label != lower.label:
        return Divergence("label", upper, lower, upper_cont), False
    if upper.state != lower.state:
        return Divergence("state", upper, lower, upper_cont), False
    if (upper_cont is None) != (lower.cont is None):
        return Divergence("termination", upper, lower, upper_cont), False
    if upper_cont is None or upper_cont == lower.cont:
        return None, False
    # syntactic mismatch: bounded behavioral comparison over the window
    verdict = check_bisim(cp.target, upper_cont, lower.cont, window,
                          cfg.fallback_depth, behaviors=behaviors)
    if isinstance(verdict, Equivalent):
        return None, True
    return Divergence("continuation", upper, lower, upper_cont, lower.cont), True


def evaluate_open_case(cp: CompilerPair, case: CoherenceCase, window, cfg):
    """One open-mode square; returns (divergence|None, used_fallback, flags)."""
    src, tables = cp.source, case.tables
    i2 = case.target_input

    def source_behavior(s1):
        return extend_law(src, case.subject, tables, s1)

    upper = translate_behavior(cp, source_behavior, i2)
    upper_cont = compile_open(cp, upper.cont) if upper.cont is not None else None
    lower = extend_law(cp.target, compile_open(cp, case.subject),
                       _target_behaviors(cp, tables), i2)
    flags = upper.flags | lower.flags
    div, fb = _compare(cp, upper, upper_cont, lower, window,
                       _target_behaviors(cp, tables), cfg)
    return div, fb, flags


def evaluate_closed_case(cp: CompilerPair, case: CoherenceCase, window, cfg):
    src, tgt = cp.source, cp.target
    i2 = case.target_input
    compiled = compile_term(cp, case.subject)

    def source_behavior(s1):
        return step(src, case.subject, s1)

    upper = translate_behavior(cp, source_behavior, i2)
    upper_cont = None
    if upper.cont is not None:
        upper_cont = compile_term(cp, upper.cont)
    lower = step(tgt, compiled, i2)
    flags = upper.flags | lower.flags
    div, fb = _compare(cp, upper, upper_cont, lower, window, {}, cfg)
    return div, fb, flags


# ---------------------------------------------------------------------------
# case streams

def open_cases(cp: CompilerPair, cfg: CampaignConfig, window):
    rng = random.Random(cfg.seed)
    preimage = _preimage(cp, window)
    for layer in gen.layer_shapes(cp.source, cfg):
        names = sorted(set(term_vars(layer)), key=str)
        variants = range(cfg.table_variants if names else 1)
        for _ in variants:
            tables = {
                x: gen.sample_table(rng, x, preimage, cp.source.has_label, names, cfg)
                for x in names
            }
            for i2 in window:
                yield CoherenceCase(layer, i2, tables)


def closed_cases(cp: CompilerPair, cfg: CampaignConfig, window):
    for p in gen.closed_terms(cp.source, cfg):
        states = window
        if cp.target.state_kind == "pc":
            # pair every program with program counters from -1 to one past
            # its compiled length
            compiled = compile_term(cp, p)
            length = len(instr_flatten(compiled)) if compiled.tag == "instr" else term_size(compiled)
            stores = gen.store_window(cfg, int_mode=False)
            states = [LowState(s, pc) for s in stores for pc in gen.pc_window(cfg, length)]
        for i2 in states:
            yield CoherenceCase(p, i2)


def _preimage(cp: CompilerPair, window) -> list:
    seen, out = set(), []
    for i2 in window:
        s1 = cp.behavior.input_map(i2)
        if s1 not in seen:
            seen.add(s1)
            out.append(s1)
    return out


# ---------------------------------------------------------------------------
# campaigns

def check_coherence(cp: CompilerPair, cfg: CampaignConfig) -> Verdict:
    mode = cfg.mode
    if mode == "auto":
        mode = "open" if cp.open_checkable else "closed"
    if mode == "open" and not cp.open_checkable:
        raise IllFormed(f"{cp.name} is not layer-wise; use closed mode")
    window = gen.state_window(cp.target, cfg)
    if mode == "open":
        stream = open_cases(cp, cfg, window)
        evaluate = evaluate_open_case
    else:
        stream = closed_cases(cp, cfg, window)
        evaluate = evaluate_closed_case

    cases = inconclusive = illformed = fallback = 0
    flags: frozenset = frozenset()

    def guarded(case):
        try:
            return _evaluate_with_widening(evaluate, cp, case, window, cfg)
        except IllFormed:
            return "illformed"
        except IncompleteTable:
            return "inconclusive"

    bounded = itertools.islice(stream, cfg.samples)
    for case, outcome in _fan_out(bounded, guarded, cfg.threads):
        cases += 1
        if outcome == "illformed":
            illformed += 1
            continue
        if outcome == "inconclusive":
            inconclusive += 1
            continue
        div, fb, case_flags = outcome
        flags |= case_flags
        if fb:
            fallback += 1
        if div is not None:
            return Fail(case, div, cases_before=cases - 1, flags=flags)
    exhausted = _stream_done(stream)
    return Pass(cases, exhausted, inconclusive, illformed, fallback, flags)


def _fan_out(cases, guarded, threads: int):
    """Evaluate cases, possibly on a thread pool; results always come back in
    stream order, so the first failure is the same at any fan-out degree."""
    if threads <= 1:
        for case in cases:
            yield case, guarded(case)
        return
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=threads) as pool:
        while True:
            chunk = list(itertools.islice(cases, threads * 8))
            if not chunk:
                return
            for case, outcome in zip(chunk, pool.map(guarded, chunk)):
                yield case, outcome


def _stream_done(stream) -> bool:
    try:
        next(stream)
        return False
    except StopIteration:
        return True


def _evaluate_with_widening(evaluate, cp, case, window, cfg):
    try:
        return evaluate(cp, case, window, cfg)
    except IncompleteTable as miss:
        if miss.var not in case.tables:
            raise
        # the widening entry depends only on the missing state, so verdicts
        # do not depend on evaluation order
        rng = random.Random(cfg.seed ^ (hash(miss.state) & 0xFFFFFFFF))
        table = case.tables[miss.var]
        entry = gen.widen_entry(rng, miss.state, cp.source.has_label,
                                sorted(case.tables, key=str), cfg)
        case.tables[miss.var] = table.widen(miss.state, entry)
        return evaluate(cp, case, window, cfg)


# ---------------------------------------------------------------------------
# bisimilarity preservation

@dataclass
class PreservationEntry:
    left: Node
    right: Node
    source: object  # BisimResult
    target: Optional[object] = None  # BisimResult when source is Equivalent
    compiled_left: Optional[Node] = None
    compiled_right: Optional[Node] = None

    @property
    def violated(self) -> bool:
        return (
            isinstance(self.source, Equivalent)
            and self.target is not None
            and isinstance(self.target, Distinguished)
        )


@dataclass
class PreservationReport:
    entries: list
    budget: dict

    @property
    def violations(self) -> list:
        return [e for e in self.entries if e.violated]


def check_preservation(cp: CompilerPair, cfg: CampaignConfig,
                       pairs: Optional[list] = None) -> PreservationReport:
    """For source pairs found bisimilar within budget, check the compiled
    pair in the target; a Distinguished target verdict is a violation."""
    src_window = gen.state_window(cp.source, cfg)
    tgt_window = gen.state_window(cp.target, cfg)
    if pairs is None:
        terms = list(itertools.islice(gen.closed_terms(cp.source, cfg), 12))
        pairs = [(a, b) for a, b in itertools.combinations(terms, 2)]
        pairs = pairs[: cfg.samples]
    entries = []
    for left, right in pairs:
        source = check_bisim(cp.source, left, right, src_window, cfg.depth)
        entry = PreservationEntry(left, right, source)
        if isinstance(source, Equivalent):
            entry.compiled_left = compile_term(cp, left)
            entry.compiled_right = compile_term(cp, right)
            entry.target = check_bisim(cp.target, entry.compiled_left,
                                       entry.compiled_right, tgt_window, cfg.depth)
        entries.append(entry)
    return PreservationReport(entries, cfg.echo())


# ---------------------------------------------------------------------------
# context closure

@dataclass
class ContextClosureReport:
    status: str  # closed | base-distinguished | violation
    contexts_checked: int
    base: object
    violations: list
    budget: dict


def check_context_closure(lang, p: Node, q: Node, cfg: CampaignConfig,
                          contexts: Optional[list] = None) -> ContextClosureReport:
    """Plug a bisimilar pair into sampled single-hole contexts; any context
    distinguishing them falsifies contextual closure at this scale and
    points at a framework bug."""
    window = gen.state_window(lang, cfg)
    base = check_bisim(lang, p, q, window, cfg.depth)
    if contexts is None:
        contexts = gen.sample_contexts(lang, 3, cfg.samples, cfg.seed, cfg)
    if isinstance(base, Distinguished):
        return ContextClosureReport("base-distinguished", 0, base, [], cfg.echo())
    violations = []
    for ctx in contexts:
        verdict = check_bisim(lang, plug(ctx, p), plug(ctx, q), window, cfg.depth)
        if isinstance(verdict, Distinguished):
            violations.append((ctx, verdict))
    status = "closed" if not violations else "violation"
    return ContextClosureReport(status, len(contexts), base, violations, cfg.echo())
