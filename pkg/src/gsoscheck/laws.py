"""The distributive-law axiom suite run by the `laws` command.

For every registered language this checks, at desk scale:

  * unit: the extension on a bare variable answers straight from its table,
    continuation re-injected as a variable;
  * copoint: the subject term threaded through the extension is exactly the
    term consulted, never a rewrite of it;
  * multiplication: on doubly-nested open terms, extending and then
    flattening agrees with flattening and then extending;
  * plugging: every (context, subterm) split of a term plugs back to it,
    the empty context is the identity, and single-hole-shaped multi-hole
    contexts agree with the layer representation.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import replace

from .terms import IllFormed, Node, OpenTerm, Var, subst, term_vars
from .semantics import StepOutcome, extend_law, extend_law_checked
from .spf import decompositions, mhc_to_context, plug, plug_multi, Hole, MLayer
from . import gen


class _NestedBehaviors:
    """Behavior map for outer variables that stand for inner open terms:
    querying one runs the inner term and re-injects its continuation as an
    outer variable."""

    def __init__(self, lang, tables):
        self.lang = lang
        self.tables = tables

    def __contains__(self, name):
        return isinstance(name, tuple) and len(name) == 2 and name[0] == "t"

    def __getitem__(self, name):
        inner = name[1]

        def behave(state):
            o = extend_law(self.lang, inner, self.tables, state)
            cont = Var(("t", o.cont)) if o.cont is not None else None
            return StepOutcome(o.state, o.label, cont, o.flags)

        return behave


def _flatten_nested(t: OpenTerm) -> OpenTerm:
    """Collapse Var(('t', u)) back to the inner term u (the mu step)."""
    if isinstance(t, Var):
        if t.name in _NESTED_MARK:
            return t.name[1]
        return t
    if not t.children:
        return t
    return Node(t.tag, tuple(_flatten_nested(c) for c in t.children), t.payload)


class _Marker:
    def __contains__(self, name):
        return isinstance(name, tuple) and len(name) == 2 and name[0] == "t"


_NESTED_MARK = _Marker()


def _outcome_key(o: StepOutcome):
    return (o.label, o.state, o.cont)


def check_unit_law(lang, cfg, inputs) -> int:
    """extend on Var x equals the table entry with the continuation
    variable-injected."""
    rng = random.Random(cfg.seed ^ 0x301)
    checked = 0
    for variant in range(cfg.table_variants):
        table = gen.sample_table(rng, "x0", inputs, lang.has_label, ["x0", "x1"], cfg)
        for s in inputs:
            got = extend_law(lang, Var("x0"), {"x0": table}, s)
            label, out, cont = table.entries[s]
            expected = StepOutcome(out, label if lang.has_label else None,
                                   Var(cont) if cont is not None else None)
            if _outcome_key(got) != _outcome_key(expected):
                raise AssertionError(f"unit law failed for {lang.name} at {s}")
            checked += 1
    return checked


def _nested_cases(lang, cfg):
    """Doubly-nested open terms: an outer shape over variables, each variable
    standing for a small inner open term over x0/x1."""
    small = replace(cfg, exprs_per_slot=2)
    inner_pool = [Var("x0"), Var("x1")] + gen.layer_shapes(lang, small)
    outers = [Var("n0")] + gen.layer_shapes(lang, small)
    for outer in outers:
        names = []
        for v in term_vars(outer):
            if v not in names:
                names.append(v)
        for offset in range(2):
            mapping = {
                name: inner_pool[(i + offset) % len(inner_pool)]
                for i, name in enumerate(names)
            }
            yield outer, mapping


def check_multiplication_law(lang, cfg, inputs) -> int:
    """lambda . mu = H mu . lambda . T lambda on the nested case stream."""
    rng = random.Random(cfg.seed ^ 0x302)
    checked = 0
    for outer, mapping in _nested_cases(lang, cfg):
        tables = {
            x: gen.sample_table(rng, x, inputs, lang.has_label, ["x0", "x1"], cfg)
            for x in ("x0", "x1")
        }
        flat = subst(outer, mapping)
        nested = subst(outer, {k: Var(("t", v)) for k, v in mapping.items()})
        nested_behaviors = _NestedBehaviors(lang, tables)
        for s in inputs:
            try:
                via_flat = extend_law(lang, flat, tables, s)
            except IllFormed:
                try:
                    extend_law(lang, nested, nested_behaviors, s)
                except IllFormed:
                    continue
                raise AssertionError(
                    f"multiplication law: only one route ill-formed for {lang.name}")
            via_nested = extend_law(lang, nested, nested_behaviors, s)
            collapsed = StepOutcome(
                via_nested.state, via_nested.label,
                _flatten_nested(via_nested.cont) if via_nested.cont is not None else None)
            if _outcome_key(via_flat) != _outcome_key(collapsed):
                raise AssertionError(
                    f"multiplication law failed for {lang.name}: "
                    f"{outer} / {mapping} at {s}")
            checked += 1
    return checked


def check_copoint_law(lang, cfg, inputs) -> int:
    rng = random.Random(cfg.seed ^ 0x303)
    checked = 0
    for outer, mapping in itertools.islice(_nested_cases(lang, cfg), 40):
        tables = {
            x: gen.sample_table(rng, x, inputs, lang.has_label, ["x0", "x1"], cfg)
            for x in ("x0", "x1")
        }
        flat = subst(outer, mapping)
        for s in inputs[:4]:
            try:
                subject, _ = extend_law_checked(lang, flat, tables, s)
            except IllFormed:
                continue
            if subject != flat:
                raise AssertionError(f"copoint law failed for {lang.name}")
            checked += 1
    return checked


def check_plug_roundtrip(lang, cfg, max_size=None) -> int:
    """plug inverts the brute-force splitter on every generated term; also
    checks the hole law and multi-hole agreement on single-hole shapes."""
    small = replace(cfg, exprs_per_slot=2)
    checked = 0
    for t in gen.closed_terms(lang, small, max_size or cfg.max_term_size):
        assert plug((), t) == t
        for ctx, sub in decompositions(t):
            if plug(ctx, sub, lang.signature()) != t:
                raise AssertionError(f"plug round-trip failed on {t}")
            checked += 1
        mhc = _term_to_single_hole_mhc(t)
        if mhc is not None:
            ctx = mhc_to_context(mhc)
            if plug_multi(mhc, t) != plug(ctx, t):
                raise AssertionError("multi-hole and single-hole plugging disagree")
    return checked


def _term_to_single_hole_mhc(t: Node):
    """Replace the leftmost deepest leaf child with a hole, if any."""
    if not t.children:
        return None
    first = t.children[0]
    sub = _term_to_single_hole_mhc(first) if first.children else None
    replaced = sub if sub is not None else Hole()
    rest = tuple(_as_mlayer(c) for c in t.children[1:])
    return MLayer(t.tag, (replaced,) + rest, t.payload)


def _as_mlayer(t: Node):
    return MLayer(t.tag, tuple(_as_mlayer(c) for c in t.children), t.payload)


def run_law_suite(lang, cfg) -> dict:
    if lang.state_kind == "pc":
        # keep whole pc ranges so shifted lookups stay inside the table domain
        stores = gen.store_window(cfg, int_mode=False)[:2]
        from .states import LowState

        inputs = [LowState(s, pc) for s in stores for pc in gen.pc_window(cfg)]
    else:
        inputs = gen.state_window(lang, cfg)[:8]
    return {
        "language": lang.name,
        "unit": check_unit_law(lang, cfg, inputs),
        "copoint": check_copoint_law(lang, cfg, inputs),
        "multiplication": check_multiplication_law(lang, cfg, inputs),
        "plug_roundtrip": check_plug_roundtrip(lang, cfg),
    }
