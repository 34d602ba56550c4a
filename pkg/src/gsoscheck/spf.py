"""Simple polynomial functors, their derivatives, and one-hole contexts.

The functor grammar is identity, constants, finite sums, finite products
and composition; no fixed points.  Derivatives follow the usual rules

    d(Id) = One        d(K) = Zero        d(G + H) = dG + dH
    d(G x H) = dG x H + G x dH            d(G . H) = (dG . H) x dH

with canonical pruning of Zero summands and One factors so derivative
shapes stay readable; the tested contract is isomorphism (cardinality
agreement), not syntactic equality.

A single-hole context for a syntax functor is a list of derivative layers,
outermost first; plugging folds the one-step reconstruction over the list,
innermost layer applied first, and the empty list is the bare hole.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .terms import IllFormed, Node, OpenTerm, Var


class UnknownCarrier(Exception):
    """A constant carrier tag has no entry in the supplied size/element map."""


# ---------------------------------------------------------------------------
# functor expressions

@dataclass(frozen=True)
class Id:
    pass


@dataclass(frozen=True)
class Const:
    carrier: str


@dataclass(frozen=True)
class Sum:
    left: "SpfExpr"
    right: "SpfExpr"


@dataclass(frozen=True)
class Prod:
    left: "SpfExpr"
    right: "SpfExpr"


@dataclass(frozen=True)
class Comp:
    outer: "SpfExpr"
    inner: "SpfExpr"


@dataclass(frozen=True)
class Zero:
    pass


@dataclass(frozen=True)
class One:
    pass


SpfExpr = Union[Id, Const, Sum, Prod, Comp, Zero, One]

UNIT = ("unit",)


def sum_(a: SpfExpr, b: SpfExpr) -> SpfExpr:
    if a == Zero():
        return b
    if b == Zero():
        return a
    return Sum(a, b)


def prod_(a: SpfExpr, b: SpfExpr) -> SpfExpr:
    if a == Zero() or b == Zero():
        return Zero()
    if a == One():
        return b
    if b == One():
        return a
    return Prod(a, b)


def comp_(outer: SpfExpr, inner: SpfExpr) -> SpfExpr:
    if outer in (Zero(), One()):
        return outer
    if inner == Id():
        return outer
    return Comp(outer, inner)


def sum_fold(shapes: Sequence[SpfExpr]) -> SpfExpr:
    if not shapes:
        return Zero()
    out = shapes[-1]
    for s in reversed(shapes[:-1]):
        out = sum_(s, out)
    return out


def prod_fold(shapes: Sequence[SpfExpr]) -> SpfExpr:
    if not shapes:
        return One()
    out = shapes[-1]
    for s in reversed(shapes[:-1]):
        out = prod_(s, out)
    return out


def derive(f: SpfExpr) -> SpfExpr:
    """Symbolic derivative: the functor of one-hole decompositions."""
    match f:
        case Id():
            return One()
        case Const() | One() | Zero():
            return Zero()
        case Sum(g, h):
            return sum_(derive(g), derive(h))
        case Prod(g, h):
            return sum_(prod_(derive(g), h), prod_(g, derive(h)))
        case Comp(g, h):
            return prod_(comp_(derive(g), h), derive(h))
    raise IllFormed(f"not a functor expression: {f!r}")


def count_positions(f: SpfExpr, x_size: int, sizes: Optional[dict[str, int]] = None) -> int:
    """Number of inhabitants of ``f`` applied to a set of ``x_size`` elements.

    Used to test derivatives by counting: |dF(X)| * |X| equals the number of
    F(X) inhabitants with one Id occurrence marked.
    """
    sizes = sizes or {}
    match f:
        case Id():
            return x_size
        case Const(c):
            if c not in sizes:
                raise UnknownCarrier(c)
            return sizes[c]
        case One():
            return 1
        case Zero():
            return 0
        case Sum(g, h):
            return count_positions(g, x_size, sizes) + count_positions(h, x_size, sizes)
        case Prod(g, h):
            return count_positions(g, x_size, sizes) * count_positions(h, x_size, sizes)
        case Comp(g, h):
            return count_positions(g, count_positions(h, x_size, sizes), sizes)
    raise IllFormed(f"not a functor expression: {f!r}")


# ---------------------------------------------------------------------------
# generic values of f(X)
#
# Value encoding: Id slots hold the X element itself, constants hold a
# carrier element, One is the UNIT token, sums are ('inl', v) / ('inr', v)
# and products are ('pair', l, r).  Composition reuses the outer encoding
# with inner values sitting in the Id slots.

def enum_values(f: SpfExpr, xs: Sequence, carriers: Optional[dict[str, Sequence]] = None):
    carriers = carriers or {}
    match f:
        case Id():
            yield from xs
        case Const(c):
            if c not in carriers:
                raise UnknownCarrier(c)
            yield from carriers[c]
        case One():
            yield UNIT
        case Zero():
            return
        case Sum(g, h):
            for v in enum_values(g, xs, carriers):
                yield ("inl", v)
            for v in enum_values(h, xs, carriers):
                yield ("inr", v)
        case Prod(g, h):
            for l, r in itertools.product(
                list(enum_values(g, xs, carriers)), list(enum_values(h, xs, carriers))
            ):
                yield ("pair", l, r)
        case Comp(g, h):
            inner = list(enum_values(h, xs, carriers))
            yield from enum_values(g, inner, carriers)
        case _:
            raise IllFormed(f"not a functor expression: {f!r}")


def count_id_occurrences(f: SpfExpr, value) -> int:
    """Id occurrences inside one value of f(X); the brute-force side of the
    derivative/position oracle."""
    match f:
        case Id():
            return 1
        case Const() | One():
            return 0
        case Sum(g, h):
            tag, v = value[0], value[1]
            return count_id_occurrences(g if tag == "inl" else h, v)
        case Prod(g, h):
            return count_id_occurrences(g, value[1]) + count_id_occurrences(h, value[2])
        case Comp(g, h):
            total = 0
            for slot in _id_slots(g, value):
                total += count_id_occurrences(h, slot)
            return total
    raise IllFormed(f"not a functor expression: {f!r}")


def _id_slots(f: SpfExpr, value):
    match f:
        case Id():
            yield value
        case Const() | One():
            return
        case Sum(g, h):
            yield from _id_slots(g if value[0] == "inl" else h, value[1])
        case Prod(g, h):
            yield from _id_slots(g, value[1])
            yield from _id_slots(h, value[2])
        case Comp(g, h):
            for slot in _id_slots(g, value):
                yield from _id_slots(h, slot)


# --- packing respecting the pruning done by sum_/prod_ ---

def _pack_sum(left: SpfExpr, right: SpfExpr, side: str, v):
    if left == Zero():
        return v
    if right == Zero():
        return v
    return (("inl" if side == "l" else "inr"), v)


def _unpack_sum(left: SpfExpr, right: SpfExpr, v):
    if left == Zero():
        return "r", v
    if right == Zero():
        return "l", v
    return ("l", v[1]) if v[0] == "inl" else ("r", v[1])


def _pack_prod(a: SpfExpr, b: SpfExpr, va, vb):
    if a == One():
        return vb
    if b == One():
        return va
    return ("pair", va, vb)


def _unpack_prod(a: SpfExpr, b: SpfExpr, v):
    if a == One():
        return UNIT, v
    if b == One():
        return v, UNIT
    return v[1], v[2]


def con_step_value(f: SpfExpr, dvalue, filler):
    """Reconstruct a value of f(X) from a value of derive(f)(X) and a filler.

    Structural on the functor: the coproduct case keeps the injection, the
    product case rebuilds the marked factor, and composition first rebuilds
    the inner value and then plugs it into the outer derivative.
    """
    match f:
        case Id():
            return filler
        case Const() | One() | Zero():
            raise IllFormed("constant functors have no holes")
        case Sum(g, h):
            side, v = _unpack_sum(derive(g), derive(h), dvalue)
            if side == "l":
                return ("inl", con_step_value(g, v, filler))
            return ("inr", con_step_value(h, v, filler))
        case Prod(g, h):
            dg, dh = derive(g), derive(h)
            side, v = _unpack_sum(prod_(dg, h), prod_(g, dh), dvalue)
            if side == "l":
                dgv, hv = _unpack_prod(dg, h, v)
                return ("pair", con_step_value(g, dgv, filler), hv)
            gv, dhv = _unpack_prod(g, dh, v)
            return ("pair", gv, con_step_value(h, dhv, filler))
        case Comp(g, h):
            dgh, dhv = _unpack_prod(comp_(derive(g), h), derive(h), dvalue)
            hv = con_step_value(h, dhv, filler)
            return con_step_value(g, dgh, hv)
    raise IllFormed(f"not a functor expression: {f!r}")


# ---------------------------------------------------------------------------
# language-layer contexts

@dataclass(frozen=True)
class OneHoleLayer:
    """One derivative layer of a syntax functor applied to terms: the
    constructor tag, its payload, the marked child position and the sibling
    subterms at the other positions."""

    tag: str
    payload: tuple
    hole: int
    siblings: tuple  # terms at non-hole child positions, in order


Context = tuple  # of OneHoleLayer, outermost first; () is the bare hole


@dataclass(frozen=True)
class Hole:
    pass


@dataclass(frozen=True)
class MLayer:
    tag: str
    children: tuple  # of MultiHoleContext
    payload: tuple = ()


MultiHoleContext = Union[Hole, MLayer]


def con_step(layer: OneHoleLayer, filler: OpenTerm) -> Node:
    """Insert ``filler`` at the marked position of a one-hole layer."""
    children = layer.siblings[: layer.hole] + (filler,) + layer.siblings[layer.hole :]
    return Node(layer.tag, children, layer.payload)


def plug(ctx: Context, p: OpenTerm, signature=None) -> OpenTerm:
    """Plug ``p`` into a single-hole context (a left fold over the layers,
    innermost applied first); the empty context is the identity."""
    out = p
    for layer in reversed(ctx):
        if signature is not None:
            arity = 1 + len(layer.siblings)
            if (layer.tag, arity) not in signature:
                raise IllFormed(f"layer {layer.tag}/{arity} not in language")
        out = con_step(layer, out)
    return out


def plug_multi(c: MultiHoleContext, p: OpenTerm) -> OpenTerm:
    if isinstance(c, Hole):
        return p
    return Node(c.tag, tuple(plug_multi(ch, p) for ch in c.children), c.payload)


def mhc_to_context(c: MultiHoleContext) -> Context:
    """Convert a multi-hole context with exactly one hole into layer form."""
    if isinstance(c, Hole):
        return ()
    holed = [i for i, ch in enumerate(c.children) if _count_holes(ch) > 0]
    if len(holed) != 1:
        raise IllFormed("not a single-hole context")
    i = holed[0]
    siblings = []
    for j, ch in enumerate(c.children):
        if j != i:
            if _count_holes(ch) > 0:
                raise IllFormed("not a single-hole context")
            siblings.append(_mhc_to_term(ch))
    layer = OneHoleLayer(c.tag, c.payload, i, tuple(siblings))
    return (layer,) + mhc_to_context(c.children[i])


def _count_holes(c: MultiHoleContext) -> int:
    if isinstance(c, Hole):
        return 1
    return sum(_count_holes(ch) for ch in c.children)


def _mhc_to_term(c: MultiHoleContext) -> Node:
    if isinstance(c, Hole):
        raise IllFormed("hole in term position")
    return Node(c.tag, tuple(_mhc_to_term(ch) for ch in c.children), c.payload)


def decompositions(t: OpenTerm):
    """All (context, subterm) splits of a term; the brute-force unplugger.

    plug(ctx, sub) == t for every yielded pair, starting with ((), t).
    """
    yield (), t
    if isinstance(t, Var):
        return
    for i, child in enumerate(t.children):
        siblings = tuple(c for j, c in enumerate(t.children) if j != i)
        layer = OneHoleLayer(t.tag, t.payload, i, siblings)
        for ctx, sub in decompositions(child):
            yield (layer,) + ctx, sub


# ---------------------------------------------------------------------------
# bridging language layers and generic functor values
#
# A language's syntax functor is an ordered sum of constructor shapes, each
# shape a right-nested product of Const (payload) and Id (child) factors.
# These converters let the generic con_step_value drive term plugging, so
# the derivative algebra is exercised by every language.

def constructor_shape(payload_kinds: Sequence[str], arity: int) -> SpfExpr:
    factors = [Const(k) for k in payload_kinds] + [Id() for _ in range(arity)]
    return prod_fold(factors)


def language_spf(constructors: Sequence[tuple[str, tuple, int]]) -> SpfExpr:
    return sum_fold([constructor_shape(p, a) for _, p, a in constructors])


def _pack_prod_chain(factors, values):
    if not factors:
        return UNIT
    out = values[-1]
    rest_shape = factors[-1]
    for f, v in zip(reversed(factors[:-1]), reversed(values[:-1])):
        out = _pack_prod(f, rest_shape, v, out)
        rest_shape = prod_(f, rest_shape)
    return out


def _unpack_prod_chain(factors, value):
    if not factors:
        return []
    if len(factors) == 1:
        return [value]
    rest_shapes = [factors[-1]]
    for f in reversed(factors[1:-1]):
        rest_shapes.append(prod_(f, rest_shapes[-1]))
    rest_shapes.reverse()  # rest_shapes[i] = shape of factors[i+1:]
    out = []
    v = value
    for i, f in enumerate(factors[:-1]):
        fv, v = _unpack_prod(f, rest_shapes[i], v)
        out.append(fv)
    out.append(v)
    return out


def _dprod_chain_value(factors, values, hole_index):
    """Value of derive(prod_fold(factors)) marking the Id factor at
    ``hole_index``; ``values[hole_index]`` is ignored."""
    if len(factors) == 1:
        if not isinstance(factors[0], Id):
            raise IllFormed("hole at a constant factor")
        return UNIT
    f1, rest = factors[0], factors[1:]
    rest_shape = prod_fold(rest)
    d1, drest = derive(f1), derive(rest_shape)
    left_shape, right_shape = prod_(d1, rest_shape), prod_(f1, drest)
    if hole_index == 0:
        if not isinstance(f1, Id):
            raise IllFormed("hole at a constant factor")
        rest_value = _pack_prod_chain(rest, values[1:])
        return _pack_sum(left_shape, right_shape, "l", _pack_prod(d1, rest_shape, UNIT, rest_value))
    inner = _dprod_chain_value(rest, values[1:], hole_index - 1)
    return _pack_sum(left_shape, right_shape, "r", _pack_prod(f1, drest, values[0], inner))


class LanguageFunctor:
    """Symbolic syntax functor of a language plus value/term converters."""

    def __init__(self, constructors: Sequence[tuple[str, tuple, int]]):
        self.constructors = list(constructors)
        self.spf = language_spf(constructors)
        self._shapes = [constructor_shape(p, a) for _, p, a in constructors]

    def index_of(self, tag: str, arity: int) -> int:
        for i, (t, _, a) in enumerate(self.constructors):
            if t == tag and a == arity:
                return i
        raise IllFormed(f"no constructor {tag}/{arity}")

    def _inject(self, k: int, v, shapes):
        # right-nested sum over shapes, with Zero summands pruned
        if len(shapes) == 1:
            return v
        head, rest = shapes[0], shapes[1:]
        rest_shape = sum_fold(rest)
        if k == 0:
            return _pack_sum(head, rest_shape, "l", v)
        return _pack_sum(head, rest_shape, "r", self._inject(k - 1, v, rest))

    def _project(self, v, shapes, base=0):
        if len(shapes) == 1:
            return base, v
        head, rest = shapes[0], shapes[1:]
        side, inner = _unpack_sum(head, sum_fold(rest), v)
        if side == "l":
            return base, inner
        return self._project(inner, rest, base + 1)

    def node_to_value(self, node: Node):
        k = self.index_of(node.tag, len(node.children))
        _, kinds, arity = self.constructors[k]
        factors = [Const(x) for x in kinds] + [Id() for _ in range(arity)]
        inner = _pack_prod_chain(factors, list(node.payload) + list(node.children))
        return self._inject(k, inner, self._shapes)

    def value_to_node(self, value) -> Node:
        k, inner = self._project(value, self._shapes)
        tag, kinds, arity = self.constructors[k]
        factors = [Const(x) for x in kinds] + [Id() for _ in range(arity)]
        parts = _unpack_prod_chain(factors, inner)
        payload = tuple(parts[: len(kinds)])
        children = tuple(parts[len(kinds) :])
        return Node(tag, children, payload)

    def layer_to_dvalue(self, layer: OneHoleLayer):
        arity = 1 + len(layer.siblings)
        k = self.index_of(layer.tag, arity)
        tag, kinds, _ = self.constructors[k]
        factors = [Const(x) for x in kinds] + [Id() for _ in range(arity)]
        slot = len(kinds) + layer.hole
        values = list(layer.payload) + list(
            layer.siblings[: layer.hole] + (None,) + layer.siblings[layer.hole :]
        )
        inner = _dprod_chain_value(factors, values, slot)
        # inject into the pruned sum of *derivative* shapes
        dshapes = [derive(s) for s in self._shapes]
        if dshapes[k] == Zero():
            raise IllFormed(f"constructor {tag} has no child positions")
        nonzero = [s for s in dshapes if s != Zero()]
        pos = sum(1 for s in dshapes[:k] if s != Zero())
        return self._inject_into(pos, inner, nonzero)

    def _inject_into(self, k, v, shapes):
        if len(shapes) == 1:
            return v
        if k == 0:
            return _pack_sum(shapes[0], sum_fold(shapes[1:]), "l", v)
        return _pack_sum(shapes[0], sum_fold(shapes[1:]), "r", self._inject_into(k - 1, v, shapes[1:]))

    def con_step_via_functor(self, layer: OneHoleLayer, filler: OpenTerm) -> Node:
        """con_step routed through the generic derivative machinery; must
        agree with the direct layer reconstruction."""
        dv = self.layer_to_dvalue(layer)
        value = con_step_value(self.spf, dv, filler)
        return self.value_to_node(value)
