"""Termination machinery: uniform terms, the homeomorphic-embedding whistle,
most specific generalization and split.

Embedding works on the uniform encoding (binders erased, one symbol for all
arithmetic), which makes the whistle slightly eager and keeps it a
well-quasi-order.  msg/split are stricter: operators and case shapes must
agree, and generalization never descends below a binder, so the common term
is always rebuilt from its parts by ordinary substitution.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    App,
    Case,
    CtorApp,
    Expression,
    GenRequest,
    Global,
    IntLit,
    Lambda,
    Let,
    Letrec,
    PrimOp,
    Var,
    free_vars,
    pattern_binders,
)


@dataclass(frozen=True)
class UniformTerm:
    symbol: tuple
    children: tuple["UniformTerm", ...]


VAR_ATOM = ("var",)
INT_ATOM = ("int",)


def to_uniform(e: Expression) -> UniformTerm:
    """Structure-preserving encoding: variables collapse to one atom,
    integers to another, binders are erased.
    """
    match e:
        case Var(_):
            return UniformTerm(VAR_ATOM, ())
        case IntLit(_):
            return UniformTerm(INT_ATOM, ())
        case Global(g):
            return UniformTerm(("global", g), ())
        case App(f, a):
            return UniformTerm(("apply",), (to_uniform(f), to_uniform(a)))
        case Lambda(_, b):
            return UniformTerm(("lambda",), (to_uniform(b),))
        case CtorApp(k, args):
            return UniformTerm(("ctor", k, len(args)), tuple(to_uniform(a) for a in args))
        case PrimOp(_, l, r):
            return UniformTerm(("primop",), (to_uniform(l), to_uniform(r)))
        case Case(scrut, alts):
            kids = (to_uniform(scrut),) + tuple(to_uniform(a.body) for a in alts)
            return UniformTerm(("caseof", len(alts)), kids)
        case Let(_, bound, body):
            return UniformTerm(("let",), (to_uniform(bound), to_uniform(body)))
        case Letrec(_, rhs, body):
            return UniformTerm(("letrec",), (to_uniform(rhs), to_uniform(body)))
        case GenRequest(_, t):
            return to_uniform(t)
        case _:
            raise TypeError(f"to_uniform: unknown expression {e!r}")


def embeds_uniform(u1: UniformTerm, u2: UniformTerm) -> bool:
    memo: dict[tuple[int, int], bool] = {}

    def go(a: UniformTerm, b: UniformTerm) -> bool:
        key = (id(a), id(b))
        hit = memo.get(key)
        if hit is not None:
            return hit
        if a.symbol == VAR_ATOM and b.symbol == VAR_ATOM:
            out = True
        elif a.symbol == INT_ATOM and b.symbol == INT_ATOM:
            out = True
        else:
            out = any(go(a, c) for c in b.children) or (
                a.symbol == b.symbol
                and len(a.children) == len(b.children)
                and all(go(x, y) for x, y in zip(a.children, b.children))
            )
        memo[key] = out
        return out

    return go(u1, u2)


def embeds(e: Expression, f: Expression) -> bool:
    """The whistle: e is embedded in f."""
    return embeds_uniform(to_uniform(e), to_uniform(f))


# ---------------------------------------------------------------------------
# most specific generalization


@dataclass(frozen=True)
class Generalization:
    common: Expression
    theta1: dict[str, Expression]
    theta2: dict[str, Expression]
    holes: tuple[str, ...]  # fresh hole variables, first occurrence order


class _LocalSupply:
    """Fallback name supply for standalone msg/split calls."""

    def __init__(self, avoid: set[str]):
        self.avoid = set(avoid)
        self.n = 0

    def fresh_var(self, base: str = "z") -> Var:
        while True:
            self.n += 1
            name = f"{base}{self.n}"
            if name not in self.avoid:
                self.avoid.add(name)
                return Var(name, fresh=True)


# pair-tree nodes used while anti-unifying
_PVAR = "pvar"  # (a, b) variable pair
_PKEEP = "keep"  # identical or binder-carrying region kept from t1
_PHOLE = "hole"  # mismatch
_PNODE = "node"  # recursable pair with children


def _pair(t1: Expression, t2: Expression, varmap: dict[str, set[str]]):
    def constrain(a: str, b: str) -> None:
        varmap.setdefault(a, set()).add(b)

    def keep(region1: Expression) -> tuple:
        for v in free_vars(region1):
            constrain(v, v)
        return (_PKEEP, region1)

    match t1, t2:
        case Var(a), Var(b):
            constrain(a, b)
            return (_PVAR, t1, t2)
        case IntLit(a), IntLit(b) if a == b:
            return (_PKEEP, t1)
        case Global(a), Global(b) if a == b:
            return (_PKEEP, t1)
        case App(f1, a1), App(f2, a2):
            return (_PNODE, t1, t2, [_pair(f1, f2, varmap), _pair(a1, a2, varmap)])
        case CtorApp(k1, args1), CtorApp(k2, args2) if k1 == k2 and len(args1) == len(args2):
            kids = [_pair(x, y, varmap) for x, y in zip(args1, args2)]
            return (_PNODE, t1, t2, kids)
        case PrimOp(o1, l1, r1), PrimOp(o2, l2, r2) if o1 == o2:
            return (_PNODE, t1, t2, [_pair(l1, l2, varmap), _pair(r1, r2, varmap)])
        case Case(s1, alts1), Case(s2, alts2) if alts1 == alts2:
            for alt in alts1:
                binders = set(pattern_binders(alt.pattern))
                for v in free_vars(alt.body) - binders:
                    constrain(v, v)
            return (_PNODE, t1, t2, [_pair(s1, s2, varmap)], alts1)
        case Let(x1, b1, body1), Let(x2, b2, body2) if x1 == x2 and body1 == body2:
            for v in free_vars(body1) - {x1}:
                constrain(v, v)
            return (_PNODE, t1, t2, [_pair(b1, b2, varmap)], (x1, body1))
        case _ if t1 == t2:
            return keep(t1)
        case _:
            return (_PHOLE, t1, t2)


def msg(t1: Expression, t2: Expression, supply=None) -> Generalization:
    """First-order anti-unification.  Matching variable pairs keep the first
    term's variable (recorded as a rename); a variable matched inconsistently
    is generalized at every occurrence, identical mismatch pairs sharing one
    fresh hole variable.
    """
    if supply is None:
        supply = _LocalSupply(free_vars(t1) | free_vars(t2))

    varmap: dict[str, set[str]] = {}
    tree = _pair(t1, t2, varmap)
    conflicted = {a for a, images in varmap.items() if len(images) > 1}

    holes: dict[tuple[Expression, Expression], Var] = {}
    theta1: dict[str, Expression] = {}
    theta2: dict[str, Expression] = {}
    renames1: dict[str, Expression] = {}
    renames2: dict[str, Expression] = {}

    def hole(a: Expression, b: Expression) -> Expression:
        v = holes.get((a, b))
        if v is None:
            v = supply.fresh_var()
            holes[(a, b)] = v
            theta1[v.name] = a
            theta2[v.name] = b
        return v

    def render(node) -> Expression:
        match node:
            case (_PVAR, Var(a) as va, Var(_) as vb):
                if a in conflicted:
                    return hole(va, vb)
                b = next(iter(varmap[a]))
                if a != b:
                    renames1[a] = va
                    renames2[a] = Var(b)
                return va
            case (_PKEEP, region):
                if any(v in conflicted for v in free_vars(region)):
                    return hole(region, region)
                return region
            case (_PHOLE, a, b):
                return hole(a, b)
            case (_PNODE, t1n, t2n, kids, *extra):
                if _carried_conflict(node, conflicted):
                    return hole(t1n, t2n)
                return _rebuild(t1n, [render(k) for k in kids])
            case _:
                raise AssertionError(node)

    common = render(tree)
    theta1.update(renames1)
    theta2.update(renames2)
    return Generalization(
        common, theta1, theta2, tuple(v.name for v in holes.values())
    )


def _carried_conflict(node, conflicted: set[str]) -> bool:
    """A case/let pair carries its binder-scoped region verbatim; if a
    conflicted variable occurs there the whole pair must be generalized.
    """
    match node:
        case (_PNODE, t1n, _, _, alts) if isinstance(t1n, Case):
            for alt in alts:
                binders = set(pattern_binders(alt.pattern))
                if any(v in conflicted for v in free_vars(alt.body) - binders):
                    return True
            return False
        case (_PNODE, t1n, _, _, (x1, body1)):
            return any(v in conflicted for v in free_vars(body1) - {x1})
        case _:
            return False


def _rebuild(t1: Expression, kids: list[Expression]) -> Expression:
    match t1:
        case App(_, _):
            return App(kids[0], kids[1])
        case CtorApp(k, _):
            return CtorApp(k, tuple(kids))
        case PrimOp(op, _, _):
            return PrimOp(op, kids[0], kids[1])
        case Case(_, alts):
            return Case(kids[0], alts)
        case Let(x, _, body):
            return Let(x, kids[0], body)
        case _:
            raise AssertionError(f"not a recursable node: {t1!r}")


# ---------------------------------------------------------------------------
# split


def _heads_agree(t1: Expression, t2: Expression) -> bool:
    match t1, t2:
        case App(_, _), App(_, _):
            return True
        case CtorApp(k1, a1), CtorApp(k2, a2):
            return k1 == k2 and len(a1) == len(a2)
        case PrimOp(o1, _, _), PrimOp(o2, _, _):
            return o1 == o2
        case Case(_, alts1), Case(_, alts2):
            return alts1 == alts2
        case Let(x1, _, b1), Let(x2, _, b2):
            return x1 == x2 and b1 == b2
        case _:
            return False


def split(
    t1: Expression, t2: Expression, supply=None
) -> tuple[Expression, list[Expression], list[str]]:
    """(common, parts, holes): substituting parts for holes in the common
    term rebuilds t1 exactly.  With agreeing head symbols this is the msg;
    otherwise every binder-free immediate subterm of t1 becomes a hole.
    """
    if supply is None:
        supply = _LocalSupply(free_vars(t1) | free_vars(t2))
    if _heads_agree(t1, t2):
        g = msg(t1, t2, supply)
        return g.common, [g.theta1[h] for h in g.holes], list(g.holes)

    def fresh() -> Var:
        return supply.fresh_var()

    match t1:
        case App(f, a):
            hs = [fresh(), fresh()]
            return App(hs[0], hs[1]), [f, a], [h.name for h in hs]
        case CtorApp(k, args):
            hs = [fresh() for _ in args]
            return CtorApp(k, tuple(hs)), list(args), [h.name for h in hs]
        case PrimOp(op, l, r):
            hs = [fresh(), fresh()]
            return PrimOp(op, hs[0], hs[1]), [l, r], [h.name for h in hs]
        case Case(scrut, alts):
            h = fresh()
            return Case(h, alts), [scrut], [h.name]
        case Let(x, bound, body):
            h = fresh()
            return Let(x, h, body), [bound], [h.name]
        case _:
            # atoms and binder-headed terms have no splittable children
            return t1, [], []
