"""Core language AST and the syntactic operations everything else builds on.

Expressions are immutable; all functions here return fresh terms and never
mutate their arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

FIX_NAME = "fix"


class Expression:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class IntLit(Expression):
    value: int


@dataclass(frozen=True, slots=True)
class Var(Expression):
    name: str
    # True only for variables minted by the generalization machinery; such
    # variables must not be copy-propagated by the driver (rule R12's guard).
    fresh: bool = field(default=False, compare=False)


@dataclass(frozen=True, slots=True)
class Global(Expression):
    name: str


@dataclass(frozen=True, slots=True)
class App(Expression):
    fun: Expression
    arg: Expression


@dataclass(frozen=True, slots=True)
class Lambda(Expression):
    param: str
    body: Expression


@dataclass(frozen=True, slots=True)
class CtorApp(Expression):
    ctor: str
    args: tuple[Expression, ...]


@dataclass(frozen=True, slots=True)
class PrimOp(Expression):
    op: str  # one of + - *
    lhs: Expression
    rhs: Expression


class Pattern:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class IntPat(Pattern):
    value: int


@dataclass(frozen=True, slots=True)
class CtorPat(Pattern):
    ctor: str
    binders: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class DefaultPat(Pattern):
    binder: Optional[str]  # None for a wildcard


@dataclass(frozen=True, slots=True)
class Alt:
    pattern: Pattern
    body: Expression


@dataclass(frozen=True, slots=True)
class Case(Expression):
    scrutinee: Expression
    alts: tuple[Alt, ...]


@dataclass(frozen=True, slots=True)
class Let(Expression):
    binder: str
    bound: Expression
    body: Expression


@dataclass(frozen=True, slots=True)
class Letrec(Expression):
    fun: str
    rhs: Expression
    body: Expression


@dataclass(frozen=True, slots=True)
class GenRequest(Expression):
    """Driver-internal: a residual position requesting generalization at the
    activation that owns `owner`.  Never appears in parsed or final programs.
    """

    owner: str
    term: Expression


@dataclass(frozen=True)
class Program:
    defs: dict[str, Expression]
    entry: str = "main"


NIL = "Nil"
CONS = "Cons"

ARITH_OPS = ("+", "-", "*")


class SyntaxError_(Exception):
    pass


# ---------------------------------------------------------------------------
# binder helpers


def pattern_binders(p: Pattern) -> tuple[str, ...]:
    match p:
        case CtorPat(_, binders):
            return binders
        case DefaultPat(b):
            return (b,) if b is not None else ()
        case _:
            return ()


def unfold_lambdas(e: Expression) -> tuple[list[str], Expression]:
    """n-ary view of nested lambdas: (params, body)."""
    params = []
    while isinstance(e, Lambda):
        params.append(e.param)
        e = e.body
    return params, e


def fold_lambdas(params: Iterable[str], body: Expression) -> Expression:
    for p in reversed(list(params)):
        body = Lambda(p, body)
    return body


def unfold_apps(e: Expression) -> tuple[Expression, list[Expression]]:
    """n-ary view of an application spine: (head, args)."""
    args = []
    while isinstance(e, App):
        args.append(e.arg)
        e = e.fun
    args.reverse()
    return e, args


def fold_apps(head: Expression, args: Iterable[Expression]) -> Expression:
    for a in args:
        head = App(head, a)
    return head


def subterms(e: Expression) -> Iterator[Expression]:
    """All subterms of e, preorder, including e itself."""
    stack = [e]
    while stack:
        t = stack.pop()
        yield t
        stack.extend(reversed(children(t)))


def children(e: Expression) -> tuple[Expression, ...]:
    match e:
        case App(f, a):
            return (f, a)
        case Lambda(_, b):
            return (b,)
        case CtorApp(_, args):
            return args
        case PrimOp(_, l, r):
            return (l, r)
        case Case(scrut, alts):
            return (scrut,) + tuple(a.body for a in alts)
        case Let(_, bound, body):
            return (bound, body)
        case Letrec(_, rhs, body):
            return (rhs, body)
        case GenRequest(_, t):
            return (t,)
        case _:
            return ()


# ---------------------------------------------------------------------------
# free variables / function names


def free_vars(e: Expression) -> set[str]:
    return set(free_vars_ordered(e))


def free_vars_ordered(e: Expression) -> list[str]:
    """Free variables in order of first occurrence (left to right)."""
    out: dict[str, None] = {}

    def go(e: Expression, bound: frozenset[str]) -> None:
        match e:
            case Var(name):
                if name not in bound:
                    out.setdefault(name)
            case IntLit() | Global():
                pass
            case App(f, a):
                go(f, bound)
                go(a, bound)
            case Lambda(p, b):
                go(b, bound | {p})
            case CtorApp(_, args):
                for a in args:
                    go(a, bound)
            case PrimOp(_, l, r):
                go(l, bound)
                go(r, bound)
            case Case(scrut, alts):
                go(scrut, bound)
                for alt in alts:
                    go(alt.body, bound | set(pattern_binders(alt.pattern)))
            case Let(x, bnd, body):
                go(bnd, bound)
                go(body, bound | {x})
            case Letrec(_, rhs, body):
                go(rhs, bound)
                go(body, bound)
            case GenRequest(_, t):
                go(t, bound)
            case _:
                raise SyntaxError_(f"unknown expression {e!r}")

    go(e, frozenset())
    return list(out)


def fun_names(e: Expression) -> set[str]:
    out: set[str] = set()

    def go(e: Expression, hidden: frozenset[str]) -> None:
        match e:
            case Global(name):
                if name not in hidden:
                    out.add(name)
            case Letrec(g, rhs, body):
                go(rhs, hidden | {g})
                go(body, hidden | {g})
            case _:
                for c in children(e):
                    go(c, hidden)

    go(e, frozenset())
    return out


# ---------------------------------------------------------------------------
# substitution


def _fresh_variant(base: str, avoid: set[str]) -> str:
    candidate = base + "'"
    n = 1
    while candidate in avoid:
        candidate = f"{base}'{n}"
        n += 1
    return candidate


def substitute(mapping: dict[str, Expression], e: Expression) -> Expression:
    """Simultaneous capture-avoiding substitution of expressions for free
    variables.  Binders are renamed (deterministically, with primes) only when
    they would capture a free variable of a substituted expression.
    """
    if not mapping:
        return e
    if all(not free_vars(v) for v in mapping.values()):
        return _substitute_closed(mapping, e)

    def adjust(
        binders: tuple[str, ...], body_parts: list[Expression], m: dict[str, Expression]
    ) -> tuple[list[str], list[Expression], dict[str, Expression]]:
        """Drop shadowed entries, rename binders that would capture."""
        live = {
            x: v
            for x, v in m.items()
            if x not in binders and any(x in free_vars(b) for b in body_parts)
        }
        if not live:
            return list(binders), body_parts, {}
        value_fvs: set[str] = set()
        for v in live.values():
            value_fvs.update(free_vars(v))
        if not any(b in value_fvs for b in binders):
            return list(binders), body_parts, live
        avoid = set(value_fvs) | set(live)
        for b in body_parts:
            avoid |= free_vars(b)
        avoid.update(binders)
        ren: dict[str, Expression] = {}
        new_binders = []
        for b in binders:
            if b in value_fvs:
                b2 = _fresh_variant(b, avoid)
                avoid.add(b2)
                ren[b] = Var(b2)
                new_binders.append(b2)
            else:
                new_binders.append(b)
        if ren:
            body_parts = [go(p, ren) for p in body_parts]
        return new_binders, body_parts, live

    def go(e: Expression, m: dict[str, Expression]) -> Expression:
        if not m:
            return e
        match e:
            case Var(name):
                return m.get(name, e)
            case IntLit() | Global():
                return e
            case App(f, a):
                return App(go(f, m), go(a, m))
            case CtorApp(k, args):
                return CtorApp(k, tuple(go(a, m) for a in args))
            case PrimOp(op, l, r):
                return PrimOp(op, go(l, m), go(r, m))
            case Lambda(p, b):
                (p2,), (b2,), m2 = adjust((p,), [b], m)
                return Lambda(p2, go(b2, m2))
            case Case(scrut, alts):
                new_alts = []
                for alt in alts:
                    binders = pattern_binders(alt.pattern)
                    bs, (body,), m2 = adjust(binders, [alt.body], m)
                    pat = _rebind_pattern(alt.pattern, bs) if binders else alt.pattern
                    new_alts.append(Alt(pat, go(body, m2)))
                return Case(go(scrut, m), tuple(new_alts))
            case Let(x, bound, body):
                (x2,), (body2,), m2 = adjust((x,), [body], m)
                return Let(x2, go(bound, m), go(body2, m2))
            case Letrec(g, rhs, body):
                return Letrec(g, go(rhs, m), go(body, m))
            case GenRequest(owner, t):
                return GenRequest(owner, go(t, m))
            case _:
                raise SyntaxError_(f"unknown expression {e!r}")

    return go(e, dict(mapping))


def _substitute_closed(m: dict[str, Expression], e: Expression) -> Expression:
    """Substitution of closed expressions: capture is impossible, only
    shadowing matters.
    """
    match e:
        case Var(name):
            return m.get(name, e)
        case IntLit() | Global():
            return e
        case App(f, a):
            return App(_substitute_closed(m, f), _substitute_closed(m, a))
        case CtorApp(k, args):
            return CtorApp(k, tuple(_substitute_closed(m, a) for a in args))
        case PrimOp(op, l, r):
            return PrimOp(op, _substitute_closed(m, l), _substitute_closed(m, r))
        case Lambda(p, b):
            m2 = {x: v for x, v in m.items() if x != p}
            return Lambda(p, _substitute_closed(m2, b)) if m2 else e
        case Case(scrut, alts):
            new_alts = []
            for alt in alts:
                binders = pattern_binders(alt.pattern)
                m2 = {x: v for x, v in m.items() if x not in binders}
                body = _substitute_closed(m2, alt.body) if m2 else alt.body
                new_alts.append(Alt(alt.pattern, body))
            return Case(_substitute_closed(m, scrut), tuple(new_alts))
        case Let(x, bound, body):
            m2 = {y: v for y, v in m.items() if y != x}
            return Let(
                x,
                _substitute_closed(m, bound),
                _substitute_closed(m2, body) if m2 else body,
            )
        case Letrec(g, rhs, body):
            return Letrec(g, _substitute_closed(m, rhs), _substitute_closed(m, body))
        case GenRequest(owner, t):
            return GenRequest(owner, _substitute_closed(m, t))
        case _:
            raise SyntaxError_(f"unknown expression {e!r}")


def _rebind_pattern(p: Pattern, binders: list[str]) -> Pattern:
    match p:
        case CtorPat(k, _):
            return CtorPat(k, tuple(binders))
        case DefaultPat(b):
            return DefaultPat(binders[0] if b is not None else None)
        case _:
            return p


# ---------------------------------------------------------------------------
# alpha equivalence


def alpha_eq(e1: Expression, e2: Expression) -> bool:
    """Equality up to consistent renaming of bound variables and of
    letrec-bound function symbols.  Free variables must match exactly.
    """

    def go(a: Expression, b: Expression, env1: dict, env2: dict) -> bool:
        match a, b:
            case IntLit(n), IntLit(m):
                return n == m
            case Var(x), Var(y):
                bx, by = env1.get(("v", x)), env2.get(("v", y))
                if bx is None and by is None:
                    return x == y
                return bx is not None and bx == by
            case Global(f), Global(g):
                bf, bg = env1.get(("f", f)), env2.get(("f", g))
                if bf is None and bg is None:
                    return f == g
                return bf is not None and bf == bg
            case App(f1, a1), App(f2, a2):
                return go(f1, f2, env1, env2) and go(a1, a2, env1, env2)
            case Lambda(p1, b1), Lambda(p2, b2):
                lvl = len(env1)
                return go(b1, b2, {**env1, ("v", p1): lvl}, {**env2, ("v", p2): lvl})
            case CtorApp(k1, a1), CtorApp(k2, a2):
                return (
                    k1 == k2
                    and len(a1) == len(a2)
                    and all(go(x, y, env1, env2) for x, y in zip(a1, a2))
                )
            case PrimOp(o1, l1, r1), PrimOp(o2, l2, r2):
                return o1 == o2 and go(l1, l2, env1, env2) and go(r1, r2, env1, env2)
            case Case(s1, alts1), Case(s2, alts2):
                if len(alts1) != len(alts2) or not go(s1, s2, env1, env2):
                    return False
                for alt1, alt2 in zip(alts1, alts2):
                    p1, p2 = alt1.pattern, alt2.pattern
                    match p1, p2:
                        case IntPat(n), IntPat(m):
                            if n != m:
                                return False
                            bs1, bs2 = (), ()
                        case CtorPat(k1, v1), CtorPat(k2, v2):
                            if k1 != k2 or len(v1) != len(v2):
                                return False
                            bs1, bs2 = v1, v2
                        case DefaultPat(x), DefaultPat(y):
                            bs1 = (x,) if x is not None else ()
                            bs2 = (y,) if y is not None else ()
                            if len(bs1) != len(bs2):
                                # a named default and a wildcard only differ
                                # when the name is used; align them anyway
                                bs1 = bs1 or ("_",)
                                bs2 = bs2 or ("_",)
                        case _:
                            return False
                    lvl = len(env1)
                    e1x = {**env1, **{("v", v): lvl + i for i, v in enumerate(bs1)}}
                    e2x = {**env2, **{("v", v): lvl + i for i, v in enumerate(bs2)}}
                    if not go(alt1.body, alt2.body, e1x, e2x):
                        return False
                return True
            case Let(x1, bd1, b1), Let(x2, bd2, b2):
                if not go(bd1, bd2, env1, env2):
                    return False
                lvl = len(env1)
                return go(b1, b2, {**env1, ("v", x1): lvl}, {**env2, ("v", x2): lvl})
            case Letrec(g1, r1, b1), Letrec(g2, r2, b2):
                lvl = len(env1)
                e1x = {**env1, ("f", g1): lvl}
                e2x = {**env2, ("f", g2): lvl}
                return go(r1, r2, e1x, e2x) and go(b1, b2, e1x, e2x)
            case GenRequest(o1, t1), GenRequest(o2, t2):
                return o1 == o2 and go(t1, t2, env1, env2)
            case _:
                return False

    return go(e1, e2, {}, {})


# ---------------------------------------------------------------------------
# renaming match (folding test)


def match_renaming(pattern_term: Expression, subject: Expression) -> Optional[dict[str, str]]:
    """A consistent (not necessarily injective) variable-to-variable map sigma
    on the free variables of pattern_term with sigma(pattern_term) equal to
    subject up to bound-variable renaming, or None.
    """
    sigma: dict[str, str] = {}

    def go(a: Expression, b: Expression, env1: dict, env2: dict) -> bool:
        match a, b:
            case Var(x), Var(y):
                bx, by = env1.get(("v", x)), env2.get(("v", y))
                if bx is not None or by is not None:
                    return bx is not None and bx == by
                if x in sigma:
                    return sigma[x] == y
                sigma[x] = y
                return True
            case Var(_), _:
                return False
            case IntLit(n), IntLit(m):
                return n == m
            case Global(f), Global(g):
                bf, bg = env1.get(("f", f)), env2.get(("f", g))
                if bf is None and bg is None:
                    return f == g
                return bf is not None and bf == bg
            case App(f1, a1), App(f2, a2):
                return go(f1, f2, env1, env2) and go(a1, a2, env1, env2)
            case Lambda(p1, b1), Lambda(p2, b2):
                lvl = len(env1)
                return go(b1, b2, {**env1, ("v", p1): lvl}, {**env2, ("v", p2): lvl})
            case CtorApp(k1, a1), CtorApp(k2, a2):
                return (
                    k1 == k2
                    and len(a1) == len(a2)
                    and all(go(x, y, env1, env2) for x, y in zip(a1, a2))
                )
            case PrimOp(o1, l1, r1), PrimOp(o2, l2, r2):
                return o1 == o2 and go(l1, l2, env1, env2) and go(r1, r2, env1, env2)
            case Case(s1, alts1), Case(s2, alts2):
                if len(alts1) != len(alts2) or not go(s1, s2, env1, env2):
                    return False
                for alt1, alt2 in zip(alts1, alts2):
                    p1, p2 = alt1.pattern, alt2.pattern
                    match p1, p2:
                        case IntPat(n), IntPat(m):
                            if n != m:
                                return False
                            bs1: tuple[str, ...] = ()
                            bs2: tuple[str, ...] = ()
                        case CtorPat(k1, v1), CtorPat(k2, v2):
                            if k1 != k2 or len(v1) != len(v2):
                                return False
                            bs1, bs2 = v1, v2
                        case DefaultPat(x), DefaultPat(y):
                            bs1 = (x,) if x is not None else ("_",)
                            bs2 = (y,) if y is not None else ("_",)
                        case _:
                            return False
                    lvl = len(env1)
                    e1x = {**env1, **{("v", v): lvl + i for i, v in enumerate(bs1)}}
                    e2x = {**env2, **{("v", v): lvl + i for i, v in enumerate(bs2)}}
                    if not go(alt1.body, alt2.body, e1x, e2x):
                        return False
                return True
            case Let(x1, bd1, b1), Let(x2, bd2, b2):
                if not go(bd1, bd2, env1, env2):
                    return False
                lvl = len(env1)
                return go(b1, b2, {**env1, ("v", x1): lvl}, {**env2, ("v", x2): lvl})
            case Letrec(g1, r1, b1), Letrec(g2, r2, b2):
                lvl = len(env1)
                e1x = {**env1, ("f", g1): lvl}
                e2x = {**env2, ("f", g2): lvl}
                return go(r1, r2, e1x, e2x) and go(b1, b2, e1x, e2x)
            case _:
                return False

    if go(pattern_term, subject, {}, {}):
        return sigma
    return None


# ---------------------------------------------------------------------------
# linearity


def _occurrences(e: Expression, x: str) -> int:
    """Occurrence count of x in e with the case rule: a case contributes its
    head count plus the maximum over its branches.  Capped at 2.
    """
    match e:
        case Var(name):
            return 1 if name == x else 0
        case IntLit() | Global():
            return 0
        case Lambda(p, b):
            return 0 if p == x else _occurrences(b, x)
        case Case(scrut, alts):
            n = _occurrences(scrut, x)
            branch = 0
            for alt in alts:
                if x in pattern_binders(alt.pattern):
                    continue
                branch = max(branch, _occurrences(alt.body, x))
            return min(2, n + branch)
        case Let(b, bound, body):
            n = _occurrences(bound, x)
            if b != x:
                n += _occurrences(body, x)
            return min(2, n)
        case _:
            n = 0
            for c in children(e):
                n += _occurrences(c, x)
                if n >= 2:
                    return 2
            return n


def is_linear(e: Expression, x: str) -> bool:
    """x occurs at most once in e, where a variable may occur once in each of
    several case branches but never in both the scrutinee and a branch.
    """
    return _occurrences(e, x) <= 1


# ---------------------------------------------------------------------------
# letrec encoding


def fix_definition() -> Expression:
    """fix = \\f. f (\\n. fix f n)"""
    return Lambda(
        "f",
        App(
            Var("f"),
            Lambda("n", App(App(Global(FIX_NAME), Var("f")), Var("n"))),
        ),
    )


def desugar_letrec(fun: str, rhs: Expression, body: Expression) -> Expression:
    """(\\h.body) (\\y. fix (\\h.rhs) y); rhs must be a lambda closed except
    for recursive references to fun.
    """
    if not isinstance(rhs, Lambda):
        raise SyntaxError_(f"letrec {fun}: right-hand side must be a lambda")
    extra = free_vars(rhs)
    if extra:
        raise SyntaxError_(
            f"letrec {fun}: right-hand side has free variables {sorted(extra)}"
        )
    recursive = Lambda(
        "y",
        App(
            App(Global(FIX_NAME), Lambda("_h", _as_var(rhs, fun, "_h"))),
            Var("y"),
        ),
    )
    return App(Lambda("_h", _as_var(body, fun, "_h")), recursive)


def _as_var(e: Expression, fun: str, var: str) -> Expression:
    """Replace Global(fun) by Var(var), respecting letrec shadowing."""
    match e:
        case Global(name) if name == fun:
            return Var(var)
        case Letrec(g, rhs, body) if g == fun:
            return e
        case Letrec(g, rhs, body):
            return Letrec(g, _as_var(rhs, fun, var), _as_var(body, fun, var))
        case App(f, a):
            return App(_as_var(f, fun, var), _as_var(a, fun, var))
        case Lambda(p, b):
            return Lambda(p, _as_var(b, fun, var))
        case CtorApp(k, args):
            return CtorApp(k, tuple(_as_var(a, fun, var) for a in args))
        case PrimOp(op, l, r):
            return PrimOp(op, _as_var(l, fun, var), _as_var(r, fun, var))
        case Case(s, alts):
            return Case(
                _as_var(s, fun, var),
                tuple(Alt(a.pattern, _as_var(a.body, fun, var)) for a in alts),
            )
        case Let(x, bound, b):
            return Let(x, _as_var(bound, fun, var), _as_var(b, fun, var))
        case _:
            return e


# ---------------------------------------------------------------------------
# weight (termination measure)


def weight(e: Expression, initial_vars: set[str] | frozenset[str]) -> int:
    """Variables from the initial program, integer literals and function
    symbols weigh 2; variables minted during driving weigh 1; any composite
    weighs one plus the sum of its parts.
    """
    match e:
        case Var(name):
            return 2 if name in initial_vars else 1
        case IntLit() | Global():
            return 2
        case CtorApp(_, args) if not args:
            return 2
        case _:
            kids = children(e)
            return 1 + sum(weight(c, initial_vars) for c in kids)


def all_identifiers(e: Expression) -> set[str]:
    """Every variable name (free or bound) and function symbol occurring in e."""
    out: set[str] = set()

    def go(e: Expression) -> None:
        match e:
            case Var(name):
                out.add(name)
            case Global(name):
                out.add(name)
            case Lambda(p, b):
                out.add(p)
                go(b)
                return
            case Case(scrut, alts):
                go(scrut)
                for alt in alts:
                    out.update(pattern_binders(alt.pattern))
                    go(alt.body)
                return
            case Let(x, bound, body):
                out.add(x)
                go(bound)
                go(body)
                return
            case Letrec(g, rhs, body):
                out.add(g)
                go(rhs)
                go(body)
                return
        for c in children(e):
            go(c)

    go(e)
    return out


# ---------------------------------------------------------------------------
# programs


def program_externals(program: Program) -> set[str]:
    """Free variables of definition bodies: unknown external functions."""
    out: set[str] = set()
    for body in program.defs.values():
        out |= free_vars(body)
    return out


def validate_program(program: Program) -> None:
    if FIX_NAME in program.defs:
        raise SyntaxError_(f"'{FIX_NAME}' is a reserved function name")
    for name, body in program.defs.items():
        unknown = fun_names(body) - set(program.defs) - {FIX_NAME}
        if unknown:
            raise SyntaxError_(f"{name}: undefined functions {sorted(unknown)}")
        _validate_expr(body, name)


def _validate_expr(e: Expression, where: str) -> None:
    for t in subterms(e):
        match t:
            case Case(_, alts):
                heads: set = set()
                for i, alt in enumerate(alts):
                    match alt.pattern:
                        case IntPat(n):
                            key = ("int", n)
                        case CtorPat(k, binders):
                            key = ("ctor", k)
                            if len(set(binders)) != len(binders):
                                raise SyntaxError_(
                                    f"{where}: repeated pattern variable in {k}"
                                )
                        case DefaultPat(_):
                            key = ("default",)
                            if i != len(alts) - 1:
                                raise SyntaxError_(
                                    f"{where}: default alternative must come last"
                                )
                    if key in heads:
                        raise SyntaxError_(f"{where}: duplicate case alternative")
                    heads.add(key)
            case Letrec(g, rhs, _):
                if not isinstance(rhs, Lambda):
                    raise SyntaxError_(f"{where}: letrec {g} must bind a lambda")
                extra = free_vars(rhs)
                if extra:
                    raise SyntaxError_(
                        f"{where}: letrec {g} captures variables {sorted(extra)}"
                    )
            case GenRequest(_, _):
                raise SyntaxError_(f"{where}: internal node in source program")
