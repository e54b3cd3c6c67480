import random

from hypothesis import given, settings

from deforest import (
    App,
    CtorApp,
    Global,
    IntLit,
    Lambda,
    Let,
    PrimOp,
    StuckError,
    Var,
    alpha_eq,
    bind_externals,
    decompose,
    desugar_letrec,
    eval_expr,
    eval_program,
    eval_via_step,
    is_value,
    parse_expression,
    parse_program,
    step,
    supercompile,
)
from deforest.syntax import Letrec

from conftest import (
    entry_calls_for,
    expressions,
    fixture_manifest,
    fixture_program,
    generate_programs,
)


def ev(text, defs_text="", fuel=100_000):
    program = parse_program(defs_text or "id x = x;")
    call = parse_expression(text, frozenset(program.defs))
    return eval_program(program, call, fuel)


def test_decompose_beta_redex():
    e = App(Lambda("x", Var("x")), IntLit(1))
    frames, redex = decompose(e)
    assert frames == []
    assert redex == e


def test_decompose_case_scrutinee_position():
    e = parse_expression("case 1 + 2 of { 3 -> 0 }")
    frames, redex = decompose(e)
    assert len(frames) == 1 and frames[0][0] == "case"
    assert redex == PrimOp("+", IntLit(1), IntLit(2))


def test_decompose_value():
    assert decompose(IntLit(5)) is None
    assert decompose(parse_expression("[1, 2]")) is None


def test_step_global_unfold():
    p = parse_program("f x = x;")
    out = step(App(Global("f"), IntLit(1)), p.defs)
    assert out == App(Lambda("x", Var("x")), IntLit(1))


def test_step_known_constructor_case():
    e = parse_expression("case (1 : []) of { [] -> 0; (x:xs) -> x }")
    assert step(e, {}) == IntLit(1)


def test_step_arith():
    e = parse_expression("case 2 + 3 of { 5 -> 9 }")
    assert step(e, {}) == parse_expression("case 5 of { 5 -> 9 }")
    assert step(parse_expression("2 + 3"), {}) == IntLit(5)


def test_step_none_for_values():
    assert step(IntLit(1), {}) is None
    assert step(parse_expression("\\x -> loop x"), {}) is None


def test_eval_factorial_fixture():
    program = fixture_program("factorial")
    call = parse_expression("main", frozenset(program.defs))
    out = eval_program(program, call)
    assert out.kind == "value"
    assert out.value == IntLit(6)
    # hand count: main unfold, fac 3/2/1/0 unfolds and betas, identity for
    # the external -> 10 calls; plus 4 case steps, 3 decrements, 3 products
    assert out.calls == 10
    assert out.steps == 20


def test_eval_append_allocations():
    program = parse_program(
        "append xs ys = case xs of { [] -> ys; (x:xs') -> x : append xs' ys };"
    )
    call = parse_expression("append [1,2] [3]", frozenset(program.defs))
    out = eval_program(program, call)
    assert out.kind == "value"
    assert alpha_eq(out.value, parse_expression("[1,2,3]"))
    assert out.allocs == 2  # one cons per element of the first list


def test_eval_out_of_fuel():
    out = ev("loop 1", "loop n = loop n;", fuel=1000)
    assert out.kind == "out_of_fuel"


def test_eval_stuck_reports_reason():
    out = eval_expr(PrimOp("+", IntLit(1), Lambda("x", Var("x"))), {}, 100)
    assert out.kind == "stuck"
    assert "integer" in out.reason


def test_eval_free_variable_is_stuck():
    out = eval_expr(App(Var("mystery"), IntLit(1)), {}, 100)
    assert out.kind == "stuck"


def test_values_are_normal_forms():
    for text in ["5", "[]", "[1, 2]", "\\x -> x + y", "Leaf 3"]:
        e = parse_expression(text)
        assert is_value(e)
        assert step(e, {}) is None


def test_fuel_monotonicity():
    program = fixture_program("double_append")
    call = parse_expression("main [1,2] [3] [4]", frozenset(program.defs))
    base = eval_program(program, call, 10_000)
    assert base.kind == "value"
    for extra in (1, 17, 1000):
        again = eval_program(program, call, base.steps + extra)
        assert again.kind == "value"
        assert again.value == base.value
        assert (again.calls, again.allocs, again.steps) == (
            base.calls,
            base.allocs,
            base.steps,
        )


def test_eval_agrees_with_step_iteration():
    rng = random.Random(11)
    for program in generate_programs(12, seed=5):
        for call in entry_calls_for(program, rng):
            machine = eval_expr(call, program.defs, 4000)
            stepped = eval_via_step(call, program.defs, 4000)
            assert machine.kind == stepped.kind
            assert machine.calls == stepped.calls
            assert machine.steps == stepped.steps
            if machine.kind == "value":
                assert machine.value == stepped.value


def test_generated_programs_never_get_stuck():
    rng = random.Random(3)
    for program in generate_programs(40, seed=41):
        for call in entry_calls_for(program, rng):
            out = eval_expr(call, program.defs, 200_000)
            assert out.kind in ("value", "out_of_fuel"), out.reason


def _expand_letrecs(e):
    from deforest.syntax import Alt, Case

    match e:
        case Letrec(g, rhs, body):
            return desugar_letrec(g, _expand_letrecs(rhs), _expand_letrecs(body))
        case App(f, a):
            return App(_expand_letrecs(f), _expand_letrecs(a))
        case Lambda(p, b):
            return Lambda(p, _expand_letrecs(b))
        case CtorApp(k, args):
            return CtorApp(k, tuple(_expand_letrecs(a) for a in args))
        case PrimOp(op, l, r):
            return PrimOp(op, _expand_letrecs(l), _expand_letrecs(r))
        case Case(s, alts):
            return Case(
                _expand_letrecs(s),
                tuple(Alt(a.pattern, _expand_letrecs(a.body)) for a in alts),
            )
        case Let(x, bound, body):
            return Let(x, _expand_letrecs(bound), _expand_letrecs(body))
        case _:
            return e


def test_letrec_costs_its_encoding():
    # residuals driven without lifting contain letrec nodes; evaluating them
    # must cost the same number of calls as their fix encoding
    from deforest import Program

    for name in ("append_self", "rev_accum", "double_append", "vecdot"):
        program = fixture_program(name)
        residual = supercompile(program, lift=False)
        entry = fixture_manifest(name)["entries"][0]
        call = parse_expression(entry, frozenset(residual.defs))
        direct = eval_program(residual, call, 100_000)
        encoded = Program(
            defs={n: _expand_letrecs(b) for n, b in residual.defs.items()},
            entry=residual.entry,
        )
        via_encoding = eval_program(encoded, call, 100_000)
        assert direct.kind == via_encoding.kind == "value"
        assert alpha_eq(direct.value, via_encoding.value)
        assert direct.calls == via_encoding.calls


def test_bind_externals_substitutes_identity():
    program = parse_program("main = show 42;")
    bound = bind_externals(program)
    out = eval_expr(Global("main"), bound.defs, 100)
    assert out.kind == "value" and out.value == IntLit(42)


@given(expressions(10))
@settings(max_examples=120, deadline=None)
def test_step_agrees_with_value_predicate(e):
    try:
        out = step(e, {})
    except StuckError:
        assert not is_value(e)
        return
    assert (out is None) == is_value(e)


def test_stats_block_format():
    out = ev("1 + 2")
    assert out.stats_block() == "calls=0 allocs=0 steps=1 outcome=value"
