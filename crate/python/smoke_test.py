"""Smoke test for the lrp Python extension."""

import lrp


def main() -> None:
    e = lrp.load_program("main = letrec x = \\y. y in x x")
    assert e.free_vars == []

    m = lrp.compile_expr(e)
    assert m.is_machine_expr
    assert m.alpha_eq(lrp.compile_expr(m))

    r = lrp.run(m, trace=True)
    assert r.outcome == "final", r
    assert r.result == "\\y. y", r.result
    assert r.mln == 1
    assert r.trace[0][1] == "Init"

    o = lrp.oracle(e)
    assert o.outcome == "whnf" and o.rln == r.mln, o

    hole = lrp.run(lrp.compile_expr(lrp.Expr.parse("letrec x = x in x")))
    assert hole.outcome == "blackhole"

    fold = lrp.load_program("main = foldl' xor False (True : take 24 falses)")
    eager = lrp.run(lrp.compile_expr(fold))
    never = lrp.run(lrp.compile_expr(fold), gc_mode="never", screm=False)
    assert eager.result == never.result == "True"
    assert eager.mln == never.mln

    custom = lrp.load_program("main = twice not True", library="twice = \\f,x. f (f x);\nnot = \\b. case b of { True -> False; False -> True };\n")
    assert lrp.run(lrp.compile_expr(custom)).result == "True"

    try:
        lrp.Expr.parse("letrec in")
    except lrp.ParseError:
        pass
    else:
        raise AssertionError("expected a parse error")

    assert "fold" in lrp.experiments()
    rows = dict(lrp.experiment("fold", [25, 50]))
    assert rows["foldl"][0][:2] == (25, 302), rows["foldl"]

    print("smoke test ok:", r, o)


if __name__ == "__main__":
    main()
