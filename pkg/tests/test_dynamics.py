"""Reduction, cast evaluation, erasure, and the approximation preorder."""

import pytest

from rowlab.config import preset
from rowlab.dynamics import (
    OutOfFuel,
    RelationSet,
    erase,
    normalize,
    reduction_trace,
    relations_for,
    step_all,
    step_once,
    term_preorder,
)
from rowlab.parser import parse_term_str
from rowlab.syntax import Lit, alpha_eq

M = parse_term_str

BETA = RelationSet()
SIMPLE = RelationSet(upcast=True, nested=True)
FULL = RelationSet(upcast=True, full_upcast=True, nested=True)
POLY = RelationSet(type_redex=True)


def nf(src, rels=BETA):
    return normalize(M(src), rels)


def tags(src, rels=BETA):
    _, steps = reduction_trace(M(src), rels)
    return [s.tag for s in steps]


# ---------------------------------------------------------------------------
# Relation selection per configuration


def test_relations_for_presets():
    assert relations_for(preset("var")) == RelationSet()
    assert relations_for(preset("var-sub")) == RelationSet(upcast=True, nested=True)
    assert relations_for(preset("rec-sub-full")) == RelationSet()
    assert relations_for(preset("rec-sub-full"), full_upcast=True) == FULL
    assert relations_for(preset("var-row")) == RelationSet(type_redex=True)
    assert relations_for(preset("rec-pre")) == RelationSet(type_redex=True)
    assert relations_for(preset("var-sub"), full_upcast=True) == SIMPLE


# ---------------------------------------------------------------------------
# Beta steps


def test_beta_lam():
    assert nf("(\\x:Int. x) 5") == Lit(5)
    assert tags("(\\x:Int. x) 5") == ["beta-lam"]


def test_call_by_name_outermost_first():
    term = M("(\\x:Int. 1) ((\\y:Int. y) 2)")
    step = step_once(term, BETA)
    assert step.tag == "beta-lam" and step.path == ()
    assert step.term == Lit(1)


def test_step_all_lists_every_redex():
    term = M("(\\x:Int. x) ((\\y:Int. y) 2)")
    steps = step_all(term, BETA)
    assert [s.path for s in steps] == [(), ("arg",)]


def test_get_age_pipeline_simple_casts():
    src = (
        "(\\x:[Age:Int; Year:Int]. case x {Age a -> a; Year y -> 2023 - y}) "
        "(<Year 1984> : [Year:Int] :> [Age:Int; Year:Int])"
    )
    assert tags(src, SIMPLE) == ["beta-lam", "upcast-variant", "beta-case", "beta-prim"]
    assert nf(src, SIMPLE) == Lit(39)


def test_get_name_pipeline_simple_casts():
    src = (
        '(\\x:{Name:String}. x.Name) '
        '({Name = "Alice", Age = 9} :> {Name:String})'
    )
    assert tags(src, SIMPLE) == ["beta-lam", "upcast-record", "beta-project"]
    assert nf(src, SIMPLE) == Lit("Alice")


def test_beta_let():
    assert nf("let x = 1 in x + x") == Lit(2)
    assert tags("let x = 1 in x + x") == ["beta-let", "beta-prim"]


def test_beta_prim_strings():
    assert nf('"Al" ++ "ice"') == Lit("Alice")


def test_beta_case_drops_annotation():
    src = "case (<A 1> : [A:Int; B:Int]) {A a -> a; B b -> b}"
    assert nf(src) == Lit(1)


def test_beta_project():
    assert nf('{Name = "Alice", Age = 9}.Age') == Lit(9)


def test_stuck_terms_do_not_step():
    assert step_all(M("case (<A 1> : [A:Int]) {B b -> b}"), BETA) == []
    assert step_all(M("{Name = 1}.Age"), BETA) == []
    assert step_all(M("x y"), BETA) == []


# ---------------------------------------------------------------------------
# Cast rules


def test_upcast_variant_relabels_annotation():
    src = "<Year 1984> : [Year:Int] :> [Age:Int; Year:Int]"
    out = nf(src, SIMPLE)
    assert alpha_eq(out, M("<Year 1984> : [Age:Int; Year:Int]"))


def test_upcast_record_drops_fields():
    src = '{Name = "Alice", Age = 9} :> {Name:String}'
    out = nf(src, SIMPLE)
    assert alpha_eq(out, M('{Name = "Alice"} : {Name:String}'))


def test_nested_upcast_collapses():
    src = '{A = 1, B = 2, C = 3} :> {A:Int; B:Int} :> {A:Int}'
    assert tags(src, SIMPLE) == ["nested-upcast", "upcast-record"]
    assert alpha_eq(nf(src, SIMPLE), M("{A = 1} : {A:Int}"))


def test_full_cast_at_base_vanishes():
    assert nf("5 :> Int", FULL) == Lit(5)
    assert tags("5 :> Int", FULL) == ["upcast-var"]


def test_full_cast_function_rebinds():
    src = '(\\x:{Name:String; Age:Int}. x.Name) :> ({Age:Int; Name:String; Zip:Int} -> String)'
    rels = RelationSet(beta=False, upcast=True, full_upcast=True, nested=True)
    step = step_once(M(src), rels)
    assert step.tag == "upcast-lam"
    want = M(
        "\\x:{Age:Int; Name:String; Zip:Int}. "
        "((x :> {Name:String; Age:Int}).Name :> String)"
    )
    assert alpha_eq(step.term, want)


def test_full_cast_function_then_beta():
    src = (
        '((\\x:{Name:String}. x.Name) '
        ':> ({Age:Int; Name:String} -> String)) {Name = "Alice", Age = 9}'
    )
    assert nf(src, FULL) == Lit("Alice")


def test_full_cast_variant_deep():
    src = "(<Ok {A = 1, B = 2}> : [Ok:{A:Int; B:Int}]) :> [Err:String; Ok:{A:Int}]"
    out = nf(src, FULL)
    assert alpha_eq(out, M("<Ok {A = 1} : {A:Int}> : [Err:String; Ok:{A:Int}]"))


def test_full_cast_record_deep():
    src = "{P = {A = 1, B = 2}, Q = 3} :> {P:{A:Int}}"
    out = nf(src, FULL)
    assert alpha_eq(out, M("{P = {A = 1} : {A:Int}} : {P:{A:Int}}"))


def test_cast_rules_off_without_relation():
    assert step_all(M("5 :> Int"), BETA) == []
    assert step_all(M('{A = 1} :> {A:Int}'), BETA) == []


# ---------------------------------------------------------------------------
# Type-level redexes


def test_row_beta_source_tag():
    src = "(/\\r0:Row!{Year}. \\x:[Year:Int; r0]. x) @ [Age:Int]"
    term = M(src)
    step = step_once(term, POLY)
    assert step.tag == "tau-row"
    assert alpha_eq(step.term, M("\\x:[Age:Int; Year:Int]. x"))


def test_row_beta_upcast_tag():
    term = M("(/\\r0:Row!{Year}. \\x:[Year:Int; r0]. x) @@ [Age:Int]")
    step = step_once(term, POLY)
    assert step.tag == "nu-row"


def test_presence_beta():
    src = '(/\\p0. {Name = "A"} : {Name^p0:String}) @ *'
    step = step_once(M(src), POLY)
    assert step.tag == "tau-pres"
    assert alpha_eq(step.term, M('{Name = "A"} : {Name:String}'))
    src2 = '(/\\p0. {Name = "A"} : {Name^p0:String}) @ o'
    out = normalize(M(src2), POLY)
    assert alpha_eq(out, M('{Name = "A"} : {Name^o:String}'))
    src3 = '(/\\p0. {Name = "A"} : {Name^p0:String}) @@ o'
    assert step_once(M(src3), POLY).tag == "nu-pres"


def test_fuel_runs_out_on_loops():
    loop = M("(\\x. x x) (\\x. x x)")
    with pytest.raises(OutOfFuel):
        normalize(loop, BETA, fuel=50)


# ---------------------------------------------------------------------------
# Erasure


def test_erase_drops_casts_and_annotations():
    src = "<Year 1984> : [Year:Int] :> [Age:Int; Year:Int]"
    assert alpha_eq(erase(M(src)), M("<Year 1984>"))


def test_erase_drops_type_abstractions():
    src = "(/\\r0:Row!{Year}. \\x:[Year:Int; r0]. x) @ [Age:Int]"
    assert alpha_eq(erase(M(src)), M("\\x. x"))


def test_erase_keeps_let_and_prims():
    src = "let x = 1 + 2 in x"
    assert alpha_eq(erase(M(src)), M(src))


def test_erase_homomorphic_under_binders():
    src = "\\x:[A:Int]. case x {A a -> {V = a} :> {V:Int}}"
    assert alpha_eq(erase(M(src)), M("\\x. case x {A a -> {V = a}}"))


# ---------------------------------------------------------------------------
# Approximation preorder


def test_preorder_alpha():
    assert term_preorder(M("\\x. x"), M("\\y. y"))
    assert not term_preorder(M("\\x. x"), M("\\y. \\z. y"))


def test_preorder_record_width():
    assert term_preorder(M("{A = 1, B = 2}"), M("{A = 1}"))
    assert not term_preorder(M("{A = 1}"), M("{A = 1, B = 2}"))
    assert term_preorder(M("{A = 1, B = 2}"), M("{A = 1, B = 2}"))


def test_preorder_congruence():
    assert term_preorder(M("\\x. {A = x, B = 1}"), M("\\y. {A = y}"))
    assert term_preorder(
        M("case z {A a -> {V = a, W = 1}}"), M("case z {A a -> {V = a}}")
    )
    assert term_preorder(M("let x = {A = 1, B = 2} in x.A"), M("let x = {A = 1} in x.A"))
    assert not term_preorder(M("1"), M("2"))
    assert not term_preorder(M("x y"), M("x"))


def test_preorder_respects_binding():
    assert not term_preorder(M("\\x. \\y. x"), M("\\a. \\b. b"))
