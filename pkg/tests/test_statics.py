"""Kinding, subtyping, rank predicates, and the type checker."""

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rowlab.config import preset
from rowlab.parser import parse_term_str, parse_type_str
from rowlab.statics import (
    FeatureError,
    KindError,
    RankError,
    TypingError,
    check_rank_limit,
    kind_check,
    record_rank_ok,
    row_check,
    subtype,
    type_check,
    variant_rank_ok,
)
from rowlab.syntax import (
    Absent,
    Base,
    KPre,
    KRow,
    KType,
    Present,
    Record,
    Row,
    TyVar,
    Variant,
    type_equal,
)

T = parse_type_str
M = parse_term_str


def check(cfg_name, src, delta=None, gamma=None):
    return type_check(preset(cfg_name), delta or {}, gamma or {}, M(src))


# ---------------------------------------------------------------------------
# Kinding


def test_kind_closed_variant():
    assert kind_check({}, T("[Age:Int; Year:Int]")) == KType()


def test_kind_open_row_needs_matching_lacks():
    delta = {"r0": KRow(frozenset({"l"})), "a0": KType()}
    assert kind_check(delta, T("[l:a0; r0]")) == KType()


def test_kind_open_row_wrong_lacks():
    delta = {"r0": KRow(frozenset()), "a0": KType()}
    with pytest.raises(KindError):
        kind_check(delta, T("[l:a0; r0]"))


def test_kind_duplicate_label():
    with pytest.raises(KindError):
        kind_check({}, T("{Age:Int; Age:String}"))


def test_kind_unbound_tail():
    with pytest.raises(KindError):
        kind_check({}, T("[Year:Int; r9]"))


def test_kind_unbound_type_var():
    with pytest.raises(KindError):
        kind_check({}, T("a0 -> a0"))


def test_kind_presence_var():
    assert kind_check({"p0": KPre()}, T("{Name^p0:String}")) == KType()
    with pytest.raises(KindError):
        kind_check({}, T("{Name^p0:String}"))


def test_kind_quantifiers():
    assert kind_check({}, T("forall r0:Row!{Year}. [Year:Int; r0] -> Int")) == KType()
    assert kind_check({}, T("forall p0:Pre. {l^p0:Int}")) == KType()


def test_kind_shadowed_quantifier():
    with pytest.raises(KindError):
        kind_check({"r0": KRow(frozenset())}, T("forall r0:Row!{}. [l:Int; r0]"))


def test_row_check_closed_row_any_disjoint_lacks():
    row = T("{Age:Int}").row
    row_check({}, row, frozenset())
    row_check({}, row, frozenset({"Name"}))
    with pytest.raises(KindError):
        row_check({}, row, frozenset({"Age"}))


# ---------------------------------------------------------------------------
# Subtyping


def test_simple_variant_width():
    ev = subtype("simple", T("[Year:Int]"), T("[Age:Int; Year:Int]"))
    assert ev is not None and ev.rule == "SVariant"
    assert subtype("simple", T("[Age:Int; Year:Int]"), T("[Year:Int]")) is None


def test_simple_record_width():
    ev = subtype("simple", T("{Age:Int; Year:Int}"), T("{Year:Int}"))
    assert ev is not None and ev.rule == "SRecord"
    assert subtype("simple", T("{Year:Int}"), T("{Age:Int; Year:Int}")) is None


def test_simple_restriction_must_agree():
    assert subtype("simple", T("[Year:String]"), T("[Age:Int; Year:Int]")) is None


def test_simple_refl_on_arrows():
    ev = subtype("simple", T("Int -> Int"), T("Int -> Int"))
    assert ev is not None and ev.rule == "SRefl"
    assert subtype("simple", T("Int -> Int"), T("Int -> String")) is None


def test_depth_record_needs_covariant():
    a = T("{Name:String; Child:{Name:String; Age:Int}}")
    b = T("{Child:{Name:String}}")
    assert subtype("simple", a, b) is None
    ev = subtype("covariant", a, b)
    assert ev is not None and ev.rule == "FRecord"
    (label, inner), = ev.premises
    assert label == "Child" and inner.rule == "FRecord"


def test_covariant_arrow_keeps_domain():
    a = T("{} -> {Age:Int; Name:String}")
    b = T("{} -> {Name:String}")
    ev = subtype("covariant", a, b)
    assert ev is not None and ev.rule == "CoFun"
    assert ev.premises[0].rule == "FRecord"


def test_contravariant_domain_needs_full():
    a = T("{Name:String} -> String")
    b = T("{Name:String; Age:Int} -> String")
    assert subtype("covariant", a, b) is None
    ev = subtype("full", a, b)
    assert ev is not None and ev.rule == "FFun"
    dom, cod = ev.premises
    assert dom.rule == "FRecord" and type_equal(dom.lhs, b.dom)
    assert cod.rule == "FBase"


def test_full_variant_depth_and_width():
    a = T("[Ok:{A:Int; B:Int}]")
    b = T("[Ok:{A:Int}; Err:String]")
    ev = subtype("full", a, b)
    assert ev is not None and ev.rule == "FVariant"
    (label, inner), = ev.premises
    assert label == "Ok" and inner.rule == "FRecord"


def test_subtype_rejects_open_rows():
    delta = {"r0": KRow(frozenset({"Year"}))}
    a = T("[Year:Int; r0]")
    kind_check(delta, a)
    b = T("[Age:Int; Year:Int]")
    assert subtype("simple", a, b) is None
    assert subtype("covariant", a, b) is None
    assert subtype("full", a, b) is None


def test_subtype_rejects_presence_marks():
    a = T("{Name^o:String; Age:Int}")
    b = T("{Age:Int}")
    assert subtype("full", a, b) is None


SAMPLE_TYPES = [
    "Int",
    "String",
    "Int -> String",
    "[Age:Int; Year:Int]",
    "{Name:String}",
    "{Name:String; Child:{Name:String; Age:Int}}",
    "([A:Int] -> Int) -> {B:String}",
]


@pytest.mark.parametrize("src", SAMPLE_TYPES)
@pytest.mark.parametrize("mode", ["simple", "covariant", "full"])
def test_subtype_reflexive_every_mode(src, mode):
    ty = T(src)
    assert subtype(mode, ty, ty) is not None


def _widen(rng, ty, polarity=1):
    """A random supertype (polarity 1) or subtype (polarity -1) in full mode."""
    from rowlab.syntax import Arrow

    if isinstance(ty, Arrow):
        return Arrow(_widen(rng, ty.dom, -polarity), _widen(rng, ty.cod, polarity))
    if isinstance(ty, Record):
        fields = list(ty.row.entries)
        if polarity > 0 and len(fields) > 1 and rng.random() < 0.5:
            fields = [f for f in fields if rng.random() < 0.7] or fields[:1]
        elif polarity < 0 and rng.random() < 0.5:
            fields = fields + [(f"X{rng.randrange(3)}", Present(), Base("Int"))]
            fields = list({l: (l, p, t) for l, p, t in fields}.values())
        fields = [(l, p, _widen(rng, t, polarity)) for l, p, t in fields]
        return Record(Row(tuple(sorted(fields)), None))
    if isinstance(ty, Variant):
        entries = list(ty.row.entries)
        if polarity > 0 and rng.random() < 0.5:
            entries = entries + [(f"Y{rng.randrange(3)}", Present(), Base("Int"))]
            entries = list({l: (l, p, t) for l, p, t in entries}.values())
        elif polarity < 0 and len(entries) > 1 and rng.random() < 0.5:
            entries = [e for e in entries if rng.random() < 0.7] or entries[:1]
        entries = [(l, p, _widen(rng, t, polarity)) for l, p, t in entries]
        return Variant(Row(tuple(sorted(entries)), None))
    return ty


@given(st.integers(0, 10_000))
def test_full_subtype_transitive_on_widening_chains(seed):
    rng = random.Random(seed)
    base = T(rng.choice(SAMPLE_TYPES))
    mid = _widen(rng, base)
    top = _widen(rng, mid)
    assert subtype("full", base, mid) is not None
    assert subtype("full", mid, top) is not None
    assert subtype("full", base, top) is not None


@given(st.integers(0, 10_000))
def test_mode_inclusion_simple_covariant_full(seed):
    rng = random.Random(seed)
    base = T(rng.choice(SAMPLE_TYPES))
    wide = _widen(rng, base)
    if subtype("simple", base, wide) is not None:
        assert subtype("covariant", base, wide) is not None
    if subtype("covariant", base, wide) is not None:
        assert subtype("full", base, wide) is not None


# ---------------------------------------------------------------------------
# Rank predicates


def test_record_rank_examples():
    assert record_rank_ok(2, T("{Name:String} -> String"))
    assert not record_rank_ok(2, T("({Name:String} -> String) -> String"))
    assert not record_rank_ok(1, T("{Name:String} -> String"))
    assert record_rank_ok(1, T("{Name:String}"))
    assert record_rank_ok(1, T("Int -> {Name:String}"))
    assert record_rank_ok(0, T("Int -> Int"))
    assert not record_rank_ok(0, T("{Name:String}"))


def test_variant_rank_examples():
    assert variant_rank_ok(2, T("[A:Int] -> Int"))
    assert not variant_rank_ok(2, T("([A:Int] -> Int) -> Int"))
    assert not variant_rank_ok(1, T("[A:Int] -> Int"))
    assert variant_rank_ok(1, T("Int -> [A:Int]"))


def test_rank_predicates_pass_through_other_connective():
    assert record_rank_ok(0, T("[Wrap:Int] -> Int"))
    assert variant_rank_ok(0, T("{Wrap:Int} -> Int"))


def test_check_rank_limit_uses_config():
    assert check_rank_limit(preset("rec-sub-full-rank2"), T("{Name:String} -> String"))
    assert not check_rank_limit(
        preset("rec-sub-full-rank2"), T("({Name:String} -> String) -> String")
    )
    assert not check_rank_limit(
        preset("rec-sub-full-rank1"), T("{Name:String} -> String")
    )
    assert check_rank_limit(preset("rec-sub-full"), T("({A:Int} -> Int) -> Int"))


# ---------------------------------------------------------------------------
# Type checking


GET_AGE = "\\x:[Age:Int; Year:Int]. case x {Age a -> a; Year y -> 2023 - y}"


def test_get_age_checks():
    d = check("var-sub", GET_AGE)
    assert type_equal(d.type, T("[Age:Int; Year:Int] -> Int"))
    assert d.rule == "TyLam"


def test_get_age_applied_to_upcast_year():
    src = f"({GET_AGE}) (<Year 1984> : [Year:Int] :> [Age:Int; Year:Int])"
    d = check("var-sub", src)
    assert type_equal(d.type, T("Int"))


def test_upcast_needs_subtyping_feature():
    src = "<Year 1984> : [Year:Int] :> [Age:Int; Year:Int]"
    with pytest.raises(FeatureError):
        check("var", src)


def test_application_without_upcast_fails():
    src = f"({GET_AGE}) (<Year 1984> : [Year:Int])"
    with pytest.raises(TypingError):
        check("var-sub", src)


def test_record_literal_infers_closed_type():
    d = check("rec", '{Name = "Alice", Age = 9}')
    assert type_equal(d.type, T("{Age:Int; Name:String}"))


def test_get_name_on_narrowed_record():
    src = '(\\x:{Name:String}. x.Name) ({Name = "Alice", Age = 9} :> {Name:String})'
    d = check("rec-sub", src)
    assert type_equal(d.type, T("String"))
    up = d.premises[1]
    assert up.rule == "TyUpcast" and up.evidence.rule == "SRecord"


def test_plain_lambda_with_type_var():
    d = check("lam", "\\x:a0. x", delta={"a0": KType()})
    assert type_equal(d.type, T("a0 -> a0"))


def test_unannotated_lambda_rejected():
    with pytest.raises(TypingError):
        check("lam", "\\x. x")


def test_inject_needs_annotation():
    with pytest.raises(TypingError):
        check("var", "<Year 1984>")


def test_case_exact_coverage():
    with pytest.raises(TypingError):
        check("var", "\\x:[A:Int; B:Int]. case x {A a -> a}")
    with pytest.raises(TypingError):
        check("var", "\\x:[A:Int]. case x {A a -> a; B b -> b}")


def test_case_branches_must_agree():
    with pytest.raises(TypingError):
        check("var", '\\x:[A:Int; B:String]. case x {A a -> a; B b -> b}')


def test_case_open_scrutinee_rejected():
    delta = {"r0": KRow(frozenset({"A"}))}
    with pytest.raises(TypingError):
        check("var-row", "\\x:[A:Int; r0]. case x {A a -> a}", delta=delta)


def test_case_absent_branch_optional():
    src = "\\x:[A:Int; B^o:String]. case x {A a -> a}"
    d = check("var-pre", src)
    assert type_equal(d.type, T("[A:Int; B^o:String] -> Int"))
    src_full = "\\x:[A:Int; B^o:String]. case x {A a -> a; B b -> 0}"
    d2 = check("var-pre", src_full)
    assert type_equal(d2.type, T("[A:Int; B^o:String] -> Int"))


def test_case_presence_var_branch_required():
    delta = {"p0": KPre()}
    with pytest.raises(TypingError):
        check("var-pre", "\\x:[A:Int; B^p0:String]. case x {A a -> a}", delta=delta)


def test_inject_requires_present_entry():
    with pytest.raises(TypingError):
        check("var-pre", "<B 1> : [A:Int; B^o:Int]")


def test_record_literal_needs_annotation_with_presence():
    with pytest.raises(TypingError):
        check("rec-pre", '{Name = "Alice"}')


def test_record_literal_absent_entry_field_optional():
    d = check("rec-pre", '{Name = "A"} : {Age^o:Int; Name:String}')
    assert type_equal(d.type, T("{Age^o:Int; Name:String}"))
    d2 = check("rec-pre", '{Name = "A", Age = 9} : {Age^o:Int; Name:String}')
    assert type_equal(d2.type, T("{Age^o:Int; Name:String}"))


def test_record_literal_missing_present_field():
    with pytest.raises(TypingError):
        check("rec-pre", '{Age = 9} : {Age:Int; Name:String}')


def test_project_needs_present():
    with pytest.raises(TypingError):
        check("rec-pre", '({Name = "A"} : {Age^o:Int; Name:String}).Age')
    d = check("rec-pre", '({Name = "A"} : {Age^o:Int; Name:String}).Name')
    assert type_equal(d.type, T("String"))


def test_row_abstraction_and_application():
    src = "/\\r0:Row!{Year}. \\x:[Year:Int; r0]. x"
    d = check("var-row", src)
    assert type_equal(
        d.type, T("forall r0:Row!{Year}. [Year:Int; r0] -> [Year:Int; r0]")
    )
    d2 = check("var-row", f"({src}) @ [Age:Int]")
    assert type_equal(d2.type, T("[Age:Int; Year:Int] -> [Age:Int; Year:Int]"))


def test_row_application_kind_mismatch():
    src = "(/\\r0:Row!{Year}. \\x:[Year:Int; r0]. x) @ [Year:String]"
    with pytest.raises(KindError):
        check("var-row", src)


def test_presence_abstraction_and_application():
    src = '/\\p0. {Name = "A"} : {Name^p0:String}'
    d = check("rec-pre", src)
    assert type_equal(d.type, T("forall p0:Pre. {Name^p0:String}"))
    d2 = check("rec-pre", f"({src}) @@ *")
    assert type_equal(d2.type, T("{Name:String}"))
    d3 = check("rec-pre", f"({src}) @@ o")
    assert type_equal(d3.type, T("{Name^o:String}"))


def test_let_only_where_enabled():
    src = 'let x = {Name = "A"} in x.Name'
    d = check("rec-sub-full-rank2", src)
    assert type_equal(d.type, T("String"))
    with pytest.raises(FeatureError):
        check("rec-sub", src)


def test_rank_limit_enforced_in_derivation():
    src = '(\\f:{Name:String} -> String. f {Name = "A"}) (\\x:{Name:String}. x.Name)'
    d = check("rec-sub-full", src)
    assert type_equal(d.type, T("String"))
    with pytest.raises(RankError):
        check("rec-sub-full-rank2", src)


def test_rank_one_allows_flat_records():
    d = check("rec-sub-full-rank1", '{Name = "A"}.Name')
    assert type_equal(d.type, T("String"))
    with pytest.raises(RankError):
        check("rec-sub-full-rank1", '(\\x:{Name:String}. x.Name) {Name = "A"}')


def test_app_sub_folds_subsumption_into_application():
    cfg = preset("rec-sub-full").with_app_sub()
    term = M('(\\x:{Name:String}. x.Name) {Name = "A", Age = 9}')
    d = type_check(cfg, {}, {}, term)
    assert d.rule == "TyAppSub" and d.evidence.rule == "FRecord"
    with pytest.raises(TypingError):
        check("rec-sub-full", '(\\x:{Name:String}. x.Name) {Name = "A", Age = 9}')


def test_upcast_modes_differ():
    deep = '{Name = "A", Child = {Name = "B", Age = 9}} :> {Child:{Name:String}}'
    with pytest.raises(TypingError):
        check("rec-sub", deep)
    d = check("rec-sub-co", deep)
    assert d.evidence.rule == "FRecord"
    fn = "(\\x:{Name:String}. x.Name) :> ({Name:String; Age:Int} -> String)"
    with pytest.raises(TypingError):
        check("rec-sub-co", fn)
    d2 = check("rec-sub-full", fn)
    assert d2.evidence.rule == "FFun"


def test_shadowing_rejected():
    with pytest.raises(TypingError):
        check("lam", "\\x:Int. \\x:Int. x")


def test_feature_gates():
    with pytest.raises(FeatureError):
        check("var", '{Name = "A"}')
    with pytest.raises(FeatureError):
        check("rec", "<A 1> : [A:Int]")
    with pytest.raises(FeatureError):
        check("rec", "/\\r0:Row!{}. \\x:Int. x")
    with pytest.raises(FeatureError):
        check("rec-row", '/\\p0. {Name = "A"} : {Name^p0:String}')


def test_string_concat():
    d = check("lam", '"a" ++ "b"')
    assert type_equal(d.type, T("String"))
    with pytest.raises(TypingError):
        check("lam", '"a" ++ 1')


def test_derivation_json_shape():
    d = check("var-sub", "<Year 1984> : [Year:Int] :> [Age:Int; Year:Int]")
    js = d.to_json()
    assert js["rule"] == "TyUpcast"
    assert js["evidence"]["rule"] == "SVariant"
    assert js["premises"][0]["rule"] == "TyInject"
    assert "|-" in js["judgment"]
