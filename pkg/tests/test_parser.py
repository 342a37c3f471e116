"""Grammar round-trips and the binder-kind recovery rules."""

from __future__ import annotations

import pytest

from rowlab.parser import ParseError, parse_file_str, parse_term_str, parse_type_str
from rowlab.pretty import show_scheme, show_term, show_type
from rowlab.syntax import (
    Absent,
    App,
    Arrow,
    Base,
    Case,
    ForallPres,
    ForallRow,
    Inject,
    KPre,
    KRow,
    KType,
    Lam,
    Let,
    Lit,
    PresAbs,
    PresApp,
    PresVar,
    Present,
    Prim,
    Project,
    Record,
    RecordLit,
    Row,
    RowAbs,
    RowApp,
    TyVar,
    TypeScheme,
    Upcast,
    Var,
    Variant,
    alpha_eq,
    type_equal,
)

INT = Base("Int")
STR = Base("String")


def test_parse_variant_type():
    ty = parse_type_str("[Age:Int; Year:Int]")
    assert ty == Variant(Row((("Age", Present(), INT), ("Year", Present(), INT)), None))


def test_parse_record_with_tail_and_presence():
    ty = parse_type_str("{Name^p0:String; Age^o:Int; r0}")
    assert ty == Record(
        Row((("Name", PresVar("p0"), STR), ("Age", Absent(), INT)), "r0")
    )


def test_parse_forall_row_explicit_kind():
    ty = parse_type_str("forall r0:Row!{Age,Year}. [Age:Int; Year:Int; r0]")
    assert isinstance(ty, ForallRow)
    assert ty.kind == KRow(frozenset({"Age", "Year"}))


def test_parse_forall_kind_recovery_row():
    ty = parse_type_str("forall r0. [Age:Int; r0]")
    assert isinstance(ty, ForallRow)
    assert ty.kind == KRow(frozenset({"Age"}))


def test_parse_forall_kind_recovery_pres():
    ty = parse_type_str("forall p0. {Name^p0:String}")
    assert isinstance(ty, ForallPres)


def test_parse_arrow_right_assoc():
    ty = parse_type_str("a0 -> a1 -> a0")
    assert ty == Arrow(TyVar("a0"), Arrow(TyVar("a1"), TyVar("a0")))


def test_parse_getage():
    term = parse_term_str(
        "\\x:[Age:Int; Year:Int]. case x { Age y -> y; Year y -> 2023 - y }"
    )
    assert isinstance(term, Lam)
    assert isinstance(term.body, Case)
    (_, _, age_body), (_, _, year_body) = term.body.branches
    assert age_body == Var("y")
    assert year_body == Prim("-", (Lit(2023), Var("y")))


def test_parse_inject_annot_and_upcast():
    term = parse_term_str("<Year 1984> : [Year:Int] :> [Age:Int; Year:Int]")
    assert isinstance(term, Upcast)
    assert isinstance(term.term, Inject)
    assert term.term.annot == Variant(Row((("Year", Present(), INT),), None))


def test_parse_record_literal_annot():
    term = parse_term_str('{Name = "Alice", Age = 9} : {Name^p:String; Age^q:Int}')
    assert isinstance(term, RecordLit)
    assert term.fields == (("Name", Lit("Alice")), ("Age", Lit(9)))
    assert term.annot is not None


def test_parse_rowapp_origins():
    src = parse_term_str("x @ [Age:Int; r0]")
    up = parse_term_str("x @@ [Age:Int; r0]")
    assert isinstance(src, RowApp) and src.origin == "source"
    assert isinstance(up, RowApp) and up.origin == "upcast"


def test_parse_presapp_literals():
    assert parse_term_str("x @ o") == PresApp(Var("x"), Absent(), "source")
    assert parse_term_str("x @ *") == PresApp(Var("x"), Present(), "source")
    assert parse_term_str("x @@ p0") == PresApp(Var("x"), PresVar("p0"), "upcast")


def test_parse_type_abstraction_kinds():
    row = parse_term_str("/\\r0:Row!{Year}. <Year 1984> : [Year:Int; r0]")
    assert isinstance(row, RowAbs)
    pres = parse_term_str("/\\p0. x @ p0")
    assert isinstance(pres, PresAbs)
    recovered = parse_term_str("/\\r0. <Year 1984> : [Year:Int; r0]")
    assert isinstance(recovered, RowAbs)
    assert recovered.kind == KRow(frozenset({"Year"}))


def test_parse_case_rowapp_scrutinee_without_parens():
    term = parse_term_str("case x @ [] { Age y -> y }")
    assert isinstance(term, Case)
    assert isinstance(term.scrutinee, RowApp)


def test_parse_projection_binds_tighter_than_app():
    term = parse_term_str("f x.Name")
    assert term == App(Var("f"), Project(Var("x"), "Name"))


def test_parse_let():
    term = parse_term_str("let x = {Name = \"A\"} in x.Name")
    assert isinstance(term, Let)
    assert isinstance(term.body, Project)


def test_parse_empty_is_error():
    with pytest.raises(ParseError):
        parse_term_str("   -- nothing here\n")


def test_parse_file_env_headers():
    delta, gamma, term = parse_file_str(
        "-- env: a0 : Type\n-- env: y : a0\n{l = y} :> {}\n"
    )
    assert delta == {"a0": KType()}
    assert gamma == {"y": TyVar("a0")}
    assert isinstance(term, Upcast)


def test_parse_file_row_kind_header():
    delta, _, _ = parse_file_str("-- env: r0 : Row!{Age}\nx @ [r0]\n")
    assert delta == {"r0": KRow(frozenset({"Age"}))}


ROUND_TRIP_TERMS = [
    "\\x:[Age:Int; Year:Int]. case x { Age y -> y; Year y -> 2023 - y }",
    "(\\x:{Name:String}. x.Name) ({Name = \"Alice\", Age = 9} :> {Name:String})",
    "/\\r0:Row!{Year}. <Year 1984> : [Year:Int; r0]",
    "/\\p0. /\\p1. {Name = \"Alice\", Age = 9} : {Age^p0:Int; Name^p1:String}",
    "\\x:forall r0:Row!{Age,Year}. [Age:Int; Year:Int; r0]. case x @ [] { Age y -> y }",
    "let getName = \\x. x.Name in getName {Name = \"Alice\", Age = 9}",
    "x @@ [Age:Int; r0] @ * @@ o",
    "f (x - 1) + g 2 ++ \"s\"",
    "<Raw (<Year 1984> : [Year:Int])> : [Raw:[Year:Int]]",
    "case (x :> [l:Int]) { l z -> z }",
]


@pytest.mark.parametrize("src", ROUND_TRIP_TERMS)
def test_round_trip_terms(src):
    term = parse_term_str(src)
    assert alpha_eq(parse_term_str(show_term(term)), term)


ROUND_TRIP_TYPES = [
    "forall r0:Row!{Age,Year}. [Age:Int; Year:Int; r0] -> Int",
    "{Name^p0:String; Age^o:Int} -> forall p1:Pre. {l^p1:Int}",
    "(a0 -> a1) -> {f:a0 -> a1; g:[x:a0; y:a1]}",
]


@pytest.mark.parametrize("src", ROUND_TRIP_TYPES)
def test_round_trip_types(src):
    ty = parse_type_str(src)
    assert type_equal(parse_type_str(show_type(ty)), ty)


def test_show_scheme():
    scheme = TypeScheme(
        (("a0", KType()), ("r0", KRow(frozenset({"Name"})))),
        Arrow(Record(Row((("Name", Present(), TyVar("a0")),), "r0")), TyVar("a0")),
    )
    text = show_scheme(scheme)
    assert text == "forall a0:Type r0:Row!{Name}. {Name:a0; r0} -> a0"
