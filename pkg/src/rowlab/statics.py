"""Kinding, subtyping, and type checking for the annotated calculi.

Checking is syntax-directed over fully annotated terms.  Every successful
check returns a Derivation tree; Upcast nodes carry subtyping evidence so
that later passes can compile the cast away without re-deriving it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import CalculusConfig
from .pretty import show_kind, show_term, show_type
from .syntax import (
    Absent,
    App,
    Arrow,
    Base,
    Case,
    ForallPres,
    ForallRow,
    Inject,
    Kind,
    KPre,
    KRow,
    KType,
    Lam,
    Let,
    Lit,
    MalformedRowError,
    Present,
    PresAbs,
    PresApp,
    Presence,
    PresVar,
    Prim,
    Project,
    Record,
    RecordLit,
    Row,
    RowAbs,
    RowApp,
    Term,
    Type,
    TyVar,
    Upcast,
    Var,
    Variant,
    normalize_row,
    subst_type_in_type,
    type_equal,
)

INT = Base("Int")
STRING = Base("String")

PRIM_SIGS: dict[str, tuple[Type, Type, Type]] = {
    "+": (INT, INT, INT),
    "-": (INT, INT, INT),
    "++": (STRING, STRING, STRING),
}


class StaticError(Exception):
    """Raised when a type, row, or term fails to check."""


class KindError(StaticError):
    pass


class TypingError(StaticError):
    pass


class FeatureError(TypingError):
    """The term or type uses a constructor the calculus does not have."""


class RankError(TypingError):
    """A type in the derivation exceeds the configured rank limit."""


# ---------------------------------------------------------------------------
# Kinding


def kind_check(delta: dict[str, Kind], ty: Type) -> Kind:
    """Kind of ``ty`` under ``delta``; raises KindError if ill formed."""
    if isinstance(ty, TyVar):
        k = delta.get(ty.name)
        if k is None:
            raise KindError(f"unbound type variable {ty.name}")
        if not isinstance(k, KType):
            raise KindError(f"{ty.name} has kind {show_kind(k)}, expected Type")
        return KType()
    if isinstance(ty, Base):
        return KType()
    if isinstance(ty, Arrow):
        _expect_type_kind(delta, ty.dom)
        _expect_type_kind(delta, ty.cod)
        return KType()
    if isinstance(ty, (Variant, Record)):
        row_check(delta, ty.row, frozenset())
        return KType()
    if isinstance(ty, ForallRow):
        if ty.var in delta:
            raise KindError(f"type binder {ty.var} shadows an outer binder")
        if not isinstance(ty.kind, KRow):
            raise KindError(f"row binder {ty.var} must have a row kind")
        _expect_type_kind({**delta, ty.var: ty.kind}, ty.body)
        return KType()
    if isinstance(ty, ForallPres):
        if ty.var in delta:
            raise KindError(f"type binder {ty.var} shadows an outer binder")
        _expect_type_kind({**delta, ty.var: KPre()}, ty.body)
        return KType()
    raise KindError(f"unhandled type form {type(ty).__name__}")


def _expect_type_kind(delta: dict[str, Kind], ty: Type) -> None:
    k = kind_check(delta, ty)
    if not isinstance(k, KType):
        raise KindError(f"{show_type(ty)} has kind {show_kind(k)}, expected Type")


def row_check(delta: dict[str, Kind], row: Row, lacks: frozenset[str]) -> None:
    """Check ``row`` against kind Row lacking ``lacks``."""
    seen: set[str] = set()
    for label, pres, ty in row.entries:
        if label in seen:
            raise KindError(f"duplicate label {label} in row")
        if label in lacks:
            raise KindError(f"label {label} must be absent from this row")
        seen.add(label)
        _presence_check(delta, pres)
        _expect_type_kind(delta, ty)
    if row.tail is not None:
        k = delta.get(row.tail)
        if k is None:
            raise KindError(f"unbound row variable {row.tail}")
        if not isinstance(k, KRow):
            raise KindError(f"{row.tail} has kind {show_kind(k)}, expected a row kind")
        want = lacks | frozenset(seen)
        if k.lacks != want:
            raise KindError(
                f"row tail {row.tail} lacks {{{', '.join(sorted(k.lacks))}}}, "
                f"needs {{{', '.join(sorted(want))}}}"
            )


def _presence_check(delta: dict[str, Kind], pres: Presence) -> None:
    if isinstance(pres, PresVar):
        k = delta.get(pres.name)
        if k is None:
            raise KindError(f"unbound presence variable {pres.name}")
        if not isinstance(k, KPre):
            raise KindError(f"{pres.name} has kind {show_kind(k)}, expected Pre")


# ---------------------------------------------------------------------------
# Subtyping


@dataclass(frozen=True)
class SubtypeEvidence:
    """Proof skeleton for lhs <= rhs, tagged with the rule that closed it.

    Premise shapes by rule:
      SRefl, FVar, FBase        -- ()
      SVariant, SRecord         -- ()
      CoFun                     -- (codomain evidence,)
      FFun                      -- (domain evidence [rhs.dom <= lhs.dom], codomain evidence)
      FVariant                  -- ((label, evidence) for each lhs label)
      FRecord                   -- ((label, evidence) for each rhs label)
    """

    rule: str
    lhs: Type
    rhs: Type
    premises: tuple = ()


def subtype(mode: str, a: Type, b: Type) -> SubtypeEvidence | None:
    """Evidence that ``a`` is a subtype of ``b`` under ``mode``, else None."""
    if mode == "none":
        return None
    if mode == "simple":
        return _subtype_simple(a, b)
    if mode == "covariant":
        return _subtype_struct(a, b, depth_fun=False)
    if mode == "full":
        return _subtype_struct(a, b, depth_fun=True)
    raise ValueError(f"unknown subtyping mode {mode!r}")


def _closed_simple_row(row: Row) -> dict[str, Type] | None:
    if row.tail is not None:
        return None
    out: dict[str, Type] = {}
    for label, pres, ty in row.entries:
        if not isinstance(pres, Present):
            return None
        out[label] = ty
    return out


def _subtype_simple(a: Type, b: Type) -> SubtypeEvidence | None:
    if isinstance(a, Variant) and isinstance(b, Variant):
        ra, rb = _closed_simple_row(a.row), _closed_simple_row(b.row)
        if ra is not None and rb is not None and set(ra) <= set(rb):
            if all(type_equal(ra[l], rb[l]) for l in ra):
                return SubtypeEvidence("SVariant", a, b)
    if isinstance(a, Record) and isinstance(b, Record):
        ra, rb = _closed_simple_row(a.row), _closed_simple_row(b.row)
        if ra is not None and rb is not None and set(rb) <= set(ra):
            if all(type_equal(ra[l], rb[l]) for l in rb):
                return SubtypeEvidence("SRecord", a, b)
    if type_equal(a, b):
        return SubtypeEvidence("SRefl", a, b)
    return None


def _subtype_struct(a: Type, b: Type, depth_fun: bool) -> SubtypeEvidence | None:
    if isinstance(a, TyVar) and isinstance(b, TyVar) and a.name == b.name:
        return SubtypeEvidence("FVar", a, b)
    if isinstance(a, Base) and isinstance(b, Base) and a.tag == b.tag:
        return SubtypeEvidence("FBase", a, b)
    if isinstance(a, Arrow) and isinstance(b, Arrow):
        cod = _subtype_struct(a.cod, b.cod, depth_fun)
        if cod is None:
            return None
        if depth_fun:
            dom = _subtype_struct(b.dom, a.dom, depth_fun)
            if dom is None:
                return None
            return SubtypeEvidence("FFun", a, b, (dom, cod))
        if type_equal(a.dom, b.dom):
            return SubtypeEvidence("CoFun", a, b, (cod,))
        return None
    if isinstance(a, Variant) and isinstance(b, Variant):
        ra, rb = _closed_simple_row(a.row), _closed_simple_row(b.row)
        if ra is None or rb is None or not set(ra) <= set(rb):
            return None
        prems = []
        for label in sorted(ra):
            ev = _subtype_struct(ra[label], rb[label], depth_fun)
            if ev is None:
                return None
            prems.append((label, ev))
        return SubtypeEvidence("FVariant", a, b, tuple(prems))
    if isinstance(a, Record) and isinstance(b, Record):
        ra, rb = _closed_simple_row(a.row), _closed_simple_row(b.row)
        if ra is None or rb is None or not set(rb) <= set(ra):
            return None
        prems = []
        for label in sorted(rb):
            ev = _subtype_struct(ra[label], rb[label], depth_fun)
            if ev is None:
                return None
            prems.append((label, ev))
        return SubtypeEvidence("FRecord", a, b, tuple(prems))
    return None


# ---------------------------------------------------------------------------
# Rank predicates


def record_rank_ok(n: int, ty: Type) -> bool:
    """Records allowed only in positions of function-nesting depth < n."""
    if isinstance(ty, (TyVar, Base)):
        return True
    if isinstance(ty, Arrow):
        if n >= 1:
            return record_rank_ok(n - 1, ty.dom) and record_rank_ok(n, ty.cod)
        return record_rank_ok(0, ty.dom) and record_rank_ok(0, ty.cod)
    if isinstance(ty, Record):
        if n == 0:
            return False
        return all(record_rank_ok(n, t) for _, _, t in ty.row.entries)
    if isinstance(ty, Variant):
        return all(record_rank_ok(n, t) for _, _, t in ty.row.entries)
    if isinstance(ty, (ForallRow, ForallPres)):
        return record_rank_ok(n, ty.body)
    return True


def variant_rank_ok(n: int, ty: Type) -> bool:
    if isinstance(ty, (TyVar, Base)):
        return True
    if isinstance(ty, Arrow):
        if n >= 1:
            return variant_rank_ok(n - 1, ty.dom) and variant_rank_ok(n, ty.cod)
        return variant_rank_ok(0, ty.dom) and variant_rank_ok(0, ty.cod)
    if isinstance(ty, Variant):
        if n == 0:
            return False
        return all(variant_rank_ok(n, t) for _, _, t in ty.row.entries)
    if isinstance(ty, Record):
        return all(variant_rank_ok(n, t) for _, _, t in ty.row.entries)
    if isinstance(ty, (ForallRow, ForallPres)):
        return variant_rank_ok(n, ty.body)
    return True


def check_rank_limit(config: CalculusConfig, ty: Type) -> bool:
    if config.record_rank_limit is not None:
        if not record_rank_ok(config.record_rank_limit, ty):
            return False
    if config.variant_rank_limit is not None:
        if not variant_rank_ok(config.variant_rank_limit, ty):
            return False
    return True


# ---------------------------------------------------------------------------
# Feature scan over annotation types


def check_type_features(config: CalculusConfig, ty: Type) -> None:
    """Reject annotations that mention constructors the calculus lacks."""
    if isinstance(ty, (TyVar,)):
        return
    if isinstance(ty, Base):
        if not config.builtins:
            raise FeatureError(f"base type {ty.tag} not available here")
        return
    if isinstance(ty, Arrow):
        check_type_features(config, ty.dom)
        check_type_features(config, ty.cod)
        return
    if isinstance(ty, Variant):
        if not config.variants:
            raise FeatureError("variant types not available in this calculus")
        _check_row_features(config, ty.row)
        return
    if isinstance(ty, Record):
        if not config.records:
            raise FeatureError("record types not available in this calculus")
        _check_row_features(config, ty.row)
        return
    if isinstance(ty, ForallRow):
        if config.row_poly != "higher":
            raise FeatureError("row quantifiers not available in this calculus")
        check_type_features(config, ty.body)
        return
    if isinstance(ty, ForallPres):
        if config.pres_poly != "higher":
            raise FeatureError("presence quantifiers not available in this calculus")
        check_type_features(config, ty.body)
        return
    raise FeatureError(f"unhandled type form {type(ty).__name__}")


def _check_row_features(config: CalculusConfig, row: Row) -> None:
    if row.tail is not None and config.row_poly != "higher":
        raise FeatureError("open rows not available in this calculus")
    for _, pres, ty in row.entries:
        if not isinstance(pres, Present) and config.pres_poly != "higher":
            raise FeatureError("presence annotations not available in this calculus")
        check_type_features(config, ty)


# ---------------------------------------------------------------------------
# Type checking


@dataclass
class Derivation:
    rule: str
    delta: dict[str, Kind]
    gamma: dict[str, Type]
    term: Term
    type: Type
    premises: tuple["Derivation", ...] = ()
    evidence: SubtypeEvidence | None = field(default=None)

    def judgment(self) -> str:
        dd = ", ".join(f"{n}:{show_kind(k)}" for n, k in sorted(self.delta.items()))
        gg = ", ".join(f"{n}:{show_type(t)}" for n, t in sorted(self.gamma.items()))
        return f"{dd} ; {gg} |- {show_term(self.term)} : {show_type(self.type)}"

    def to_json(self) -> dict:
        out = {
            "rule": self.rule,
            "judgment": self.judgment(),
            "type": show_type(self.type),
        }
        if self.evidence is not None:
            out["evidence"] = _evidence_json(self.evidence)
        if self.premises:
            out["premises"] = [p.to_json() for p in self.premises]
        return out


def _evidence_json(ev: SubtypeEvidence) -> dict:
    out = {
        "rule": ev.rule,
        "lhs": show_type(ev.lhs),
        "rhs": show_type(ev.rhs),
    }
    if ev.rule in ("CoFun", "FFun"):
        out["premises"] = [_evidence_json(p) for p in ev.premises]
    elif ev.rule in ("FVariant", "FRecord"):
        out["premises"] = [
            {"label": label, **_evidence_json(p)} for label, p in ev.premises
        ]
    return out


def _presence_config(config: CalculusConfig) -> bool:
    return config.pres_poly == "higher"


def type_check(
    config: CalculusConfig,
    delta: dict[str, Kind],
    gamma: dict[str, Type],
    term: Term,
) -> Derivation:
    """Check ``term`` in the given environments; returns its derivation.

    Raises TypingError (or a subclass) when the term does not check.
    """
    deriv = _check(config, delta, gamma, term)
    if config.rank_limited:
        _enforce_rank(config, deriv)
    return deriv


def _enforce_rank(config: CalculusConfig, deriv: Derivation) -> None:
    if not check_rank_limit(config, deriv.type):
        raise RankError(
            f"type {show_type(deriv.type)} exceeds the rank limit "
            f"in {deriv.judgment()}"
        )
    for ann in _term_annotations(deriv.term):
        if not check_rank_limit(config, ann):
            raise RankError(f"annotation {show_type(ann)} exceeds the rank limit")
    for p in deriv.premises:
        _enforce_rank(config, p)


def _term_annotations(term: Term):
    if isinstance(term, Lam) and term.annot is not None:
        yield term.annot
    elif isinstance(term, (Inject, RecordLit)) and term.annot is not None:
        yield term.annot
    elif isinstance(term, Upcast):
        yield term.target


def _check(
    config: CalculusConfig,
    delta: dict[str, Kind],
    gamma: dict[str, Type],
    term: Term,
) -> Derivation:
    def rec(d: dict[str, Kind], g: dict[str, Type], t: Term) -> Derivation:
        return _check(config, d, g, t)

    if isinstance(term, Var):
        ty = gamma.get(term.name)
        if ty is None:
            raise TypingError(f"unbound variable {term.name}")
        return Derivation("TyVar", delta, gamma, term, ty)

    if isinstance(term, Lam):
        if term.annot is None:
            raise TypingError(f"binder {term.var} needs a type annotation")
        if term.var in gamma:
            raise TypingError(f"binder {term.var} shadows an outer binder")
        check_type_features(config, term.annot)
        kind_check(delta, term.annot)
        body = rec(delta, {**gamma, term.var: term.annot}, term.body)
        return Derivation(
            "TyLam", delta, gamma, term, Arrow(term.annot, body.type), (body,)
        )

    if isinstance(term, App):
        fn = rec(delta, gamma, term.fn)
        if not isinstance(fn.type, Arrow):
            raise TypingError(f"applying a non-function of type {show_type(fn.type)}")
        arg = rec(delta, gamma, term.arg)
        if type_equal(arg.type, fn.type.dom):
            return Derivation("TyApp", delta, gamma, term, fn.type.cod, (fn, arg))
        if config.app_sub:
            ev = subtype("full", arg.type, fn.type.dom)
            if ev is not None:
                return Derivation(
                    "TyAppSub", delta, gamma, term, fn.type.cod, (fn, arg), ev
                )
        raise TypingError(
            f"argument type {show_type(arg.type)} does not match "
            f"domain {show_type(fn.type.dom)}"
        )

    if isinstance(term, Inject):
        if not config.variants:
            raise FeatureError("variant injection not available in this calculus")
        if term.annot is None:
            raise TypingError("variant injection needs a type annotation")
        check_type_features(config, term.annot)
        kind_check(delta, term.annot)
        if not isinstance(term.annot, Variant):
            raise TypingError(
                f"injection annotation must be a variant type, got {show_type(term.annot)}"
            )
        entry = _row_entry(term.annot.row, term.label)
        if entry is None:
            raise TypingError(f"label {term.label} not in {show_type(term.annot)}")
        pres, ty = entry
        if not isinstance(pres, Present):
            raise TypingError(f"label {term.label} is not present in the annotation")
        payload = rec(delta, gamma, term.payload)
        if not type_equal(payload.type, ty):
            raise TypingError(
                f"payload type {show_type(payload.type)} does not match "
                f"{show_type(ty)} for label {term.label}"
            )
        return Derivation("TyInject", delta, gamma, term, term.annot, (payload,))

    if isinstance(term, Case):
        if not config.variants:
            raise FeatureError("case analysis not available in this calculus")
        scrut = rec(delta, gamma, term.scrutinee)
        if not isinstance(scrut.type, Variant):
            raise TypingError(
                f"case scrutinee must have a variant type, got {show_type(scrut.type)}"
            )
        row = scrut.type.row
        if row.tail is not None:
            raise TypingError("case scrutinee type must be a closed variant")
        entries = {label: (pres, ty) for label, pres, ty in row.entries}
        branch_labels = [label for label, _, _ in term.branches]
        if len(set(branch_labels)) != len(branch_labels):
            raise TypingError("duplicate case branch labels")
        for label in branch_labels:
            if label not in entries:
                raise TypingError(f"case branch {label} not in scrutinee type")
        for label, (pres, _) in entries.items():
            if isinstance(pres, Present) and label not in branch_labels:
                raise TypingError(f"case does not cover label {label}")
            if isinstance(pres, PresVar) and label not in branch_labels:
                raise TypingError(
                    f"case must cover label {label} with variable presence"
                )
        prems = [scrut]
        result: Type | None = None
        for label, binder, body in term.branches:
            if binder in gamma:
                raise TypingError(f"binder {binder} shadows an outer binder")
            _, payload_ty = entries[label]
            bd = rec(delta, {**gamma, binder: payload_ty}, body)
            if result is None:
                result = bd.type
            elif not type_equal(result, bd.type):
                raise TypingError(
                    f"case branches disagree: {show_type(result)} vs {show_type(bd.type)}"
                )
            prems.append(bd)
        if result is None:
            raise TypingError("case needs at least one branch")
        return Derivation("TyCase", delta, gamma, term, result, tuple(prems))

    if isinstance(term, RecordLit):
        if not config.records:
            raise FeatureError("record literals not available in this calculus")
        field_labels = [label for label, _ in term.fields]
        if len(set(field_labels)) != len(field_labels):
            raise TypingError("duplicate record field labels")
        if term.annot is not None:
            check_type_features(config, term.annot)
            kind_check(delta, term.annot)
            if not isinstance(term.annot, Record):
                raise TypingError(
                    f"record annotation must be a record type, got {show_type(term.annot)}"
                )
            row = term.annot.row
            if row.tail is not None:
                raise TypingError("record literal annotation must be a closed row")
            entries = {label: (pres, ty) for label, pres, ty in row.entries}
            for label in field_labels:
                if label not in entries:
                    raise TypingError(f"field {label} not in {show_type(term.annot)}")
            for label, (pres, _) in entries.items():
                if not isinstance(pres, Absent) and label not in field_labels:
                    raise TypingError(f"record literal is missing field {label}")
            prems = []
            for label, value in term.fields:
                _, ty = entries[label]
                vd = rec(delta, gamma, value)
                if not type_equal(vd.type, ty):
                    raise TypingError(
                        f"field {label} has type {show_type(vd.type)}, "
                        f"annotation says {show_type(ty)}"
                    )
                prems.append(vd)
            return Derivation(
                "TyRecord", delta, gamma, term, term.annot, tuple(prems)
            )
        if _presence_config(config):
            raise TypingError("record literal needs a type annotation here")
        prems = []
        row_entries = []
        for label, value in term.fields:
            vd = rec(delta, gamma, value)
            prems.append(vd)
            row_entries.append((label, Present(), vd.type))
        ty = Record(normalize_row(Row(tuple(row_entries), None)))
        return Derivation("TyRecord", delta, gamma, term, ty, tuple(prems))

    if isinstance(term, Project):
        if not config.records:
            raise FeatureError("record projection not available in this calculus")
        rd = rec(delta, gamma, term.term)
        if not isinstance(rd.type, Record):
            raise TypingError(
                f"projecting from a non-record of type {show_type(rd.type)}"
            )
        entry = _row_entry(rd.type.row, term.label)
        if entry is None:
            raise TypingError(f"label {term.label} not in {show_type(rd.type)}")
        pres, ty = entry
        if not isinstance(pres, Present):
            raise TypingError(f"label {term.label} is not present, cannot project")
        return Derivation("TyProject", delta, gamma, term, ty, (rd,))

    if isinstance(term, Upcast):
        if config.subtyping == "none":
            raise FeatureError("upcasts not available in this calculus")
        check_type_features(config, term.target)
        kind_check(delta, term.target)
        sub = rec(delta, gamma, term.term)
        ev = subtype(config.subtyping, sub.type, term.target)
        if ev is None:
            raise TypingError(
                f"{show_type(sub.type)} is not a subtype of {show_type(term.target)}"
            )
        return Derivation("TyUpcast", delta, gamma, term, term.target, (sub,), ev)

    if isinstance(term, RowAbs):
        if config.row_poly != "higher":
            raise FeatureError("row abstraction not available in this calculus")
        if term.var in delta:
            raise TypingError(f"binder {term.var} shadows an outer binder")
        body = rec({**delta, term.var: term.kind}, gamma, term.body)
        return Derivation(
            "TyRowLam",
            delta,
            gamma,
            term,
            ForallRow(term.var, term.kind, body.type),
            (body,),
        )

    if isinstance(term, RowApp):
        if config.row_poly != "higher":
            raise FeatureError("row application not available in this calculus")
        fd = rec(delta, gamma, term.term)
        if not isinstance(fd.type, ForallRow):
            raise TypingError(
                f"row-applying a term of type {show_type(fd.type)}"
            )
        row_check(delta, term.row, fd.type.kind.lacks)
        ty = subst_type_in_type(fd.type.body, term.row, fd.type.var)
        return Derivation("TyRowApp", delta, gamma, term, ty, (fd,))

    if isinstance(term, PresAbs):
        if config.pres_poly != "higher":
            raise FeatureError("presence abstraction not available in this calculus")
        if term.var in delta:
            raise TypingError(f"binder {term.var} shadows an outer binder")
        body = rec({**delta, term.var: KPre()}, gamma, term.body)
        return Derivation(
            "TyPreLam", delta, gamma, term, ForallPres(term.var, body.type), (body,)
        )

    if isinstance(term, PresApp):
        if config.pres_poly != "higher":
            raise FeatureError("presence application not available in this calculus")
        fd = rec(delta, gamma, term.term)
        if not isinstance(fd.type, ForallPres):
            raise TypingError(
                f"presence-applying a term of type {show_type(fd.type)}"
            )
        _presence_check(delta, term.presence)
        ty = subst_type_in_type(fd.type.body, term.presence, fd.type.var)
        return Derivation("TyPreApp", delta, gamma, term, ty, (fd,))

    if isinstance(term, Let):
        if not config.allows_let:
            raise FeatureError("let bindings not available in this calculus")
        if term.var in gamma:
            raise TypingError(f"binder {term.var} shadows an outer binder")
        bound = rec(delta, gamma, term.bound)
        body = rec(delta, {**gamma, term.var: bound.type}, term.body)
        return Derivation("TyLet", delta, gamma, term, body.type, (bound, body))

    if isinstance(term, Lit):
        if not config.builtins:
            raise FeatureError("literals not available in this calculus")
        ty = INT if isinstance(term.value, int) else STRING
        return Derivation("TyLit", delta, gamma, term, ty)

    if isinstance(term, Prim):
        if not config.builtins:
            raise FeatureError("primitives not available in this calculus")
        sig = PRIM_SIGS.get(term.op)
        if sig is None:
            raise TypingError(f"unknown primitive {term.op}")
        ta, tb, res = sig
        if len(term.args) != 2:
            raise TypingError(f"primitive {term.op} takes two arguments")
        d0 = rec(delta, gamma, term.args[0])
        d1 = rec(delta, gamma, term.args[1])
        if not type_equal(d0.type, ta) or not type_equal(d1.type, tb):
            raise TypingError(
                f"primitive {term.op} applied at "
                f"{show_type(d0.type)}, {show_type(d1.type)}"
            )
        return Derivation("TyPrim", delta, gamma, term, res, (d0, d1))

    raise TypingError(f"unhandled term form {type(term).__name__}")


def _row_entry(row: Row, label: str) -> tuple[Presence, Type] | None:
    for l, pres, ty in row.entries:
        if l == label:
            return (pres, ty)
    return None


def derivation_types(deriv: Derivation):
    """All judgment types in the tree, root first."""
    yield deriv.type
    for p in deriv.premises:
        yield from derivation_types(p)
