"""Parser for the supported PDDL subset, with positioned diagnostics.

Supported: (define (domain ...)) with :requirements (:strips, :typing,
:negative-preconditions), flat or hierarchical :types, :predicates, and
:action schemas whose preconditions are conjunctions of literals and whose
effects are conjunctions of add/delete atoms; (define (problem ...)) with
typed :objects, a positive :init, and a conjunctive :goal. Everything else in
PDDL raises UnsupportedFeature naming the construct. All diagnostics carry a
character offset plus 1-based line and column.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import ActionSchema, DomainAst, Literal, Predicate, ProblemAst

ALLOWED_REQUIREMENTS = (":strips", ":typing", ":negative-preconditions")

_UNSUPPORTED_SECTIONS = {
    ":constants": "domain constants",
    ":functions": "numeric fluents",
    ":durative-action": "durative actions",
    ":derived": "derived predicates",
    ":axiom": "axioms",
}

_UNSUPPORTED_CONNECTIVES = {
    "or": "disjunctive conditions",
    "forall": "quantified conditions",
    "exists": "quantified conditions",
    "imply": "implications",
    "when": "conditional effects",
    "=": "equality conditions",
    "increase": "numeric effects",
    "decrease": "numeric effects",
    "assign": "numeric effects",
}

_SYMBOL_RE = re.compile(r"[A-Za-z0-9_:?.+=-]+")


class PddlError(Exception):
    """Base for all parse diagnostics; always carries a source position."""

    def __init__(self, message: str, line: int, column: int, offset: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column
        self.offset = offset


class PddlSyntaxError(PddlError):
    def __init__(self, message, line, column, offset, expected=None):
        super().__init__(message, line, column, offset)
        self.expected = expected


class UnsupportedFeature(PddlError):
    def __init__(self, construct, line, column, offset):
        super().__init__(f"unsupported PDDL feature: {construct}", line, column, offset)
        self.construct = construct


class SemanticError(PddlError):
    pass


@dataclass(frozen=True)
class Token:
    text: str
    offset: int
    line: int
    column: int


@dataclass(frozen=True)
class SList:
    items: tuple
    open: Token
    close: Token


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    line_start = 0
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            i += 1
            line_start = i
            continue
        if ch in " \t\r":
            i += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        col = i - line_start + 1
        if ch in "()":
            tokens.append(Token(ch, i, line, col))
            i += 1
            continue
        m = _SYMBOL_RE.match(text, i)
        if m is None:
            raise PddlSyntaxError(
                f"unexpected character {ch!r}", line, col, i, expected="symbol or paren"
            )
        tokens.append(Token(m.group().lower(), i, line, col))
        i = m.end()
    return tokens


def _read_all(text: str) -> list:
    tokens = _tokenize(text)
    if not tokens:
        raise PddlSyntaxError("empty input", 1, 1, 0, expected="(define ...)")
    forms = []
    pos = 0
    while pos < len(tokens):
        form, pos = _read(tokens, pos)
        forms.append(form)
    return forms


def _read(tokens: list[Token], pos: int):
    tok = tokens[pos]
    if tok.text == "(":
        items = []
        pos += 1
        while True:
            if pos >= len(tokens):
                raise PddlSyntaxError(
                    "unclosed parenthesis", tok.line, tok.column, tok.offset,
                    expected=")",
                )
            if tokens[pos].text == ")":
                return SList(tuple(items), tok, tokens[pos]), pos + 1
            item, pos = _read(tokens, pos)
            items.append(item)
    if tok.text == ")":
        raise PddlSyntaxError(
            "unbalanced ')'", tok.line, tok.column, tok.offset, expected="("
        )
    return tok, pos + 1


def _expect_list(node, what: str) -> SList:
    if not isinstance(node, SList):
        raise PddlSyntaxError(
            f"expected {what}", node.line, node.column, node.offset, expected="("
        )
    return node


def _expect_symbol(node, what: str) -> Token:
    if not isinstance(node, Token):
        raise PddlSyntaxError(
            f"expected {what}", node.open.line, node.open.column, node.open.offset,
            expected="symbol",
        )
    return node


def _head(lst: SList, what: str) -> Token:
    if not lst.items:
        raise PddlSyntaxError(
            f"empty form, expected {what}", lst.open.line, lst.open.column,
            lst.open.offset,
        )
    return _expect_symbol(lst.items[0], what)


def _parse_typed_list(items, *, variables: bool, what: str):
    """Parse `name... - type name... - type` grouping; untyped names get object."""
    pairs: list[tuple[str, str]] = []
    pending: list[Token] = []
    i = 0
    while i < len(items):
        tok = _expect_symbol(items[i], what)
        if tok.text == "-":
            if not pending:
                raise PddlSyntaxError(
                    "dangling '-' in typed list", tok.line, tok.column, tok.offset
                )
            if i + 1 >= len(items):
                raise PddlSyntaxError(
                    "missing type after '-'", tok.line, tok.column, tok.offset,
                    expected="type name",
                )
            type_tok = _expect_symbol(items[i + 1], "type name")
            for name in pending:
                pairs.append((name.text, type_tok.text))
            pending = []
            i += 2
            continue
        if variables and not tok.text.startswith("?"):
            raise PddlSyntaxError(
                f"expected a ?variable, got {tok.text!r}", tok.line, tok.column,
                tok.offset,
            )
        if not variables and tok.text.startswith("?"):
            raise PddlSyntaxError(
                f"unexpected variable {tok.text!r}", tok.line, tok.column, tok.offset
            )
        pending.append(tok)
        i += 1
    for name in pending:
        pairs.append((name.text, "object"))
    return tuple(pairs)


def _parse_atom(lst: SList) -> tuple[Literal, Token]:
    head = _head(lst, "predicate name")
    if head.text.startswith(":") or head.text.startswith("?"):
        raise PddlSyntaxError(
            f"expected a predicate name, got {head.text!r}", head.line, head.column,
            head.offset,
        )
    args = []
    for node in lst.items[1:]:
        args.append(_expect_symbol(node, "argument").text)
    return Literal(head.text, tuple(args), True), head


def _parse_condition(node, *, what: str) -> list[tuple[Literal, Token]]:
    """Parse a goal description into signed literals; rejects non-subset forms."""
    lst = _expect_list(node, what)
    if not lst.items:
        return []   # (and) and () both mean the empty conjunction
    head = _head(lst, what)
    if head.text in _UNSUPPORTED_CONNECTIVES:
        raise UnsupportedFeature(
            _UNSUPPORTED_CONNECTIVES[head.text], head.line, head.column, head.offset
        )
    if head.text == "and":
        out = []
        for sub in lst.items[1:]:
            out.extend(_parse_condition(sub, what=what))
        return out
    if head.text == "not":
        if len(lst.items) != 2:
            raise PddlSyntaxError(
                "(not ...) takes exactly one atom", head.line, head.column, head.offset
            )
        inner = _expect_list(lst.items[1], "atom")
        inner_head = _head(inner, "predicate name")
        if inner_head.text in _UNSUPPORTED_CONNECTIVES or inner_head.text in ("and", "not"):
            raise UnsupportedFeature(
                "negation of a compound condition", inner_head.line,
                inner_head.column, inner_head.offset,
            )
        lit, tok = _parse_atom(inner)
        return [(lit.negate(), tok)]
    lit, tok = _parse_atom(lst)
    return [(lit, tok)]


def parse_domain(text: str) -> DomainAst:
    forms = _read_all(text)
    if len(forms) != 1:
        extra = forms[1]
        tok = extra if isinstance(extra, Token) else extra.open
        raise PddlSyntaxError(
            "expected a single (define ...) form", tok.line, tok.column, tok.offset
        )
    form = _expect_list(forms[0], "(define ...)")
    head = _head(form, "define")
    if head.text != "define":
        raise PddlSyntaxError(
            f"expected 'define', got {head.text!r}", head.line, head.column,
            head.offset, expected="define",
        )
    if len(form.items) < 2:
        raise PddlSyntaxError(
            "missing (domain name)", head.line, head.column, head.offset
        )
    name_form = _expect_list(form.items[1], "(domain name)")
    name_head = _head(name_form, "domain")
    if name_head.text != "domain" or len(name_form.items) != 2:
        raise PddlSyntaxError(
            "expected (domain <name>)", name_head.line, name_head.column,
            name_head.offset,
        )
    name = _expect_symbol(name_form.items[1], "domain name").text

    requirements: tuple[str, ...] = ()
    types: list[tuple[str, str]] = []
    predicates: list[Predicate] = []
    actions: list[ActionSchema] = []

    for section_node in form.items[2:]:
        section = _expect_list(section_node, "domain section")
        s_head = _head(section, "domain section")
        key = s_head.text
        if key == ":requirements":
            flags = []
            for node in section.items[1:]:
                tok = _expect_symbol(node, "requirement flag")
                if tok.text not in ALLOWED_REQUIREMENTS:
                    raise UnsupportedFeature(
                        f"requirement {tok.text}", tok.line, tok.column, tok.offset
                    )
                flags.append(tok.text)
            requirements = tuple(flags)
        elif key == ":types":
            types.extend(_parse_typed_list(section.items[1:], variables=False,
                                           what="type name"))
        elif key == ":predicates":
            for node in section.items[1:]:
                pred_list = _expect_list(node, "predicate declaration")
                p_head = _head(pred_list, "predicate name")
                params = _parse_typed_list(pred_list.items[1:], variables=True,
                                           what="predicate parameter")
                if any(p.name == p_head.text for p in predicates):
                    raise SemanticError(
                        f"predicate {p_head.text!r} declared twice",
                        p_head.line, p_head.column, p_head.offset,
                    )
                predicates.append(Predicate(p_head.text, params))
        elif key == ":action":
            actions.append(_parse_action(section, s_head))
        elif key in _UNSUPPORTED_SECTIONS:
            raise UnsupportedFeature(
                _UNSUPPORTED_SECTIONS[key], s_head.line, s_head.column, s_head.offset
            )
        else:
            raise UnsupportedFeature(
                f"domain section {key}", s_head.line, s_head.column, s_head.offset
            )

    domain = DomainAst(
        name=name,
        requirements=requirements,
        types=tuple(types),
        predicates=tuple(predicates),
        actions=tuple(actions),
    )
    _check_domain(domain, form)
    return domain


def _parse_action(section: SList, s_head: Token) -> ActionSchema:
    if len(section.items) < 2:
        raise PddlSyntaxError(
            "missing action name", s_head.line, s_head.column, s_head.offset
        )
    name = _expect_symbol(section.items[1], "action name").text
    params: tuple[tuple[str, str], ...] = ()
    precondition: list[Literal] = []
    add: list[Literal] = []
    delete: list[Literal] = []
    seen_effect = False
    i = 2
    while i < len(section.items):
        key_tok = _expect_symbol(section.items[i], "action keyword")
        if i + 1 >= len(section.items):
            raise PddlSyntaxError(
                f"missing value after {key_tok.text}", key_tok.line, key_tok.column,
                key_tok.offset,
            )
        value = section.items[i + 1]
        if key_tok.text == ":parameters":
            param_list = _expect_list(value, "parameter list")
            params = _parse_typed_list(param_list.items, variables=True,
                                       what="parameter")
        elif key_tok.text == ":precondition":
            precondition = [lit for lit, _ in _parse_condition(value, what="precondition")]
        elif key_tok.text == ":effect":
            seen_effect = True
            for lit, tok in _parse_condition(value, what="effect"):
                if lit.positive:
                    add.append(lit)
                else:
                    delete.append(lit.negate())
        else:
            raise UnsupportedFeature(
                f"action keyword {key_tok.text}", key_tok.line, key_tok.column,
                key_tok.offset,
            )
        i += 2
    if not seen_effect:
        raise PddlSyntaxError(
            f"action {name!r} has no :effect", s_head.line, s_head.column,
            s_head.offset, expected=":effect",
        )
    return ActionSchema(
        name=name,
        params=params,
        precondition=tuple(precondition),
        add=tuple(add),
        delete=tuple(delete),
    )


def _declared_types(domain: DomainAst) -> set[str]:
    declared = {"object"}
    for t, parent in domain.types:
        declared.add(t)
        declared.add(parent)
    return declared


def is_subtype(domain: DomainAst, t: str, ancestor: str) -> bool:
    if ancestor == "object" or t == ancestor:
        return True
    parents = dict(domain.types)
    seen = set()
    while t in parents and t not in seen:
        seen.add(t)
        t = parents[t]
        if t == ancestor:
            return True
    return False


def _pos_of(form: SList) -> tuple[int, int, int]:
    return form.open.line, form.open.column, form.open.offset


def _check_domain(domain: DomainAst, form: SList) -> None:
    line, col, off = _pos_of(form)
    declared = _declared_types(domain)
    names = [t for t, _ in domain.types]
    if len(set(names)) != len(names):
        raise SemanticError("duplicate type declaration", line, col, off)
    for pred in domain.predicates:
        for var, kind in pred.params:
            if kind not in declared:
                raise SemanticError(
                    f"predicate {pred.name!r} uses undeclared type {kind!r}",
                    line, col, off,
                )
    action_names = [a.name for a in domain.actions]
    if len(set(action_names)) != len(action_names):
        raise SemanticError("duplicate action name", line, col, off)
    for action in domain.actions:
        var_names = [v for v, _ in action.params]
        if len(set(var_names)) != len(var_names):
            raise SemanticError(
                f"action {action.name!r} repeats a parameter", line, col, off
            )
        for var, kind in action.params:
            if kind not in declared:
                raise SemanticError(
                    f"action {action.name!r} uses undeclared type {kind!r}",
                    line, col, off,
                )
        bound = set(var_names)
        for lit in action.precondition + action.add + action.delete:
            _check_literal(domain, action, lit, bound, line, col, off)


def _check_literal(domain, action, lit, bound, line, col, off) -> None:
    pred = domain.predicate(lit.name)
    if pred is None:
        raise SemanticError(
            f"action {action.name!r} references undeclared predicate {lit.name!r}",
            line, col, off,
        )
    if pred.arity != len(lit.args):
        raise SemanticError(
            f"predicate {lit.name!r} takes {pred.arity} arguments, got "
            f"{len(lit.args)} in action {action.name!r}",
            line, col, off,
        )
    for arg in lit.args:
        if not arg.startswith("?"):
            raise SemanticError(
                f"constant {arg!r} in action {action.name!r} body (parameters only)",
                line, col, off,
            )
        if arg not in bound:
            raise SemanticError(
                f"unbound variable {arg!r} in action {action.name!r}", line, col, off
            )


def parse_problem(text: str, domain: DomainAst) -> ProblemAst:
    forms = _read_all(text)
    if len(forms) != 1:
        extra = forms[1]
        tok = extra if isinstance(extra, Token) else extra.open
        raise PddlSyntaxError(
            "expected a single (define ...) form", tok.line, tok.column, tok.offset
        )
    form = _expect_list(forms[0], "(define ...)")
    head = _head(form, "define")
    if head.text != "define":
        raise PddlSyntaxError(
            f"expected 'define', got {head.text!r}", head.line, head.column,
            head.offset, expected="define",
        )
    if len(form.items) < 3:
        raise PddlSyntaxError(
            "expected (problem name) and (:domain name)", head.line, head.column,
            head.offset,
        )
    name_form = _expect_list(form.items[1], "(problem name)")
    name_head = _head(name_form, "problem")
    if name_head.text != "problem" or len(name_form.items) != 2:
        raise PddlSyntaxError(
            "expected (problem <name>)", name_head.line, name_head.column,
            name_head.offset,
        )
    name = _expect_symbol(name_form.items[1], "problem name").text

    domain_name = None
    objects: tuple[tuple[str, str], ...] = ()
    init: list[Literal] = []
    goal: list[Literal] = []

    for section_node in form.items[2:]:
        section = _expect_list(section_node, "problem section")
        s_head = _head(section, "problem section")
        key = s_head.text
        if key == ":domain":
            domain_name = _expect_symbol(section.items[1], "domain name").text
        elif key == ":objects":
            objects = _parse_typed_list(section.items[1:], variables=False,
                                        what="object name")
        elif key == ":init":
            for node in section.items[1:]:
                lst = _expect_list(node, "init literal")
                inner_head = _head(lst, "predicate name")
                if inner_head.text == "not":
                    raise UnsupportedFeature(
                        "negative init literals", inner_head.line,
                        inner_head.column, inner_head.offset,
                    )
                lit, _ = _parse_atom(lst)
                init.append(lit)
        elif key == ":goal":
            if len(section.items) != 2:
                raise PddlSyntaxError(
                    "(:goal ...) takes one condition", s_head.line, s_head.column,
                    s_head.offset,
                )
            goal = [lit for lit, _ in _parse_condition(section.items[1], what="goal")]
        else:
            raise UnsupportedFeature(
                f"problem section {key}", s_head.line, s_head.column, s_head.offset
            )

    if domain_name is None:
        raise PddlSyntaxError(
            "missing (:domain ...) section", head.line, head.column, head.offset
        )
    problem = ProblemAst(
        name=name,
        domain_name=domain_name,
        objects=objects,
        init=tuple(init),
        goal=tuple(goal),
    )
    _check_problem(problem, domain, form)
    return problem


def _check_problem(problem: ProblemAst, domain: DomainAst, form: SList) -> None:
    line, col, off = _pos_of(form)
    if problem.domain_name != domain.name:
        raise SemanticError(
            f"problem targets domain {problem.domain_name!r}, parsed against "
            f"{domain.name!r}",
            line, col, off,
        )
    declared = _declared_types(domain)
    names = [o for o, _ in problem.objects]
    if len(set(names)) != len(names):
        raise SemanticError("duplicate object declaration", line, col, off)
    obj_type = dict(problem.objects)
    for obj, kind in problem.objects:
        if kind not in declared:
            raise SemanticError(
                f"object {obj!r} has undeclared type {kind!r}", line, col, off
            )
    for where, lits in (("init", problem.init), ("goal", problem.goal)):
        for lit in lits:
            pred = domain.predicate(lit.name)
            if pred is None:
                raise SemanticError(
                    f"{where} references undeclared predicate {lit.name!r}",
                    line, col, off,
                )
            if pred.arity != len(lit.args):
                raise SemanticError(
                    f"predicate {lit.name!r} takes {pred.arity} arguments, got "
                    f"{len(lit.args)} in {where}",
                    line, col, off,
                )
            for arg, (_, kind) in zip(lit.args, pred.params):
                if arg not in obj_type:
                    raise SemanticError(
                        f"undeclared object {arg!r} in {where}", line, col, off
                    )
                if not is_subtype(domain, obj_type[arg], kind):
                    raise SemanticError(
                        f"object {arg!r} of type {obj_type[arg]!r} used where "
                        f"{kind!r} is required",
                        line, col, off,
                    )
