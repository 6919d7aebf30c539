"""STRIPS vocabulary, a parser/serializer for a small PDDL subset, and grounding.

Supported requirements are ``:strips``, ``:typing`` and
``:negative-preconditions``.  Identifiers are case-insensitive and are
normalised to lowercase.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

SUPPORTED_REQUIREMENTS = frozenset({":strips", ":typing", ":negative-preconditions"})
ROOT_TYPE = "object"


class PDDLError(Exception):
    """Base class for PDDL parsing and validation errors."""


class PDDLSyntaxError(PDDLError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class UnsupportedRequirementError(PDDLError):
    def __init__(self, requirement: str):
        self.requirement = requirement
        super().__init__(f"unsupported requirement {requirement}")


class UnknownTypeError(PDDLError):
    pass


@dataclass(frozen=True, order=True)
class Atom:
    """A predicate applied to objects (ground) or to ``?variables`` (lifted)."""

    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.args)})"

    def to_pddl(self) -> str:
        return "(" + " ".join((self.predicate, *self.args)) + ")"

    def substitute(self, binding: Mapping[str, str]) -> Atom:
        return Atom(self.predicate, tuple(binding.get(a, a) for a in self.args))


@dataclass(frozen=True, order=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"not {self.atom}"

    def negate(self) -> Literal:
        return Literal(self.atom, not self.positive)

    def to_pddl(self) -> str:
        return self.atom.to_pddl() if self.positive else f"(not {self.atom.to_pddl()})"

    def substitute(self, binding: Mapping[str, str]) -> Literal:
        return Literal(self.atom.substitute(binding), self.positive)


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    param_types: tuple[str, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.param_types)


def _check_literals(name: str, params: Sequence[str], pre, add, delete) -> None:
    declared = set(params)
    for atom in itertools.chain((lit.atom for lit in pre), add, delete):
        for arg in atom.args:
            if arg not in declared:
                raise PDDLError(f"action {name}: {arg} in {atom} is not a parameter")
    if add & delete:
        clash = ", ".join(sorted(str(a) for a in add & delete))
        raise PDDLError(f"action {name}: {clash} both added and deleted")
    for lit in pre:
        if lit.negate() in pre:
            raise PDDLError(f"action {name}: contradictory precondition on {lit.atom}")


@dataclass(frozen=True)
class ActionSchema:
    """A lifted operator; ``params`` holds ``(variable, type)`` pairs."""

    name: str
    params: tuple[tuple[str, str], ...]
    pre: frozenset[Literal] = frozenset()
    add: frozenset[Atom] = frozenset()
    delete: frozenset[Atom] = frozenset()

    def __post_init__(self):
        _check_literals(self.name, self.variables, self.pre, self.add, self.delete)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.params)

    def ground(self, args: Sequence[str]) -> GroundAction:
        binding = dict(zip(self.variables, args))
        return GroundAction(
            self.name,
            tuple(args),
            pre_pos=frozenset(l.atom.substitute(binding) for l in self.pre if l.positive),
            pre_neg=frozenset(l.atom.substitute(binding) for l in self.pre if not l.positive),
            add=frozenset(a.substitute(binding) for a in self.add),
            delete=frozenset(a.substitute(binding) for a in self.delete),
        )


@dataclass(frozen=True, order=True)
class GroundAction:
    """An operator instance.  Identity and ordering use ``(name, args)`` only."""

    name: str
    args: tuple[str, ...]
    pre_pos: frozenset[Atom] = field(default=frozenset(), compare=False)
    pre_neg: frozenset[Atom] = field(default=frozenset(), compare=False)
    add: frozenset[Atom] = field(default=frozenset(), compare=False)
    delete: frozenset[Atom] = field(default=frozenset(), compare=False)

    def __post_init__(self):
        if self.add & self.delete:
            raise PDDLError(f"{self}: add and delete effects overlap")

    def __str__(self) -> str:
        return f"{self.name}({','.join(self.args)})"

    def to_pddl(self) -> str:
        return "(" + " ".join((self.name, *self.args)) + ")"


GroundState = frozenset  # frozenset[Atom]


@dataclass(frozen=True)
class Domain:
    name: str
    requirements: tuple[str, ...] = (":strips",)
    types: tuple[tuple[str, str], ...] = ()
    predicates: tuple[PredicateDecl, ...] = ()
    schemas: tuple[ActionSchema, ...] = ()

    def __post_init__(self):
        names = [p.name for p in self.predicates]
        if len(set(names)) != len(names):
            raise PDDLError(f"domain {self.name}: duplicate predicate names")
        ops = [s.name for s in self.schemas]
        if len(set(ops)) != len(ops):
            raise PDDLError(f"domain {self.name}: duplicate action names")
        known = {ROOT_TYPE} | {t for t, _ in self.types} | {parent for _, parent in self.types}
        used = [t for p in self.predicates for t in p.param_types]
        used += [t for s in self.schemas for _, t in s.params]
        for t in used:
            if t not in known:
                raise UnknownTypeError(f"domain {self.name}: unknown type {t}")
        arity = {p.name: p.arity for p in self.predicates}
        for schema in self.schemas:
            atoms = itertools.chain((l.atom for l in schema.pre), schema.add, schema.delete)
            for atom in atoms:
                if atom.predicate not in arity:
                    raise PDDLError(f"action {schema.name}: undeclared predicate {atom.predicate}")
                if arity[atom.predicate] != len(atom.args):
                    raise PDDLError(f"action {schema.name}: wrong arity for {atom}")

    def schema(self, name: str) -> ActionSchema:
        for s in self.schemas:
            if s.name == name:
                return s
        raise KeyError(name)

    def predicate(self, name: str) -> PredicateDecl:
        for p in self.predicates:
            if p.name == name:
                return p
        raise KeyError(name)

    def type_parents(self) -> dict[str, str]:
        return dict(self.types)

    def with_schemas(self, schemas: Iterable[ActionSchema]) -> Domain:
        """Copy with new schemas; requirements are recomputed from their content."""
        schemas = tuple(schemas)
        reqs = [":strips"]
        if self.types:
            reqs.append(":typing")
        if any(not l.positive for s in schemas for l in s.pre):
            reqs.append(":negative-preconditions")
        return Domain(self.name, tuple(reqs), self.types, self.predicates, schemas)

    def signature(self) -> Domain:
        """Operator names and typed parameters with empty bodies."""
        return self.with_schemas(ActionSchema(s.name, s.params) for s in self.schemas)

    def static_predicates(self) -> frozenset[str]:
        changed = {a.predicate for s in self.schemas for a in itertools.chain(s.add, s.delete)}
        return frozenset(p.name for p in self.predicates if p.name not in changed)


@dataclass(frozen=True)
class Problem:
    name: str
    domain_name: str
    objects: tuple[tuple[str, str], ...]
    init: frozenset[Atom]
    goal: frozenset[Literal]


# ---------------------------------------------------------------- tokenizer


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col, i, n = 1, 1, 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line, col, i = line + 1, 1, i + 1
            continue
        if ch.isspace():
            i, col = i + 1, col + 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            tokens.append(_Token(ch, line, col))
            i, col = i + 1, col + 1
            continue
        start, start_col = i, col
        while i < n and not text[i].isspace() and text[i] not in "();":
            i, col = i + 1, col + 1
        tokens.append(_Token(text[start:i].lower(), line, start_col))
    return tokens


class _SExpr(list):
    """A parenthesised list remembering where it opened."""

    def __init__(self, line: int, column: int):
        super().__init__()
        self.line = line
        self.column = column


def _parse_sexpr(text: str):
    tokens = _tokenize(text)
    if not tokens:
        raise PDDLSyntaxError("empty input", 1, 1)
    stack: list[_SExpr] = []
    result = None
    for tok in tokens:
        if tok.text == "(":
            stack.append(_SExpr(tok.line, tok.column))
        elif tok.text == ")":
            if not stack:
                raise PDDLSyntaxError("unbalanced ')'", tok.line, tok.column)
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            elif result is None:
                result = done
            else:
                raise PDDLSyntaxError("trailing content after definition", tok.line, tok.column)
        else:
            if not stack:
                raise PDDLSyntaxError(f"unexpected token {tok.text!r}", tok.line, tok.column)
            stack[-1].append(tok)
    if stack:
        raise PDDLSyntaxError("unbalanced '('", stack[-1].line, stack[-1].column)
    return result


def _where(node) -> tuple[int, int]:
    return (node.line, node.column)


def _word(node, what: str) -> str:
    if not isinstance(node, _Token):
        raise PDDLSyntaxError(f"expected {what}", *_where(node))
    return node.text


def _words(node) -> list[str]:
    return [_word(x, "identifier") for x in node]


def _typed_list(node, typing: bool) -> list[tuple[str, str]]:
    """Parse ``a b - t c`` style lists into ``(name, type)`` pairs."""
    out: list[tuple[str, str]] = []
    pending: list[str] = []
    items = list(node)
    i = 0
    while i < len(items):
        word = _word(items[i], "identifier")
        if word == "-":
            if not typing:
                raise PDDLSyntaxError("types used without :typing", *_where(items[i]))
            if i + 1 >= len(items) or not pending:
                raise PDDLSyntaxError("dangling type marker", *_where(items[i]))
            tname = _word(items[i + 1], "type name")
            out.extend((p, tname) for p in pending)
            pending = []
            i += 2
            continue
        pending.append(word)
        i += 1
    out.extend((p, ROOT_TYPE) for p in pending)
    return out


def _atom(node, allowed_args: set[str] | None, what: str) -> Atom:
    if not isinstance(node, _SExpr) or not node:
        raise PDDLSyntaxError(f"expected atom in {what}", *_where(node))
    pred = _word(node[0], "predicate name")
    args = tuple(_word(x, "argument") for x in node[1:])
    if allowed_args is not None:
        for a, tok in zip(args, node[1:]):
            if a not in allowed_args:
                raise PDDLSyntaxError(f"unknown argument {a} in {what}", *_where(tok))
    return Atom(pred, args)


def _conjunction(node, allowed_args, what: str) -> list[Literal]:
    """Flatten ``(and ...)`` of atoms and ``(not atom)`` into literals."""
    if isinstance(node, _SExpr) and not node:
        return []
    if not isinstance(node, _SExpr):
        raise PDDLSyntaxError(f"expected formula in {what}", *_where(node))
    head = node[0].text if isinstance(node[0], _Token) else None
    if head == "and":
        lits = []
        for sub in node[1:]:
            lits.extend(_conjunction(sub, allowed_args, what))
        return lits
    if head == "not":
        if len(node) != 2:
            raise PDDLSyntaxError("'not' takes one argument", *_where(node))
        return [Literal(_atom(node[1], allowed_args, what), False)]
    if head in {"or", "imply", "forall", "exists", "when", "="}:
        raise PDDLSyntaxError(f"'{head}' is outside the supported STRIPS subset", *_where(node))
    return [Literal(_atom(node, allowed_args, what), True)]


def _requirements(node) -> tuple[str, ...]:
    reqs = tuple(_words(node[1:]))
    for r in reqs:
        if r not in SUPPORTED_REQUIREMENTS:
            raise UnsupportedRequirementError(r)
    return reqs


def parse_domain(text: str) -> Domain:
    root = _parse_sexpr(text)
    if len(root) < 2 or _word(root[0], "define") != "define":
        raise PDDLSyntaxError("expected (define ...)", *_where(root))
    header = root[1]
    if not isinstance(header, _SExpr) or len(header) != 2 or _word(header[0], "domain") != "domain":
        raise PDDLSyntaxError("expected (domain <name>)", *_where(header))
    name = _word(header[1], "domain name")
    requirements: tuple[str, ...] = (":strips",)
    types: list[tuple[str, str]] = []
    predicates: list[PredicateDecl] = []
    schemas: list[ActionSchema] = []
    for section in root[2:]:
        if not isinstance(section, _SExpr) or not section:
            raise PDDLSyntaxError("expected a section", *_where(section))
        key = _word(section[0], "section keyword")
        typing = ":typing" in requirements
        if key == ":requirements":
            requirements = _requirements(section)
        elif key == ":types":
            types = _typed_list(section[1:], typing=True)
        elif key == ":predicates":
            for decl in section[1:]:
                if not isinstance(decl, _SExpr) or not decl:
                    raise PDDLSyntaxError("expected predicate declaration", *_where(decl))
                params = _typed_list(decl[1:], typing)
                predicates.append(PredicateDecl(_word(decl[0], "predicate"), tuple(t for _, t in params)))
        elif key == ":action":
            schemas.append(_parse_action(section, typing, requirements))
        elif key in (":constants", ":functions", ":derived", ":axiom"):
            raise PDDLSyntaxError(f"{key} is outside the supported subset", *_where(section))
        else:
            raise PDDLSyntaxError(f"unknown section {key}", *_where(section))
    types = [(t, p) for t, p in types if t != ROOT_TYPE]
    try:
        return Domain(name, requirements, tuple(types), tuple(predicates), tuple(schemas))
    except UnknownTypeError:
        raise
    except PDDLError as e:
        raise PDDLSyntaxError(str(e), *_where(root)) from e


def _parse_action(section, typing: bool, requirements) -> ActionSchema:
    name = _word(section[1], "action name")
    params: list[tuple[str, str]] = []
    pre: list[Literal] = []
    eff: list[Literal] = []
    i = 2
    while i < len(section):
        key = _word(section[i], "action keyword")
        if i + 1 >= len(section):
            raise PDDLSyntaxError(f"missing value for {key}", *_where(section[i]))
        value = section[i + 1]
        if key == ":parameters":
            params = _typed_list(value, typing)
        elif key == ":precondition":
            pre = _conjunction(value, {v for v, _ in params}, f"{name} precondition")
        elif key == ":effect":
            eff = _conjunction(value, {v for v, _ in params}, f"{name} effect")
        else:
            raise PDDLSyntaxError(f"unknown action keyword {key}", *_where(section[i]))
        i += 2
    if any(not l.positive for l in pre) and ":negative-preconditions" not in requirements:
        raise PDDLSyntaxError(f"{name}: negative precondition needs :negative-preconditions", *_where(section))
    add = frozenset(l.atom for l in eff if l.positive)
    delete = frozenset(l.atom for l in eff if not l.positive)
    try:
        return ActionSchema(name, tuple(params), frozenset(pre), add, delete)
    except PDDLError as e:
        raise PDDLSyntaxError(str(e), *_where(section)) from e


def parse_problem(text: str) -> Problem:
    root = _parse_sexpr(text)
    if len(root) < 2 or _word(root[0], "define") != "define":
        raise PDDLSyntaxError("expected (define ...)", *_where(root))
    header = root[1]
    if not isinstance(header, _SExpr) or len(header) != 2 or _word(header[0], "problem") != "problem":
        raise PDDLSyntaxError("expected (problem <name>)", *_where(header))
    name = _word(header[1], "problem name")
    domain_name = ""
    objects: list[tuple[str, str]] = []
    init: set[Atom] = set()
    goal: list[Literal] = []
    for section in root[2:]:
        key = _word(section[0], "section keyword")
        if key == ":domain":
            domain_name = _word(section[1], "domain name")
        elif key == ":requirements":
            _requirements(section)
        elif key == ":objects":
            objects = _typed_list(section[1:], typing=True)
        elif key == ":init":
            for fact in section[1:]:
                init.add(_atom(fact, None, "init"))
        elif key == ":goal":
            goal = _conjunction(section[1], None, "goal")
        else:
            raise PDDLSyntaxError(f"unknown section {key}", *_where(section))
    return Problem(name, domain_name, tuple(objects), frozenset(init), frozenset(goal))


# ---------------------------------------------------------------- writer


def _typed(pairs: Iterable[tuple[str, str]], typing: bool) -> str:
    pairs = list(pairs)
    if not typing:
        return " ".join(n for n, _ in pairs)
    parts: list[str] = []
    for tname, group in itertools.groupby(pairs, key=lambda p: p[1]):
        parts.append(" ".join(n for n, _ in group) + f" - {tname}")
    return " ".join(parts)


def _conj(lits: Sequence[str]) -> str:
    return "(and " + " ".join(lits) + ")" if lits else "(and)"


def serialize_schema(schema: ActionSchema, typing: bool = True) -> str:
    pre = [l.to_pddl() for l in sorted(schema.pre)]
    eff = [a.to_pddl() for a in sorted(schema.add)]
    eff += [f"(not {a.to_pddl()})" for a in sorted(schema.delete)]
    return (
        f"  (:action {schema.name}\n"
        f"    :parameters ({_typed(schema.params, typing)})\n"
        f"    :precondition {_conj(pre)}\n"
        f"    :effect {_conj(eff)})"
    )


def serialize_domain(d: Domain) -> str:
    typing = ":typing" in d.requirements
    lines = [f"(define (domain {d.name})", f"  (:requirements {' '.join(d.requirements)})"]
    if d.types:
        lines.append(f"  (:types {_typed(d.types, True)})")
    lines.append("  (:predicates")
    for p in d.predicates:
        params = [(f"?x{i}", t) for i, t in enumerate(p.param_types)]
        body = " ".join((p.name, _typed(params, typing))) if params else p.name
        lines.append(f"    ({body})")
    lines[-1] += ")"
    for s in d.schemas:
        lines.append(serialize_schema(s, typing))
    lines.append(")")
    return "\n".join(lines) + "\n"


def serialize_problem(p: Problem) -> str:
    init = " ".join(a.to_pddl() for a in sorted(p.init))
    goal = _conj([l.to_pddl() for l in sorted(p.goal)])
    return (
        f"(define (problem {p.name})\n"
        f"  (:domain {p.domain_name})\n"
        f"  (:objects {_typed(p.objects, True)})\n"
        f"  (:init {init})\n"
        f"  (:goal {goal}))\n"
    )


# ---------------------------------------------------------------- grounding


class TypeTable:
    """Resolves the type hierarchy of a domain for a set of objects."""

    def __init__(self, domain: Domain):
        self.parents = domain.type_parents()
        self.known = {ROOT_TYPE, *self.parents, *self.parents.values()}

    def ancestors(self, tname: str) -> list[str]:
        if tname not in self.known:
            raise UnknownTypeError(f"unknown type {tname}")
        chain = [tname]
        seen = {tname}
        while chain[-1] in self.parents:
            parent = self.parents[chain[-1]]
            if parent in seen:
                raise PDDLError(f"cyclic type hierarchy at {parent}")
            chain.append(parent)
            seen.add(parent)
        if chain[-1] != ROOT_TYPE:
            chain.append(ROOT_TYPE)
        return chain

    def is_subtype(self, tname: str, of: str) -> bool:
        return of in self.ancestors(tname)

    def members(self, objects: Sequence[tuple[str, str]]) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {t: [] for t in self.known}
        for name, tname in objects:
            for t in self.ancestors(tname):
                out[t].append(name)
        return {t: sorted(v) for t, v in out.items()}


def _bindings(param_types: Sequence[str], members: Mapping[str, list[str]]):
    pools = []
    for t in param_types:
        if t not in members:
            raise UnknownTypeError(f"unknown type {t}")
        pools.append(members[t])
    for combo in itertools.product(*pools):
        # Bindings never repeat an object.
        if len(set(combo)) == len(combo):
            yield combo


def ground(domain: Domain, objects: Sequence[tuple[str, str]]) -> tuple[tuple[GroundAction, ...], tuple[Atom, ...]]:
    """All instantiations of the domain's schemas and predicates over ``objects``.

    Bindings assign distinct objects to distinct parameters.  Results are
    sorted by ``(name, args)``.
    """
    members = TypeTable(domain).members(objects)
    actions = [
        schema.ground(combo)
        for schema in domain.schemas
        for combo in _bindings([t for _, t in schema.params], members)
    ]
    props = [
        Atom(p.name, combo)
        for p in domain.predicates
        for combo in _bindings(p.param_types, members)
    ]
    return tuple(sorted(actions)), tuple(sorted(props))


@dataclass(frozen=True)
class Task:
    """A grounded planning instance: the action set A and proposition set S."""

    domain: Domain
    problem: Problem
    actions: tuple[GroundAction, ...]
    propositions: tuple[Atom, ...]
    init: frozenset[Atom]
    goal: frozenset[Literal]


def ground_problem(domain: Domain, problem: Problem) -> Task:
    """Ground ``problem`` and drop what static facts make irrelevant.

    Actions whose static preconditions fail in the initial state are removed,
    and static propositions false initially are left out of the universe.
    """
    actions, props = ground(domain, problem.objects)
    static = domain.static_predicates()
    init = problem.init

    def static_ok(a: GroundAction) -> bool:
        return all(p in init for p in a.pre_pos if p.predicate in static) and not any(
            p in init for p in a.pre_neg if p.predicate in static
        )

    kept = tuple(a for a in actions if static_ok(a))
    universe = tuple(p for p in props if p.predicate not in static or p in init)
    unknown = set(init) - set(props)
    if unknown:
        raise PDDLError(f"problem {problem.name}: init facts outside the domain: {sorted(map(str, unknown))}")
    return Task(domain, problem, kept, universe, frozenset(init), problem.goal)
