"""Thermodynamic systems: fundamental equations and the expression language.

A system is a potential Phi(E^1..E^n) over named extensive variables plus a
parameter map. Potentials come from a small expression grammar (or from the
built-in catalogue) and are evaluated over jets, so every derivative the
geometry needs is exact.

Expression grammar (also the format used in system definition files)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' factor)?          -- '^' right-associative
    base   := number | ident | func '(' expr ')' | '(' expr ')' | '-' factor
    func   := 'exp' | 'ln' | 'sqrt' | 'sin' | 'cos'

Precedence is ^ > unary minus > * / > + -, so ``-S^2`` means ``-(S^2)``.
The identifier ``pi`` is a reserved constant.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from . import jets
from .errors import DomainError, ParseError
from .jets import Jet

FUNCTIONS = ("exp", "ln", "sqrt", "sin", "cos")
CONSTANTS = {"pi": math.pi}


# -- abstract syntax tree ------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    ident: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Name, Neg, BinOp, Call]


# -- parser --------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            at = len(source) - len(stripped)
            raise ParseError(f"unexpected character {stripped[0]!r}", at)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, text, at = self.peek()
        if kind != "op" or text != op:
            raise ParseError(f"expected {op!r}, found {text or 'end of input'!r}", at)
        self.next()

    def parse(self) -> Expr:
        node = self.expr()
        kind, text, at = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {text!r}", at)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.next()
                node = BinOp(text, node, self.term())
            else:
                return node

    def term(self) -> Expr:
        node = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.next()
                node = BinOp(text, node, self.factor())
            else:
                return node

    def factor(self) -> Expr:
        node = self.base()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.next()
            return BinOp("^", node, self.factor())
        return node

    def base(self) -> Expr:
        kind, text, at = self.next()
        if kind == "num":
            return Num(float(text))
        if kind == "ident":
            nk, nt, _ = self.peek()
            if nk == "op" and nt == "(":
                if text not in FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", at)
                self.next()
                arg = self.expr()
                self.expect_op(")")
                return Call(text, arg)
            return Name(text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "op" and text == "-":
            # unary minus binds below '^': -S^2 is -(S^2)
            return Neg(self.factor())
        raise ParseError(f"unexpected {text or 'end of input'!r}", at)


def parse(source: str) -> Expr:
    """Parse an expression string into an AST."""
    return _Parser(source).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg) or (isinstance(node, Num) and node.value < 0):
        return _PREC["neg"]
    return 9


def to_source(node: Expr) -> str:
    """Print an AST with minimal parentheses; parse(to_source(parse(s))) == parse(s)."""
    if isinstance(node, Num):
        if node.value < 0:
            return f"-{_wrap(Num(-node.value), _PREC['neg'], True)}"
        v = node.value
        return repr(int(v)) if v.is_integer() and abs(v) < 1e16 else repr(v)
    if isinstance(node, Name):
        return node.ident
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    if isinstance(node, Neg):
        return f"-{_wrap(node.operand, _PREC['neg'], True)}"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        if node.op == "^":
            # right-associative: parenthesize left at equal precedence
            return f"{_wrap(node.left, p, True)}^{_wrap(node.right, p, False)}"
        left = _wrap(node.left, p, False)
        right = _wrap(node.right, p, node.op in "-/")
        return f"{left} {node.op} {right}" if p == 1 else f"{left}{node.op}{right}"
    raise TypeError(f"not an Expr node: {node!r}")


def _wrap(node: Expr, parent_prec: int, strict: bool) -> str:
    p = _prec(node)
    text = to_source(node)
    if p < parent_prec or (strict and p == parent_prec):
        return f"({text})"
    return text


# -- evaluation ------------------------------------------------------------------

Scalar = Union[float, Jet]

_FLOAT_FUNCS: dict[str, Callable[[float], float]] = {
    "exp": math.exp,
    "ln": math.log,
    "sqrt": math.sqrt,
    "sin": math.sin,
    "cos": math.cos,
}

_JET_FUNCS: dict[str, Callable[[Jet], Jet]] = {
    "exp": jets.exp,
    "ln": jets.ln,
    "sqrt": jets.sqrt,
    "sin": jets.sin,
    "cos": jets.cos,
}


def eval_float(node: Expr, env: Mapping[str, float]) -> float:
    """Plain arithmetic evaluation, independent of the jet engine."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        if node.ident in env:
            return float(env[node.ident])
        if node.ident in CONSTANTS:
            return CONSTANTS[node.ident]
        raise DomainError(f"unresolved identifier {node.ident!r}")
    if isinstance(node, Neg):
        return -eval_float(node.operand, env)
    if isinstance(node, Call):
        x = eval_float(node.arg, env)
        try:
            return _FLOAT_FUNCS[node.func](x)
        except ValueError as exc:
            raise DomainError(f"{node.func}({x}) is undefined") from exc
    left = eval_float(node.left, env)
    right = eval_float(node.right, env)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if right == 0.0:
            raise DomainError("division by zero")
        return left / right
    try:
        return float(left**right)
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"{left} ^ {right} is undefined") from exc


def eval_jet(node: Expr, env: Mapping[str, Scalar]) -> Scalar:
    """Evaluate over an environment of jets and numbers.

    Subtrees that touch no jet stay plain floats; the caller promotes the
    final result if it needs a jet unconditionally.
    """
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        if node.ident in env:
            return env[node.ident]
        if node.ident in CONSTANTS:
            return CONSTANTS[node.ident]
        raise DomainError(f"unresolved identifier {node.ident!r}")
    if isinstance(node, Neg):
        return -eval_jet(node.operand, env)
    if isinstance(node, Call):
        x = eval_jet(node.arg, env)
        if isinstance(x, Jet):
            return _JET_FUNCS[node.func](x)
        try:
            return _FLOAT_FUNCS[node.func](x)
        except ValueError as exc:
            raise DomainError(f"{node.func}({x}) is undefined") from exc
    left = eval_jet(node.left, env)
    right = eval_jet(node.right, env)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if isinstance(right, float) and right == 0.0:
            raise DomainError("division by zero")
        return left / right
    return _eval_pow(left, right)


def _eval_pow(base: Scalar, exponent: Scalar) -> Scalar:
    if isinstance(exponent, Jet):
        rest = exponent.coeffs[1:]
        if rest.size and np.any(rest != 0.0):
            # genuinely variable exponent: a^b = exp(b ln a)
            if not isinstance(base, Jet):
                base = jets.constant(base, exponent.nvars, exponent.order)
            return jets.exp(exponent * jets.ln(base))
        exponent = exponent.value
    if isinstance(base, Jet):
        return jets.power(base, exponent)
    try:
        return float(base**exponent)
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"{base} ^ {exponent} is undefined") from exc


def free_names(node: Expr) -> set[str]:
    if isinstance(node, Num):
        return set()
    if isinstance(node, Name):
        return set() if node.ident in CONSTANTS else {node.ident}
    if isinstance(node, Neg):
        return free_names(node.operand)
    if isinstance(node, Call):
        return free_names(node.arg)
    return free_names(node.left) | free_names(node.right)


# -- system specifications -------------------------------------------------------

Point = Sequence[float]
DomainPredicate = Callable[[Mapping[str, float]], bool]


@dataclass(frozen=True)
class SystemSpec:
    """A thermodynamic system: named variables, parameters, and a potential.

    `weights`/`beta` are the quasi-homogeneity data Phi(l^w_a E^a) = l^beta Phi,
    when the system has them. `domain` narrows the admissible points beyond
    what expression evaluation itself enforces.
    """

    name: str
    variables: tuple[str, ...]
    potential: Expr
    parameters: dict[str, float] = field(default_factory=dict)
    weights: tuple[float, ...] | None = None
    beta: float | None = None
    domain: DomainPredicate | None = None
    domain_text: str = ""

    def __post_init__(self):
        names = list(self.variables) + list(self.parameters)
        if len(set(names)) != len(names):
            raise ValueError("variable and parameter names must be distinct")
        reserved = set(FUNCTIONS) | set(CONSTANTS)
        bad = reserved.intersection(names)
        if bad:
            raise ValueError(f"reserved identifiers cannot be declared: {sorted(bad)}")
        unknown = free_names(self.potential) - set(names)
        if unknown:
            raise ValueError(f"potential references undeclared identifiers: {sorted(unknown)}")
        if self.weights is not None and len(self.weights) != len(self.variables):
            raise ValueError("one weight per variable required")

    @property
    def dim(self) -> int:
        return len(self.variables)

    def with_parameters(self, **overrides: float) -> "SystemSpec":
        unknown = set(overrides) - set(self.parameters)
        if unknown:
            raise ValueError(f"unknown parameters for {self.name!r}: {sorted(unknown)}")
        return replace(self, parameters={**self.parameters, **overrides})

    def point_env(self, point: Point) -> dict[str, float]:
        if len(point) != self.dim:
            raise ValueError(f"{self.name} expects {self.dim} coordinates, got {len(point)}")
        return dict(zip(self.variables, map(float, point)))

    def in_domain(self, point: Point) -> bool:
        env = self.point_env(point)
        if self.domain is not None and not self.domain(env):
            return False
        try:
            eval_float(self.potential, {**self.parameters, **env})
        except DomainError:
            return False
        return True

    def check_domain(self, point: Point) -> None:
        env = self.point_env(point)
        if self.domain is not None and not self.domain(env):
            hint = f" (requires {self.domain_text})" if self.domain_text else ""
            raise DomainError(f"point {tuple(env.values())} outside domain of {self.name}{hint}")


def evaluate(spec: SystemSpec, point: Point, order: int = jets.DEFAULT_ORDER) -> Jet:
    """Jet of the potential around `point`, each variable seeded."""
    spec.check_domain(point)
    values = [float(v) for v in point]
    env: dict[str, Scalar] = dict(spec.parameters)
    for i, name in enumerate(spec.variables):
        env[name] = jets.seed_variable(i, values[i], spec.dim, order)
    result = eval_jet(spec.potential, env)
    if not isinstance(result, Jet):
        result = jets.constant(float(result), spec.dim, order)
    return result


def potential_value(spec: SystemSpec, point: Point) -> float:
    spec.check_domain(point)
    return eval_float(spec.potential, {**spec.parameters, **spec.point_env(point)})


def intensive_variables(spec: SystemSpec, point: Point) -> np.ndarray:
    """Conjugate intensives I_a = dPhi/dE^a as raw gradients.

    No sign conventions are applied here; for the van der Waals family the
    pressure is -I_V (see `stability_residual_vdw`).
    """
    return evaluate(spec, point, order=1).gradient


def hessian(spec: SystemSpec, point: Point) -> np.ndarray:
    """Second-derivative matrix of the potential at a point."""
    jet = evaluate(spec, point, order=2)
    n = spec.dim
    out = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            alpha = tuple((1 if i == a else 0) + (1 if i == b else 0) for i in range(n))
            out[a, b] = out[b, a] = jets.extract_partial(jet, alpha)
    return out


VDW_FAMILY = ("vdw", "ideal_gas")


def stability_residual_vdw(spec: SystemSpec, point: Point) -> float:
    """P V^3 - a V + 2 a b with P = -dPhi/dV.

    Zero exactly where the Hessian determinant of the van der Waals potential
    vanishes: det Hess = (4u/9k^2) (P V^3 - a V + 2 a b) / (V^3 (V - b)) with
    u = Phi + a/V > 0, so this is the stability limit the determinant scans
    are checked against.
    """
    if spec.name not in VDW_FAMILY:
        raise ValueError(f"stability residual is defined for the vdW family, not {spec.name!r}")
    a = spec.parameters["a"]
    b = spec.parameters["b"]
    v = float(point[1])
    pressure = -intensive_variables(spec, point)[1]
    return pressure * v**3 - a * v + 2.0 * a * b


# -- built-in systems -------------------------------------------------------------

_VDW_POTENTIAL = parse("(exp(S/k)/(V-b))^(2/3) - a/V")
_KN_POTENTIAL = parse("sqrt(pi*J^2/S + (S/(4*pi))*(1 + pi*Q^2/S)^2)")


def _vdw(a: float = 1.0, b: float = 0.1, k: float = 1.0, name: str = "vdw") -> SystemSpec:
    bval = b

    def domain(env: Mapping[str, float], _b=bval) -> bool:
        return env["V"] > _b

    return SystemSpec(
        name=name,
        variables=("S", "V"),
        potential=_VDW_POTENTIAL,
        parameters={"a": a, "b": b, "k": k},
        domain=domain,
        domain_text=f"V > b = {bval}",
    )


def _positive_entropy(env: Mapping[str, float]) -> bool:
    return env["S"] > 0.0


def _ideal_gas(a: float = 0.0, b: float = 0.0, k: float = 1.0) -> SystemSpec:
    return _vdw(a=a, b=b, k=k, name="ideal_gas")


def _kerr_newman() -> SystemSpec:
    return SystemSpec(
        name="kerr_newman",
        variables=("S", "J", "Q"),
        potential=_KN_POTENTIAL,
        parameters={},
        weights=(1.0, 1.0, 0.5),
        beta=0.5,
        domain=_positive_entropy,
        domain_text="S > 0",
    )


def _reissner_nordstrom(J: float = 0.0) -> SystemSpec:
    return SystemSpec(
        name="reissner_nordstrom",
        variables=("S", "Q"),
        potential=_KN_POTENTIAL,
        parameters={"J": J},
        weights=(1.0, 0.5),
        beta=0.5,
        domain=_positive_entropy,
        domain_text="S > 0",
    )


def _kerr(Q: float = 0.0) -> SystemSpec:
    return SystemSpec(
        name="kerr",
        variables=("S", "J"),
        potential=_KN_POTENTIAL,
        parameters={"Q": Q},
        weights=(1.0, 1.0),
        beta=0.5,
        domain=_positive_entropy,
        domain_text="S > 0",
    )


_BUILTINS: dict[str, Callable[..., SystemSpec]] = {
    "ideal_gas": _ideal_gas,
    "kerr": _kerr,
    "kerr_newman": _kerr_newman,
    "reissner_nordstrom": _reissner_nordstrom,
    "vdw": _vdw,
}

BUILTIN_NAMES = tuple(sorted(_BUILTINS))


def builtin(name: str, **parameters: float) -> SystemSpec:
    """Construct a built-in system, optionally overriding its parameters."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown built-in system {name!r}; choose from {BUILTIN_NAMES}") from None
    spec = factory()
    if parameters:
        spec = spec.with_parameters(**parameters)
        if spec.name in VDW_FAMILY and "b" in parameters:
            # the domain predicate closes over b; rebuild it
            spec = factory(**{k: spec.parameters[k] for k in ("a", "b", "k")})
    return spec


# -- system definition files -------------------------------------------------------


def _read_sections(path: str | Path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # identifiers are case-sensitive
    text = Path(path).read_text()
    cp.read_string(text, source=str(path))
    return cp


def _split_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def load_system_file(path: str | Path) -> SystemSpec:
    """Load a SystemSpec from a sectioned key-value file.

    Expected layout::

        [system]
        name = my_gas
        variables = S, V
        potential = (exp(S/k)/(V-b))^(2/3) - a/V
        weights = 1, 1        ; optional
        beta = 2              ; optional

        [parameters]
        a = 1.0
        b = 0.1
        k = 1.0
    """
    cp = _read_sections(path)
    if not cp.has_section("system"):
        raise ParseError(f"{path}: missing [system] section")
    sec = cp["system"]
    for key in ("name", "variables", "potential"):
        if key not in sec:
            raise ParseError(f"{path}: [system] is missing {key!r}")
    params = {k: float(v) for k, v in cp.items("parameters")} if cp.has_section("parameters") else {}
    weights = None
    if "weights" in sec:
        weights = tuple(float(w) for w in _split_list(sec["weights"]))
    beta = float(sec["beta"]) if "beta" in sec else None
    return SystemSpec(
        name=sec["name"].strip(),
        variables=tuple(_split_list(sec["variables"])),
        potential=parse(sec["potential"]),
        parameters=params,
        weights=weights,
        beta=beta,
    )
