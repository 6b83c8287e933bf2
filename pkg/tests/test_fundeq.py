import math

import numpy as np
import pytest

from expr_corpus import CORPUS, KN_SOURCE, VDW_SOURCE
from gtdkit import fundeq, jets
from gtdkit.errors import DomainError, ParseError
from gtdkit.fundeq import (
    BinOp,
    Name,
    Num,
    builtin,
    evaluate,
    eval_float,
    intensive_variables,
    load_system_file,
    parse,
    potential_value,
    stability_residual_vdw,
    to_source,
)


# -- parsing ---------------------------------------------------------------------


def test_parse_division_node():
    tree = parse("a/V")
    assert tree == BinOp("/", Name("a"), Name("V"))


def test_parse_vdw_tree():
    tree = parse(VDW_SOURCE)
    assert isinstance(tree, BinOp) and tree.op == "-"
    power = tree.left
    assert isinstance(power, BinOp) and power.op == "^"
    assert power.right == BinOp("/", Num(2.0), Num(3.0))
    assert tree.right == BinOp("/", Name("a"), Name("V"))


def test_parse_error_position():
    with pytest.raises(ParseError, match="position 4"):
        parse("S + * V")


def test_unknown_function():
    with pytest.raises(ParseError, match="unknown function"):
        parse("tan(S)")


def test_unbalanced_paren():
    with pytest.raises(ParseError):
        parse("(S + V")


def test_power_right_associative():
    assert eval_float(parse("2^3^2"), {}) == 512.0
    assert eval_float(parse("(2^3)^2"), {}) == 64.0


def test_unary_minus_below_power():
    # precedence ^ > unary -: -S^2 is -(S^2)
    assert eval_float(parse("-S^2"), {"S": 3.0}) == -9.0
    assert eval_float(parse("(-S)^2"), {"S": 3.0}) == 9.0
    assert eval_float(parse("-S*V"), {"S": 3.0, "V": 5.0}) == -15.0


def test_left_associativity():
    assert eval_float(parse("10 - 4 - 3"), {}) == 3.0
    assert eval_float(parse("24/4/2"), {}) == 3.0


@pytest.mark.parametrize("source", CORPUS)
def test_round_trip(source):
    tree = parse(source)
    assert parse(to_source(tree)) == tree


# -- evaluation -------------------------------------------------------------------


def test_evaluate_vdw_limit_constant():
    spec = builtin("vdw", a=0.0, b=0.0)
    jet = evaluate(spec, (0.0, 1.0))
    assert jet.value == pytest.approx(1.0, rel=1e-14)


def test_evaluate_kerr_newman_unit_mass():
    spec = builtin("kerr_newman")
    jet = evaluate(spec, (math.pi, 0.0, 1.0))
    assert jet.value == pytest.approx(1.0, rel=1e-14)


def test_evaluate_outside_domain():
    spec = builtin("vdw")  # b = 0.1
    with pytest.raises(DomainError):
        evaluate(spec, (0.0, 0.1))


def test_order_zero_matches_plain_eval():
    env = {"S": 0.8, "V": 1.7, "J": 0.4, "Q": 0.9, "k": 1.0, "a": 1.0, "b": 0.1, "theta": 0.6}
    for source in (VDW_SOURCE, KN_SOURCE, "sin(theta)^2", "exp(S/k)/(V-b)"):
        tree = parse(source)
        names = sorted(fundeq.free_names(tree))
        jet_env = {n: jets.seed_variable(i, env[n], len(names), 0) for i, n in enumerate(names)}
        via_jet = fundeq.eval_jet(tree, jet_env)
        via_jet = via_jet.value if isinstance(via_jet, jets.Jet) else via_jet
        plain = eval_float(tree, env)
        assert via_jet == pytest.approx(plain, rel=1e-14)


def test_unresolved_identifier():
    with pytest.raises(DomainError, match="unresolved"):
        eval_float(parse("S + missing"), {"S": 1.0})


# -- intensive variables ------------------------------------------------------------


def test_intensive_rn_extremal_temperature():
    spec = builtin("reissner_nordstrom")
    t, _phi = intensive_variables(spec, (math.pi, 1.0))
    assert abs(t) <= 1e-14


def test_intensive_product_potential():
    spec = fundeq.SystemSpec(name="product", variables=("E1", "E2"), potential=parse("E1*E2"))
    assert list(intensive_variables(spec, (2.0, 3.0))) == [3.0, 2.0]


def test_intensive_ideal_gas():
    spec = builtin("vdw", a=0.0, b=0.0)
    t, iv = intensive_variables(spec, (0.0, 1.0))
    assert t == pytest.approx(2 / 3, rel=1e-14)
    assert iv == pytest.approx(-2 / 3, rel=1e-14)


def test_intensive_equals_order_one_jet():
    spec = builtin("kerr_newman")
    point = (3.0, 0.5, 0.8)
    jet = evaluate(spec, point, order=1)
    grad = [jets.extract_partial(jet, tuple(1 if i == a else 0 for i in range(3))) for a in range(3)]
    assert list(intensive_variables(spec, point)) == grad


# -- builtins ------------------------------------------------------------------------


def test_builtin_vdw_two_variables():
    spec = builtin("vdw", a=1.0, b=0.1)
    assert spec.variables == ("S", "V")
    assert spec.parameters["a"] == 1.0


def test_builtin_kerr_variables():
    spec = builtin("kerr")
    assert spec.variables == ("S", "J")
    assert spec.parameters["Q"] == 0.0


def test_builtin_unknown():
    with pytest.raises(ValueError, match="unknown built-in"):
        builtin("bogus")


def test_with_parameters_rejects_unknown():
    with pytest.raises(ValueError, match="unknown parameters"):
        builtin("vdw").with_parameters(zeta=2.0)


def test_vdw_domain_follows_b_override():
    spec = builtin("vdw", b=0.5)
    assert not spec.in_domain((0.0, 0.4))
    assert spec.in_domain((0.0, 0.6))


def test_kerr_newman_weighted_scaling():
    spec = builtin("kerr_newman")
    rng = np.random.default_rng(3)
    for _ in range(10):
        s, j, q = rng.uniform(1, 8), rng.uniform(0.1, 1.5), rng.uniform(0.3, 1.5)
        m = potential_value(spec, (s, j, q))
        for lam in (0.5, 2.0, 10.0):
            scaled = potential_value(spec, (lam * s, lam * j, math.sqrt(lam) * q))
            assert scaled == pytest.approx(math.sqrt(lam) * m, rel=1e-12)


# -- stability residual ---------------------------------------------------------------


def test_stability_residual_ideal_gas_positive():
    spec = builtin("vdw", a=0.0, b=0.0)
    for s, v in [(0.0, 1.0), (1.0, 2.0), (0.5, 0.3)]:
        assert stability_residual_vdw(spec, (s, v)) > 0.0


def test_stability_residual_constructed_zero():
    # a=1, b=0: residual = P V^3 - V; choosing S so that P = 1/V^2 makes it vanish
    spec = builtin("vdw", a=1.0, b=0.0)
    v = 1.0
    s = 1.5 * math.log(3.0 * v ** (-1 / 3))
    assert abs(stability_residual_vdw(spec, (s, v))) <= 1e-12


def test_stability_residual_rejects_other_systems():
    with pytest.raises(ValueError, match="vdW family"):
        stability_residual_vdw(builtin("kerr"), (1.0, 1.0))


# -- system definition files ------------------------------------------------------------


SYSTEM_FILE = """
[system]
name = toy_gas
variables = S, V
potential = (exp(S/k)/(V-b))^(2/3) - a/V
weights = 1, 1
beta = 2

[parameters]
a = 1.0
b = 0.1
k = 1.0
"""


def test_load_system_file(tmp_path):
    path = tmp_path / "toy.ini"
    path.write_text(SYSTEM_FILE)
    spec = load_system_file(path)
    assert spec.name == "toy_gas"
    assert spec.variables == ("S", "V")
    assert spec.beta == 2.0
    ref = builtin("vdw", a=1.0, b=0.1)
    point = (0.7, 1.3)
    assert potential_value(spec, point) == pytest.approx(potential_value(ref, point), rel=1e-15)


def test_load_system_file_missing_key(tmp_path):
    path = tmp_path / "broken.ini"
    path.write_text("[system]\nname = x\n")
    with pytest.raises(ParseError, match="missing"):
        load_system_file(path)


def test_spec_rejects_reserved_names():
    with pytest.raises(ValueError, match="reserved"):
        fundeq.SystemSpec(name="bad", variables=("pi",), potential=parse("pi"))


def test_spec_rejects_undeclared_identifiers():
    with pytest.raises(ValueError, match="undeclared"):
        fundeq.SystemSpec(name="bad", variables=("S",), potential=parse("S + missing"))
