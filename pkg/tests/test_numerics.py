"""
Tests de la aritmética certificada, normas ponderadas y lectura de tokens
"""
import random
from fractions import Fraction

import pytest

from app.core.errors import InstanceParseError, PrecisionExhausted, PreconditionViolation
from app.core.numerics import (
    CertReal,
    Ordering,
    WeightedValue,
    WeightVector,
    certify_power_bound,
    compare,
    compare_reals,
    distance_to_integers,
    ext_reciprocal,
    integer_weighted_norm,
    mult_norms,
    nearest_integer,
    parse_extended,
    parse_real,
    parse_weight_pair,
    parse_weights,
    rational_floor,
    render_extended,
    sign,
    weighted_norm,
)


def test_weighted_norm_examples():
    """Norma ponderada: vector nulo, pesos (1/2, 1/2) y caso uniforme"""
    half = WeightVector((Fraction(1, 2), Fraction(1, 2)))
    assert weighted_norm([0, 0], half).is_zero
    assert weighted_norm([4, 9], half).value.exact == 81
    uniform = WeightVector.uniform(3)
    assert weighted_norm([2, -5, 3], uniform).value.exact == 125


def test_integer_norm_key_is_exact():
    """N^L entero para pesos (1/3, 2/3) y radios de caja exactos"""
    w = WeightVector((Fraction(1, 3), Fraction(2, 3)))
    assert w.key_power == 2
    assert w.norm_key((2, 3)) == 64
    assert integer_weighted_norm((2, 3), w).value.exact == 8
    assert w.box_radii(8) == [2, 4]
    assert w.box_radii(8, strict=True) == [1, 3]


def test_mult_norms_examples():
    """Pi_+ y Pi en los ejemplos directos"""
    pi_plus, _ = mult_norms((0, 0, 0), [1, 1, 1])
    assert pi_plus.value.exact == 1
    pi_plus, pi = mult_norms((2, -3), [Fraction(1, 2), Fraction(1, 3)])
    assert pi_plus.value.exact == 6
    assert pi.value.exact == Fraction(1, 6)


def test_compare_weighted_values():
    """compare: cero frente a positivo, empates exactos y norma frente a Pi_+"""
    half = WeightVector((Fraction(1, 2), Fraction(1, 2)))
    assert compare(WeightedValue.of(0), WeightedValue.of(parse_real("sqrt(2)"))) == Ordering.LESS
    assert compare(WeightedValue.of(81), WeightedValue.of(81)) == Ordering.EQUAL
    assert compare(weighted_norm([1, 1], half), mult_norms((1, 1), [1, 1])[0]) == Ordering.EQUAL


def test_weights_must_sum_to_one():
    """Pesos que no suman 1 o no positivos se rechazan"""
    with pytest.raises(PreconditionViolation):
        WeightVector((Fraction(1, 2), Fraction(1, 3)))
    with pytest.raises(PreconditionViolation):
        WeightVector((Fraction(3, 2), Fraction(-1, 2)))


def test_parse_named_constants():
    """Tokens con nombre: phi, raíces, Liouville y racionales"""
    phi = parse_real("phi")
    assert repr(phi) == "phi"
    assert abs(float(phi) - 1.6180339887498949) < 1e-15
    assert parse_real("sqrt(4)").exact == 2
    assert parse_real("3/7").exact == Fraction(3, 7)
    assert parse_real("0.25").exact == Fraction(1, 4)
    assert repr(parse_real("liouville(2)")) == "liouville(2)"
    assert abs(float(parse_real("quad(1,1,2)")) - 2.414213562373095) < 1e-14
    assert float(parse_real("-sqrt(2)")) < 0


def test_parse_errors():
    """Tokens ilegibles producen InstanceParseError"""
    for token in ("", "foo(2)", "sqrt(2,3,4)", "1/0"):
        with pytest.raises(InstanceParseError):
            parse_real(token)
    with pytest.raises(InstanceParseError):
        parse_weights("1/2", 2)


def test_parse_weight_presets():
    """Presets "uniform" y "w(s;r)" """
    s, r = parse_weight_pair("uniform", 2, 1)
    assert s.is_uniform and r.weights == (Fraction(1),)
    s, r = parse_weight_pair("w(1/3,2/3;1)", 2, 1)
    assert s.weights == (Fraction(1, 3), Fraction(2, 3))
    assert r.weights == (Fraction(1),)


def test_symbolic_zero_is_decided():
    """Un cero irracional se decide por la forma simbólica"""
    root = parse_real("sqrt(2)")
    assert sign(root * root - 2) == 0
    assert compare_reals(root * root, 2) == Ordering.EQUAL
    assert compare_reals(root, Fraction(14142, 10000)) == Ordering.GREATER


def test_undecidable_zero_raises_precision_exhausted():
    """Sin forma simbólica, un cero no se decide y se agota la precisión"""
    liouville = parse_real("liouville(2)")
    with pytest.raises(PrecisionExhausted):
        sign(liouville - liouville, cap_bits=128)


def test_nearest_integer_and_distance():
    """Entero más cercano y distancia certificada"""
    phi = parse_real("phi")
    assert nearest_integer(phi) == 2
    dist, p = distance_to_integers(phi * 3)
    assert p == 5
    assert abs(float(dist) - 0.1458980337503155) < 1e-14
    assert nearest_integer(Fraction(5, 2)) == 3


def test_enclosures_are_nested_and_narrow():
    """Encierros racionales dentro del ancho pedido y anidados"""
    root = parse_real("sqrt(3)")
    lo1, hi1 = root.enclose(Fraction(1, 1 << 20))
    lo2, hi2 = root.enclose(Fraction(1, 1 << 100))
    assert hi1 - lo1 <= Fraction(1, 1 << 20)
    assert lo1 <= lo2 <= hi2 <= hi1
    assert lo2 * lo2 <= 3 <= hi2 * hi2


def test_certify_power_bound():
    """residuo < T^(-omega) decidido con logaritmos certificados"""
    assert certify_power_bound(Fraction(1, 100), Fraction(2), Fraction(6))
    assert not certify_power_bound(Fraction(1, 10), Fraction(2), Fraction(6))
    assert certify_power_bound(parse_real("sqrt(2)") - 1, Fraction(2), Fraction(1))
    assert not certify_power_bound(parse_real("sqrt(2)") - 1, Fraction(2), Fraction(2))
    with pytest.raises(PreconditionViolation):
        certify_power_bound(Fraction(1, 2), Fraction(1), Fraction(1))


def test_extended_rationals():
    """Racionales extendidos con infinito"""
    assert render_extended(parse_extended("inf")) == "inf"
    assert ext_reciprocal(parse_extended("inf")) == 0
    assert render_extended(ext_reciprocal(Fraction(0))) == "inf"
    assert ext_reciprocal(Fraction(5, 7)) == Fraction(7, 5)


def test_rational_floor_is_strictly_below():
    """rational_floor queda por debajo del valor"""
    for value in (1.0, 0.3333, 2.5, 17.0):
        assert rational_floor(value) < Fraction(value)
        assert Fraction(value) - rational_floor(value) <= Fraction(2, 1 << 16)


def test_exact_root_of_perfect_power():
    """Las potencias racionales exactas se quedan racionales"""
    x = CertReal.rational(Fraction(9, 4)).power(Fraction(3, 2))
    assert x.is_exact and x.exact == Fraction(27, 8)


def _random_rational(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-30, 30), rng.randint(1, 9))


def test_weighted_norm_is_quasi_homogeneous():
    """||(t^(w_i) x_i)||_w = t ||x||_w con t = u^6 y pesos de recíproco entero"""
    rng = random.Random(21)
    w = WeightVector((Fraction(1, 3), Fraction(1, 6), Fraction(1, 2)))
    for _ in range(200):
        x = [_random_rational(rng) for _ in range(3)]
        u = Fraction(rng.randint(1, 7), rng.randint(1, 7))
        scaled = [u ** 2 * x[0], u * x[1], u ** 3 * x[2]]
        assert weighted_norm(scaled, w).value.exact == u ** 6 * weighted_norm(x, w).value.exact


def test_weighted_norm_vanishes_only_at_zero():
    """||x||_w = 0 si y sólo si x = 0"""
    rng = random.Random(22)
    w = WeightVector((Fraction(1, 4), Fraction(3, 4)))
    assert weighted_norm([0, 0], w).is_zero
    for _ in range(100):
        x = [_random_rational(rng), _random_rational(rng)]
        if any(x):
            assert sign(weighted_norm(x, w).value) == 1


@pytest.mark.parametrize("weights", [
    (Fraction(1, 3), Fraction(1, 6), Fraction(1, 2)),
    (Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)),
])
def test_slack_triangle_inequality(weights):
    """||U^-1 (a + b)||_w <= U^-delta (||a||_w + ||b||_w) para U >= 2 y vectores enteros"""
    rng = random.Random(23)
    w = WeightVector(weights)
    for _ in range(150):
        U = rng.randint(2, 40)
        a = [rng.randint(-50, 50) for _ in weights]
        b = [rng.randint(-50, 50) for _ in weights]
        if not any(a) and not any(b):
            continue
        lhs = weighted_norm([Fraction(ai + bi, U) for ai, bi in zip(a, b)], w).value
        rhs = CertReal.rational(U).power(-w.delta) * (weighted_norm(a, w).value + weighted_norm(b, w).value)
        assert compare_reals(lhs, rhs) == Ordering.LESS
