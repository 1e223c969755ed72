"""
Aritmética exacta y certificada
Racionales exactos, reales refinables por intervalos y las cuasinormas
ponderadas y multiplicativas que consumen los demás módulos
"""
import logging
import math
import re
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import sympy
from mpmath import libmp

from app.core import config
from app.core.errors import InstanceParseError, PrecisionExhausted, PreconditionViolation

logger = logging.getLogger("numerics")

Enclosure = Tuple[Fraction, Fraction]
ExtendedRational = Union[Fraction, float]

NEG_INF = float("-inf")
INFINITY = math.inf
HALF = Fraction(1, 2)

_precision_cap = config.PRECISION_CAP_BITS


class Ordering(IntEnum):
    """Resultado de una comparación certificada"""
    LESS = -1
    EQUAL = 0
    GREATER = 1


class _Unresolved(Exception):
    """La precisión actual no basta para evaluar un nodo (p. ej. divisor que cruza 0)"""


def configure_precision(bits: int) -> None:
    """Fija la precisión máxima (en bits) de las comparaciones certificadas"""
    global _precision_cap
    if bits < config.INITIAL_PRECISION_BITS:
        raise PreconditionViolation(f"precision cap must be >= {config.INITIAL_PRECISION_BITS} bits, got {bits}")
    _precision_cap = bits
    logger.info(f"🔧 Precision cap set to {bits} bits")


def precision_cap() -> int:
    return _precision_cap


def precision_ladder(cap_bits: Optional[int] = None) -> Iterator[int]:
    """Precisiones crecientes (duplicando) hasta el tope, tope incluido"""
    cap = cap_bits or _precision_cap
    prec = min(config.INITIAL_PRECISION_BITS, cap)
    while prec < cap:
        yield prec
        prec *= 2
    yield cap


# ---------------------------------------------------------------------------
# Redondeo dirigido sobre racionales
# ---------------------------------------------------------------------------

def _round_floor(x: Fraction, prec: int) -> Fraction:
    num, den = x.numerator, x.denominator
    if den == 1 or (abs(num).bit_length() <= 2 * prec and den.bit_length() <= 2 * prec):
        return x
    shift = prec - (abs(num).bit_length() - den.bit_length())
    if shift >= 0:
        return Fraction((num << shift) // den, 1 << shift)
    return Fraction((num // (den << -shift)) << -shift)


def _round_ceiling(x: Fraction, prec: int) -> Fraction:
    return -_round_floor(-x, prec)


def _exact_root(x: Fraction, k: int) -> Optional[Fraction]:
    """Raíz k-ésima exacta de un racional no negativo, o None si es irracional"""
    top, top_exact = sympy.integer_nthroot(x.numerator, k)
    if not top_exact:
        return None
    bottom, bottom_exact = sympy.integer_nthroot(x.denominator, k)
    if not bottom_exact:
        return None
    return Fraction(int(top), int(bottom))


def _root_bounds(x: Fraction, k: int, prec: int) -> Enclosure:
    if x == 0:
        return Fraction(0), Fraction(0)
    u, v = x.numerator, x.denominator
    # x^(1/k) = (u v^(k-1))^(1/k) / v
    n = u * v ** (k - 1)
    t = max(0, prec + 2 - n.bit_length() // k)
    r, exact = sympy.integer_nthroot(n << (k * t), k)
    r = int(r)
    lo = Fraction(r, v << t)
    if exact:
        return lo, lo
    return lo, Fraction(r + 1, v << t)


def _power_bounds(enc: Enclosure, e: Fraction, prec: int) -> Enclosure:
    lo, hi = enc
    if hi < 0:
        raise PreconditionViolation("rational powers are only defined here for nonnegative values")
    if e < 0:
        if lo <= 0:
            raise _Unresolved("negative power of an enclosure touching 0")
        low, high = _power_bounds(enc, -e, prec)
        return 1 / high, 1 / low
    lo = max(lo, Fraction(0))
    a, b = e.numerator, e.denominator
    lo_a = _round_floor(lo ** a, prec)
    hi_a = _round_ceiling(hi ** a, prec)
    if b == 1:
        return lo_a, hi_a
    return _root_bounds(lo_a, b, prec)[0], _root_bounds(hi_a, b, prec)[1]


def log_enclosure(lo: Fraction, hi: Fraction, prec: int) -> Enclosure:
    """Encierro certificado de log sobre [lo, hi] con lo > 0 (redondeo dirigido de mpmath)"""
    if lo <= 0:
        raise _Unresolved("logarithm of an enclosure touching 0")
    a = libmp.from_rational(lo.numerator, lo.denominator, prec, libmp.round_floor)
    b = libmp.from_rational(hi.numerator, hi.denominator, prec, libmp.round_ceiling)
    log_lo = libmp.mpf_log(a, prec, libmp.round_floor)
    log_hi = libmp.mpf_log(b, prec, libmp.round_ceiling)
    return Fraction(*libmp.to_rational(log_lo)), Fraction(*libmp.to_rational(log_hi))


def _mul_bounds(a: Enclosure, b: Enclosure) -> Enclosure:
    products = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return min(products), max(products)


# ---------------------------------------------------------------------------
# CertReal
# ---------------------------------------------------------------------------

class CertReal:
    """
    Número real certificado
    Racional exacto, o constante/expresión con un procedimiento de refinamiento
    que produce encierros racionales de cualquier ancho pedido
    """

    __slots__ = ("_exact", "_bounds_fn", "label", "_symbolic", "_symbolic_fn", "_cache", "_enclosure")

    def __init__(
        self,
        bounds_fn: Optional[Callable[[int], Enclosure]] = None,
        exact: Optional[Fraction] = None,
        label: Optional[str] = None,
        symbolic_fn: Optional[Callable[[], object]] = None,
    ):
        if exact is None and bounds_fn is None:
            raise ValueError("CertReal needs an exact value or a refinement procedure")
        self._exact = Fraction(exact) if exact is not None else None
        self._bounds_fn = bounds_fn
        self.label = label
        self._symbolic = None
        self._symbolic_fn = symbolic_fn
        self._cache = {}
        self._enclosure = None

    # -- constructores ------------------------------------------------------

    @classmethod
    def rational(cls, value) -> "CertReal":
        return cls(exact=Fraction(value))

    @classmethod
    def root(cls, radicand, k: int = 2, label: Optional[str] = None) -> "CertReal":
        radicand = Fraction(radicand)
        if radicand < 0 or k < 1:
            raise PreconditionViolation(f"root({radicand}, {k}) is not a real nonnegative constant")
        exact = _exact_root(radicand, k)
        if exact is not None:
            return cls.rational(exact)
        name = label or (f"sqrt({radicand})" if k == 2 else f"root({radicand},{k})")
        return cls(
            bounds_fn=lambda prec: _root_bounds(radicand, k, prec),
            label=name,
            symbolic_fn=lambda: sympy.root(sympy.Rational(radicand.numerator, radicand.denominator), k),
        )

    @classmethod
    def golden_ratio(cls) -> "CertReal":
        return ((cls.rational(1) + cls.root(5)) / 2).named("phi")

    @classmethod
    def liouville(cls, base: int = 2, digit: int = 1) -> "CertReal":
        """Constante de Liouville sum_{k>=1} digit * base^(-k!)"""
        if base < 2 or not 1 <= digit < base:
            raise PreconditionViolation(f"liouville constant needs base >= 2 and 1 <= digit < base, got ({base}, {digit})")

        def bounds_fn(prec: int) -> Enclosure:
            k = 1
            while math.factorial(k + 1) * math.log2(base) < prec + 8:
                k += 1
            partial = liouville_partial_sum(base, digit, k)
            return partial, partial + Fraction(2 * digit, base ** math.factorial(k + 1))

        name = f"liouville({base})" if digit == 1 else f"liouville({digit},{base})"
        return cls(bounds_fn=bounds_fn, label=name)

    @classmethod
    def exp(cls, t) -> "CertReal":
        """e^t para t racional"""
        t = Fraction(t)
        if t == 0:
            return cls.rational(1)

        def bounds_fn(prec: int) -> Enclosure:
            low = libmp.from_rational(t.numerator, t.denominator, prec + 8, libmp.round_floor)
            high = libmp.from_rational(t.numerator, t.denominator, prec + 8, libmp.round_ceiling)
            lo = libmp.mpf_exp(low, prec, libmp.round_floor)
            hi = libmp.mpf_exp(high, prec, libmp.round_ceiling)
            return Fraction(*libmp.to_rational(lo)), Fraction(*libmp.to_rational(hi))

        return cls(bounds_fn=bounds_fn, label=f"exp({t})",
                   symbolic_fn=lambda: sympy.exp(sympy.Rational(t.numerator, t.denominator)))

    def named(self, label: str) -> "CertReal":
        if self.is_exact:
            return self
        clone = CertReal(bounds_fn=self.bounds, label=label, symbolic_fn=lambda: self.symbolic)
        return clone

    # -- acceso ---------------------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return self._exact is not None

    @property
    def exact(self) -> Optional[Fraction]:
        return self._exact

    @property
    def symbolic(self):
        """Forma simbólica de sympy cuando la expresión solo usa constantes algebraicas"""
        if self._exact is not None:
            return sympy.Rational(self._exact.numerator, self._exact.denominator)
        if self._symbolic is None and self._symbolic_fn is not None:
            self._symbolic = self._symbolic_fn()
        return self._symbolic

    def bounds(self, prec: int) -> Enclosure:
        if self._exact is not None:
            return self._exact, self._exact
        cached = self._cache.get(prec)
        if cached is None:
            lo, hi = self._bounds_fn(prec)
            cached = (_round_floor(lo, prec), _round_ceiling(hi, prec))
            self._cache[prec] = cached
        return cached

    def enclose(self, width) -> Enclosure:
        """Encierro racional [lo, hi] con hi - lo <= width, anidado con los anteriores"""
        width = Fraction(width)
        if width <= 0:
            raise PreconditionViolation("enclosure width must be positive")
        if self._exact is not None:
            return self._exact, self._exact
        prec = config.INITIAL_PRECISION_BITS
        while True:
            try:
                lo, hi = self.bounds(prec)
            except _Unresolved:
                prec *= 2
                continue
            if self._enclosure is not None:
                lo, hi = max(lo, self._enclosure[0]), min(hi, self._enclosure[1])
            self._enclosure = (lo, hi)
            if hi - lo <= width:
                return lo, hi
            magnitude = max(abs(lo), abs(hi), Fraction(1))
            needed = (magnitude / width).numerator.bit_length() + 8
            prec = max(prec * 2, min(needed, prec * 8))

    def log_bounds(self, prec: int) -> Enclosure:
        lo, hi = self.bounds(prec)
        return log_enclosure(lo, hi, prec)

    def __float__(self) -> float:
        if self._exact is not None:
            return float(self._exact)
        prec = config.INITIAL_PRECISION_BITS
        while True:
            try:
                lo, hi = self.bounds(prec)
                return float((lo + hi) / 2)
            except _Unresolved:
                prec *= 2
                if prec > 4 * _precision_cap:
                    raise PrecisionExhausted(f"cannot evaluate {self!r}", left=repr(self), bits=prec)

    def __repr__(self) -> str:
        if self._exact is not None:
            return str(self._exact)
        return self.label or f"CertReal(~{float(self):.17g})"

    # -- aritmética -----------------------------------------------------------

    def _binary(self, other, exact_op, bounds_op, symbolic_op) -> "CertReal":
        other = as_cert(other)
        if self.is_exact and other.is_exact:
            return CertReal.rational(exact_op(self._exact, other._exact))
        left, right = self, other

        def symbolic_fn():
            a, b = left.symbolic, right.symbolic
            return None if a is None or b is None else symbolic_op(a, b)

        return CertReal(bounds_fn=lambda prec: bounds_op(left.bounds(prec), right.bounds(prec)),
                        symbolic_fn=symbolic_fn)

    def __add__(self, other) -> "CertReal":
        return self._binary(other, lambda a, b: a + b,
                            lambda x, y: (x[0] + y[0], x[1] + y[1]), lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other) -> "CertReal":
        return self._binary(other, lambda a, b: a - b,
                            lambda x, y: (x[0] - y[1], x[1] - y[0]), lambda a, b: a - b)

    def __rsub__(self, other) -> "CertReal":
        return as_cert(other) - self

    def __mul__(self, other) -> "CertReal":
        return self._binary(other, lambda a, b: a * b, _mul_bounds, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "CertReal":
        other = as_cert(other)
        if other.is_exact and other.exact == 0:
            raise ZeroDivisionError("division of a certified real by exact zero")

        def divide(x: Enclosure, y: Enclosure) -> Enclosure:
            if y[0] <= 0 <= y[1]:
                raise _Unresolved("divisor enclosure contains 0")
            return _mul_bounds(x, (1 / y[1], 1 / y[0]))

        return self._binary(other, lambda a, b: a / b, divide, lambda a, b: a / b)

    def __rtruediv__(self, other) -> "CertReal":
        return as_cert(other) / self

    def __neg__(self) -> "CertReal":
        if self.is_exact:
            return CertReal.rational(-self._exact)
        source = self
        return CertReal(bounds_fn=lambda prec: (-source.bounds(prec)[1], -source.bounds(prec)[0]),
                        symbolic_fn=lambda: None if source.symbolic is None else -source.symbolic)

    def __abs__(self) -> "CertReal":
        if self.is_exact:
            return CertReal.rational(abs(self._exact))
        source = self

        def bounds_fn(prec: int) -> Enclosure:
            lo, hi = source.bounds(prec)
            if lo >= 0:
                return lo, hi
            if hi <= 0:
                return -hi, -lo
            return Fraction(0), max(-lo, hi)

        return CertReal(bounds_fn=bounds_fn,
                        symbolic_fn=lambda: None if source.symbolic is None else sympy.Abs(source.symbolic))

    def power(self, exponent) -> "CertReal":
        """Potencia racional de un real no negativo"""
        e = Fraction(exponent)
        if e == 1:
            return self
        if self.is_exact:
            x = self._exact
            if x < 0:
                raise PreconditionViolation("rational powers are only defined here for nonnegative values")
            if x == 0:
                if e < 0:
                    raise ZeroDivisionError("negative power of zero")
                return CertReal.rational(0) if e > 0 else CertReal.rational(1)
            base = x ** e.numerator if e.numerator >= 0 else 1 / x ** -e.numerator
            exact = _exact_root(base, e.denominator)
            if exact is not None:
                return CertReal.rational(exact)
            return CertReal(bounds_fn=lambda prec: _power_bounds((x, x), e, prec),
                            symbolic_fn=lambda: sympy.Rational(x.numerator, x.denominator) ** sympy.Rational(e.numerator, e.denominator))
        source = self
        return CertReal(bounds_fn=lambda prec: _power_bounds(source.bounds(prec), e, prec),
                        symbolic_fn=lambda: None if source.symbolic is None
                        else source.symbolic ** sympy.Rational(e.numerator, e.denominator))

    @staticmethod
    def maximum(values: Sequence["CertReal"]) -> "CertReal":
        values = [as_cert(v) for v in values]
        if not values:
            raise ValueError("maximum of an empty sequence")
        if all(v.is_exact for v in values):
            return CertReal.rational(max(v.exact for v in values))
        return CertReal(bounds_fn=lambda prec: (max(v.bounds(prec)[0] for v in values),
                                                max(v.bounds(prec)[1] for v in values)),
                        symbolic_fn=lambda: None if any(v.symbolic is None for v in values)
                        else sympy.Max(*[v.symbolic for v in values]))

    @staticmethod
    def dot(coefficients: Sequence["CertReal"], integers: Sequence[int], offset=0) -> "CertReal":
        """sum_i c_i x_i + offset con x_i enteros (combinación lineal certificada)"""
        coefficients = [as_cert(c) for c in coefficients]
        integers = [int(x) for x in integers]
        offset = as_cert(offset)
        exact_part = offset.exact if offset.is_exact else Fraction(0)
        inexact = [] if offset.is_exact else [(offset, 1)]
        for c, x in zip(coefficients, integers):
            if x == 0:
                continue
            if c.is_exact:
                exact_part += c.exact * x
            else:
                inexact.append((c, x))
        if not inexact:
            return CertReal.rational(exact_part)

        def bounds_fn(prec: int) -> Enclosure:
            lo = hi = exact_part
            for c, x in inexact:
                c_lo, c_hi = c.bounds(prec)
                if x > 0:
                    lo, hi = lo + c_lo * x, hi + c_hi * x
                else:
                    lo, hi = lo + c_hi * x, hi + c_lo * x
            return lo, hi

        def symbolic_fn():
            if any(c.symbolic is None for c, _ in inexact):
                return None
            return sympy.Rational(exact_part.numerator, exact_part.denominator) + sum(c.symbolic * x for c, x in inexact)

        return CertReal(bounds_fn=bounds_fn, symbolic_fn=symbolic_fn)


def as_cert(value) -> CertReal:
    if isinstance(value, CertReal):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not certified reals")
    if isinstance(value, (int, Fraction)):
        return CertReal.rational(value)
    if isinstance(value, float):
        return CertReal.rational(Fraction(value))
    if isinstance(value, str):
        return parse_real(value)
    raise TypeError(f"cannot convert {type(value).__name__} to CertReal")


def liouville_partial_sum(base: int, digit: int, k: int) -> Fraction:
    """Suma parcial exacta sum_{j<=k} digit * base^(-j!)"""
    return sum((Fraction(digit, base ** math.factorial(j)) for j in range(1, k + 1)), Fraction(0))


_LIOUVILLE_LABEL = re.compile(r"^liouville\((?:(?P<digit>\d+),)?(?P<base>\d+)\)$")


def liouville_parameters(x) -> Optional[Tuple[int, int]]:
    """(base, digit) si x es una constante de Liouville construida por CertReal.liouville"""
    if not isinstance(x, CertReal) or x.is_exact or not x.label:
        return None
    match = _LIOUVILLE_LABEL.match(x.label)
    if match is None:
        return None
    return int(match.group("base")), int(match.group("digit") or 1)


# ---------------------------------------------------------------------------
# Comparaciones certificadas
# ---------------------------------------------------------------------------

def _symbolic_sign(x: CertReal) -> Optional[int]:
    expr = x.symbolic
    if expr is None:
        return None
    simplified = sympy.simplify(expr)
    if simplified.is_zero:
        return 0
    if simplified.is_positive:
        return 1
    if simplified.is_negative:
        return -1
    return None


def sign(x, cap_bits: Optional[int] = None) -> int:
    """Signo certificado (-1, 0, 1); el cero solo se decide exacta o simbólicamente"""
    x = as_cert(x)
    if x.is_exact:
        return (x.exact > 0) - (x.exact < 0)
    for prec in precision_ladder(cap_bits):
        try:
            lo, hi = x.bounds(prec)
        except _Unresolved:
            continue
        if lo > 0:
            return 1
        if hi < 0:
            return -1
    decided = _symbolic_sign(x)
    if decided is not None:
        return decided
    raise PrecisionExhausted(f"sign of {x!r} undecided at cap", left=repr(x), right="0",
                             bits=cap_bits or _precision_cap)


def compare_reals(a, b, cap_bits: Optional[int] = None) -> Ordering:
    a, b = as_cert(a), as_cert(b)
    if a.is_exact and b.is_exact:
        return Ordering((a.exact > b.exact) - (a.exact < b.exact))
    for prec in precision_ladder(cap_bits):
        try:
            a_lo, a_hi = a.bounds(prec)
            b_lo, b_hi = b.bounds(prec)
        except _Unresolved:
            continue
        if a_hi < b_lo:
            return Ordering.LESS
        if a_lo > b_hi:
            return Ordering.GREATER
    decided = _symbolic_sign(a - b)
    if decided is not None:
        return Ordering(decided)
    raise PrecisionExhausted(f"comparison {a!r} vs {b!r} undecided at cap", left=repr(a), right=repr(b),
                             bits=cap_bits or _precision_cap)


def nearest_integer(x, cap_bits: Optional[int] = None) -> int:
    """Entero más cercano (en un empate exacto devuelve el mayor; ambos distan 1/2)"""
    x = as_cert(x)
    if x.is_exact:
        return math.floor(x.exact + HALF)
    for prec in precision_ladder(cap_bits):
        try:
            lo, hi = x.bounds(prec)
        except _Unresolved:
            continue
        low, high = math.floor(lo + HALF), math.floor(hi + HALF)
        if low == high:
            return low
    expr = x.symbolic
    if expr is not None:
        return int(sympy.floor(expr + sympy.Rational(1, 2)))
    raise PrecisionExhausted(f"nearest integer of {x!r} undecided at cap", left=repr(x), bits=cap_bits or _precision_cap)


def distance_to_integers(x, cap_bits: Optional[int] = None) -> Tuple[CertReal, int]:
    """dist(x, Z) certificado junto con el entero que la realiza"""
    x = as_cert(x)
    p = nearest_integer(x, cap_bits)
    return abs(x - p), p


def certify_power_bound(residual, T: Fraction, omega: Fraction, cap_bits: Optional[int] = None) -> bool:
    """Decide residual < T^(-omega) mediante logaritmos certificados; False si no se certifica"""
    residual = as_cert(residual)
    T, omega = Fraction(T), Fraction(omega)
    if T <= 1:
        raise PreconditionViolation(f"power bounds need T > 1, got {T}")
    if residual.is_exact and residual.exact == 0:
        return True
    if residual.is_exact and omega.denominator == 1:
        return residual.exact < T ** (-omega.numerator)
    for prec in precision_ladder(cap_bits):
        try:
            res_lo, res_hi = residual.log_bounds(prec)
        except _Unresolved:
            continue
        t_lo, t_hi = log_enclosure(T, T, prec)
        rhs_lo = -omega * (t_hi if omega >= 0 else t_lo)
        rhs_hi = -omega * (t_lo if omega >= 0 else t_hi)
        if res_hi < rhs_lo:
            return True
        if res_lo >= rhs_hi:
            return False
    return False


def log_float(x) -> float:
    """log natural en coma flotante (-inf para el cero exacto)"""
    x = as_cert(x)
    if x.is_exact:
        if x.exact == 0:
            return NEG_INF
        return math.log(x.exact.numerator) - math.log(x.exact.denominator)
    for prec in precision_ladder():
        try:
            lo, hi = x.log_bounds(prec)
            return float((lo + hi) / 2)
        except _Unresolved:
            continue
    return NEG_INF


def rational_floor(value: float, denominator: int = 1 << 16) -> Fraction:
    """Racional de la malla 1/denominator inmediatamente por debajo de value"""
    return Fraction(math.floor(value * denominator) - 1, denominator)


# ---------------------------------------------------------------------------
# Racionales extendidos
# ---------------------------------------------------------------------------

def is_infinite(x: ExtendedRational) -> bool:
    return isinstance(x, float) and math.isinf(x)


def ext_reciprocal(x: ExtendedRational) -> ExtendedRational:
    if is_infinite(x):
        return Fraction(0)
    x = Fraction(x)
    if x == 0:
        return INFINITY
    return 1 / x


def parse_extended(token) -> ExtendedRational:
    if isinstance(token, (Fraction, int)):
        return Fraction(token)
    if isinstance(token, float):
        return INFINITY if math.isinf(token) else Fraction(token)
    text = str(token).strip().lower()
    if text in ("inf", "+inf", "infinity", "oo", "∞"):
        return INFINITY
    try:
        return Fraction(text)
    except ValueError:
        raise InstanceParseError(f"not an extended rational: {token!r}")


def render_extended(x: ExtendedRational) -> str:
    return "inf" if is_infinite(x) else str(Fraction(x))


# ---------------------------------------------------------------------------
# Pesos y valores ponderados
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightVector:
    """Pesos positivos que suman exactamente 1 (los s o r de las cuasinormas)"""
    weights: Tuple[Fraction, ...]

    def __post_init__(self):
        weights = tuple(Fraction(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        if not weights:
            raise PreconditionViolation("weight vector must be nonempty")
        if any(w <= 0 for w in weights):
            raise PreconditionViolation(f"weights must be strictly positive: {[str(w) for w in weights]}")
        if sum(weights) != 1:
            raise PreconditionViolation(f"weights must sum to 1, got {sum(weights)}")

    @classmethod
    def uniform(cls, dim: int) -> "WeightVector":
        return cls(tuple(Fraction(1, dim) for _ in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.weights)

    @property
    def rho(self) -> Fraction:
        return max(self.weights)

    @property
    def delta(self) -> Fraction:
        return min(self.weights)

    @property
    def is_uniform(self) -> bool:
        return len(set(self.weights)) == 1

    @property
    def key_power(self) -> int:
        """L = mcm de los numeradores: N^L es entero para todo vector entero"""
        return reduce(math.lcm, (w.numerator for w in self.weights), 1)

    @property
    def key_exponents(self) -> Tuple[int, ...]:
        power = self.key_power
        return tuple(w.denominator * power // w.numerator for w in self.weights)

    def norm_key(self, x: Sequence[int]) -> int:
        """N(x)^L = max |x_i|^(L/s_i), entero exacto"""
        return max(abs(int(xi)) ** e for xi, e in zip(x, self.key_exponents))

    def box_radii(self, bound, strict: bool = False) -> List[int]:
        """Radios enteros c_i con {x : N(x) <= B} = prod [-c_i, c_i] (o < B si strict)"""
        bound = Fraction(bound)
        if bound <= 0:
            return [-1 if strict else 0] * self.dim
        target = bound ** self.key_power
        limit = math.floor(target)
        if strict and limit == target:
            limit -= 1
        radii = []
        for e in self.key_exponents:
            if limit < 0:
                radii.append(-1)
                continue
            root, _ = sympy.integer_nthroot(limit, e)
            radii.append(int(root))
        return radii

    def render(self) -> List[str]:
        return [str(w) for w in self.weights]


@dataclass(frozen=True)
class WeightedValue:
    """Valor no negativo certificado con su logaritmo (log 0 = -inf)"""
    value: CertReal

    def __post_init__(self):
        object.__setattr__(self, "value", as_cert(self.value))

    @classmethod
    def of(cls, value) -> "WeightedValue":
        return cls(as_cert(value))

    @property
    def is_zero(self) -> bool:
        return self.value.is_exact and self.value.exact == 0

    def log_value(self, prec: Optional[int] = None) -> Tuple[Union[Fraction, float], Union[Fraction, float]]:
        if self.is_zero:
            return NEG_INF, NEG_INF
        for p in precision_ladder(prec):
            try:
                return self.value.log_bounds(p)
            except _Unresolved:
                continue
        raise PrecisionExhausted(f"log of {self.value!r} undecided at cap", left=repr(self.value))

    def log_float(self) -> float:
        return NEG_INF if self.is_zero else log_float(self.value)

    def __float__(self) -> float:
        return float(self.value)

    def render(self) -> str:
        if self.value.is_exact:
            return str(self.value.exact)
        return f"{float(self.value):.17g}"

    def enclosure(self, prec: int = 128) -> Tuple[str, str]:
        lo, hi = self.value.bounds(prec)
        return str(lo), str(hi)


def weighted_norm(x: Sequence, w: WeightVector) -> WeightedValue:
    """||x||_w = max_i |x_i|^(1/w_i)"""
    if len(x) != w.dim:
        raise PreconditionViolation(f"dimension mismatch: vector of length {len(x)} with {w.dim} weights")
    terms = [abs(as_cert(xi)).power(1 / wi) for xi, wi in zip(x, w.weights)]
    return WeightedValue(CertReal.maximum(terms))


def integer_weighted_norm(x: Sequence[int], w: WeightVector) -> WeightedValue:
    """Norma ponderada de un vector entero vía su clave exacta N^L"""
    return WeightedValue(CertReal.rational(w.norm_key(x)).power(Fraction(1, w.key_power)))


def mult_norms(q: Sequence[int], y: Sequence) -> Tuple[WeightedValue, WeightedValue]:
    """(Pi_+(q), Pi(y)) = (prod max(1, |q_j|), prod |y_i|)"""
    pi_plus = math.prod(max(1, abs(int(qj))) for qj in q)
    pi = CertReal.rational(1)
    for yi in y:
        pi = pi * abs(as_cert(yi))
    return WeightedValue(CertReal.rational(pi_plus)), WeightedValue(pi)


def compare(a: WeightedValue, b: WeightedValue, cap_bits: Optional[int] = None) -> Ordering:
    return compare_reals(a.value, b.value, cap_bits)


# ---------------------------------------------------------------------------
# Lectura de tokens
# ---------------------------------------------------------------------------

_CALL = re.compile(r"^(?P<name>[a-z_]+)\((?P<args>[^()]*)\)$")


def parse_rational(token) -> Fraction:
    try:
        return Fraction(str(token).strip())
    except (ValueError, ZeroDivisionError):
        raise InstanceParseError(f"not a rational literal: {token!r}")


def parse_real(token) -> CertReal:
    """
    Interpreta "p/q", decimales, "sqrt(a)", "root(a,k)", "phi",
    "liouville(base)", "liouville(digit,base)" y "quad(a,b,c)" = a + b*sqrt(c)
    """
    if isinstance(token, CertReal):
        return token
    text = str(token).strip().replace(" ", "").lower()
    if not text:
        raise InstanceParseError("empty real token")
    if text.startswith("-"):
        return -parse_real(text[1:])
    if text in ("phi", "golden"):
        return CertReal.golden_ratio()
    match = _CALL.match(text)
    if match is None:
        return CertReal.rational(parse_rational(text))
    name, args = match.group("name"), [a for a in match.group("args").split(",") if a]
    try:
        if name == "sqrt" and len(args) == 1:
            return CertReal.root(parse_rational(args[0]), 2)
        if name == "root" and len(args) == 2:
            return CertReal.root(parse_rational(args[0]), int(args[1]))
        if name == "liouville" and len(args) == 1:
            return CertReal.liouville(base=int(args[0]))
        if name == "liouville" and len(args) == 2:
            return CertReal.liouville(base=int(args[1]), digit=int(args[0]))
        if name == "quad" and len(args) == 3:
            value = parse_rational(args[0]) + parse_rational(args[1]) * CertReal.root(parse_rational(args[2]))
            return value.named(text)
    except ValueError:
        raise InstanceParseError(f"bad arguments in {token!r}")
    raise InstanceParseError(f"unknown constant token: {token!r}")


def parse_weights(token, dim: int) -> WeightVector:
    """"uniform" o racionales separados por comas"""
    text = str(token).strip().lower()
    if text in ("", "uniform"):
        return WeightVector.uniform(dim)
    parts = [p for p in re.split(r"[,\s]+", text) if p]
    if len(parts) != dim:
        raise InstanceParseError(f"expected {dim} weights, got {len(parts)} in {token!r}")
    return WeightVector(tuple(parse_rational(p) for p in parts))


def parse_weight_pair(token, m: int, n: int) -> Tuple[WeightVector, WeightVector]:
    """"s;r" o el preset "w(s;r)"; "uniform" da pesos uniformes en ambos lados"""
    text = str(token).strip().lower()
    if text in ("", "uniform"):
        return WeightVector.uniform(m), WeightVector.uniform(n)
    if text.startswith("w(") and text.endswith(")"):
        text = text[2:-1]
    if ";" not in text:
        raise InstanceParseError(f"weight pair must look like 's;r', got {token!r}")
    left, right = text.split(";", 1)
    return parse_weights(left, m), parse_weights(right, n)
