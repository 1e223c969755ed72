"""
Tipos de datos compartidos por los servicios del toolkit
Dataclasses inmutables, Enums de estado y alias Literal
"""
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np

from app.core import config
from app.core.errors import PreconditionViolation
from app.core.numerics import (
    CertReal,
    ExtendedRational,
    WeightedValue,
    WeightVector,
    as_cert,
    is_infinite,
)

# Alias de dominio
ExponentMode = Literal["ordinary", "uniform"]
NormKind = Literal["weighted", "multiplicative", "exterior"]
ShiftKind = Literal["homogeneous", "inhomogeneous"]
Direction = Literal["forward", "backward"]
Selector = Literal["first", "random"]
TieBreak = Literal["lex", "revlex"]
ReportFormat = Literal["json", "csv"]


class Verdict(str, Enum):
    """Veredicto de un validador empírico"""
    CONSISTENT = "consistent"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


class RankStatus(str, Enum):
    MAXIMAL = "maximal"
    DEGENERATE = "degenerate"
    UNDECIDED = "undecided"


class MahlerStatus(str, Enum):
    CONFIRMED = "confirmed"
    PRECONDITION_VIOLATED = "precondition_violated"
    FALSIFIED = "falsified"


# ---------------------------------------------------------------------------
# Configuración de servicios
# ---------------------------------------------------------------------------

@dataclass
class EnumerationConfig:
    """Presupuesto y precisión de las enumeraciones exhaustivas"""
    budget: int = config.ENUMERATION_BUDGET
    precision_bits: int = config.PRECISION_CAP_BITS
    chunk_size: int = 1 << 16

    def __post_init__(self):
        if self.budget <= 0:
            raise PreconditionViolation("enumeration budget must be positive")
        if self.chunk_size <= 0:
            self.chunk_size = 1 << 16


@dataclass
class GridConfig:
    """Malla geométrica de escalas T y tope de exponentes"""
    tmin: Fraction = config.TGRID_MIN
    tmax: Fraction = config.TGRID_MAX
    ratio: Fraction = config.TGRID_RATIO
    cap: Fraction = config.EXPONENT_CAP
    truncation_slack: float = config.TRUNCATION_SLACK

    def __post_init__(self):
        self.tmin, self.tmax, self.ratio = Fraction(self.tmin), Fraction(self.tmax), Fraction(self.ratio)
        self.cap = Fraction(self.cap)
        if self.tmin <= 1 or self.tmax <= self.tmin or self.ratio <= 1:
            raise PreconditionViolation(f"invalid T-grid [{self.tmin}, {self.tmax}] ratio {self.ratio}")

    def points(self) -> List[Fraction]:
        values, t = [], self.tmin
        while t <= self.tmax:
            values.append(t)
            t = t * self.ratio
        return values

    @property
    def log_step(self) -> float:
        return float(np.log(float(self.ratio)))


@dataclass
class SamplingConfig:
    """Muestreo de desplazamientos theta"""
    count: int = config.THETA_SAMPLES
    seed: int = config.DEFAULT_SEED
    tolerance: float = config.TOLERANCE_BAND

    def __post_init__(self):
        if self.count <= 0:
            raise PreconditionViolation("theta sample count must be positive")


# ---------------------------------------------------------------------------
# Matrices objetivo
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TargetMatrix:
    """Matriz m x n de reales certificados (la A de las definiciones)"""
    rows: Tuple[Tuple[CertReal, ...], ...]
    label: str = ""

    def __post_init__(self):
        rows = tuple(tuple(as_cert(x) for x in row) for row in self.rows)
        if not rows or not rows[0] or any(len(row) != len(rows[0]) for row in rows):
            raise PreconditionViolation("target matrix must be a nonempty rectangular array")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def of(cls, rows: Sequence[Sequence], label: str = "") -> "TargetMatrix":
        return cls(tuple(tuple(row) for row in rows), label)

    @classmethod
    def scalar(cls, value, label: str = "") -> "TargetMatrix":
        value = as_cert(value)
        return cls(((value,),), label or repr(value))

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.rows[0])

    def entry(self, i: int, j: int) -> CertReal:
        return self.rows[i][j]

    def transpose(self) -> "TargetMatrix":
        label = self.label[2:-1] if self.label.startswith("t(") else f"t({self.label})"
        return TargetMatrix(tuple(tuple(self.rows[i][j] for i in range(self.m)) for j in range(self.n)), label)

    @property
    def is_rational(self) -> bool:
        return all(x.is_exact for row in self.rows for x in row)

    def as_fractions(self) -> List[List[Fraction]]:
        if not self.is_rational:
            raise PreconditionViolation("matrix has irrational entries")
        return [[x.exact for x in row] for row in self.rows]

    def to_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.rows], dtype=float)

    def apply(self, q: Sequence[int], shift: Optional[Sequence] = None) -> List[CertReal]:
        """A q - shift (vector de longitud m)"""
        shift = shift if shift is not None else [0] * self.m
        return [CertReal.dot(row, q, -as_cert(t)) for row, t in zip(self.rows, shift)]

    def render(self) -> List[List[str]]:
        return [[repr(x) for x in row] for row in self.rows]


# ---------------------------------------------------------------------------
# Retículos
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParametrizedStructure:
    """Parámetros de Lambda(Q, T, A) (o de su dual) cuando el retículo viene de ahí"""
    A: TargetMatrix
    Q: CertReal
    T: CertReal
    s: WeightVector
    r: WeightVector
    dual: bool = False


@dataclass(frozen=True)
class LatticeBasis:
    """Base de un retículo completo: las columnas de `basis` generan el retículo"""
    basis: Tuple[Tuple[CertReal, ...], ...]
    det: CertReal
    structure: Optional[ParametrizedStructure] = None
    label: str = ""

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def is_rational(self) -> bool:
        return all(x.is_exact for row in self.basis for x in row)

    def as_fractions(self) -> List[List[Fraction]]:
        return [[x.exact for x in row] for row in self.basis]

    def generator(self, j: int) -> Tuple[CertReal, ...]:
        return tuple(row[j] for row in self.basis)

    def point(self, coords: Sequence[int]) -> Tuple[CertReal, ...]:
        return tuple(CertReal.dot(row, coords) for row in self.basis)

    def to_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.basis], dtype=float)


@dataclass(frozen=True)
class WeightedBox:
    """Caja alineada con los ejes: centro y semianchos positivos"""
    center: Tuple[CertReal, ...]
    half_widths: Tuple[CertReal, ...]

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(as_cert(c) for c in self.center))
        object.__setattr__(self, "half_widths", tuple(as_cert(h) for h in self.half_widths))
        if len(self.center) != len(self.half_widths):
            raise PreconditionViolation("box center and half-widths differ in dimension")

    @classmethod
    def symmetric(cls, half_widths: Sequence) -> "WeightedBox":
        return cls(tuple(CertReal.rational(0) for _ in half_widths), tuple(half_widths))

    @classmethod
    def unit(cls, dim: int) -> "WeightedBox":
        return cls.symmetric([1] * dim)

    @classmethod
    def weighted_ball(cls, w: WeightVector, T) -> "WeightedBox":
        """Bola {x : ||x||_w <= T}, caja de semianchos T^(w_i)"""
        T = as_cert(T)
        return cls.symmetric([T.power(wi) for wi in w.weights])

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def is_symmetric(self) -> bool:
        return all(c.is_exact and c.exact == 0 for c in self.center)

    def scaled(self, factor) -> "WeightedBox":
        factor = as_cert(factor)
        return WeightedBox(self.center, tuple(h * factor for h in self.half_widths))

    def translated(self, shift: Sequence) -> "WeightedBox":
        return WeightedBox(tuple(c + as_cert(g) for c, g in zip(self.center, shift)), self.half_widths)


@dataclass(frozen=True)
class CrossPolytope:
    """Cuerpo polar de una caja simétrica: {y : sum h_i |y_i| <= 1}"""
    box_half_widths: Tuple[CertReal, ...]

    @property
    def dim(self) -> int:
        return len(self.box_half_widths)


@dataclass(frozen=True)
class LatticePoint:
    coords: Tuple[int, ...]
    vector: Tuple[CertReal, ...]


@dataclass(frozen=True)
class SuccessiveMinima:
    values: Tuple[CertReal, ...]
    witnesses: Tuple[LatticePoint, ...]


@dataclass
class MahlerReport:
    """Resultado de la comprobación de transferencia de Mahler"""
    status: MahlerStatus
    dim: int
    constant: CertReal
    nonzero_witness: Optional[LatticePoint] = None
    shift_witnesses: List[Dict[str, Any]] = field(default_factory=list)
    failures: List[Dict[str, Any]] = field(default_factory=list)
    precondition_witness: Optional[LatticePoint] = None


@dataclass
class DualBoundReport:
    """mu_1(L, B) * mu_d(L*, B*) frente a las cotas [1, d!]"""
    dim: int
    mu_first: CertReal
    mu_last_dual: CertReal
    product: float
    lower_bound_holds: bool
    upper_bound_holds: bool
    strict_dual_bound: Optional[bool]


@dataclass
class MinkowskiReport:
    dim: int
    minima: Tuple[CertReal, ...]
    normalized_product: float
    lower: Fraction
    upper: Fraction
    holds: bool


# ---------------------------------------------------------------------------
# Mejores aproximaciones
# ---------------------------------------------------------------------------

@dataclass
class RankReport:
    status: RankStatus
    witness: Optional[Tuple[int, ...]] = None
    height_bound: int = 0
    method: str = ""


@dataclass(frozen=True)
class BestApproxEntry:
    """(X_k, Y_k = N(X_k), M_k = L(X_k), p_k)"""
    X: Tuple[int, ...]
    Y: WeightedValue
    M: WeightedValue
    p_witness: Tuple[int, ...]
    key: int


@dataclass
class BestApproxSequence:
    entries: List[BestApproxEntry]
    exhausted_up_to: Fraction
    s: WeightVector
    r: WeightVector
    target: str = ""
    m0: Optional[WeightedValue] = None
    tie_break: TieBreak = "lex"
    candidates_examined: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def Y_values(self) -> List[float]:
        return [float(e.Y) for e in self.entries]

    @property
    def M_values(self) -> List[float]:
        return [float(e.M) for e in self.entries]

    @property
    def log_Y(self) -> np.ndarray:
        return np.array([e.Y.log_float() for e in self.entries], dtype=float)

    @property
    def log_M(self) -> np.ndarray:
        return np.array([e.M.log_float() for e in self.entries], dtype=float)


@dataclass
class SequenceCheck:
    monotone: bool
    minimal: bool
    checked_points: int
    violations: List[Dict[str, Any]] = field(default_factory=list)


@dataclass
class GrowthReport:
    delta: Fraction
    U: int
    V: int
    c: float
    gamma: float
    fitted_gamma: float
    checked_pairs: int
    violations: List[int] = field(default_factory=list)


@dataclass
class SubsequenceMap:
    """Índices (base 0) de la subsucesión con crecimiento >= R"""
    indices: Tuple[int, ...]
    R: Fraction
    truncated: bool
    violations: List[Dict[str, Any]] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Exponentes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentKind:
    mode: ExponentMode = "ordinary"
    norm: NormKind = "weighted"
    shift: ShiftKind = "homogeneous"

    @property
    def label(self) -> str:
        return f"{self.mode}/{self.norm}/{self.shift}"


@dataclass(frozen=True)
class Witness:
    """(T, p, q) con la desigualdad verificada para el exponente indicado"""
    T: Union[Fraction, str]
    p: Union[Tuple[int, ...], str]
    q: Union[Tuple[int, ...], str]
    exponent: Fraction
    source: str = "enumeration"


@dataclass(frozen=True)
class ScalePoint:
    """Mejor residuo D(T) en una escala de la malla"""
    T: Fraction
    residual: float
    omega: float
    q: Tuple[int, ...]


@dataclass
class ExponentEstimate:
    kind: ExponentKind
    lower_bound: Fraction
    point_estimate: float
    T_range: Tuple[Union[Fraction, str], Union[Fraction, str]]
    witnesses: List[Witness] = field(default_factory=list)
    capped: bool = False
    slack: float = 0.0
    method: str = ""
    profile: List[ScalePoint] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Transferencia
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DysonBoundInput:
    m: int
    n: int
    s: WeightVector
    r: WeightVector
    omega: ExtendedRational

    def __post_init__(self):
        if self.s.dim != self.m or self.r.dim != self.n:
            raise PreconditionViolation(f"weights must have lengths m={self.m}, n={self.n}")

    @property
    def below_dirichlet(self) -> bool:
        return not is_infinite(self.omega) and Fraction(self.omega) < 1


@dataclass(frozen=True)
class PowerLaw:
    """Función decreciente T -> coefficient * T^(-exponent)"""
    coefficient: Fraction
    exponent: Fraction

    def __post_init__(self):
        object.__setattr__(self, "coefficient", Fraction(self.coefficient))
        object.__setattr__(self, "exponent", Fraction(self.exponent))
        if self.coefficient <= 0 or self.exponent <= 0:
            raise PreconditionViolation("power law needs positive coefficient and exponent")

    def __call__(self, T) -> CertReal:
        return as_cert(T).power(-self.exponent) * self.coefficient

    def render(self) -> str:
        return f"{self.coefficient}*T^(-{self.exponent})"


@dataclass
class TransferReport:
    instance: str
    bound: Any
    estimates: Dict[str, Any]
    slack: float
    verdict: Verdict
    samples: List[Dict[str, Any]] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Álgebra exterior
# ---------------------------------------------------------------------------

Scalar = Union[Fraction, CertReal]


@lru_cache(maxsize=None)
def basis_subsets(n: int, k: int) -> Tuple[Tuple[int, ...], ...]:
    """k-subconjuntos de {0, ..., n-1} en orden lexicográfico"""
    return tuple(combinations(range(n), k))


@lru_cache(maxsize=None)
def subset_position(n: int, k: int) -> Dict[Tuple[int, ...], int]:
    return {subset: i for i, subset in enumerate(basis_subsets(n, k))}


@dataclass(frozen=True)
class Multivector:
    """Elemento de grado k de Lambda(R^n) en la base e_I, I ordenados lexicográficamente"""
    n: int
    k: int
    coeffs: Tuple[Scalar, ...]

    def __post_init__(self):
        if not 0 <= self.k <= self.n:
            raise PreconditionViolation(f"grade {self.k} out of range for ambient dimension {self.n}")
        coeffs = tuple(c if isinstance(c, CertReal) else Fraction(c) for c in self.coeffs)
        if len(coeffs) != len(basis_subsets(self.n, self.k)):
            raise PreconditionViolation(
                f"grade-{self.k} multivector in dimension {self.n} needs {len(basis_subsets(self.n, self.k))} coefficients")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zero(cls, n: int, k: int) -> "Multivector":
        return cls(n, k, tuple(Fraction(0) for _ in basis_subsets(n, k)))

    @classmethod
    def basis(cls, n: int, subset: Sequence[int]) -> "Multivector":
        subset = tuple(sorted(subset))
        position = subset_position(n, len(subset))[subset]
        coeffs = [Fraction(0)] * len(basis_subsets(n, len(subset)))
        coeffs[position] = Fraction(1)
        return cls(n, len(subset), tuple(coeffs))

    @classmethod
    def vector(cls, values: Sequence) -> "Multivector":
        return cls(len(values), 1, tuple(values))

    @property
    def subsets(self) -> Tuple[Tuple[int, ...], ...]:
        return basis_subsets(self.n, self.k)

    @property
    def is_exact(self) -> bool:
        return all(not isinstance(c, CertReal) or c.is_exact for c in self.coeffs)

    def exact_coeffs(self) -> Tuple[Fraction, ...]:
        if not self.is_exact:
            raise PreconditionViolation("multivector has irrational coefficients")
        return tuple(c.exact if isinstance(c, CertReal) else c for c in self.coeffs)

    def is_integral(self) -> bool:
        return self.is_exact and all(c.denominator == 1 for c in self.exact_coeffs())

    def is_zero(self) -> bool:
        return self.is_exact and not any(self.exact_coeffs())

    def _combine(self, other: "Multivector", sign: int) -> "Multivector":
        if (self.n, self.k) != (other.n, other.k):
            raise PreconditionViolation(f"grade mismatch: ({self.n}, {self.k}) vs ({other.n}, {other.k})")
        return Multivector(self.n, self.k, tuple(a + sign * b for a, b in zip(self.coeffs, other.coeffs)))

    def __add__(self, other: "Multivector") -> "Multivector":
        return self._combine(other, 1)

    def __sub__(self, other: "Multivector") -> "Multivector":
        return self._combine(other, -1)

    def __neg__(self) -> "Multivector":
        return Multivector(self.n, self.k, tuple(-c for c in self.coeffs))

    def scaled(self, factor) -> "Multivector":
        if isinstance(factor, CertReal):
            return Multivector(self.n, self.k, tuple(factor * c for c in self.coeffs))
        factor = Fraction(factor)
        return Multivector(self.n, self.k, tuple(c * factor for c in self.coeffs))

    def render(self) -> Dict[str, Any]:
        return {"n": self.n, "k": self.k, "coeffs": [repr(c) if isinstance(c, CertReal) else str(c) for c in self.coeffs]}


@dataclass(frozen=True)
class LiftedPoint:
    """alpha en R^n y su levantamiento alpha' = (1, alpha) en R^(n+1)"""
    alpha: Tuple[CertReal, ...]

    def __post_init__(self):
        if not self.alpha:
            raise PreconditionViolation("lifted point needs at least one coordinate")
        object.__setattr__(self, "alpha", tuple(as_cert(a) for a in self.alpha))

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def alpha_prime(self) -> Tuple[CertReal, ...]:
        return (CertReal.rational(1),) + self.alpha

    def as_multivector(self, lifted: bool = True) -> Multivector:
        values = self.alpha_prime if lifted else self.alpha
        if all(v.is_exact for v in values):
            return Multivector.vector([v.exact for v in values])
        return Multivector.vector(values)


@dataclass(frozen=True)
class RationalSubspace:
    """Subespacio proyectivo racional de dimensión d: coordenadas de Plücker primitivas y altura"""
    d: int
    pluecker: Multivector
    height: int
    basis: Tuple[Tuple[Fraction, ...], ...] = ()

    def __post_init__(self):
        if self.pluecker.k != self.d + 1 or not self.pluecker.is_integral() or self.pluecker.is_zero():
            raise PreconditionViolation("Plücker vector must be a nonzero integral multivector of grade d+1")
        if self.height < 1:
            raise PreconditionViolation("subspace height must be at least 1")

    def render(self) -> Dict[str, Any]:
        return {
            "d": self.d,
            "basis": [[str(x) for x in v] for v in self.basis],
            "pluecker": self.pluecker.render(),
            "height": self.height,
        }


@dataclass
class EquivalenceReport:
    """Descomposición X = e_0 ^ Z - Y y las cuatro desigualdades de comparación"""
    X: Multivector
    Z: Multivector
    Y: Multivector
    norms_squared: Dict[str, Any]
    checks: Dict[str, Optional[bool]]

    @property
    def holds(self) -> bool:
        return all(value is not False for value in self.checks.values())


@dataclass
class CollapseReport:
    d: int
    mode: ExponentMode
    intermediate: ExponentEstimate
    reference: ExponentEstimate
    difference: float
    tolerance: float

    @property
    def agrees(self) -> bool:
        return self.difference <= self.tolerance


# ---------------------------------------------------------------------------
# Construcción de Cantor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CantorLevel:
    k: int
    Y: float
    children: int
    survivors: int
    survivor_bound: int
    children_bound: int


@dataclass
class CantorState:
    """Traza del descenso: punto final y conteos por nivel"""
    theta: Tuple[Fraction, ...]
    box_sides: Tuple[Fraction, ...]
    alpha: Fraction
    R: Fraction
    c: Fraction
    selector: Selector
    levels: List[CantorLevel] = field(default_factory=list)


@dataclass
class BadCertificate:
    theta: Tuple[Fraction, ...]
    depth: int
    alpha: Fraction
    epsilon: CertReal
    R: Fraction
    check_bound: Fraction
    window_pass: bool
    levels: List[CantorLevel] = field(default_factory=list)
    subsequence: Tuple[int, ...] = ()
    min_product: float = 0.0
    worst_pair: Optional[Dict[str, Any]] = None
    pairs_checked: int = 0
    proof_covered_bound: float = 0.0
    caveats: List[str] = field(default_factory=list)


@dataclass
class WindowCheck:
    """min ||p||_s ||^tA p - q - theta||_r sobre 0 < ||p||_s <= check_bound"""
    passed: bool
    epsilon: CertReal
    check_bound: Fraction
    min_product: float
    worst_pair: Optional[Dict[str, Any]] = None
    pairs_checked: int = 0
    undecided: int = 0


@dataclass
class BorelCantelliReport:
    eta: Fraction
    epsilon: Fraction
    sample_count: int
    seed: int
    levels: List[Dict[str, Any]] = field(default_factory=list)
    bound_sum: float = 0.0
    tail_free_fraction: float = 0.0
    theta_counts: List[Dict[str, Any]] = field(default_factory=list)
