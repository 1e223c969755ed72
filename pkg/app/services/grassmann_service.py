"""
GrassmannService - Álgebra exterior y exponentes intermedios
Productos exteriores exactos, distancias proyectivas, alturas de subespacios
racionales y aproximación de un punto por subespacios de dimensión d
"""
import logging
import math
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from sympy import integer_nthroot

from app.core import config
from app.core.errors import BudgetExceeded, InsufficientData, PrecisionExhausted, PreconditionViolation
from app.core.numerics import (
    CertReal,
    Ordering,
    as_cert,
    certify_power_bound,
    compare_reals,
    distance_to_integers,
    ext_reciprocal,
    render_extended,
    sign,
)
from app.services.bestapprox_service import canonical_mask, product_chunks
from app.services.exponent_service import ExponentService
from app.services.transference_service import (
    INCONCLUSIVE_ERRORS,
    TransferenceService,
    measured_value,
    summarize_estimate,
)
from app.services.types import (
    CollapseReport,
    EquivalenceReport,
    ExponentEstimate,
    ExponentKind,
    ExponentMode,
    LiftedPoint,
    Multivector,
    RationalSubspace,
    ScalePoint,
    TargetMatrix,
    TransferReport,
    Verdict,
    Witness,
    basis_subsets,
    subset_position,
)

logger = logging.getLogger("grassmann_service")

Scalar = Union[Fraction, CertReal]


def _is_zero(x: Scalar) -> bool:
    if isinstance(x, CertReal):
        return x.is_exact and x.exact == 0
    return x == 0


@lru_cache(maxsize=None)
def _wedge_table(n: int, j: int, k: int) -> Tuple[Tuple[int, int, int, int], ...]:
    """(índice en grado j, índice en grado k, índice en grado j+k, signo) para e_I ^ e_J"""
    target = subset_position(n, j + k)
    table = []
    for a, I in enumerate(basis_subsets(n, j)):
        for b, J in enumerate(basis_subsets(n, k)):
            if set(I) & set(J):
                continue
            inversions = sum(1 for i in I for jj in J if i > jj)
            table.append((a, b, target[tuple(sorted(I + J))], -1 if inversions % 2 else 1))
    return tuple(table)


def wedge(u: Multivector, v: Multivector) -> Multivector:
    """u ^ v con la bilinealidad y los signos de la base lexicográfica"""
    if u.n != v.n:
        raise PreconditionViolation(f"ambient dimensions differ: {u.n} vs {v.n}")
    if u.k + v.k > u.n:
        raise PreconditionViolation(f"grade overflow: {u.k} + {v.k} > {u.n}")
    out: List[Scalar] = [Fraction(0)] * len(basis_subsets(u.n, u.k + v.k))
    for a, b, c, sgn in _wedge_table(u.n, u.k, v.k):
        x, y = u.coeffs[a], v.coeffs[b]
        if _is_zero(x) or _is_zero(y):
            continue
        out[c] = out[c] + (x * y if sgn > 0 else -(x * y))
    return Multivector(u.n, u.k + v.k, tuple(out))


def wedge_vectors(vectors: Sequence[Sequence]) -> Multivector:
    """v_1 ^ ... ^ v_k"""
    if not vectors:
        raise PreconditionViolation("wedge of an empty family")
    return reduce(wedge, [Multivector.vector(v) for v in vectors])


def embed(u: Multivector, shift: int = 1) -> Multivector:
    """Copia de u en R^(n+shift) sobre los ejes e_shift, ..., e_(n+shift-1)"""
    n = u.n + shift
    position = subset_position(n, u.k)
    coeffs: List[Scalar] = [Fraction(0)] * len(basis_subsets(n, u.k))
    for subset, c in zip(u.subsets, u.coeffs):
        coeffs[position[tuple(i + shift for i in subset)]] = c
    return Multivector(n, u.k, tuple(coeffs))


def norm_squared(u: Multivector) -> Scalar:
    """|u|^2 exacto cuando los coeficientes lo son"""
    return mv_inner_exact(u, u)


def mv_inner_exact(u: Multivector, v: Multivector) -> Scalar:
    if (u.n, u.k) != (v.n, v.k):
        raise PreconditionViolation(f"grade mismatch: ({u.n}, {u.k}) vs ({v.n}, {v.k})")
    total: Scalar = Fraction(0)
    for x, y in zip(u.coeffs, v.coeffs):
        if not (_is_zero(x) or _is_zero(y)):
            total = total + x * y
    return total


def mv_inner(u: Multivector, v: Multivector) -> CertReal:
    return as_cert(mv_inner_exact(u, v))


def mv_norm(u: Multivector) -> CertReal:
    return as_cert(norm_squared(u)).power(Fraction(1, 2))


def gram_inner(us: Sequence[Sequence], vs: Sequence[Sequence]) -> Fraction:
    """<u_1 ^ ... ^ u_k, v_1 ^ ... ^ v_k> = det(<u_i, v_j>) para vectores racionales"""
    if len(us) != len(vs):
        raise PreconditionViolation("Gram determinant needs families of equal size")
    gram = sympy.Matrix([[_rational(sum(Fraction(a) * Fraction(b) for a, b in zip(u, v))) for v in vs] for u in us])
    det = sympy.Rational(gram.det())
    return Fraction(int(det.p), int(det.q))


def _rational(x: Fraction) -> sympy.Rational:
    return sympy.Rational(x.numerator, x.denominator)


def _sqrt_ratio(numerator: Scalar, denominator: Scalar) -> CertReal:
    return (as_cert(numerator) / as_cert(denominator)).power(Fraction(1, 2))


def _leq(a: Scalar, b: Scalar) -> Optional[bool]:
    """a <= b certificado; None si la precisión no alcanza"""
    try:
        return compare_reals(a, b) != Ordering.GREATER
    except PrecisionExhausted:
        return None


def _rational_point(alpha: LiftedPoint, width: Fraction = Fraction(1, 1 << 40)) -> Tuple[Fraction, ...]:
    values = []
    for a in alpha.alpha:
        if a.is_exact:
            values.append(a.exact)
        else:
            lo, hi = a.enclose(width)
            values.append((lo + hi) / 2)
    return tuple(values)


def projective_distance(x: Sequence, y: Sequence) -> CertReal:
    """d(P, Q) = |x ^ y| / (|x| |y|), en [0, 1]"""
    if len(x) != len(y):
        raise PreconditionViolation("projective distance needs vectors of the same dimension")
    u, v = Multivector.vector(x), Multivector.vector(y)
    nu, nv = norm_squared(u), norm_squared(v)
    if sign(nu) == 0 or sign(nv) == 0:
        raise PreconditionViolation("projective distance is undefined for the zero vector")
    return _sqrt_ratio(norm_squared(wedge(u, v)), as_cert(nu) * nv)


def primitive_pluecker(X: Multivector) -> Multivector:
    """Múltiplo entero primitivo de X con la primera coordenada no nula positiva"""
    coeffs = X.exact_coeffs()
    if not any(coeffs):
        raise PreconditionViolation("zero Plücker vector")
    scale = math.lcm(*[c.denominator for c in coeffs])
    ints = [int(c * scale) for c in coeffs]
    g = math.gcd(*ints)
    ints = [v // g for v in ints]
    leading = next(v for v in ints if v != 0)
    if leading < 0:
        ints = [-v for v in ints]
    return Multivector(X.n, X.k, tuple(ints))


def subspace_from_basis(basis: Sequence[Sequence]) -> RationalSubspace:
    """Subespacio proyectivo generado por vectores racionales de Q^(n+1)"""
    vectors = tuple(tuple(Fraction(x) for x in v) for v in basis)
    X = wedge_vectors(vectors)
    if X.is_zero():
        raise PreconditionViolation("basis vectors are linearly dependent")
    P = primitive_pluecker(X)
    return RationalSubspace(len(vectors) - 1, P, max(abs(int(c)) for c in P.exact_coeffs()), vectors)


def subspace_from_pluecker(X: Multivector) -> RationalSubspace:
    P = primitive_pluecker(X)
    return RationalSubspace(X.k - 1, P, max(abs(int(c)) for c in P.exact_coeffs()))


def point_subspace_distance(alpha: LiftedPoint, L: RationalSubspace) -> CertReal:
    """d([1 : alpha], L) = |alpha' ^ X| / (|alpha'| |X|)"""
    if L.pluecker.n != alpha.n + 1:
        raise PreconditionViolation(f"subspace lives in P^{L.pluecker.n - 1}, point in P^{alpha.n}")
    a = alpha.as_multivector()
    return _sqrt_ratio(norm_squared(wedge(a, L.pluecker)), as_cert(norm_squared(a)) * norm_squared(L.pluecker))


def split_lifted(X: Multivector) -> Tuple[Multivector, Multivector]:
    """X = e_0 ^ Z - Y con Z, Y sin e_0 (coordenadas en R^n)"""
    n = X.n - 1
    if X.k < 1 or X.k > n:
        raise PreconditionViolation(f"grade {X.k} cannot be split in dimension {X.n}")
    z_pos, y_pos = subset_position(n, X.k - 1), subset_position(n, X.k)
    z: List[Scalar] = [Fraction(0)] * len(z_pos)
    y: List[Scalar] = [Fraction(0)] * len(y_pos)
    for subset, c in zip(X.subsets, X.coeffs):
        if subset[0] == 0:
            z[z_pos[tuple(i - 1 for i in subset[1:])]] = c
        else:
            y[y_pos[tuple(i - 1 for i in subset)]] = -c
    return Multivector(n, X.k - 1, tuple(z)), Multivector(n, X.k, tuple(y))


def exterior_map(alpha: LiftedPoint, d: int) -> TargetMatrix:
    """Matriz de Z -> alpha ^ Z, de Lambda^d(R^n) en Lambda^(d+1)(R^n)"""
    n = alpha.n
    rows: List[List[Scalar]] = [[Fraction(0)] * len(basis_subsets(n, d)) for _ in basis_subsets(n, d + 1)]
    for i, b, c, sgn in _wedge_table(n, 1, d):
        rows[c][b] = rows[c][b] + (alpha.alpha[i] if sgn > 0 else -alpha.alpha[i])
    return TargetMatrix.of(rows, label=f"alpha^Z (d={d})")


class GrassmannService:
    """
    Exponentes intermedios omega_d por búsqueda sobre multivectores enteros Z de grado d
    |Z|^C(n,d) <= T y |alpha ^ Z + Y + theta|^C(n,d+1) <= T^(-omega), norma euclídea
    """

    def __init__(
        self,
        exponents: ExponentService = None,
        transference: TransferenceService = None,
        max_dim: int = config.MAX_AMBIENT_DIM,
        max_grade: int = config.MAX_GRADE,
    ):
        self.exponents = exponents or ExponentService()
        self.transference = transference or TransferenceService(self.exponents)
        self.max_dim = max_dim
        self.max_grade = max_grade
        logger.info(f"GrassmannService initialized - limits n <= {max_dim}, d <= {max_grade}")

    def _check_limits(self, n: int, d: int, override: bool):
        if not 0 <= d <= n - 1:
            raise PreconditionViolation(f"need 0 <= d <= n-1, got d={d}, n={n}")
        if not override and (n > self.max_dim or d > self.max_grade):
            raise PreconditionViolation(
                f"n={n}, d={d} exceeds desk-scale limits (n <= {self.max_dim}, d <= {self.max_grade}); pass override=True")

    # ------------------------------------------------------------------
    # Exponentes intermedios
    # ------------------------------------------------------------------

    @staticmethod
    def _theta_vector(theta, n: int, d: int) -> Optional[Tuple[Scalar, ...]]:
        if theta is None:
            return None
        values = theta.coeffs if isinstance(theta, Multivector) else tuple(theta)
        if len(values) != math.comb(n, d + 1):
            raise PreconditionViolation(f"theta must have C({n},{d + 1}) = {math.comb(n, d + 1)} coefficients")
        if all(_is_zero(as_cert(v)) for v in values):
            return None
        return tuple(as_cert(v) for v in values)

    def _coefficient_box(self, size: int, T_max: Fraction, homogeneous: bool) -> np.ndarray:
        """Z enteros con |Z|_inf^size <= T_max (contiene la bola euclídea)"""
        radius = int(integer_nthroot(math.floor(T_max), size)[0])
        total = (2 * radius + 1) ** size
        budget = self.exponents.config.budget
        if total > budget:
            raise BudgetExceeded(f"intermediate search needs {total} multivectors", partial_count=0, budget=budget)
        axes = [np.arange(-radius, radius + 1, dtype=np.int64)] * size
        coords = np.concatenate(list(product_chunks(axes, self.exponents.config.chunk_size)))
        if homogeneous:
            return coords[canonical_mask(coords)]
        return coords[np.any(coords != 0, axis=1)]

    def exterior_profile(self, alpha: LiftedPoint, d: int, theta=None,
                         scales: Optional[Sequence[Fraction]] = None) -> List[ScalePoint]:
        """Mejor |alpha ^ Z + Y + theta|^C(n,d+1) sobre |Z|^C(n,d) <= T en cada escala"""
        n = alpha.n
        c_low, c_high = math.comb(n, d), math.comb(n, d + 1)
        theta_vec = self._theta_vector(theta, n, d)
        points = sorted(Fraction(T) for T in scales) if scales is not None else self.exponents.grid.points()
        if not points or points[0] <= 1:
            raise PreconditionViolation("scales must be a nonempty list of values greater than 1")

        coords = self._coefficient_box(c_low, points[-1], theta_vec is None)
        if not len(coords):
            raise InsufficientData("no nonzero multivector below the largest scale")
        logger.info(f"🔍 Exterior search over {len(coords)} multivectors of grade {d} in R^{n}")

        G = exterior_map(alpha, d).to_float()
        shift = np.array([float(t) for t in theta_vec]) if theta_vec is not None else np.zeros(c_high)
        image = coords.astype(float) @ G.T + shift
        residual = np.sqrt(((image - np.rint(image)) ** 2).sum(axis=1))
        with np.errstate(divide="ignore"):
            size = 0.5 * c_low * np.log((coords.astype(float) ** 2).sum(axis=1))
            log_residual = c_high * np.log(residual)

        order = np.argsort(size, kind="stable")
        size, log_residual, coords = size[order], log_residual[order], coords[order]
        prefix = np.minimum.accumulate(log_residual)
        positions = np.where(log_residual == prefix, np.arange(len(log_residual)), 0)
        argmin = np.maximum.accumulate(positions)

        profile = []
        for T in points:
            log_T = math.log(float(T))
            cut = int(np.searchsorted(size, log_T * (1 + 1e-12), side="right"))
            if cut == 0:
                continue
            best = float(prefix[cut - 1])
            omega = math.inf if best == -math.inf else -best / log_T
            profile.append(ScalePoint(T, math.exp(best), omega, tuple(int(v) for v in coords[argmin[cut - 1]])))
        return profile

    def exterior_certifier(self, alpha: LiftedPoint, d: int, theta=None) -> Callable[[ScalePoint, Fraction, str], Optional[Witness]]:
        """Verificación exacta de |Z|^C(n,d) <= T y |alpha ^ Z + Y + theta|^C(n,d+1) < T^(-omega)"""
        n = alpha.n
        c_low, c_high = math.comb(n, d), math.comb(n, d + 1)
        G = exterior_map(alpha, d)
        theta_vec = self._theta_vector(theta, n, d)
        negated = [-t for t in theta_vec] if theta_vec is not None else None

        def certify(point: ScalePoint, omega: Fraction, source: str) -> Optional[Witness]:
            Z = point.q
            if Fraction(sum(z * z for z in Z)) ** c_low > point.T ** 2:
                return None
            residual_sq: Scalar = Fraction(0)
            Y = []
            for value in G.apply(Z, negated):
                dist, nearest = distance_to_integers(value)
                residual_sq = residual_sq + dist * dist
                Y.append(-nearest)
            if not certify_power_bound(residual_sq, point.T, 2 * Fraction(omega) / c_high):
                return None
            return Witness(point.T, tuple(Y), tuple(Z), Fraction(omega), source)

        return certify

    def intermediate_exponent(
        self,
        alpha,
        d: int,
        theta=None,
        mode: ExponentMode = "ordinary",
        override: bool = False,
        scales: Optional[Sequence[Fraction]] = None,
    ) -> ExponentEstimate:
        """omega_d(alpha, theta) u omega_hat_d(alpha, theta); theta None es el caso homogéneo"""
        alpha = alpha if isinstance(alpha, LiftedPoint) else LiftedPoint(tuple(alpha))
        self._check_limits(alpha.n, d, override)
        homogeneous = self._theta_vector(theta, alpha.n, d) is None
        kind = ExponentKind(mode, "exterior", "homogeneous" if homogeneous else "inhomogeneous")
        logger.info(f"🔄 Intermediate exponent d={d}, n={alpha.n} ({kind.label})")
        profile = self.exterior_profile(alpha, d, theta, scales)
        estimate = self.exponents.estimate_from_profile(
            kind, profile, self.exterior_certifier(alpha, d, theta), dirichlet=homogeneous)
        estimate.notes.append(f"d={d}, search over all integer grade-{d} multivectors in the coefficient box")
        return estimate

    # ------------------------------------------------------------------
    # Equivalencia de definiciones
    # ------------------------------------------------------------------

    def def_equivalence_check(self, alpha, X: Multivector) -> EquivalenceReport:
        """
        X = e_0 ^ Z - Y y las comparaciones
        |alpha ^ Z + Y| <= |alpha' ^ X| <= |alpha'| |alpha ^ Z + Y|
        max(|Z|, |Y|) <= |X| <= 2 max(|Z|, |Y|)
        """
        alpha = alpha if isinstance(alpha, LiftedPoint) else LiftedPoint(tuple(alpha))
        if X.n != alpha.n + 1:
            raise PreconditionViolation(f"X must live in dimension {alpha.n + 1}")
        if X.is_zero():
            raise PreconditionViolation("X must be nonzero")
        Z, Y = split_lifted(X)
        a, a_prime = alpha.as_multivector(lifted=False), alpha.as_multivector()
        W = wedge(a, Z) + Y
        lifted = wedge(a_prime, X)

        w2, l2, a2 = norm_squared(W), norm_squared(lifted), norm_squared(a_prime)
        z2, y2, x2 = norm_squared(Z), norm_squared(Y), norm_squared(X)
        top = z2 if _leq(y2, z2) else y2

        difference = lifted + wedge(a_prime, embed(W))
        identity = difference.is_zero() if difference.is_exact else None
        checks = {
            "identity": identity,
            "wedge_lower": _leq(w2, l2),
            "wedge_upper": _leq(l2, as_cert(a2) * w2),
            "norm_lower": _leq(top, x2),
            "norm_upper": _leq(x2, as_cert(top) * 4),
        }
        norms = {name: str(v) if isinstance(v, Fraction) else repr(v)
                 for name, v in (("W", w2), ("lifted", l2), ("alpha_prime", a2), ("Z", z2), ("Y", y2), ("X", x2))}
        report = EquivalenceReport(X, Z, Y, norms, checks)
        if not report.holds:
            logger.error(f"❌ Equivalence inequality failed for X={X.render()['coeffs']}: {checks}")
        return report

    def equivalence_sweep(self, count: int = 1000, max_n: int = 4, max_d: int = 3, coefficient_bound: int = 5,
                          seed: int = 0) -> Dict[str, Any]:
        """Barrido aleatorio de def_equivalence_check con alpha racional y X entero"""
        rng = np.random.default_rng(seed)
        failures, undecided, covered = [], 0, set()
        for _ in range(count):
            n = int(rng.integers(1, max_n + 1))
            d = int(rng.integers(0, min(max_d, n - 1) + 1))
            covered.add((n, d))
            alpha = tuple(Fraction(int(rng.integers(-20, 21)), int(rng.integers(1, 12))) for _ in range(n))
            size = math.comb(n + 1, d + 1)
            coeffs = rng.integers(-coefficient_bound, coefficient_bound + 1, size=size)
            if not coeffs.any():
                coeffs[0] = 1
            X = Multivector(n + 1, d + 1, tuple(int(c) for c in coeffs))
            report = self.def_equivalence_check(alpha, X)
            undecided += any(v is None for v in report.checks.values())
            if not report.holds:
                failures.append({"alpha": [str(a) for a in alpha], "X": report.X.render(), "checks": report.checks})
        logger.info(f"📊 Equivalence sweep: {count} cases, {len(failures)} violations, {undecided} undecided")
        return {"count": count, "violations": failures, "undecided": undecided, "seed": seed,
                "covered": [list(pair) for pair in sorted(covered)]}

    # ------------------------------------------------------------------
    # Colapso d = 0 y d = n-1
    # ------------------------------------------------------------------

    def collapse_check(self, alpha, d: int, mode: ExponentMode = "ordinary", theta=None) -> CollapseReport:
        """omega_0 frente a la aproximación simultánea y omega_(n-1) frente a la dual, en la misma malla"""
        alpha = alpha if isinstance(alpha, LiftedPoint) else LiftedPoint(tuple(alpha))
        n = alpha.n
        if d not in (0, n - 1):
            raise PreconditionViolation(f"collapse only applies to d = 0 or d = n-1, got d={d}")
        intermediate = self.intermediate_exponent(alpha, d, theta, mode)
        theta_vec = self._theta_vector(theta, n, d)
        if d == 0:
            A = TargetMatrix.of([[a] for a in alpha.alpha], label="alpha column")
        else:
            A = TargetMatrix.of([list(alpha.alpha)], label="alpha row")
        reference = self.exponents.estimate(A, ExponentKind(mode), theta_vec, method="grid")

        a, b = intermediate.point_estimate, reference.point_estimate
        if math.isinf(a) and math.isinf(b):
            difference = 0.0
        else:
            difference = abs(a - b)
        grid = self.exponents.grid
        log_tail = (math.log(float(grid.tmin)) + math.log(float(grid.tmax))) / 2
        c_low, c_high = math.comb(n, d), math.comb(n, d + 1)
        scale = max(1.0, b if math.isfinite(b) else 1.0)
        tolerance = (grid.log_step * scale + 0.5 * c_high * math.log(c_high)
                     + 0.5 * c_low * math.log(c_low) * scale) / log_tail + grid.truncation_slack
        report = CollapseReport(d, mode, intermediate, reference, difference, tolerance)
        logger.info(f"{'✅' if report.agrees else '⚠️'} Collapse d={d}: |{a:.4f} - {b:.4f}| vs tolerance {tolerance:.4f}")
        return report

    # ------------------------------------------------------------------
    # Transferencia omega_d >= 1 / omega_hat_(n-1-d)
    # ------------------------------------------------------------------

    def transpose_identity_check(self, alpha, d: int, trials: int = 1000, coefficient_bound: int = 9,
                                 seed: int = 0) -> Dict[str, Any]:
        """|beta ^ (alpha ^ gamma)| = |(beta ^ alpha) ^ gamma| con beta, gamma racionales aleatorios"""
        alpha = alpha if isinstance(alpha, LiftedPoint) else LiftedPoint(tuple(alpha))
        n = alpha.n
        a = Multivector.vector(_rational_point(alpha))
        rng = np.random.default_rng(seed)

        def random_multivector(k: int) -> Multivector:
            size = math.comb(n, k)
            return Multivector(n, k, tuple(Fraction(int(p), int(q)) for p, q in zip(
                rng.integers(-coefficient_bound, coefficient_bound + 1, size=size),
                rng.integers(1, coefficient_bound + 1, size=size))))

        mismatches = []
        for _ in range(trials):
            beta, gamma = random_multivector(n - d - 1), random_multivector(d)
            left = wedge(beta, wedge(a, gamma)).exact_coeffs()[0]
            right = wedge(wedge(beta, a), gamma).exact_coeffs()[0]
            if abs(left) != abs(right):
                mismatches.append({"beta": beta.render(), "gamma": gamma.render(), "left": str(left), "right": str(right)})
        return {"trials": trials, "mismatches": mismatches, "seed": seed}

    def bv_transfer_check(self, alpha, d: int, thetas: Optional[Sequence[Sequence]] = None,
                          count: Optional[int] = None, seed: Optional[int] = None,
                          override: bool = False) -> TransferReport:
        """omega_d(alpha, theta) >= 1 / omega_hat_(n-1-d)(alpha) sobre thetas muestreados"""
        alpha = alpha if isinstance(alpha, LiftedPoint) else LiftedPoint(tuple(alpha))
        n = alpha.n
        self._check_limits(n, d, override)
        instance = f"alpha={[repr(a) for a in alpha.alpha]}, d={d}"
        seed = self.transference.sampling.seed if seed is None else seed
        logger.info(f"🔄 Intermediate transference check for {instance}")

        identity = self.transpose_identity_check(alpha, d, trials=200, seed=seed)
        try:
            omega_hat = self.intermediate_exponent(alpha, n - 1 - d, None, "uniform", override=override)
        except INCONCLUSIVE_ERRORS as e:
            logger.warning(f"⚠️ Homogeneous intermediate estimate unavailable: {e}")
            return TransferReport(instance, None, {}, 0.0, Verdict.INCONCLUSIVE,
                                  details={"error": e.to_dict(), "transpose_identity": identity})
        bound = ext_reciprocal(measured_value(omega_hat))
        if thetas is None:
            thetas = self.transference.sample_thetas(math.comb(n, d + 1), count, seed)

        samples, inconclusive, near, slack = [], 0, 0, 0.0
        for index, theta in enumerate(thetas):
            theta = tuple(Fraction(t) for t in theta)
            try:
                estimate = self.intermediate_exponent(alpha, d, theta, "ordinary", override=override)
            except INCONCLUSIVE_ERRORS as e:
                inconclusive += 1
                samples.append({"index": index, "theta": [str(t) for t in theta], "error": e.to_dict()})
                continue
            slack = max(slack, estimate.slack)
            ok = float(estimate.lower_bound) >= float(bound) - estimate.slack
            close = not estimate.capped and abs(estimate.point_estimate - float(bound)) <= self.transference.sampling.tolerance
            near += close
            inconclusive += not ok
            samples.append({
                "index": index,
                "theta": [str(t) for t in theta],
                "omega_lower": str(estimate.lower_bound),
                "omega_point": estimate.point_estimate,
                "slack": estimate.slack,
                "holds": ok,
                "near_equality": close,
            })

        if identity["mismatches"]:
            verdict = Verdict.VIOLATED
        elif inconclusive == 0 and thetas:
            verdict = Verdict.CONSISTENT
        else:
            verdict = Verdict.INCONCLUSIVE
        fraction = near / len(thetas) if thetas else 0.0
        logger.info(f"📊 {len(thetas)} samples, {inconclusive} inconclusive, {fraction:.0%} near equality -> {verdict.value}")
        return TransferReport(
            instance=instance,
            bound={f"omega_{d}(alpha,theta)": render_extended(bound)},
            estimates={f"omega_hat_{n - 1 - d}": summarize_estimate(omega_hat)},
            slack=slack,
            verdict=verdict,
            samples=samples,
            details={
                "fraction_within_tolerance": fraction,
                "tolerance": self.transference.sampling.tolerance,
                "seed": seed,
                "inconclusive_samples": inconclusive,
                "transpose_identity": {"trials": identity["trials"], "mismatches": len(identity["mismatches"])},
            },
        )
