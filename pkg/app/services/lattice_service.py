"""
LatticeService - Retículos parametrizados, duales, enumeración en cajas
y mínimos sucesivos con aritmética exacta/certificada
"""
import itertools
import logging
import math
from fractions import Fraction
from functools import cmp_to_key, lru_cache
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import sympy
from sympy.combinatorics import Permutation

from app.core.errors import BudgetExceeded, PrecisionExhausted, PreconditionViolation
from app.core.numerics import (
    CertReal,
    Ordering,
    WeightVector,
    as_cert,
    compare_reals,
    nearest_integer,
    sign,
)
from app.services.types import (
    CrossPolytope,
    DualBoundReport,
    EnumerationConfig,
    LatticeBasis,
    LatticePoint,
    MahlerReport,
    MahlerStatus,
    MinkowskiReport,
    ParametrizedStructure,
    SuccessiveMinima,
    TargetMatrix,
    WeightedBox,
)

logger = logging.getLogger("lattice_service")

# Margen relativo del prefiltro en coma flotante
FLOAT_MARGIN = 1e-9
DUAL_CACHE_SIZE = 256


def mahler_constant(d: int) -> CertReal:
    """C_d = d! (3/2)^((d-1)/2) d"""
    return CertReal.rational(Fraction(3, 2)).power(Fraction(d - 1, 2)) * (math.factorial(d) * d)


class _IndependenceTracker:
    """Eliminación gaussiana incremental sobre vectores enteros"""

    def __init__(self, dim: int):
        self.dim = dim
        self.pivots = {}

    def add(self, vector: Sequence[int]) -> bool:
        v = [Fraction(x) for x in vector]
        for col in sorted(self.pivots):
            if v[col] != 0:
                row = self.pivots[col]
                factor = v[col] / row[col]
                v = [a - factor * b for a, b in zip(v, row)]
        for col, value in enumerate(v):
            if value != 0:
                self.pivots[col] = v
                return True
        return False

    @property
    def rank(self) -> int:
        return len(self.pivots)


def _leibniz_det(rows: Sequence[Sequence[CertReal]]) -> CertReal:
    d = len(rows)
    total = CertReal.rational(0)
    for perm in itertools.permutations(range(d)):
        term = CertReal.rational(-1 if Permutation(list(perm)).parity() else 1)
        for i, j in enumerate(perm):
            term = term * rows[i][j]
        total = total + term
    return total


def _minor(rows, skip_row: int, skip_col: int):
    return [[x for j, x in enumerate(row) if j != skip_col] for i, row in enumerate(rows) if i != skip_row]


class LatticeService:
    """
    Servicio de geometría de números a escala de escritorio
    Enumeración exacta por preimagen entera de cajas alineadas con los ejes
    """

    def __init__(self, config: EnumerationConfig = None):
        self.config = config or EnumerationConfig()
        # LatticeBasis es inmutable y hasheable por valor
        self._cached_dual = lru_cache(maxsize=DUAL_CACHE_SIZE)(self._compute_dual)
        logger.info(f"LatticeService initialized - budget {self.config.budget}")

    # ------------------------------------------------------------------
    # Construcción
    # ------------------------------------------------------------------

    def from_matrix(self, rows: Sequence[Sequence], label: str = "") -> LatticeBasis:
        """Retículo generado por las columnas de `rows`"""
        basis = tuple(tuple(as_cert(x) for x in row) for row in rows)
        d = len(basis)
        if d == 0 or any(len(row) != d for row in basis):
            raise PreconditionViolation("lattice basis must be a nonempty square matrix")
        if all(x.is_exact for row in basis for x in row):
            det = sympy.Matrix([[sympy.Rational(x.exact.numerator, x.exact.denominator) for x in row] for row in basis]).det()
            det = CertReal.rational(Fraction(int(det.p), int(det.q)))
        else:
            det = _leibniz_det(basis)
        if sign(det) == 0:
            raise PreconditionViolation("lattice basis is singular")
        return LatticeBasis(basis, det, label=label)

    def build_parametrized_lattice(self, A: TargetMatrix, Q, T, s: WeightVector, r: WeightVector) -> LatticeBasis:
        """Lambda(Q, T, A) = diag(g_s(Q^-1), g_r(T^-1)) [[I_m, A], [0, I_n]] Z^(m+n)"""
        Q, T = as_cert(Q), as_cert(T)
        if sign(Q) <= 0 or sign(T) <= 0:
            raise PreconditionViolation("Q and T must be positive")
        m, n = A.m, A.n
        if s.dim != m or r.dim != n:
            raise PreconditionViolation(f"weights must have lengths m={m}, n={n}")
        zero, one = CertReal.rational(0), CertReal.rational(1)
        rows = []
        for i in range(m):
            scale = Q.power(-s.weights[i])
            row = [scale if j == i else zero for j in range(m)]
            row += [A.entry(i, j) * scale for j in range(n)]
            rows.append(tuple(row))
        for j in range(n):
            scale = T.power(-r.weights[j])
            rows.append(tuple([zero] * m + [scale if k == j else zero for k in range(n)]))
        det = one / (Q * T)
        structure = ParametrizedStructure(A, Q, T, s, r, dual=False)
        return LatticeBasis(tuple(rows), det, structure, label=f"Lambda({Q!r},{T!r},{A.label})")

    def build_transformed_lattice(self, A: TargetMatrix, t1, t2, s: WeightVector, r: WeightVector) -> LatticeBasis:
        """L(t1, t2, A) = Lambda(e^t1, e^t2, A)"""
        return self.build_parametrized_lattice(A, CertReal.exp(t1), CertReal.exp(t2), s, r)

    def dual_lattice(self, L: LatticeBasis) -> LatticeBasis:
        """Retículo dual (base inversa traspuesta)"""
        return self._cached_dual(L)

    def _compute_dual(self, L: LatticeBasis) -> LatticeBasis:
        structure = L.structure
        if structure is not None and not structure.dual:
            return self._parametrized_dual(structure)
        if structure is not None and structure.dual:
            return self.build_parametrized_lattice(structure.A, structure.Q, structure.T, structure.s, structure.r)
        if L.is_rational:
            matrix = sympy.Matrix([[sympy.Rational(x.exact.numerator, x.exact.denominator) for x in row] for row in L.basis])
            dual = matrix.inv().T
            rows = [[Fraction(int(dual[i, j].p), int(dual[i, j].q)) for j in range(L.dim)] for i in range(L.dim)]
            return LatticeBasis(tuple(tuple(CertReal.rational(x) for x in row) for row in rows),
                                1 / L.det, label=f"dual({L.label})")
        # inversa traspuesta por cofactores: (B^-T)_ij = C_ij / det
        d = L.dim
        rows = []
        for i in range(d):
            row = []
            for j in range(d):
                cofactor = _leibniz_det(_minor(L.basis, i, j)) if d > 1 else CertReal.rational(1)
                if (i + j) % 2:
                    cofactor = -cofactor
                row.append(cofactor / L.det)
            rows.append(tuple(row))
        return LatticeBasis(tuple(rows), 1 / L.det, label=f"dual({L.label})")

    def _parametrized_dual(self, st: ParametrizedStructure) -> LatticeBasis:
        """diag(g_s(Q), g_r(T)) [[I_m, 0], [-^tA, I_n]] Z^(m+n)"""
        A, m, n = st.A, st.A.m, st.A.n
        zero = CertReal.rational(0)
        rows = []
        for i in range(m):
            scale = st.Q.power(st.s.weights[i])
            rows.append(tuple([scale if k == i else zero for k in range(m)] + [zero] * n))
        for j in range(n):
            scale = st.T.power(st.r.weights[j])
            row = [-(A.entry(i, j) * scale) for i in range(m)]
            row += [scale if k == j else zero for k in range(n)]
            rows.append(tuple(row))
        structure = ParametrizedStructure(A, st.Q, st.T, st.s, st.r, dual=True)
        return LatticeBasis(tuple(rows), st.Q * st.T, structure, label=f"dual(Lambda({st.Q!r},{st.T!r},{A.label}))")

    # ------------------------------------------------------------------
    # Comprobaciones de dualidad
    # ------------------------------------------------------------------

    def change_of_basis(self, L1: LatticeBasis, L2: LatticeBasis) -> List[List[int]]:
        """U entera con B2 = B1 U; PreconditionViolation si no es entera"""
        d = L1.dim
        inverse = self.dual_lattice(L1)  # columnas de B1^-T, filas de B1^-1 traspuestas
        matrix = []
        for i in range(d):
            row = []
            for j in range(d):
                # (B1^-1 B2)_ij = sum_k (B1^-T)_ki (B2)_kj
                entry = CertReal.rational(0)
                for k in range(d):
                    entry = entry + inverse.basis[k][i] * L2.basis[k][j]
                nearest = nearest_integer(entry)
                if sign(entry - nearest) != 0:
                    raise PreconditionViolation(f"basis change entry ({i},{j}) is not an integer")
                row.append(nearest)
            matrix.append(row)
        return matrix

    def same_lattice(self, L1: LatticeBasis, L2: LatticeBasis) -> bool:
        """True si ambas bases generan el mismo retículo (cambio unimodular)"""
        if L1.dim != L2.dim:
            return False
        try:
            U = self.change_of_basis(L1, L2)
        except PreconditionViolation:
            return False
        return abs(int(sympy.Matrix(U).det())) == 1

    def integral_pairing(self, L: LatticeBasis, D: LatticeBasis, points: Optional[Sequence[Sequence[CertReal]]] = None) -> bool:
        """<x, y> entero para los vectores x (base de L o `points`) y la base de D"""
        xs = points if points is not None else [L.generator(j) for j in range(L.dim)]
        for x in xs:
            for j in range(D.dim):
                y = D.generator(j)
                value = CertReal.rational(0)
                for a, b in zip(x, y):
                    value = value + as_cert(a) * b
                if sign(value - nearest_integer(value)) != 0:
                    return False
        return True

    # ------------------------------------------------------------------
    # Enumeración
    # ------------------------------------------------------------------

    def _preimage_ranges(self, L: LatticeBasis, center: Sequence[CertReal], half_widths: Sequence[CertReal]) -> Tuple[np.ndarray, np.ndarray]:
        """Rango entero de z con B z en la caja (centro, semianchos), cerrado y con margen"""
        d = L.dim
        dual = self.dual_lattice(L)
        lows, highs = [], []
        for j in range(d):
            # z_j = sum_i (B^-1)_ji x_i = sum_i (B^-T)_ij x_i
            if L.is_rational and all(c.is_exact for c in center) and all(h.is_exact for h in half_widths):
                mid = sum((dual.basis[i][j].exact * center[i].exact for i in range(d)), Fraction(0))
                spread = sum((abs(dual.basis[i][j].exact) * half_widths[i].exact for i in range(d)), Fraction(0))
                lows.append(math.ceil(mid - spread))
                highs.append(math.floor(mid + spread))
            else:
                mid = sum(float(dual.basis[i][j]) * float(center[i]) for i in range(d))
                spread = sum(abs(float(dual.basis[i][j])) * float(half_widths[i]) for i in range(d))
                slack = FLOAT_MARGIN * (abs(mid) + spread + 1)
                lows.append(math.floor(mid - spread - slack))
                highs.append(math.ceil(mid + spread + slack))
        return np.array(lows, dtype=np.int64), np.array(highs, dtype=np.int64)

    def _iter_candidates(self, lows: np.ndarray, highs: np.ndarray, limit: int) -> Iterator[np.ndarray]:
        """Los primeros `limit` vectores de coordenadas enteras, en bloques y en orden lexicográfico"""
        sizes = highs - lows + 1
        if np.any(sizes <= 0):
            return
        chunk = self.config.chunk_size
        for start in range(0, limit, chunk):
            rest = np.arange(start, min(start + chunk, limit), dtype=np.int64)
            # índice mixto: la última coordenada varía más rápido
            columns = []
            for size in sizes[::-1]:
                columns.append(rest % size)
                rest = rest // size
            yield np.stack(columns[::-1], axis=1) + lows

    def _enumerate(
        self,
        L: LatticeBasis,
        center: Sequence[CertReal],
        bounding: Sequence[CertReal],
        float_test: Callable[[np.ndarray], np.ndarray],
        exact_test: Callable[[Tuple[CertReal, ...]], bool],
    ) -> List[LatticePoint]:
        lows, highs = self._preimage_ranges(L, center, bounding)
        sizes = highs - lows + 1
        total = 0 if np.any(sizes <= 0) else int(np.prod(sizes.astype(object)))
        basis = L.to_float()
        found = []
        for coords in self._iter_candidates(lows, highs, min(total, self.config.budget)):
            vectors = coords.astype(float) @ basis.T
            keep = float_test(vectors)
            for z in coords[keep]:
                z = tuple(int(v) for v in z)
                vector = L.point(z)
                if exact_test(vector):
                    found.append(LatticePoint(z, vector))
        if total > self.config.budget:
            logger.warning(f"⚠️ enumeration stopped after {self.config.budget} of {total} candidates")
            raise BudgetExceeded(f"enumeration needs {total} candidates (budget {self.config.budget})",
                                 partial_count=len(found), budget=self.config.budget)
        return found

    def enumerate_in_box(self, L: LatticeBasis, box: WeightedBox, strict: bool = False) -> List[LatticePoint]:
        """Puntos del retículo en la caja (abierta si strict), en orden lexicográfico de coordenadas"""
        if box.dim != L.dim:
            raise PreconditionViolation("box and lattice differ in dimension")
        c = np.array([float(x) for x in box.center])
        h = np.array([float(x) for x in box.half_widths])

        def float_test(vectors: np.ndarray) -> np.ndarray:
            return np.all(np.abs(vectors - c) <= h * (1 + FLOAT_MARGIN) + FLOAT_MARGIN, axis=1)

        def exact_test(vector) -> bool:
            for x, ci, hi in zip(vector, box.center, box.half_widths):
                order = compare_reals(abs(x - ci), hi)
                if order == Ordering.GREATER or (strict and order == Ordering.EQUAL):
                    return False
            return True

        points = self._enumerate(L, box.center, box.half_widths, float_test, exact_test)
        logger.debug(f"🔍 {len(points)} lattice points in box (strict={strict})")
        return points

    def enumerate_in_cross_polytope(self, L: LatticeBasis, body: CrossPolytope, scale=1, shift: Optional[Sequence] = None,
                                    strict: bool = False) -> List[LatticePoint]:
        """Puntos en scale * {y : sum h_i |y_i| <= 1} + shift: caja envolvente y filtro l1 exacto"""
        scale = as_cert(scale)
        d = body.dim
        shift = [as_cert(g) for g in shift] if shift is not None else [CertReal.rational(0)] * d
        weights = body.box_half_widths
        bounding = [scale / h for h in weights]
        w = np.array([float(h) for h in weights])
        g = np.array([float(x) for x in shift])
        bound = float(scale)

        def float_test(vectors: np.ndarray) -> np.ndarray:
            return np.abs(vectors - g) @ w <= bound * (1 + FLOAT_MARGIN) + FLOAT_MARGIN

        def exact_test(vector) -> bool:
            total = CertReal.rational(0)
            for x, gi, hi in zip(vector, shift, weights):
                total = total + abs(x - gi) * hi
            order = compare_reals(total, scale)
            return order == Ordering.LESS or (not strict and order == Ordering.EQUAL)

        return self._enumerate(L, shift, bounding, float_test, exact_test)

    # ------------------------------------------------------------------
    # Mínimos sucesivos
    # ------------------------------------------------------------------

    @staticmethod
    def gauge(vector: Sequence[CertReal], body) -> CertReal:
        """Funcional de Minkowski del cuerpo simétrico (caja o politopo cruzado)"""
        if isinstance(body, WeightedBox):
            return CertReal.maximum([abs(x) / h for x, h in zip(vector, body.half_widths)])
        total = CertReal.rational(0)
        for x, h in zip(vector, body.box_half_widths):
            total = total + abs(x) * h
        return total

    def _points_in_dilate(self, L: LatticeBasis, body, radius) -> List[LatticePoint]:
        if isinstance(body, WeightedBox):
            return self.enumerate_in_box(L, body.scaled(radius), strict=False)
        return self.enumerate_in_cross_polytope(L, body, scale=radius)

    def successive_minima(self, L: LatticeBasis, body, k: Optional[int] = None) -> SuccessiveMinima:
        """
        mu_1 <= ... <= mu_k con testigos independientes
        Ordena exactamente por el funcional del cuerpo y selecciona de forma voraz
        """
        d = L.dim
        k = d if k is None else k
        if not 1 <= k <= d:
            raise PreconditionViolation(f"k must be in [1, {d}], got {k}")
        if isinstance(body, WeightedBox) and not body.is_symmetric:
            raise PreconditionViolation("successive minima need a symmetric body")

        radius = Fraction(1)
        while True:
            points = [p for p in self._points_in_dilate(L, body, radius) if any(p.coords)]
            tracker = _IndependenceTracker(d)
            for p in points:
                tracker.add(p.coords)
            if tracker.rank >= k:
                break
            radius *= 2
            logger.debug(f"🔄 Enlarging search radius to {radius}")

        gauges = {p.coords: self.gauge(p.vector, body) for p in points}

        def by_gauge(a: LatticePoint, b: LatticePoint) -> int:
            try:
                order = compare_reals(gauges[a.coords], gauges[b.coords])
            except PrecisionExhausted:
                logger.warning("⚠️ Gauge comparison undecided at cap - treated as a tie")
                order = Ordering.EQUAL
            if order != Ordering.EQUAL:
                return int(order)
            # empates: menor norma l1 de coordenadas, luego lexicográfico descendente
            size_a, size_b = sum(map(abs, a.coords)), sum(map(abs, b.coords))
            if size_a != size_b:
                return -1 if size_a < size_b else 1
            return (a.coords < b.coords) - (a.coords > b.coords)

        values, witnesses = [], []
        tracker = _IndependenceTracker(d)
        for p in sorted(points, key=cmp_to_key(by_gauge)):
            if tracker.add(p.coords):
                values.append(gauges[p.coords])
                witnesses.append(p)
                if len(values) == k:
                    break
        return SuccessiveMinima(tuple(values), tuple(witnesses))

    # ------------------------------------------------------------------
    # Teoremas de transferencia
    # ------------------------------------------------------------------

    def check_mahler_transfer(self, L: LatticeBasis, R: WeightedBox, gammas: Sequence[Sequence]) -> MahlerReport:
        """(C R* + gamma) contiene un punto del dual para cada gamma, si R (abierta) corta a L solo en 0"""
        d = L.dim
        C = mahler_constant(d)
        if not R.is_symmetric:
            raise PreconditionViolation("R must be a symmetric box")

        interior = [p for p in self.enumerate_in_box(L, R, strict=True) if any(p.coords)]
        if interior:
            logger.info(f"⚠️ Precondition violated: R contains lattice point {interior[0].coords}")
            return MahlerReport(MahlerStatus.PRECONDITION_VIOLATED, d, C, precondition_witness=interior[0])

        dual = self.dual_lattice(L)
        polar = CrossPolytope(R.half_widths)
        report = MahlerReport(MahlerStatus.CONFIRMED, d, C)

        nonzero = [p for p in self.enumerate_in_cross_polytope(dual, polar, scale=C) if any(p.coords)]
        if nonzero:
            report.nonzero_witness = nonzero[0]
        else:
            report.failures.append({"gamma": None, "reason": "no nonzero dual point in C R*"})

        for index, gamma in enumerate(gammas):
            hits = self.enumerate_in_cross_polytope(dual, polar, scale=C, shift=gamma)
            if hits:
                report.shift_witnesses.append({"index": index, "gamma": [as_cert(g) for g in gamma],
                                               "coords": list(hits[0].coords)})
            else:
                report.failures.append({"index": index, "gamma": [as_cert(g) for g in gamma]})

        if report.failures:
            report.status = MahlerStatus.FALSIFIED
            logger.error(f"❌ Mahler transfer falsified on {len(report.failures)} shifts")
        else:
            logger.info(f"✅ Mahler transfer confirmed for {len(gammas)} shifts (d={d})")
        return report

    def second_theorem_dual_bound(self, L: LatticeBasis, B: WeightedBox) -> DualBoundReport:
        """mu_1(L, B) * mu_d(L*, B*) en [1, d!]; si mu_1 > 1 entonces mu_d(L*, B*) < d!"""
        d = L.dim
        mu_first = self.successive_minima(L, B, 1).values[0]
        dual_minima = self.successive_minima(self.dual_lattice(L), CrossPolytope(B.half_widths), d)
        mu_last = dual_minima.values[-1]
        product = mu_first * mu_last
        factorial = math.factorial(d)
        strict = None
        if compare_reals(mu_first, 1) == Ordering.GREATER:
            strict = compare_reals(mu_last, factorial) == Ordering.LESS
        return DualBoundReport(
            dim=d,
            mu_first=mu_first,
            mu_last_dual=mu_last,
            product=float(product),
            lower_bound_holds=compare_reals(product, 1) != Ordering.LESS,
            upper_bound_holds=compare_reals(product, factorial) != Ordering.GREATER,
            strict_dual_bound=strict,
        )

    def minkowski_product_check(self, L: LatticeBasis, body: WeightedBox) -> MinkowskiReport:
        """2^d/d! <= mu_1...mu_d vol(K)/det(L) <= 2^d"""
        d = L.dim
        minima = self.successive_minima(L, body, d).values
        volume = CertReal.rational(2 ** d)
        for h in body.half_widths:
            volume = volume * h
        product = CertReal.rational(1)
        for mu in minima:
            product = product * mu
        normalized = product * volume / abs(L.det)
        lower, upper = Fraction(2 ** d, math.factorial(d)), Fraction(2 ** d)
        holds = compare_reals(normalized, lower) != Ordering.LESS and compare_reals(normalized, upper) != Ordering.GREATER
        return MinkowskiReport(d, minima, float(normalized), lower, upper, holds)
