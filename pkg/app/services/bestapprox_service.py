"""
BestApproxService - Sucesiones de mejores aproximaciones (N, L)
N(X) = ||X||_s sobre Z^m y L(X) = min_p ||^tA X - p||_r
"""
import itertools
import logging
import math
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from app.core.errors import (
    BudgetExceeded,
    DegenerateRank,
    InsufficientData,
    PrecisionExhausted,
    PreconditionViolation,
)
from app.core.numerics import (
    CertReal,
    Ordering,
    WeightedValue,
    WeightVector,
    as_cert,
    compare,
    compare_reals,
    distance_to_integers,
    integer_weighted_norm,
    sign,
)
from app.services.types import (
    BestApproxEntry,
    BestApproxSequence,
    EnumerationConfig,
    GrowthReport,
    RankReport,
    RankStatus,
    SequenceCheck,
    SubsequenceMap,
    TargetMatrix,
    TieBreak,
)

logger = logging.getLogger("bestapprox_service")

# Cota del error de redondeo por unidad de |A||X| en el prefiltro
FLOAT_ERROR = 2.0 ** -50


def product_chunks(axes: Sequence[np.ndarray], chunk: int) -> Iterator[np.ndarray]:
    """Producto cartesiano de ejes enteros en bloques (orden lexicográfico de índices)"""
    sizes = tuple(len(a) for a in axes)
    total = math.prod(sizes)
    for start in range(0, total, chunk):
        flat = np.arange(start, min(start + chunk, total), dtype=np.int64)
        idx = np.unravel_index(flat, sizes)
        yield np.stack([axis[i] for axis, i in zip(axes, idx)], axis=1)


def shell_pieces(inner: Sequence[int], outer: Sequence[int]) -> List[List[np.ndarray]]:
    """Descomposición disjunta de caja(outer) \\ caja(inner) en productos de ejes"""
    pieces = []
    for pos in range(len(outer)):
        if outer[pos] <= inner[pos]:
            continue
        axes = [np.arange(-inner[i], inner[i] + 1, dtype=np.int64) for i in range(pos)]
        axes.append(np.concatenate([
            np.arange(-outer[pos], -inner[pos], dtype=np.int64),
            np.arange(inner[pos] + 1, outer[pos] + 1, dtype=np.int64),
        ]))
        axes += [np.arange(-outer[i], outer[i] + 1, dtype=np.int64) for i in range(pos + 1, len(outer))]
        pieces.append(axes)
    return pieces


def canonical_pieces(pieces: Sequence[Sequence[np.ndarray]]) -> List[List[np.ndarray]]:
    """Reparte cada producto de ejes según la primera coordenada no nula, que queda positiva"""
    out = []
    for axes in pieces:
        for lead in range(len(axes)):
            positive = axes[lead][axes[lead] > 0]
            if len(positive):
                out.append([np.zeros(1, dtype=np.int64)] * lead + [positive] + list(axes[lead + 1:]))
            if not np.any(axes[lead] == 0):
                break
    return out


def canonical_mask(coords: np.ndarray) -> np.ndarray:
    """Primera coordenada no nula positiva (un representante de cada par +-X)"""
    nonzero = coords != 0
    first = np.argmax(nonzero, axis=1)
    leading = coords[np.arange(len(coords)), first]
    return np.any(nonzero, axis=1) & (leading > 0)


def _as_bound(N_bound) -> Fraction:
    if isinstance(N_bound, WeightedValue):
        N_bound = N_bound.value
    if isinstance(N_bound, CertReal):
        if N_bound.is_exact:
            return N_bound.exact
        lo, _ = N_bound.enclose(Fraction(1, 1 << 20))
        return lo
    if isinstance(N_bound, float) and not math.isfinite(N_bound):
        raise PreconditionViolation("N_bound must be finite")
    return Fraction(N_bound)


class BestApproxService:
    """
    Motor de mejores aproximaciones por capas geométricas de N
    Prefiltro vectorizado en coma flotante y decisión exacta de cada récord
    """

    def __init__(self, config: EnumerationConfig = None):
        self.config = config or EnumerationConfig()
        logger.info(f"BestApproxService initialized - budget {self.config.budget}")

    # ------------------------------------------------------------------
    # Evaluación de L
    # ------------------------------------------------------------------

    def evaluate(self, A: TargetMatrix, X: Sequence[int], r: WeightVector) -> Tuple[WeightedValue, Tuple[int, ...]]:
        """L(X) exacto y el p entero que lo realiza (redondeo coordenada a coordenada)"""
        if len(X) != A.m or r.dim != A.n:
            raise PreconditionViolation(f"X must have length {A.m} and r length {A.n}")
        terms, dists, p = [], [], []
        for j in range(A.n):
            column = [A.entry(i, j) for i in range(A.m)]
            dist, nearest = distance_to_integers(CertReal.dot(column, X))
            dists.append(dist)
            p.append(nearest)
            terms.append(dist.power(1 / r.weights[j]))
        value = CertReal.maximum(terms)
        if all(d.is_exact for d in dists):
            degenerate = value.exact == 0
        else:
            degenerate = float(value) < 2.0 ** -40 and all(sign(d) == 0 for d in dists)
        if degenerate:
            raise DegenerateRank(f"L({tuple(X)}) = 0: ^tA X is an integer vector", witness=X)
        return WeightedValue(value), tuple(p)

    @staticmethod
    def _float_L(coords: np.ndarray, A_float: np.ndarray, exponents: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Cotas inferior y superior en coma flotante de L sobre un bloque"""
        values = coords.astype(float)
        residual = values @ A_float
        frac = np.abs(residual - np.rint(residual))
        err = (np.abs(values) @ np.abs(A_float) + 1.0) * FLOAT_ERROR
        low = (np.maximum(frac - err, 0.0) ** exponents).max(axis=1) * (1 - 1e-12)
        high = (np.minimum(frac + err, 0.5) ** exponents).max(axis=1) * (1 + 1e-12)
        return low, high

    @staticmethod
    def _strictly_less(a: WeightedValue, b: WeightedValue) -> bool:
        try:
            return compare(a, b) == Ordering.LESS
        except PrecisionExhausted as e:
            logger.warning(f"⚠️ Comparison undecided at {e.bits} bits, treated as a tie")
            return False

    # ------------------------------------------------------------------
    # Rango del grupo ^tA Z^m + Z^n
    # ------------------------------------------------------------------

    def check_rank(self, A: TargetMatrix, height_bound: int = 100) -> RankReport:
        """maximal / degenerate(witness) / undecided"""
        if height_bound < 1:
            raise PreconditionViolation("height bound must be positive")
        if A.is_rational:
            return self._rational_rank(A)

        if A.n == 1:
            witness = self._pslq_relation(A, height_bound)
            if witness is not None:
                logger.info(f"🔍 Integer relation found by PSLQ: {witness}")
                return RankReport(RankStatus.DEGENERATE, witness, height_bound, "pslq")
        witness = self._box_relation(A, height_bound)
        if witness is not None:
            logger.info(f"🔍 Integer relation found by box search: {witness}")
            return RankReport(RankStatus.DEGENERATE, witness, height_bound, "box_search")
        logger.warning(f"⚠️ Rank undecided up to height {height_bound}; treated as maximal")
        return RankReport(RankStatus.UNDECIDED, None, height_bound, "pslq" if A.n == 1 else "box_search")

    def _rational_rank(self, A: TargetMatrix) -> RankReport:
        entries = A.as_fractions()
        D = math.lcm(*(x.denominator for row in entries for x in row))
        scaled = [[int(x * D) for x in row] for row in entries]
        fallback = tuple(D if i == 0 else 0 for i in range(A.m))
        largest = max(abs(x) for row in scaled for x in row) or 1
        if largest * D * A.m >= 1 << 62:
            return RankReport(RankStatus.DEGENERATE, fallback, D, "denominator")

        # ^tA x en Z^n  <=>  (D ^tA) x = 0 mod D
        matrix = np.array(scaled, dtype=np.int64)
        examined = 0
        for h in range(1, D + 1):
            for axes in shell_pieces([h - 1] * A.m, [h] * A.m):
                examined += math.prod(len(a) for a in axes)
                if examined > self.config.budget:
                    return RankReport(RankStatus.DEGENERATE, fallback, D, "denominator")
                hits = []
                for coords in product_chunks(axes, self.config.chunk_size):
                    coords = coords[canonical_mask(coords)]
                    ok = np.all((coords @ matrix) % D == 0, axis=1)
                    hits += [tuple(int(v) for v in x) for x in coords[ok]]
                if hits:
                    return RankReport(RankStatus.DEGENERATE, min(hits), D, "integer_relation")
        return RankReport(RankStatus.DEGENERATE, fallback, D, "denominator")

    def _pslq_relation(self, A: TargetMatrix, height_bound: int) -> Optional[Tuple[int, ...]]:
        column = [A.entry(i, 0) for i in range(A.m)]
        with mpmath.workdps(80):
            values = []
            for x in column:
                lo, hi = x.enclose(Fraction(1, 1 << 240))
                mid = (lo + hi) / 2
                values.append(mpmath.mpf(mid.numerator) / mid.denominator)
            relation = mpmath.pslq(values + [mpmath.mpf(1)], maxcoeff=height_bound, maxsteps=10 ** 5)
        if relation is None or not any(relation[:-1]):
            return None
        x = [int(v) for v in relation[:-1]]
        if sign(CertReal.dot(column, x, relation[-1])) != 0:
            return None
        first = next(v for v in x if v != 0)
        return tuple(v if first > 0 else -v for v in x)

    def _box_relation(self, A: TargetMatrix, height_bound: int) -> Optional[Tuple[int, ...]]:
        A_float = A.to_float()
        examined = 0
        for h in range(1, height_bound + 1):
            hits = []
            for axes in shell_pieces([h - 1] * A.m, [h] * A.m):
                examined += math.prod(len(a) for a in axes)
                if examined > self.config.budget:
                    logger.warning(f"⚠️ Relation search stopped at height {h - 1} (budget)")
                    return None
                for coords in product_chunks(axes, self.config.chunk_size):
                    coords = coords[canonical_mask(coords)]
                    values = coords.astype(float) @ A_float
                    near = np.all(np.abs(values - np.rint(values)) < 1e-9 * (1 + np.abs(values)), axis=1)
                    for x in coords[near]:
                        x = tuple(int(v) for v in x)
                        if all(sign(distance_to_integers(v)[0]) == 0 for v in A.transpose().apply(x)):
                            hits.append(x)
            if hits:
                return min(hits)
        return None

    # ------------------------------------------------------------------
    # Construcción de la sucesión
    # ------------------------------------------------------------------

    def compute_best_approx(
        self,
        A: TargetMatrix,
        s: WeightVector,
        r: WeightVector,
        N_bound,
        tie_break: TieBreak = "lex",
    ) -> BestApproxSequence:
        """Todas las mejores aproximaciones con N(X) <= N_bound, por capas (0,1], (1,2], (2,4], ..."""
        if s.dim != A.m or r.dim != A.n:
            raise PreconditionViolation(f"weights must have lengths m={A.m}, n={A.n}")
        if tie_break not in ("lex", "revlex"):
            raise PreconditionViolation(f"unknown tie-break {tie_break!r}")
        bound = _as_bound(N_bound)
        logger.info(f"🔄 Best approximations of {A.label or 'A'} up to N = {bound} ({A.m}x{A.n})")

        edges = [Fraction(0)]
        edge = Fraction(1)
        while edge < bound:
            edges.append(edge)
            edge *= 2
        if bound > 0:
            edges.append(bound)
        radii = [s.box_radii(e) for e in edges]

        A_float = A.to_float()
        exponents = np.array([1 / float(w) for w in r.weights])
        order_key = (lambda x: x) if tie_break == "lex" else (lambda x: tuple(-v for v in x))
        entries: List[BestApproxEntry] = []
        best: Optional[WeightedValue] = None
        m0: Optional[WeightedValue] = None
        examined = 0

        for k in range(1, len(edges)):
            inner, outer = radii[k - 1], radii[k]
            pieces = canonical_pieces(shell_pieces(inner, outer))
            size = sum(math.prod(len(a) for a in axes) for axes in pieces)
            if examined + size > self.config.budget:
                logger.warning(f"⚠️ Budget reached after {len(entries)} entries (N <= {edges[k - 1]})")
                raise BudgetExceeded(f"shell N <= {edges[k]} needs {examined + size} candidates",
                                     partial_count=len(entries), budget=self.config.budget)
            examined += size
            threshold = math.inf if best is None else float(best) * (1 + 1e-9) + 1e-300

            survivors = []
            for axes in pieces:
                for coords in product_chunks(axes, self.config.chunk_size):
                    if not len(coords):
                        continue
                    low, _ = self._float_L(coords, A_float, exponents)
                    keep = low <= threshold
                    for x, lo in zip(coords[keep], low[keep]):
                        x = tuple(int(v) for v in x)
                        survivors.append((s.norm_key(x), order_key(x), x, float(lo)))
            survivors.sort(key=lambda t: (t[0], t[1]))

            for key, group in itertools.groupby(survivors, key=lambda t: t[0]):
                group_best = None
                for _, _, x, lo in group:
                    if best is not None and lo > float(best) * (1 + 1e-9):
                        continue
                    M, p = self.evaluate(A, x, r)
                    if group_best is None or self._strictly_less(M, group_best[1]):
                        group_best = (x, M, p)
                if group_best is None:
                    continue
                x, M, p = group_best
                if best is None or self._strictly_less(M, best):
                    best = M
                    entries.append(BestApproxEntry(x, integer_weighted_norm(x, s), M, p, key))
                    logger.debug(f"📊 Record {len(entries)}: X={x} Y={float(entries[-1].Y):.6g} M={float(M):.6g}")
            if edges[k] == 1:
                m0 = best
            logger.debug(f"📊 Shell N <= {edges[k]}: {len(survivors)} survivors, {len(entries)} entries")

        logger.info(f"✅ {len(entries)} best approximations, {examined} candidates examined")
        return BestApproxSequence(
            entries=entries,
            exhausted_up_to=bound,
            s=s,
            r=r,
            target=A.label,
            m0=m0,
            tie_break=tie_break,
            candidates_examined=examined,
        )

    # ------------------------------------------------------------------
    # Verificaciones
    # ------------------------------------------------------------------

    def verify_sequence(self, A: TargetMatrix, seq: BestApproxSequence) -> SequenceCheck:
        """Monotonía estricta y minimalidad por enumeración completa de la caja N <= exhausted_up_to"""
        entries = seq.entries
        violations = []
        for i in range(1, len(entries)):
            if entries[i].key <= entries[i - 1].key:
                violations.append({"index": i, "property": "Y_increasing"})
            if not self._strictly_less(entries[i].M, entries[i - 1].M):
                violations.append({"index": i, "property": "M_decreasing"})
        monotone = not violations

        radii = seq.s.box_radii(seq.exhausted_up_to)
        axes = [np.arange(-c, c + 1, dtype=np.int64) for c in radii]
        total = math.prod(len(a) for a in axes)
        if total > self.config.budget:
            raise BudgetExceeded(f"verification box needs {total} candidates", partial_count=0, budget=self.config.budget)

        keys = [e.key for e in entries]
        M_high = np.array([float(e.M) * (1 + 1e-9) for e in entries] + [math.inf])
        A_float = A.to_float()
        exponents = np.array([1 / float(w) for w in seq.r.weights])
        checked = 0
        minimal = True
        for coords in product_chunks(axes, self.config.chunk_size):
            coords = coords[canonical_mask(coords)]
            if not len(coords):
                continue
            checked += len(coords)
            low, _ = self._float_L(coords, A_float, exponents)
            for x, lo in zip(coords, low):
                x = tuple(int(v) for v in x)
                index = int(np.searchsorted(keys, seq.s.norm_key(x), side="right")) - 1
                if index < 0:
                    minimal = False
                    violations.append({"X": list(x), "property": "precedes_first_entry"})
                    continue
                if lo > M_high[index]:
                    continue
                M, _ = self.evaluate(A, x, seq.r)
                if self._strictly_less(M, entries[index].M):
                    minimal = False
                    violations.append({"X": list(x), "index": index, "property": "minimality"})

        if violations:
            logger.error(f"❌ Sequence check found {len(violations)} violations")
        else:
            logger.info(f"✅ Sequence verified on {checked} points")
        return SequenceCheck(monotone=monotone, minimal=minimal, checked_points=checked, violations=violations)

    def verify_geometric_growth(self, seq: BestApproxSequence, s: WeightVector, r: WeightVector) -> GrowthReport:
        """Y_{i+V} >= 2 Y_i con U^delta > 3 y V = 2 U^m; ajuste empírico de Y_i >= c gamma^i"""
        delta = min(s.delta, r.delta)
        U = 2
        while U ** delta.numerator <= 3 ** delta.denominator:
            U += 1
        V = 2 * U ** s.dim
        if len(seq.entries) < V + 1:
            raise InsufficientData(f"growth check needs at least {V + 1} entries, got {len(seq.entries)}")

        power = s.key_power
        keys = [e.key for e in seq.entries]
        violations = [i for i in range(len(keys) - V) if keys[i + V] < 2 ** power * keys[i]]
        log_Y = seq.log_Y
        index = np.arange(len(log_Y), dtype=float)
        gamma = 2.0 ** (1.0 / V)
        c = float(np.exp(np.min(log_Y - index * math.log(gamma))))
        slope = float(np.polyfit(index, log_Y, 1)[0])

        if violations:
            logger.error(f"❌ Growth violated at indices {violations[:10]}")
        logger.info(f"📊 Growth: U={U} V={V} fitted gamma={math.exp(slope):.4f}")
        return GrowthReport(
            delta=delta,
            U=U,
            V=V,
            c=c,
            gamma=gamma,
            fitted_gamma=math.exp(slope),
            checked_pairs=len(keys) - V,
            violations=violations,
        )

    def subsequence_extract(
        self,
        seq: Union[BestApproxSequence, Sequence],
        R,
        count: Optional[int] = None,
    ) -> SubsequenceMap:
        """phi(0) = 0, phi(k+1) = menor j con Y_j >= R Y_phi(k); índices en base 0"""
        R = as_cert(R)
        if compare_reals(R, 1) != Ordering.GREATER:
            raise PreconditionViolation("R must be greater than 1")
        if isinstance(seq, BestApproxSequence):
            values = [e.Y.value for e in seq.entries]
        else:
            values = [as_cert(y) for y in seq]
        if not values:
            raise InsufficientData("empty sequence")

        indices = [0]
        j = 1
        while j < len(values) and (count is None or len(indices) < count):
            if compare_reals(values[j], R * values[indices[-1]]) != Ordering.LESS:
                indices.append(j)
            j += 1
        truncated = len(indices) < 2 or (count is not None and len(indices) < count)

        violations = []
        for a, b in zip(indices, indices[1:]):
            if compare_reals(values[b], R * values[a]) == Ordering.LESS:
                violations.append({"k": a, "property": "growth"})
            if compare_reals(R * values[a + 1], values[b]) == Ordering.LESS:
                violations.append({"k": a, "property": "next_entry"})
        if truncated:
            logger.warning(f"⚠️ Subsequence truncated after {len(indices)} indices")
        return SubsequenceMap(indices=tuple(indices), R=R.exact if R.is_exact else Fraction(float(R)),
                              truncated=truncated, violations=violations)
