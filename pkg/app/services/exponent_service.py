"""
ExponentService - Estimadores de exponentes diofánticos
Ordinario/uniforme x ponderado/multiplicativo x homogéneo/inhomogéneo,
por sucesiones de mejores aproximaciones, por la serie de Liouville
o por búsqueda directa sobre una malla geométrica de escalas T
"""
import logging
import math
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import BudgetExceeded, InsufficientData, PreconditionViolation
from app.core.numerics import (
    CertReal,
    Ordering,
    WeightVector,
    as_cert,
    certify_power_bound,
    compare_reals,
    distance_to_integers,
    liouville_parameters,
    rational_floor,
)
from app.services.bestapprox_service import BestApproxService, canonical_mask, product_chunks, shell_pieces
from app.services.types import (
    BestApproxSequence,
    EnumerationConfig,
    ExponentEstimate,
    ExponentKind,
    ExponentMode,
    GridConfig,
    NormKind,
    ScalePoint,
    TargetMatrix,
    Witness,
)

logger = logging.getLogger("exponent_service")

# Resolución de los escalones de T en los testigos de sucesiones
_T_NUDGE = Fraction(1, 1 << 30)


def _is_homogeneous(theta: Optional[Sequence]) -> bool:
    if theta is None:
        return True
    values = [as_cert(t) for t in theta]
    return all(v.is_exact and v.exact == 0 for v in values)


def _tail_mask(log_scale: np.ndarray) -> np.ndarray:
    """Cola de los datos: log T >= (log T_min + log T_max) / 2"""
    return log_scale >= (log_scale.min() + log_scale.max()) / 2


class ExponentService:
    """
    Estimación de exponentes con cotas inferiores respaldadas por testigos exactos
    Las estimaciones puntuales son evidencia sobre datos finitos, nunca límites
    """

    def __init__(self, grid: GridConfig = None, config: EnumerationConfig = None):
        self.grid = grid or GridConfig()
        self.config = config or EnumerationConfig()
        self.bestapprox = BestApproxService(self.config)
        logger.info(f"ExponentService initialized - T in [{self.grid.tmin}, {self.grid.tmax}]")

    # ------------------------------------------------------------------
    # Despacho
    # ------------------------------------------------------------------

    def estimate(
        self,
        A: TargetMatrix,
        kind: ExponentKind,
        theta: Optional[Sequence] = None,
        s: Optional[WeightVector] = None,
        r: Optional[WeightVector] = None,
        seq: Optional[BestApproxSequence] = None,
        method: str = "auto",
    ) -> ExponentEstimate:
        if kind.norm == "multiplicative":
            return self.estimate_multiplicative(A, theta, mode=kind.mode)
        if kind.mode == "ordinary":
            return self.estimate_ordinary(A, theta, s, r, seq=seq, method=method)
        return self.estimate_uniform(A, theta, s, r, seq=seq, method=method)

    def estimate_pair(self, A: TargetMatrix, theta=None, s=None, r=None, method: str = "auto") -> Tuple[ExponentEstimate, ExponentEstimate]:
        """(omega, omega_hat) sobre los mismos datos"""
        s, r = self._weights(A, s, r)
        homogeneous = _is_homogeneous(theta)
        if method == "grid" or (not homogeneous and method == "auto"):
            profile = self.scale_profile(A, theta, s, r)
            return (self._grid_estimate(A, theta, s, r, "ordinary", "weighted", profile),
                    self._grid_estimate(A, theta, s, r, "uniform", "weighted", profile))
        seq = None
        if method in ("auto", "sequence") and homogeneous and self._series_parameters(A, theta) is None:
            seq = self.homogeneous_sequence(A, s, r)
        return (self.estimate_ordinary(A, theta, s, r, seq=seq, method=method),
                self.estimate_uniform(A, theta, s, r, seq=seq, method=method))

    def homogeneous_sequence(self, A: TargetMatrix, s: WeightVector, r: WeightVector, N_bound=None) -> BestApproxSequence:
        """Mejores aproximaciones de ^tA con pesos (r, s): X = q en Z^n, N = ||q||_r, L = ||Aq - p||_s"""
        return self.bestapprox.compute_best_approx(A.transpose(), r, s, N_bound if N_bound is not None else self.grid.tmax)

    def estimate_ordinary(self, A, theta=None, s=None, r=None, seq: Optional[BestApproxSequence] = None,
                          method: str = "auto") -> ExponentEstimate:
        return self._estimate(A, theta, s, r, seq, method, "ordinary")

    def estimate_uniform(self, A, theta=None, s=None, r=None, seq: Optional[BestApproxSequence] = None,
                         method: str = "auto") -> ExponentEstimate:
        return self._estimate(A, theta, s, r, seq, method, "uniform")

    def estimate_multiplicative(self, A: TargetMatrix, theta: Optional[Sequence] = None,
                                mode: ExponentMode = "ordinary") -> ExponentEstimate:
        """Búsqueda directa con Pi_+(q) < T y Pi(Aq - p - theta) < T^(-omega)"""
        s, r = WeightVector.uniform(A.m), WeightVector.uniform(A.n)
        return self._grid_estimate(A, theta, s, r, mode, "multiplicative")

    def _weights(self, A: TargetMatrix, s, r) -> Tuple[WeightVector, WeightVector]:
        s = s or WeightVector.uniform(A.m)
        r = r or WeightVector.uniform(A.n)
        if s.dim != A.m or r.dim != A.n:
            raise PreconditionViolation(f"weights must have lengths m={A.m}, n={A.n}")
        return s, r

    def _series_parameters(self, A: TargetMatrix, theta) -> Optional[Tuple[int, int]]:
        if A.m != 1 or A.n != 1 or not _is_homogeneous(theta):
            return None
        return liouville_parameters(A.entry(0, 0))

    def _estimate(self, A, theta, s, r, seq, method, mode: ExponentMode) -> ExponentEstimate:
        s, r = self._weights(A, s, r)
        if method not in ("auto", "sequence", "grid", "series"):
            raise PreconditionViolation(f"unknown estimation method {method!r}")
        homogeneous = _is_homogeneous(theta)
        series = self._series_parameters(A, theta)
        if series is not None and method in ("auto", "series"):
            return self._series_estimate(series, mode)
        if homogeneous and method in ("auto", "sequence"):
            if seq is None:
                seq = self.homogeneous_sequence(A, s, r)
            return self._sequence_estimate(seq, mode)
        if method == "sequence":
            raise PreconditionViolation("the sequence path only applies to homogeneous targets")
        return self._grid_estimate(A, theta, s, r, mode, "weighted")

    # ------------------------------------------------------------------
    # Camino por sucesiones (caso homogéneo)
    # ------------------------------------------------------------------

    def _sequence_estimate(self, seq: BestApproxSequence, mode: ExponentMode) -> ExponentEstimate:
        entries = [e for e in seq.entries if e.key > 1]
        kind = ExponentKind(mode, "weighted", "homogeneous")
        if len(entries) < 3:
            raise InsufficientData(f"sequence path needs at least 3 entries with Y > 1, got {len(entries)}")
        log_Y = np.array([e.Y.log_float() for e in entries])
        log_M = np.array([e.M.log_float() for e in entries])
        dirichlet = all(
            compare_reals(a.M.value * b.Y.value, 1) == Ordering.LESS
            for a, b in zip(seq.entries, seq.entries[1:])
        )
        notes = ["finite-data estimate"]
        if dirichlet:
            notes.append("dirichlet certified: M_k * Y_(k+1) < 1 for every k")

        if mode == "ordinary":
            ratios = -log_M / log_Y
            tail = _tail_mask(log_Y)
            # -log M = omega log Y + c en la cola
            fit = tail if tail.sum() >= 3 else np.ones_like(tail)
            point = float(np.polyfit(log_Y[fit], -log_M[fit], 1)[0])
            if dirichlet:
                point = max(point, 1.0)
            witness_pairs = [(e, self._just_above(e.Y.value)) for e, keep in zip(entries, tail) if keep]
            scale_log = log_Y
        else:
            pairs = [(a, b) for a, b in zip(seq.entries, seq.entries[1:]) if b.key > 1]
            if len(pairs) < 2:
                raise InsufficientData("uniform estimate needs at least 2 consecutive pairs")
            log_next = np.array([b.Y.log_float() for _, b in pairs])
            ratios = -np.array([a.M.log_float() for a, _ in pairs]) / log_next
            tail = _tail_mask(log_next)
            point = float(ratios[tail].min())
            witness_pairs = [(a, self._just_below(b.Y.value)) for (a, b), keep in zip(pairs, tail) if keep]
            scale_log = log_next

        capped = point > float(self.grid.cap)
        lower = rational_floor(min(float(ratios[tail].min()), point))
        witnesses = []
        for entry, T in witness_pairs:
            if T <= 1:
                continue
            if certify_power_bound(entry.M.value, T, lower):
                witnesses.append(Witness(T, entry.p_witness, entry.X, lower, "best_approx"))
            else:
                notes.append(f"witness at T={T} not certified for {lower}")
        if dirichlet and lower < 1:
            lower = Fraction(1)
            witnesses = [Witness(self._just_below(b.Y.value), a.p_witness, a.X, Fraction(1), "dirichlet")
                         for a, b in zip(seq.entries, seq.entries[1:]) if b.key > 1]
        if not witnesses:
            lower = Fraction(0)
            notes.append("no certified witness; lower bound reset to 0")

        tail_start = float(np.exp(scale_log[tail].min()))
        estimate = ExponentEstimate(
            kind=kind,
            lower_bound=lower,
            point_estimate=math.inf if capped else point,
            T_range=(entries[0].Y.value.exact if entries[0].Y.value.is_exact else Fraction(float(entries[0].Y)),
                     seq.exhausted_up_to),
            witnesses=witnesses,
            capped=capped,
            slack=self._slack(tail_start),
            method="sequence",
            notes=notes,
        )
        logger.info(f"📊 {kind.label}: lower {lower} point {estimate.point_estimate:.4f} ({len(entries)} entries)")
        return estimate

    @staticmethod
    def _just_above(value: CertReal) -> Fraction:
        if value.is_exact:
            return value.exact + _T_NUDGE
        _, hi = value.enclose(_T_NUDGE)
        return hi + _T_NUDGE

    @staticmethod
    def _just_below(value: CertReal) -> Fraction:
        if value.is_exact:
            return value.exact
        lo, _ = value.enclose(_T_NUDGE)
        return lo

    # ------------------------------------------------------------------
    # Camino por la serie de Liouville
    # ------------------------------------------------------------------

    def _series_estimate(self, parameters: Tuple[int, int], mode: ExponentMode) -> ExponentEstimate:
        """q_k = b^(k!), p_k = b^(k!) S_k, residuo < b^(k! + 2 - (k+1)!)"""
        base, digit = parameters
        kind = ExponentKind(mode, "weighted", "homogeneous")
        cap = self.grid.cap
        ks, ordinary, uniform = [], [], []
        k = 2
        while True:
            f, g = math.factorial(k), math.factorial(k + 1)
            ks.append(k)
            ordinary.append(Fraction(g - f - 2, f + 1))
            uniform.append(Fraction(g - f - 2, g))
            if ordinary[-1] > cap or k >= 60:
                break
            k += 1

        witnesses = []
        if mode == "ordinary":
            lower = max(ordinary)
            for k, omega in zip(ks, ordinary):
                f = math.factorial(k)
                witnesses.append(self._series_witness(base, digit, k, f + 1, omega))
            capped = lower > cap
            point = math.inf if capped else float(lower)
        else:
            tail = ks[len(ks) // 2:]
            lower = min(uniform[len(ks) // 2:])
            for k in tail:
                witnesses.append(self._series_witness(base, digit, k, math.factorial(k + 1), lower))
            capped = False
            point = max(1.0, float(min(uniform[len(ks) // 2:])))

        estimate = ExponentEstimate(
            kind=kind,
            lower_bound=lower,
            point_estimate=point,
            T_range=(f"{base}^{math.factorial(ks[0]) + 1}", f"{base}^{math.factorial(ks[-1] + 1)}"),
            witnesses=witnesses,
            capped=capped,
            slack=self.grid.truncation_slack,
            method="series",
            notes=[f"liouville({digit},{base}) series truncation at k = {ks[0]}..{ks[-1]}"],
        )
        logger.info(f"📊 {kind.label}: series lower {float(lower):.4f} capped={capped}")
        return estimate

    def _series_witness(self, base: int, digit: int, k: int, T_power: int, omega: Fraction) -> Witness:
        """
        Testigo de truncación de la serie en el término k.

        Los primeros términos se certifican numéricamente. Para el resto basta la cota
        exacta de la cola: digit * sum_{j>k} b^(k! - j!) < b^(k! + 1 - (k+1)!), de modo
        que |q x - p| < T^(-omega) si T_power * omega <= (k+1)! - k! - 1 y q = b^(k!) < T.
        """
        f, g = math.factorial(k), math.factorial(k + 1)
        if g <= 120:
            q = base ** f
            p = sum(digit * base ** (f - math.factorial(j)) for j in range(1, k + 1))
            residual = abs(CertReal.liouville(base, digit) * q - p)
            if certify_power_bound(residual, Fraction(base) ** T_power, omega, cap_bits=2048):
                return Witness(Fraction(base) ** T_power, (p,), (q,), omega, "series_truncation+certified")
        if f < T_power and T_power * omega <= g - f - 1:
            source = "series_truncation+tail_bound"
        else:
            source = "series_truncation+uncertified"
            logger.warning(f"⚠️ series witness at k={k} is not certified by the tail bound")
        return Witness(f"{base}^{T_power}", f"sum_(j<={k}) {digit}*{base}^({f}-j!)", f"{base}^{f}", omega, source)

    # ------------------------------------------------------------------
    # Camino por malla de escalas
    # ------------------------------------------------------------------

    def _candidates(self, A: TargetMatrix, r: WeightVector, T_max: Fraction, norm: NormKind, homogeneous: bool) -> np.ndarray:
        if norm == "weighted":
            radii = r.box_radii(T_max, strict=True)
            pieces = shell_pieces([0] * A.n, radii)
            total = sum(math.prod(len(a) for a in axes) for axes in pieces)
            if total > self.config.budget:
                raise BudgetExceeded(f"grid search needs {total} candidates", partial_count=0, budget=self.config.budget)
            blocks = [c for axes in pieces for c in product_chunks(axes, self.config.chunk_size)]
            coords = np.concatenate(blocks) if blocks else np.zeros((0, A.n), dtype=np.int64)
        else:
            coords = self._hyperbolic_cross(A.n, T_max)
        if homogeneous and len(coords):
            coords = coords[canonical_mask(coords)]
        return coords

    def _hyperbolic_cross(self, n: int, T: Fraction) -> np.ndarray:
        """{q != 0 : prod max(1, |q_j|) < T}"""
        blocks, count = [], 0

        def extend(prefix: List[int], product: int):
            nonlocal count
            limit = math.ceil(T / product) - 1
            if len(prefix) == n - 1:
                values = np.arange(-limit, limit + 1, dtype=np.int64)
                block = np.column_stack([np.tile(np.array(prefix, dtype=np.int64), (len(values), 1)), values]) \
                    if prefix else values[:, None]
                count += len(block)
                if count > self.config.budget:
                    raise BudgetExceeded(f"hyperbolic cross exceeds {self.config.budget} candidates",
                                         partial_count=0, budget=self.config.budget)
                blocks.append(block)
                return
            for v in range(-limit, limit + 1):
                extend(prefix + [v], product * max(1, abs(v)))

        extend([], 1)
        coords = np.concatenate(blocks)
        return coords[np.any(coords != 0, axis=1)]

    def scale_profile(self, A: TargetMatrix, theta=None, s: Optional[WeightVector] = None, r: Optional[WeightVector] = None,
                      norm: NormKind = "weighted", scales: Optional[Sequence[Fraction]] = None,
                      inclusive: bool = False) -> List[ScalePoint]:
        """D(T) = min residuo sobre ||q|| < T (o <= T si inclusive) en cada escala de la malla"""
        s, r = self._weights(A, s, r)
        points = sorted(Fraction(T) for T in scales) if scales is not None else self.grid.points()
        if not points:
            raise InsufficientData("empty T-grid")
        if points[0] <= 1:
            raise PreconditionViolation("scales must be greater than 1")
        if inclusive:
            points_max = points[-1] * (1 + Fraction(1, 1 << 20))
        else:
            points_max = points[-1]
        homogeneous = _is_homogeneous(theta)
        coords = self._candidates(A, r, points_max, norm, homogeneous)
        if not len(coords):
            raise InsufficientData("no integer vector below the largest scale")
        logger.info(f"🔍 Grid search over {len(coords)} vectors, {len(points)} scales ({norm})")

        values = coords.astype(float)
        shift = np.array([float(as_cert(t)) for t in theta]) if theta is not None else np.zeros(A.m)
        image = values @ A.to_float().T - shift
        dist = np.abs(image - np.rint(image))
        if norm == "weighted":
            residual = (dist ** np.array([1 / float(w) for w in s.weights])).max(axis=1)
            with np.errstate(divide="ignore"):
                size = (np.log(np.abs(values)) / np.array([float(w) for w in r.weights])).max(axis=1)
        else:
            residual = dist.prod(axis=1)
            size = np.log(np.maximum(np.abs(values), 1.0)).sum(axis=1)

        order = np.argsort(size, kind="stable")
        size, residual, coords = size[order], residual[order], coords[order]
        prefix = np.minimum.accumulate(residual)
        positions = np.where(residual == prefix, np.arange(len(residual)), 0)
        argmin = np.maximum.accumulate(positions)

        profile = []
        for T in points:
            log_T = math.log(float(T))
            if inclusive:
                cut = int(np.searchsorted(size, log_T * (1 + 1e-12), side="right"))
            else:
                cut = int(np.searchsorted(size, log_T * (1 - 1e-12), side="left"))
            if cut == 0:
                continue
            best = float(prefix[cut - 1])
            omega = math.inf if best == 0 else -math.log(best) / log_T
            profile.append(ScalePoint(T, best, omega, tuple(int(v) for v in coords[argmin[cut - 1]])))
        return profile

    def exact_residual(self, A: TargetMatrix, theta, q: Sequence[int], s: WeightVector, norm: NormKind) -> Tuple[CertReal, Tuple[int, ...]]:
        dists, p = [], []
        for value in A.apply(q, theta):
            d, nearest = distance_to_integers(value)
            dists.append(d)
            p.append(nearest)
        if norm == "weighted":
            return CertReal.maximum([d.power(1 / w) for d, w in zip(dists, s.weights)]), tuple(p)
        product = CertReal.rational(1)
        for d in dists:
            product = product * d
        return product, tuple(p)

    def _certify(self, A, theta, s, r, point: ScalePoint, omega: Fraction, norm: NormKind, source: str) -> Optional[Witness]:
        q = point.q
        if norm == "weighted":
            if r.norm_key(q) >= point.T ** r.key_power:
                return None
        elif math.prod(max(1, abs(v)) for v in q) >= point.T:
            return None
        residual, p = self.exact_residual(A, theta, q, s, norm)
        if not certify_power_bound(residual, point.T, omega):
            return None
        return Witness(point.T, p, q, omega, source)

    def _grid_estimate(self, A, theta, s, r, mode: ExponentMode, norm: NormKind,
                       profile: Optional[List[ScalePoint]] = None) -> ExponentEstimate:
        s, r = self._weights(A, s, r)
        homogeneous = _is_homogeneous(theta)
        kind = ExponentKind(mode, norm, "homogeneous" if homogeneous else "inhomogeneous")
        if profile is None:
            profile = self.scale_profile(A, theta, s, r, norm)

        def certify(point: ScalePoint, omega: Fraction, source: str) -> Optional[Witness]:
            return self._certify(A, theta, s, r, point, omega, norm, source)

        return self.estimate_from_profile(kind, profile, certify, dirichlet=homogeneous and norm == "weighted")

    def estimate_from_profile(
        self,
        kind: ExponentKind,
        profile: List[ScalePoint],
        certify: Callable[[ScalePoint, Fraction, str], Optional[Witness]],
        dirichlet: bool = False,
    ) -> ExponentEstimate:
        """
        Cola del perfil: max (ordinario) o min (uniforme) de omega_T, con testigos certificados
        Con desplazamiento el ordinario es la pendiente de -log D(T) frente a log T
        """
        if not profile:
            raise InsufficientData("the T-grid produced no scale with candidates")
        log_T = np.array([math.log(float(p.T)) for p in profile])
        omegas = np.array([p.omega for p in profile])
        tail = _tail_mask(log_T)
        cap = float(self.grid.cap)
        tail_values = np.minimum(omegas[tail], cap * 2)
        point = float(tail_values.max() if kind.mode == "ordinary" else tail_values.min())
        residuals = np.array([p.residual for p in profile])
        fit_error = 0.0
        if kind.mode == "ordinary" and kind.shift == "inhomogeneous" and len(profile) >= 4 and np.all(residuals > 0):
            # -log D(T) = omega log T + c sobre todo el perfil; el máximo de la cola queda como tope
            coefficients, covariance = np.polyfit(log_T, -np.log(residuals), 1, cov=True)
            point = min(point, float(coefficients[0]))
            fit_error = 2 * math.sqrt(max(float(covariance[0, 0]), 0.0))
        capped = point > cap
        lower = self.grid.cap if capped else rational_floor(point)

        tail_points = [p for p, keep in zip(profile, tail) if keep]
        candidates = tail_points if kind.mode == "uniform" else [p for p in tail_points if p.omega >= float(lower)]
        witnesses, notes = [], ["finite-data estimate"]
        for sp in candidates:
            witness = certify(sp, lower, "grid_search")
            if witness is None:
                notes.append(f"witness at T={sp.T} not certified for {lower}")
            else:
                witnesses.append(witness)
        if not witnesses:
            lower = Fraction(0)
            notes.append("no certified witness; lower bound reset to 0")
        if dirichlet and lower < 1 <= point:
            certificates = [certify(sp, Fraction(1), "dirichlet") for sp in tail_points]
            if all(w is not None for w in certificates):
                lower, witnesses = Fraction(1), certificates
                notes.append("dirichlet certified on the tail: D(T) < T^-1")

        tail_start = float(tail_points[0].T)
        estimate = ExponentEstimate(
            kind=kind,
            lower_bound=lower,
            point_estimate=math.inf if capped else point,
            T_range=(profile[0].T, profile[-1].T),
            witnesses=witnesses,
            capped=capped,
            slack=self._slack(tail_start) + fit_error,
            method="grid",
            profile=profile,
            notes=notes,
        )
        logger.info(f"📊 {kind.label}: lower {lower} point {estimate.point_estimate:.4f} ({len(profile)} scales)")
        return estimate

    def _slack(self, tail_start: float) -> float:
        """Resolución de la malla en el exponente más la holgura de truncación"""
        if tail_start <= 1:
            return self.grid.truncation_slack
        return math.log(float(self.grid.ratio)) / math.log(tail_start) + self.grid.truncation_slack
