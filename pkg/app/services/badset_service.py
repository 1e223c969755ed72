"""
BadsetService - Construcción de Cantor y certificados Bad^epsilon
Descenso por cajas anidadas, subsucesiones de crecimiento R y comprobación
exhaustiva en una ventana finita de ||p||_s ||^tA p - q - theta||_r >= epsilon
"""
import itertools
import logging
import math
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import (
    BudgetExceeded,
    DegenerateRank,
    InsufficientData,
    PrecisionExhausted,
    PreconditionViolation,
    TheoremViolation,
)
from app.core.numerics import (
    CertReal,
    Ordering,
    WeightVector,
    as_cert,
    compare_reals,
    distance_to_integers,
    integer_weighted_norm,
    sign,
)
from app.services.bestapprox_service import product_chunks, shell_pieces
from app.services.exponent_service import ExponentService
from app.services.types import (
    BadCertificate,
    BestApproxSequence,
    BorelCantelliReport,
    CantorLevel,
    CantorState,
    RankStatus,
    Selector,
    TargetMatrix,
    WindowCheck,
)

logger = logging.getLogger("badset_service")

# c mínima con la que se elige R(alpha)
_C_TARGET = Fraction(1, 10)
# Margen relativo del prefiltro de la ventana
_WINDOW_MARGIN = 1e-6


def _check_alpha(alpha) -> Fraction:
    alpha = Fraction(alpha)
    if not 0 < alpha < Fraction(1, 2):
        raise PreconditionViolation(f"alpha must lie in (0, 1/2), got {alpha}")
    return alpha


def cantor_constant(alpha, R, n: int, delta) -> CertReal:
    """c = 1 - 2 alpha - 3 n R^(-delta_r)"""
    return 1 - 2 * Fraction(alpha) - CertReal.rational(Fraction(R)).power(-Fraction(delta)) * (3 * n)


def radius_for_alpha(alpha, n: int, delta) -> Fraction:
    """Menor potencia de 2 con c >= 1/10"""
    alpha = _check_alpha(alpha)
    if 1 - 2 * alpha <= _C_TARGET:
        raise PreconditionViolation(f"no R gives c >= {_C_TARGET} for alpha = {alpha}")
    R = Fraction(2)
    while compare_reals(cantor_constant(alpha, R, n, delta), _C_TARGET) == Ordering.LESS:
        R *= 2
    return R


def epsilon_from_alpha(alpha, R, m: int, n: int, delta) -> CertReal:
    """epsilon = (1/R) (alpha^2 / (4mn))^(1/delta)"""
    alpha, R, delta = _check_alpha(alpha), Fraction(R), Fraction(delta)
    if R <= 1 or delta <= 0:
        raise PreconditionViolation(f"need R > 1 and delta > 0, got R={R}, delta={delta}")
    return CertReal.rational(alpha ** 2 / (4 * m * n)).power(1 / delta) / R


def epsilon_one(alpha, R, m: int, delta) -> CertReal:
    """epsilon_1 = R^(-1) (alpha / 2m)^(1/delta)"""
    alpha, R, delta = _check_alpha(alpha), Fraction(R), Fraction(delta)
    return CertReal.rational(alpha / (2 * m)).power(1 / delta) / R


def _lower(x: CertReal) -> Fraction:
    if x.is_exact:
        return x.exact
    magnitude = abs(Fraction(float(x))) or Fraction(1, 1 << 60)
    lo, _ = x.enclose(magnitude / (1 << 60))
    return lo


class BadsetService:
    """
    Puntos de S_alpha por el esquema de cajas anidadas y certificados de Bad^epsilon(^tA)
    """

    def __init__(self, exponents: ExponentService = None):
        self.exponents = exponents or ExponentService()
        self.bestapprox = self.exponents.bestapprox
        self.config = self.exponents.config
        logger.info("BadsetService initialized")

    # ------------------------------------------------------------------
    # Descenso de Cantor
    # ------------------------------------------------------------------

    @staticmethod
    def _sides(Y: CertReal, r: WeightVector) -> Tuple[Fraction, ...]:
        """Lados racionales de Pi(Y) = prod [0, Y^(-r_i)] (por defecto si son irracionales)"""
        return tuple(_lower(Y.power(-w)) for w in r.weights)

    def cantor_descend(
        self,
        ys: Sequence[Sequence[int]],
        alpha,
        r: WeightVector,
        depth: int,
        selector: Selector = "first",
        seed: Optional[int] = None,
        R=None,
    ) -> CantorState:
        """
        theta en la caja superviviente de nivel depth con dist(<y_j, theta>, Z) >= alpha para j < depth
        ys[0..depth]: la caja de nivel j es un trasladado de Pi(||y_j||_r); los hijos de nivel j+1
        se podan contra el funcional <y_j, .>
        """
        alpha = _check_alpha(alpha)
        n = r.dim
        if depth < 1:
            raise PreconditionViolation("depth must be at least 1")
        if len(ys) < depth + 1:
            raise InsufficientData(f"descent of depth {depth} needs {depth + 1} vectors, got {len(ys)}")
        ys = [tuple(int(v) for v in y) for y in ys[:depth + 1]]
        if any(len(y) != n or not any(y) for y in ys):
            raise PreconditionViolation(f"vectors y_k must be nonzero of length {n}")
        R = Fraction(R) if R is not None else radius_for_alpha(alpha, n, r.delta)
        c = cantor_constant(alpha, R, n, r.delta)
        if sign(c) <= 0:
            raise PreconditionViolation(f"c = 1 - 2 alpha - 3nR^(-delta) must be positive (alpha={alpha}, R={R})")

        L = r.key_power
        keys = [r.norm_key(y) for y in ys]
        for j in range(depth):
            if keys[j + 1] < R ** L * keys[j]:
                raise PreconditionViolation(f"ratio ||y_{j + 1}|| / ||y_{j}|| below R = {R}",
                                            {"k": j, "R": str(R)})
        Ys = [CertReal.rational(key).power(Fraction(1, L)) for key in keys]
        sides = [self._sides(Y, r) for Y in Ys]
        removal = 1 - CertReal.rational(R).power(-r.delta) * n

        rng = np.random.default_rng(seed) if selector == "random" else None
        corner = tuple(Fraction(0) for _ in range(n))
        levels: List[CantorLevel] = []
        logger.info(f"🔄 Cantor descent: depth {depth}, alpha {alpha}, R {R}, selector {selector}")
        for j in range(depth):
            parent, child, y = sides[j], sides[j + 1], ys[j]
            counts = [math.floor(p / h) for p, h in zip(parent, child)]
            children = math.prod(counts)
            if children > self.config.budget:
                raise BudgetExceeded(f"level {j} has {children} children", partial_count=0, budget=self.config.budget)
            base = sum((yi * ci for yi, ci in zip(y, corner)), Fraction(0))
            spread_lo = sum((min(0, yi * h) for yi, h in zip(y, child)), Fraction(0))
            spread_hi = sum((max(0, yi * h) for yi, h in zip(y, child)), Fraction(0))
            survivors = []
            for idx in itertools.product(*(range(k) for k in counts)):
                offset = base + sum((yi * i * h for yi, i, h in zip(y, idx, child)), Fraction(0))
                lo, hi = offset + spread_lo, offset + spread_hi
                if math.floor(lo - alpha) + 1 - alpha >= hi:
                    survivors.append(idx)
            if not survivors:
                raise TheoremViolation(f"no surviving child at level {j}", {"k": j, "children": children})

            ratio = Ys[j + 1] / Ys[j]
            survivor_bound = max(0, math.floor(_lower(c * ratio)))
            children_bound = max(0, math.floor(_lower(removal * ratio)))
            if len(survivors) < survivor_bound or children < children_bound:
                logger.error(f"❌ Level {j}: {len(survivors)} survivors / {children} children below "
                             f"bounds {survivor_bound} / {children_bound}")
                raise TheoremViolation(f"level {j} falls short of the guaranteed survivor count",
                                       {"k": j, "survivors": len(survivors), "survivor_bound": survivor_bound,
                                        "children": children, "children_bound": children_bound})
            levels.append(CantorLevel(j, float(Ys[j]), children, len(survivors), survivor_bound, children_bound))

            chosen = survivors[0] if rng is None else survivors[int(rng.integers(len(survivors)))]
            corner = tuple(ci + i * h for ci, i, h in zip(corner, chosen, child))
            logger.debug(f"Level {j}: {len(survivors)}/{children} survivors, corner {[str(t) for t in corner]}")

        for j in range(depth):
            value = sum((yi * t for yi, t in zip(ys[j], corner)), Fraction(0))
            if abs(value - round(value)) < alpha:
                raise TheoremViolation(f"emitted theta violates level {j}", {"k": j, "theta": [str(t) for t in corner]})
        logger.info(f"✅ Cantor descent finished: theta = {[str(t) for t in corner]}")
        return CantorState(corner, sides[depth], alpha, R, _lower(c), selector, levels)

    # ------------------------------------------------------------------
    # Ventana finita de Bad^epsilon
    # ------------------------------------------------------------------

    @staticmethod
    def negative_control_theta(A: TargetMatrix) -> Tuple[CertReal, ...]:
        """theta = frac(^tA e_1): (p, q) = (e_1, floor(^tA e_1)) anula el producto"""
        theta = []
        for j in range(A.n):
            value = A.entry(0, j)
            t = value - distance_to_integers(value)[1]
            theta.append(t if sign(t) >= 0 else t + 1)
        return tuple(theta)

    def window_check(self, A: TargetMatrix, s: WeightVector, r: WeightVector, theta: Sequence,
                     epsilon, check_bound) -> WindowCheck:
        """Comprueba ||p||_s ||^tA p - q - theta||_r >= epsilon para todo 0 < ||p||_s <= check_bound"""
        epsilon, check_bound = as_cert(epsilon), Fraction(check_bound)
        theta = tuple(as_cert(t) for t in theta)
        if len(theta) != A.n:
            raise PreconditionViolation(f"theta must have length n={A.n}")
        radii = s.box_radii(check_bound)
        pieces = shell_pieces([0] * A.m, radii)
        total = sum(math.prod(len(a) for a in axes) for axes in pieces)
        if total > self.config.budget:
            raise BudgetExceeded(f"window check needs {total} vectors p", partial_count=0, budget=self.config.budget)

        A_float = A.to_float()
        shift = np.array([float(t) for t in theta])
        s_inv = np.array([1 / float(w) for w in s.weights])
        r_inv = np.array([1 / float(w) for w in r.weights])
        eps_float = float(epsilon)
        min_product, worst, suspects = math.inf, None, []
        for axes in pieces:
            for coords in product_chunks(axes, self.config.chunk_size):
                values = coords.astype(float)
                image = values @ A_float - shift
                dist = np.abs(image - np.rint(image))
                products = (np.abs(values) ** s_inv).max(axis=1) * (dist ** r_inv).max(axis=1)
                i = int(np.argmin(products))
                if products[i] < min_product:
                    min_product = float(products[i])
                    worst = {"p": [int(v) for v in coords[i]], "q": [int(v) for v in np.rint(image[i])],
                             "product": min_product}
                mask = products <= eps_float * (1 + _WINDOW_MARGIN) + _WINDOW_MARGIN * eps_float
                suspects += [tuple(int(v) for v in x) for x in coords[mask]]

        failures, undecided = [], 0
        for p in suspects:
            residual = CertReal.maximum([
                distance_to_integers(CertReal.dot([A.entry(i, j) for i in range(A.m)], p, -theta[j]))[0].power(1 / w)
                for j, w in enumerate(r.weights)])
            product = integer_weighted_norm(p, s).value * residual
            try:
                if compare_reals(product, epsilon) == Ordering.LESS:
                    failures.append(p)
            except PrecisionExhausted:
                undecided += 1
        passed = not failures and undecided == 0
        if failures:
            worst = dict(worst or {}, failing_p=[list(p) for p in failures[:10]])
        logger.info(f"{'✅' if passed else '❌'} Window check up to {check_bound}: {total} vectors, "
                    f"min product {min_product:.6g} vs epsilon {eps_float:.6g}")
        return WindowCheck(passed, epsilon, check_bound, min_product, worst, total, undecided)

    # ------------------------------------------------------------------
    # Certificado completo
    # ------------------------------------------------------------------

    def growing_sequence(self, A: TargetMatrix, s: WeightVector, r: WeightVector, R: Fraction,
                         count: int) -> Tuple[BestApproxSequence, Tuple[int, ...], List[Dict[str, Any]]]:
        """Mejores aproximaciones de ^tA hasta obtener count índices de la subsucesión de crecimiento R"""
        bound = Fraction(self.exponents.grid.tmax)
        while True:
            seq = self.exponents.homogeneous_sequence(A, s, r, bound)
            sub = self.bestapprox.subsequence_extract(seq, R, count=count)
            if not sub.truncated:
                return seq, sub.indices, sub.violations
            logger.info(f"🔍 Subsequence has {len(sub.indices)}/{count} indices below {bound}; extending")
            bound *= 4

    def bad_certificate(
        self,
        A: TargetMatrix,
        s: Optional[WeightVector] = None,
        r: Optional[WeightVector] = None,
        alpha=Fraction(1, 5),
        depth: int = 6,
        check_bound=10 ** 4,
        selector: Selector = "first",
        seed: Optional[int] = None,
    ) -> BadCertificate:
        s = s or WeightVector.uniform(A.m)
        r = r or WeightVector.uniform(A.n)
        alpha = _check_alpha(alpha)
        logger.info(f"🔄 Bad certificate for {A.label or 'A'}: alpha {alpha}, depth {depth}, window {check_bound}")

        rank = self.bestapprox.check_rank(A)
        if rank.status == RankStatus.DEGENERATE:
            raise DegenerateRank("tA Z^m + Z^n does not have maximal rank", witness=rank.witness)
        caveats = ["lim Y_k^(1/k) = inf cannot be certified from finite data; "
                   "the ratio hypothesis is verified on the computed window only"]
        if rank.status == RankStatus.UNDECIDED:
            caveats.append(f"rank undecided up to height {rank.height_bound}; treated as maximal")

        delta = min(s.delta, r.delta)
        R = radius_for_alpha(alpha, A.n, r.delta)
        seq, indices, violations = self.growing_sequence(A, s, r, R, depth + 1)
        caveats += [f"subsequence property {v['property']} fails at index {v['k']}" for v in violations]
        ys = [seq.entries[i].X for i in indices]

        state = self.cantor_descend(ys, alpha, r, depth, selector, seed, R)
        epsilon = epsilon_from_alpha(alpha, R, A.m, A.n, delta)
        eps1 = epsilon_one(alpha, R, A.m, delta)
        covered = float(eps1) * float(seq.entries[indices[depth]].Y)
        if float(check_bound) > covered:
            caveats.append(f"window {check_bound} extends beyond the proof-covered range {covered:.6g}")

        window = self.window_check(A, s, r, state.theta, epsilon, check_bound)
        certificate = BadCertificate(
            theta=state.theta,
            depth=depth,
            alpha=alpha,
            epsilon=epsilon,
            R=R,
            check_bound=Fraction(check_bound),
            window_pass=window.passed,
            levels=state.levels,
            subsequence=tuple(indices),
            min_product=window.min_product,
            worst_pair=window.worst_pair,
            pairs_checked=window.pairs_checked,
            proof_covered_bound=covered,
            caveats=caveats,
        )
        logger.info(f"{'✅' if window.passed else '❌'} Certificate theta={[str(t) for t in state.theta]} "
                    f"epsilon={float(epsilon):.6g}")
        return certificate

    # ------------------------------------------------------------------
    # Congruencia clave y experimento de Borel-Cantelli
    # ------------------------------------------------------------------

    def key_congruence_check(self, A: TargetMatrix, seq: BestApproxSequence, theta: Sequence,
                             pairs: Sequence[Tuple[Sequence[int], Sequence[int]]]) -> Dict[str, Any]:
        """<q_k, theta> = <Aq_k - p_k, p> - <q_k, ^tA p - q - theta> mod 1, exacto"""
        theta = tuple(as_cert(t) for t in theta)
        checked, failures, undecided = 0, [], 0
        for entry in seq.entries:
            q_k = entry.X
            p_k = tuple(distance_to_integers(v)[1] for v in A.apply(q_k))
            left = CertReal.dot(theta, q_k)
            for p, q in pairs:
                p, q = tuple(int(v) for v in p), tuple(int(v) for v in q)
                first = sum((v * pi for v, pi in zip(A.apply(q_k, p_k), p)), CertReal.rational(0))
                image = [CertReal.dot([A.entry(i, j) for i in range(A.m)], p, -theta[j]) - q[j] for j in range(A.n)]
                second = sum((qk * v for qk, v in zip(q_k, image)), CertReal.rational(0))
                expected = sum(a * b for a, b in zip(p_k, p)) - sum(a * b for a, b in zip(q_k, q))
                checked += 1
                try:
                    if sign(left - (first - second) - expected) != 0:
                        failures.append({"q_k": list(q_k), "p": list(p), "q": list(q)})
                except PrecisionExhausted:
                    undecided += 1
        logger.info(f"📊 Key congruence: {checked} checks, {len(failures)} failures, {undecided} undecided")
        return {"checked": checked, "failures": failures, "undecided": undecided}

    def borel_cantelli_experiment(
        self,
        A: TargetMatrix,
        s: Optional[WeightVector] = None,
        r: Optional[WeightVector] = None,
        epsilon=Fraction(1, 2),
        sample_count: int = 1000,
        seed: int = 0,
        seq: Optional[BestApproxSequence] = None,
        thetas: Optional[Sequence[Sequence]] = None,
    ) -> BorelCantelliReport:
        """Pertenencia de theta muestreados a S_k = {dist(<y, q_k>, Z) < Y_k^(-eta)}, eta = delta epsilon / 2"""
        s = s or WeightVector.uniform(A.m)
        r = r or WeightVector.uniform(A.n)
        epsilon = Fraction(epsilon)
        if epsilon <= 0:
            raise PreconditionViolation("epsilon must be positive")
        eta = min(s.delta, r.delta) * epsilon / 2
        seq = seq or self.exponents.homogeneous_sequence(A, s, r)
        entries = [e for e in seq.entries if e.key > 1]
        if len(entries) < 2:
            raise InsufficientData("Borel-Cantelli experiment needs at least 2 entries with Y > 1")

        rng = np.random.default_rng(seed)
        samples = rng.random((sample_count, A.n))
        Q = np.array([e.X for e in entries], dtype=float)
        Y = np.array([float(e.Y) for e in entries])
        radius = Y ** -float(eta)
        inner = samples @ Q.T
        member = np.abs(inner - np.rint(inner)) < radius

        levels = []
        for k, e in enumerate(entries):
            bound = 2 * A.n * radius[k]
            levels.append({"k": k, "Y": float(e.Y), "measure_bound": float(bound),
                           "frequency": float(member[:, k].mean())})
        tail = len(entries) // 2
        tail_free = float((~member[:, tail:].any(axis=1)).mean())

        theta_counts = []
        for theta in thetas or []:
            theta = tuple(as_cert(t) for t in theta)
            count = 0
            for e, rad in zip(entries, radius):
                dist, _ = distance_to_integers(CertReal.dot(theta, e.X))
                count += compare_reals(dist, float(rad)) == Ordering.LESS
            theta_counts.append({"theta": [repr(t) for t in theta], "memberships": int(count)})

        report = BorelCantelliReport(eta, epsilon, sample_count, seed, levels,
                                     float((2 * A.n * radius).sum()), tail_free, theta_counts)
        logger.info(f"📊 Borel-Cantelli: eta {eta}, {len(entries)} levels, {tail_free:.1%} of samples free on the tail")
        return report
