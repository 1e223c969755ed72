"""
TransferenceService - Cotas de transferencia y sus validadores empíricos
Dyson clásico y ponderado, la cota 1/omega_hat del caso inhomogéneo
y la transferencia (psi, phi) vía el dual de Lambda(psi(T), T, A)
"""
import logging
import math
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import sympy
from scipy.stats import qmc

from app.core.errors import BudgetExceeded, InsufficientData, PrecisionExhausted, TheoremViolation
from app.core.numerics import (
    INFINITY,
    CertReal,
    ExtendedRational,
    Ordering,
    WeightVector,
    compare_reals,
    ext_reciprocal,
    is_infinite,
    render_extended,
)
from app.services.exponent_service import ExponentService
from app.services.lattice_service import mahler_constant
from app.services.types import (
    Direction,
    DysonBoundInput,
    ExponentEstimate,
    PowerLaw,
    SamplingConfig,
    TargetMatrix,
    TransferReport,
    Verdict,
    Witness,
)

logger = logging.getLogger("transference_service")

OMEGA = sympy.Symbol("omega", positive=True)

# Errores que convierten un validador en "inconclusive"
INCONCLUSIVE_ERRORS = (PrecisionExhausted, BudgetExceeded, InsufficientData)


def _rational(x: Fraction) -> sympy.Rational:
    return sympy.Rational(x.numerator, x.denominator)


def _from_sympy(value) -> ExtendedRational:
    if value in (sympy.oo, sympy.zoo):
        return INFINITY
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


def summarize_estimate(estimate: ExponentEstimate) -> Dict[str, Any]:
    return {
        "kind": estimate.kind.label,
        "lower_bound": str(estimate.lower_bound),
        "point_estimate": estimate.point_estimate,
        "capped": estimate.capped,
        "method": estimate.method,
        "slack": estimate.slack,
        "witnesses": len(estimate.witnesses),
    }


def measured_value(estimate: ExponentEstimate) -> ExtendedRational:
    return INFINITY if estimate.capped else estimate.point_estimate


class TransferenceService:
    """Evaluadores exactos de las cotas y validadores sobre datos finitos"""

    def __init__(self, exponents: ExponentService = None, sampling: SamplingConfig = None):
        self.exponents = exponents or ExponentService()
        self.sampling = sampling or SamplingConfig()
        logger.info(f"TransferenceService initialized - {self.sampling.count} theta samples (seed {self.sampling.seed})")

    # ------------------------------------------------------------------
    # Dyson
    # ------------------------------------------------------------------

    @staticmethod
    def dyson_expression(m: int, n: int, s: WeightVector, r: WeightVector) -> Tuple[sympy.Expr, sympy.Expr]:
        """(numerador, denominador) de la cota ponderada como funciones racionales de omega"""
        rs, ds = _rational(s.rho), _rational(s.delta)
        rr, dr = _rational(r.rho), _rational(r.delta)
        core = (m + n - 1) * rs * rr * (dr + ds * OMEGA)
        return sympy.expand(core + rs * dr * ds * (OMEGA - 1)), sympy.expand(core - rr * dr * ds * (OMEGA - 1))

    @staticmethod
    def _evaluate(numerator: sympy.Expr, denominator: sympy.Expr, omega: ExtendedRational) -> ExtendedRational:
        if is_infinite(omega):
            leading = sympy.Poly(denominator, OMEGA).coeffs()[0] if sympy.degree(denominator, OMEGA) > 0 else denominator
            if leading < 0:
                raise TheoremViolation("transference denominator is negative as omega -> oo",
                                       {"denominator": str(denominator)})
            return _from_sympy(sympy.limit(numerator / denominator, OMEGA, sympy.oo))
        w = _rational(Fraction(omega))
        den = denominator.subs(OMEGA, w)
        if den <= 0:
            raise TheoremViolation(f"transference denominator {den} is not positive at omega = {omega}",
                                   {"denominator": str(denominator), "omega": str(omega)})
        return _from_sympy(sympy.Rational(numerator.subs(OMEGA, w)) / den)

    def dyson_weighted_bound(self, inp: DysonBoundInput, direction: Direction = "forward") -> ExtendedRational:
        """Cota inferior de ^t omega (forward) o de omega a partir de ^t omega (backward)"""
        if inp.below_dirichlet:
            logger.warning(f"⚠️ omega = {render_extended(inp.omega)} is below the Dirichlet exponent 1")
        if direction == "forward":
            m, n, s, r = inp.m, inp.n, inp.s, inp.r
        elif direction == "backward":
            m, n, s, r = inp.n, inp.m, inp.r, inp.s
        else:
            raise ValueError(f"unknown direction {direction!r}")
        numerator, denominator = self.dyson_expression(m, n, s, r)
        return self._evaluate(numerator, denominator, inp.omega)

    def dyson_classical_bound(self, m: int, n: int, omega: ExtendedRational) -> ExtendedRational:
        """(n omega + m - 1) / ((n - 1) omega + m)"""
        if not is_infinite(omega) and Fraction(omega) < 1:
            logger.warning(f"⚠️ omega = {omega} is below the Dirichlet exponent 1")
        return self._evaluate(n * OMEGA + m - 1, (n - 1) * OMEGA + m, omega)

    def validate_dyson(self, A: TargetMatrix, s: Optional[WeightVector] = None, r: Optional[WeightVector] = None) -> TransferReport:
        """Estima omega(A) y omega(^tA) (ordinarios y uniformes) y contrasta ambas direcciones"""
        s = s or WeightVector.uniform(A.m)
        r = r or WeightVector.uniform(A.n)
        instance = A.label or "A"
        logger.info(f"🔄 Dyson validation for {instance} ({A.m}x{A.n})")
        try:
            omega, omega_hat = self.exponents.estimate_pair(A, None, s, r)
            t_omega, t_omega_hat = self.exponents.estimate_pair(A.transpose(), None, r, s)
        except INCONCLUSIVE_ERRORS as e:
            logger.warning(f"⚠️ Dyson validation inconclusive: {e}")
            return TransferReport(instance, None, {}, 0.0, Verdict.INCONCLUSIVE, details={"error": e.to_dict()})

        slack = max(e.slack for e in (omega, omega_hat, t_omega, t_omega_hat))
        checks = []
        for mode, side, other in (("ordinary", omega, t_omega), ("uniform", omega_hat, t_omega_hat)):
            forward = self.dyson_weighted_bound(DysonBoundInput(A.m, A.n, s, r, side.lower_bound), "forward")
            backward = self.dyson_weighted_bound(DysonBoundInput(A.m, A.n, s, r, other.lower_bound), "backward")
            for relation, bound, measured in ((f"{mode}/forward", forward, other), (f"{mode}/backward", backward, side)):
                value = measured_value(measured)
                holds = is_infinite(value) or (not is_infinite(bound) and value + slack >= float(bound))
                checks.append({"relation": relation, "bound": render_extended(bound),
                               "measured": render_extended(value) if is_infinite(value) else value, "holds": holds})

        verdict = Verdict.CONSISTENT if all(c["holds"] for c in checks) else Verdict.INCONCLUSIVE
        logger.info(f"{'✅' if verdict == Verdict.CONSISTENT else '⚠️'} Dyson validation: {verdict.value}")
        return TransferReport(
            instance=instance,
            bound={c["relation"]: c["bound"] for c in checks},
            estimates={
                "omega": summarize_estimate(omega),
                "omega_hat": summarize_estimate(omega_hat),
                "transpose_omega": summarize_estimate(t_omega),
                "transpose_omega_hat": summarize_estimate(t_omega_hat),
            },
            slack=slack,
            verdict=verdict,
            details={"checks": checks},
        )

    # ------------------------------------------------------------------
    # Caso inhomogéneo: omega(^tA, theta) >= 1 / omega_hat(A)
    # ------------------------------------------------------------------

    @staticmethod
    def bl_bound(omega_hat: ExtendedRational) -> ExtendedRational:
        return ext_reciprocal(omega_hat)

    def sample_thetas(self, dim: int, count: Optional[int] = None, seed: Optional[int] = None) -> List[Tuple[Fraction, ...]]:
        """Muestras de Halton mezcladas en [0,1)^dim, redondeadas a la malla 2^-20"""
        count = count or self.sampling.count
        seed = self.sampling.seed if seed is None else seed
        sampler = qmc.Halton(d=dim, scramble=True, seed=seed)
        thetas = []
        for row in sampler.random(n=count):
            theta = tuple(Fraction(math.floor(x * (1 << 20)), 1 << 20) for x in row)
            if all(t == 0 for t in theta):
                theta = tuple(Fraction(1, 1 << 20) for _ in theta)
            thetas.append(theta)
        return thetas

    def bl_validate(self, A: TargetMatrix, s: Optional[WeightVector] = None, r: Optional[WeightVector] = None,
                    thetas: Optional[Sequence[Sequence]] = None) -> TransferReport:
        """omega(^tA, theta) >= 1/omega_hat(A) y omega_hat(^tA, theta) >= 1/omega(A) sobre thetas muestreados"""
        s = s or WeightVector.uniform(A.m)
        r = r or WeightVector.uniform(A.n)
        instance = A.label or "A"
        logger.info(f"🔄 Inhomogeneous transference validation for {instance}")
        try:
            omega, omega_hat = self.exponents.estimate_pair(A, None, s, r)
        except INCONCLUSIVE_ERRORS as e:
            logger.warning(f"⚠️ Homogeneous estimates unavailable: {e}")
            return TransferReport(instance, None, {}, 0.0, Verdict.INCONCLUSIVE, details={"error": e.to_dict()})

        bound_ordinary = self.bl_bound(measured_value(omega_hat))
        bound_uniform = self.bl_bound(measured_value(omega))
        thetas = thetas if thetas is not None else self.sample_thetas(A.n)
        transpose = A.transpose()
        samples, inconclusive, near, slack = [], 0, 0, 0.0
        for index, theta in enumerate(thetas):
            theta = tuple(Fraction(t) for t in theta)
            try:
                ordinary, uniform = self.exponents.estimate_pair(transpose, theta, r, s, method="grid")
            except INCONCLUSIVE_ERRORS as e:
                inconclusive += 1
                samples.append({"index": index, "theta": [str(t) for t in theta], "error": e.to_dict()})
                continue
            sample_slack = max(ordinary.slack, uniform.slack)
            slack = max(slack, sample_slack)
            ordinary_ok = float(ordinary.lower_bound) >= float(bound_ordinary) - sample_slack
            uniform_ok = float(uniform.lower_bound) >= float(bound_uniform) - sample_slack
            close = not ordinary.capped and abs(ordinary.point_estimate - float(bound_ordinary)) <= self.sampling.tolerance
            near += close
            if not (ordinary_ok and uniform_ok):
                inconclusive += 1
            samples.append({
                "index": index,
                "theta": [str(t) for t in theta],
                "omega_lower": str(ordinary.lower_bound),
                "omega_point": ordinary.point_estimate,
                "omega_hat_lower": str(uniform.lower_bound),
                "omega_hat_point": uniform.point_estimate,
                "slack": sample_slack,
                "ordinary_ok": ordinary_ok,
                "uniform_ok": uniform_ok,
                "near_equality": close,
            })

        fraction = near / len(thetas) if thetas else 0.0
        verdict = Verdict.CONSISTENT if inconclusive == 0 and thetas else Verdict.INCONCLUSIVE
        logger.info(f"📊 {len(thetas)} samples, {inconclusive} inconclusive, {fraction:.0%} near equality")
        return TransferReport(
            instance=instance,
            bound={"omega(tA,theta)": render_extended(bound_ordinary), "omega_hat(tA,theta)": render_extended(bound_uniform)},
            estimates={"omega_hat": summarize_estimate(omega_hat), "omega": summarize_estimate(omega)},
            slack=slack,
            verdict=verdict,
            samples=samples,
            details={
                "fraction_within_tolerance": fraction,
                "tolerance": self.sampling.tolerance,
                "seed": self.sampling.seed,
                "inconclusive_samples": inconclusive,
            },
        )

    # ------------------------------------------------------------------
    # Transferencia (psi, phi)
    # ------------------------------------------------------------------

    @staticmethod
    def transfer_constant(m: int, n: int, s: WeightVector, r: WeightVector) -> Tuple[CertReal, CertReal]:
        """(C, C_1) con C = C_(m+n) y C_1 = C^(1/min(delta_s, delta_r))"""
        C = mahler_constant(m + n)
        return C, C.power(1 / min(s.delta, r.delta))

    @staticmethod
    def psi_phi_condition(psi: PowerLaw, phi: PowerLaw, C, scales: Sequence[Fraction]) -> List[Dict[str, Any]]:
        """phi(C psi(T)^-1) > C T^-1 evaluado directamente en cada escala"""
        rows = []
        for T in scales:
            lhs = phi(C / psi(T))
            rhs = C / CertReal.rational(T)
            rows.append({"T": str(T), "holds": compare_reals(lhs, rhs) == Ordering.GREATER,
                         "lhs": float(lhs), "rhs": float(rhs)})
        return rows

    def psi_phi_transfer_check(
        self,
        A: TargetMatrix,
        s: Optional[WeightVector],
        r: Optional[WeightVector],
        psi: PowerLaw,
        phi: PowerLaw,
        thetas: Optional[Sequence[Sequence]] = None,
        scales: Optional[Sequence[Fraction]] = None,
    ) -> TransferReport:
        """Donde A no es (psi, s, r)-aproximable en la escala T, busca el testigo (phi, r, s) de (^tA, theta)"""
        s = s or WeightVector.uniform(A.m)
        r = r or WeightVector.uniform(A.n)
        instance = A.label or "A"
        scales = list(scales) if scales is not None else self.exponents.grid.points()
        C, C1 = self.transfer_constant(A.m, A.n, s, r)
        logger.info(f"🔄 (psi, phi) transfer check for {instance}: psi={psi.render()} phi={phi.render()}")

        condition = self.psi_phi_condition(psi, phi, C1, scales)
        try:
            profile = self.exponents.scale_profile(A, None, s, r, scales=scales, inclusive=True)
        except INCONCLUSIVE_ERRORS as e:
            return TransferReport(instance, None, {}, 0.0, Verdict.INCONCLUSIVE, details={"error": e.to_dict()})

        holds = {row["T"]: row["holds"] for row in condition}
        certified = []
        for point in profile:
            bound = psi(point.T)
            if point.residual * (1 - 1e-6) - 1e-12 <= float(bound):
                continue
            residual, _ = self.exponents.exact_residual(A, None, point.q, s, "weighted")
            if compare_reals(residual, bound) == Ordering.GREATER:
                certified.append(point.T)
        usable = [T for T in certified if holds.get(str(T))]
        logger.info(f"📊 Non-approximability certified at {len(certified)} scales, condition holds at {len(usable)}")
        if not usable:
            return TransferReport(
                instance, psi.render(), {}, 0.0, Verdict.INCONCLUSIVE,
                details={"condition": condition, "certified_scales": [str(T) for T in certified],
                         "reason": "no scale with certified non-approximability and the condition"},
            )

        transferred = {T: (C1 / psi(T)).enclose(Fraction(1, 1 << 20))[1] for T in usable}
        thetas = thetas if thetas is not None else self.sample_thetas(A.n)
        transpose = A.transpose()
        samples, violations, escapes = [], 0, 0
        for index, theta in enumerate(thetas):
            theta = tuple(Fraction(t) for t in theta)
            try:
                found = self._transfer_witnesses(transpose, theta, s, r, phi, transferred)
            except INCONCLUSIVE_ERRORS as e:
                escapes += 1
                samples.append({"index": index, "theta": [str(t) for t in theta], "error": e.to_dict()})
                continue
            missing = [T for T, witness in found.items() if witness is None]
            zero_escape = [T for T in missing if self._zero_solution_possible(theta, r, C1, T)]
            violations += len(missing) - len(zero_escape)
            escapes += len(zero_escape)
            samples.append({
                "index": index,
                "theta": [str(t) for t in theta],
                "witnesses": [
                    {"T": str(w.T), "p": list(w.q), "q": list(w.p)} for w in found.values() if w is not None
                ],
                "missing": [str(T) for T in missing],
                "zero_escape": [str(T) for T in zero_escape],
            })

        if violations:
            verdict = Verdict.VIOLATED
            logger.error(f"❌ {violations} promised witnesses not found")
        elif escapes:
            verdict = Verdict.INCONCLUSIVE
        else:
            verdict = Verdict.CONSISTENT
        return TransferReport(
            instance=instance,
            bound=phi.render(),
            estimates={},
            slack=0.0,
            verdict=verdict,
            samples=samples,
            details={
                "psi": psi.render(),
                "phi": phi.render(),
                "C": float(C),
                "C1": float(C1),
                "condition": condition,
                "certified_scales": [str(T) for T in certified],
                "transferred_scales": {str(T): str(T1) for T, T1 in transferred.items()},
            },
        )

    def _transfer_witnesses(self, transpose: TargetMatrix, theta, s: WeightVector, r: WeightVector, phi: PowerLaw,
                            transferred: Dict[Fraction, Fraction]) -> Dict[Fraction, Optional[Witness]]:
        """||p||_s < T1 y ||^tA p - q - theta||_r < phi(T1) con p != 0"""
        profile = self.exponents.scale_profile(transpose, theta, r, s, scales=list(transferred.values()))
        by_scale = {point.T: point for point in profile}
        found = {}
        for T, T1 in transferred.items():
            point = by_scale.get(T1)
            found[T] = None
            if point is None or point.residual >= float(phi(T1)) * (1 + 1e-9):
                continue
            if s.norm_key(point.q) >= T1 ** s.key_power:
                continue
            residual, nearest = self.exponents.exact_residual(transpose, theta, point.q, r, "weighted")
            if compare_reals(residual, phi(T1)) == Ordering.LESS:
                found[T] = Witness(T1, nearest, point.q, phi.exponent, "psi_phi_transfer")
        return found

    @staticmethod
    def _zero_solution_possible(theta, r: WeightVector, C1: CertReal, T: Fraction) -> bool:
        """La solución con p = 0 (||q + theta||_r <= C1 T^-1) puede ser la única garantizada"""
        distance = max(min(t % 1, 1 - t % 1) ** (1 / float(w)) for t, w in zip(theta, r.weights))
        return float(distance) <= float(C1) / float(T) * (1 + 1e-9)
