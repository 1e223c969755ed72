#!/usr/bin/env python3
"""
CLI del toolkit diofántico
Cada subcomando construye un RunConfig validado, ejecuta el servicio correspondiente
y escribe reportes JSON/CSV reproducibles (mismo RunConfig, mismos bytes)

Uso:
    python main.py bestapprox --instance phi --bound 1e6
    python main.py exponents --instance sqrt2
    python main.py dyson --m 2 --n 2 --weights-uniform --omega 3
    python main.py bl --instance phi --theta-samples 100 --seed 7
    python main.py intermediate --alpha "sqrt(2),sqrt(3)" --d 0 --collapse
    python main.py badgen --instance phi --alpha 0.2 --depth 6 --check-bound 1e4

Códigos de salida:
    0   éxito
    1   error inesperado
    2   instancia, pesos o parámetros no interpretables (InstanceParseError)
    3   rango degenerado (DegenerateRank)
    4   presupuesto de enumeración agotado (BudgetExceeded)
    5   precisión agotada (PrecisionExhausted)
    6   datos insuficientes (InsufficientData)
    7   precondición violada (PreconditionViolation)
    8   veredicto "violated" o invariante de construcción fallido (TheoremViolation)
    130 interrumpido por el usuario
"""
import argparse
import logging
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from app import __version__
from app.core import config
from app.core.errors import (
    DegenerateRank,
    DiophantineError,
    InstanceParseError,
    InsufficientData,
    PreconditionViolation,
    TheoremViolation,
)
from app.core.instances import get_instance, list_instances
from app.core.numerics import (
    configure_precision,
    parse_extended,
    parse_rational,
    parse_real,
    parse_weights,
    render_extended,
)
from app.core.schemas import InstanceSpec, RunConfig, build_instance, build_run_config
from app.services.badset_service import BadsetService
from app.services.bestapprox_service import BestApproxService
from app.services.exponent_service import ExponentService
from app.services.grassmann_service import GrassmannService
from app.services.report_service import (
    PROFILE_HEADER,
    SEQUENCE_HEADER,
    TOOL_NAME,
    ReportService,
    canonical_json,
    profile_rows,
    run_id,
    sequence_rows,
)
from app.services.transference_service import TransferenceService
from app.services.types import (
    DysonBoundInput,
    EnumerationConfig,
    ExponentKind,
    GridConfig,
    LiftedPoint,
    PowerLaw,
    RankStatus,
    SamplingConfig,
    Verdict,
)

logger = logging.getLogger("cli")

COMMANDS = ("bestapprox", "exponents", "dyson", "bl", "intermediate", "badgen")

# Opciones propias de cada subcomando que entran en RunConfig.options
COMMAND_OPTIONS = {
    "bestapprox": ("bound", "tie_break", "verify"),
    "exponents": ("method", "multiplicative"),
    "dyson": ("m", "n", "omega", "weights_uniform", "validate"),
    "bl": ("theta_samples", "tolerance", "psi", "phi"),
    "intermediate": ("alpha", "d", "theta", "mode", "collapse", "transfer", "theta_samples", "override"),
    "badgen": ("alpha", "depth", "check_bound", "selector", "negative_control"),
}


@dataclass
class CommandOutcome:
    """Resultado de un subcomando listo para los reportes y el resumen"""
    result: Dict[str, Any]
    summary: List[str]
    csv_header: Sequence[str] = ()
    csv_rows: List[List[Any]] = field(default_factory=list)
    verdict: Optional[Verdict] = None


# ---------------------------------------------------------------------------
# Lectura de argumentos
# ---------------------------------------------------------------------------

def split_tokens(text: str, separator: str = ",") -> List[str]:
    """Separa por `separator` fuera de paréntesis: "root(2,3),phi" -> ["root(2,3)", "phi"]"""
    parts, depth, current = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == separator and depth == 0:
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    parts.append("".join(current).strip())
    if depth != 0 or any(not p for p in parts):
        raise InstanceParseError(f"cannot split {text!r} into tokens")
    return parts


def split_weight_pair(token: str) -> Tuple[str, str]:
    """"s;r" o "w(s;r)" -> textos de s y r"""
    text = token.strip().lower()
    if text in ("", "uniform"):
        return "uniform", "uniform"
    if text.startswith("w(") and text.endswith(")"):
        text = text[2:-1]
    if ";" not in text:
        raise InstanceParseError(f"weight pair must look like 's;r', got {token!r}")
    left, right = text.split(";", 1)
    return left.strip(), right.strip()


def _weights_from_args(args) -> Tuple[str, str]:
    s_text, r_text = "uniform", "uniform"
    if getattr(args, "weights", None):
        s_text, r_text = split_weight_pair(args.weights)
    if getattr(args, "weights_s", None):
        s_text = args.weights_s
    if getattr(args, "weights_r", None):
        r_text = args.weights_r
    return s_text, r_text


def _instance_from_args(args) -> Optional[InstanceSpec]:
    s_text, r_text = _weights_from_args(args)
    extra = {}
    if getattr(args, "theta", None):
        extra["theta"] = split_tokens(args.theta)
    if getattr(args, "matrix", None):
        rows = [split_tokens(row) for row in split_tokens(args.matrix, ";")]
        return build_instance(name="custom", matrix=rows, weights_s=s_text, weights_r=r_text, **extra)
    if getattr(args, "instance", None):
        return get_instance(args.instance, weights_s=s_text, weights_r=r_text, **extra)
    return None


def _require_instance(instance: Optional[InstanceSpec], command: str) -> InstanceSpec:
    if instance is None:
        raise InstanceParseError(f"{command} needs --instance or --matrix (available: {', '.join(list_instances())})")
    return instance


def _services(run: RunConfig) -> Tuple[ExponentService, SamplingConfig]:
    tmin, tmax, ratio = run.grid_parameters()
    enumeration = EnumerationConfig(budget=run.budget, precision_bits=run.precision)
    exponents = ExponentService(GridConfig(tmin=tmin, tmax=tmax, ratio=ratio), enumeration)
    options = run.options
    count = options.get("theta_samples") or config.THETA_SAMPLES
    tolerance = options.get("tolerance") if options.get("tolerance") is not None else config.TOLERANCE_BAND
    return exponents, SamplingConfig(count=count, seed=run.seed, tolerance=float(tolerance))


def _parse_power_law(token: str) -> PowerLaw:
    """"c,e" -> T -> c T^(-e)"""
    parts = split_tokens(token)
    if len(parts) != 2:
        raise InstanceParseError(f"power law must look like 'coefficient,exponent', got {token!r}")
    return PowerLaw(parse_rational(parts[0]), parse_rational(parts[1]))


def _rational_thetas(instance: InstanceSpec) -> Optional[List[Tuple[Fraction, ...]]]:
    values = instance.theta_values()
    if values is None:
        return None
    if not all(v.is_exact for v in values):
        raise PreconditionViolation("explicit theta for sampling validators must be rational")
    return [tuple(v.exact for v in values)]


# ---------------------------------------------------------------------------
# Subcomandos
# ---------------------------------------------------------------------------

def cmd_bestapprox(run: RunConfig, instance: Optional[InstanceSpec]) -> CommandOutcome:
    instance = _require_instance(instance, "bestapprox")
    A, (s, r) = instance.target(), instance.weights()
    options = run.options
    bound = parse_rational(options.get("bound") or run.tmax)
    service = BestApproxService(EnumerationConfig(budget=run.budget, precision_bits=run.precision))

    rank = service.check_rank(A)
    if rank.status == RankStatus.DEGENERATE:
        raise DegenerateRank(f"{instance.name}: ^tA Z^m + Z^n does not have maximal rank", witness=rank.witness)
    seq = service.compute_best_approx(A, s, r, bound, tie_break=options.get("tie_break") or "lex")

    check = service.verify_sequence(A, seq) if options.get("verify") else None
    try:
        growth = service.verify_geometric_growth(seq, s, r)
    except InsufficientData as e:
        growth = {"skipped": e.message}

    result = {
        "instance": instance.name,
        "rank": rank,
        "bound": str(bound),
        "exhausted_up_to": seq.exhausted_up_to,
        "m0": seq.m0,
        "tie_break": seq.tie_break,
        "candidates_examined": seq.candidates_examined,
        "entries": [{"k": k, "X": list(e.X), "Y": e.Y, "M": e.M, "p": list(e.p_witness)}
                    for k, e in enumerate(seq.entries)],
        "verification": check,
        "growth": growth,
    }
    summary = [
        f"Instance: {instance.name} ({A.m}x{A.n}), s={s.render()}, r={r.render()}",
        f"Rank: {rank.status.value} ({rank.method})",
        f"Entries: {len(seq)} up to N = {bound}",
        f"First Y: {', '.join(e.Y.render() for e in seq.entries[:12])}",
    ]
    if check is not None:
        summary.append(f"Verification: monotone={check.monotone} minimal={check.minimal} "
                       f"({check.checked_points} points)")
    verdict = None
    if check is not None and not (check.monotone and check.minimal):
        verdict = Verdict.VIOLATED
    return CommandOutcome(result, summary, SEQUENCE_HEADER, sequence_rows(seq), verdict)


def cmd_exponents(run: RunConfig, instance: Optional[InstanceSpec]) -> CommandOutcome:
    instance = _require_instance(instance, "exponents")
    A, (s, r) = instance.target(), instance.weights()
    theta = instance.theta_values()
    exponents, _ = _services(run)
    method = run.options.get("method") or "auto"

    omega, omega_hat = exponents.estimate_pair(A, theta, s, r, method=method)
    estimates = {"omega": omega, "omega_hat": omega_hat}
    if run.options.get("multiplicative"):
        estimates["omega_mult"] = exponents.estimate(A, ExponentKind("ordinary", "multiplicative"), theta)

    rows = []
    for name, est in estimates.items():
        rows.append([name, est.kind.label, str(est.lower_bound), repr(est.point_estimate),
                     str(est.T_range[0]), str(est.T_range[1]), est.capped, est.method])
    summary = [f"Instance: {instance.name} ({A.m}x{A.n}), theta={instance.theta or 'zero'}"]
    summary += [f"{name:<11} lower={row[2]:<12} point={float(row[3]):.6f} T=[{row[4]}, {row[5]}] "
                f"capped={row[6]}" for name, row in zip(estimates, rows)]
    header = ["name", "kind", "lower_bound", "point_estimate", "T_min", "T_max", "capped", "method"]
    return CommandOutcome({"instance": instance.name, "estimates": estimates}, summary, header, rows)


def cmd_dyson(run: RunConfig, instance: Optional[InstanceSpec]) -> CommandOutcome:
    options = run.options
    m = options.get("m") or (instance.m if instance else None)
    n = options.get("n") or (instance.n if instance else None)
    if not m or not n:
        raise InstanceParseError("dyson needs --m and --n (or an instance)")
    if options.get("weights_uniform"):
        s_text, r_text = "uniform", "uniform"
    else:
        s_text, r_text = options.get("weights_s", "uniform"), options.get("weights_r", "uniform")
    s, r = parse_weights(s_text, m), parse_weights(r_text, n)
    omega = parse_extended(options.get("omega") or "1")

    exponents, sampling = _services(run)
    transference = TransferenceService(exponents, sampling)
    inp = DysonBoundInput(m, n, s, r, omega)
    forward = transference.dyson_weighted_bound(inp, "forward")
    backward = transference.dyson_weighted_bound(inp, "backward")
    classical = transference.dyson_classical_bound(m, n, omega)
    result = {
        "m": m, "n": n, "s": s, "r": r, "omega": render_extended(omega),
        "forward": render_extended(forward),
        "backward": render_extended(backward),
        "classical": render_extended(classical),
        "below_dirichlet": inp.below_dirichlet,
    }
    summary = [
        f"m={m} n={n} s={s.render()} r={r.render()} omega={render_extended(omega)}",
        f"Weighted bound (forward):  {render_extended(forward)}",
        f"Weighted bound (backward): {render_extended(backward)}",
        f"Classical bound:           {render_extended(classical)}",
    ]
    rows = [["forward", render_extended(forward)], ["backward", render_extended(backward)],
            ["classical", render_extended(classical)]]
    verdict = None
    if instance is not None and options.get("validate"):
        report = transference.validate_dyson(instance.target(), *instance.weights())
        result["validation"] = report
        summary.append(f"Validation on {instance.name}: {report.verdict.value}")
        verdict = report.verdict
    return CommandOutcome(result, summary, ["bound", "value"], rows, verdict)


def cmd_bl(run: RunConfig, instance: Optional[InstanceSpec]) -> CommandOutcome:
    instance = _require_instance(instance, "bl")
    A, (s, r) = instance.target(), instance.weights()
    exponents, sampling = _services(run)
    transference = TransferenceService(exponents, sampling)

    report = transference.bl_validate(A, s, r, thetas=_rational_thetas(instance))
    result = {"instance": instance.name, "report": report}
    summary = [
        f"Instance: {instance.name}, {len(report.samples)} theta samples (seed {run.seed})",
        f"Bounds: {report.bound}",
        f"Within tolerance: {report.details.get('fraction_within_tolerance', 0.0):.0%}",
        f"Verdict: {report.verdict.value}",
    ]
    verdict = report.verdict
    options = run.options
    if options.get("psi") and options.get("phi"):
        psi, phi = _parse_power_law(options["psi"]), _parse_power_law(options["phi"])
        psi_phi = transference.psi_phi_transfer_check(A, s, r, psi, phi, thetas=_rational_thetas(instance))
        result["psi_phi"] = psi_phi
        summary.append(f"(psi, phi) transfer: {psi_phi.verdict.value}")
        if psi_phi.verdict == Verdict.VIOLATED:
            verdict = Verdict.VIOLATED

    header = ["index", "theta", "omega_lower", "omega_point", "omega_hat_lower", "omega_hat_point", "near_equality"]
    rows = [[row["index"], " ".join(row["theta"]), row.get("omega_lower", ""), row.get("omega_point", ""),
             row.get("omega_hat_lower", ""), row.get("omega_hat_point", ""), row.get("near_equality", "")]
            for row in report.samples]
    return CommandOutcome(result, summary, header, rows, verdict)


def cmd_intermediate(run: RunConfig, instance: Optional[InstanceSpec]) -> CommandOutcome:
    options = run.options
    if options.get("alpha"):
        alpha = tuple(parse_real(t) for t in split_tokens(options["alpha"]))
    elif instance is not None:
        alpha = tuple(parse_real(t) for row in instance.matrix for t in row)
    else:
        raise InstanceParseError("intermediate needs --alpha or an instance")
    point = LiftedPoint(alpha)
    d = int(options.get("d") or 0)
    mode = options.get("mode") or "ordinary"
    override = bool(options.get("override"))
    theta = tuple(parse_real(t) for t in split_tokens(options["theta"])) if options.get("theta") else None

    exponents, sampling = _services(run)
    grassmann = GrassmannService(exponents, TransferenceService(exponents, sampling))
    estimate = grassmann.intermediate_exponent(point, d, theta, mode, override=override)
    result = {"alpha": [repr(a) for a in alpha], "d": d, "estimate": estimate}
    summary = [
        f"alpha={[repr(a) for a in alpha]} n={point.n} d={d} mode={mode}",
        f"Estimate: lower={estimate.lower_bound} point={estimate.point_estimate:.6f} capped={estimate.capped}",
    ]
    verdict = None
    if options.get("collapse"):
        collapse = grassmann.collapse_check(point, d, mode, theta)
        result["collapse"] = collapse
        summary.append(f"Collapse: difference {collapse.difference:.4f} vs tolerance {collapse.tolerance:.4f} "
                       f"-> {'agrees' if collapse.agrees else 'differs'}")
        if not collapse.agrees:
            verdict = Verdict.INCONCLUSIVE
    if options.get("transfer"):
        report = grassmann.bv_transfer_check(point, d, count=sampling.count, seed=run.seed, override=override)
        result["transfer"] = report
        summary.append(f"Transference: {report.verdict.value}")
        if verdict is None or report.verdict == Verdict.VIOLATED:
            verdict = report.verdict
    return CommandOutcome(result, summary, PROFILE_HEADER, profile_rows(estimate.profile), verdict)


def cmd_badgen(run: RunConfig, instance: Optional[InstanceSpec]) -> CommandOutcome:
    instance = _require_instance(instance, "badgen")
    A, (s, r) = instance.target(), instance.weights()
    options = run.options
    alpha = parse_rational(options.get("alpha") or "1/5")
    depth = int(options.get("depth") or 6)
    check_bound = parse_rational(options.get("check_bound") or "10000")
    exponents, _ = _services(run)
    service = BadsetService(exponents)

    certificate = service.bad_certificate(A, s, r, alpha, depth, check_bound,
                                          selector=options.get("selector") or "first", seed=run.seed)
    result = {"instance": instance.name, "certificate": certificate}
    summary = [
        f"Instance: {instance.name}, alpha={alpha}, depth={depth}, R={certificate.R}",
        f"theta = {[str(t) for t in certificate.theta]}",
        f"epsilon = {float(certificate.epsilon):.6g}, window up to {check_bound}: "
        f"{'PASS' if certificate.window_pass else 'FAIL'} (min product {certificate.min_product:.6g})",
        f"Proof-covered bound: {certificate.proof_covered_bound:.6g}",
    ]
    summary += [f"Caveat: {c}" for c in certificate.caveats]

    if certificate.window_pass:
        verdict = Verdict.CONSISTENT
    elif float(check_bound) <= certificate.proof_covered_bound:
        verdict = Verdict.VIOLATED
    else:
        verdict = Verdict.INCONCLUSIVE
    if options.get("negative_control"):
        control = service.window_check(A, s, r, service.negative_control_theta(A), certificate.epsilon, check_bound)
        result["negative_control"] = control
        summary.append(f"Negative control theta: {'PASS' if control.passed else 'FAIL (expected)'}")
        if control.passed:
            verdict = Verdict.VIOLATED

    header = ["k", "Y", "children", "survivors", "survivor_bound", "children_bound"]
    rows = [[lv.k, repr(lv.Y), lv.children, lv.survivors, lv.survivor_bound, lv.children_bound]
            for lv in certificate.levels]
    return CommandOutcome(result, summary, header, rows, verdict)


HANDLERS: Dict[str, Callable[[RunConfig, Optional[InstanceSpec]], CommandOutcome]] = {
    "bestapprox": cmd_bestapprox,
    "exponents": cmd_exponents,
    "dyson": cmd_dyson,
    "bl": cmd_bl,
    "intermediate": cmd_intermediate,
    "badgen": cmd_badgen,
}


# ---------------------------------------------------------------------------
# Ejecución
# ---------------------------------------------------------------------------

def _options_from_args(args) -> Dict[str, Any]:
    options = {}
    for name in COMMAND_OPTIONS[args.command]:
        value = getattr(args, name, None)
        if value is not None and value is not False:
            options[name] = value
    if args.command == "dyson":
        options["weights_s"], options["weights_r"] = _weights_from_args(args)
    return options


def build_config(args) -> Tuple[RunConfig, Optional[InstanceSpec]]:
    instance = _instance_from_args(args)
    if instance is not None and getattr(args, "theta_samples", None):
        instance = instance.model_copy(update={"theta_samples": args.theta_samples, "theta_seed": args.seed})
    run = build_run_config(
        command=args.command,
        instance=instance,
        tmin=args.tmin,
        tmax=args.tmax,
        tratio=args.tratio,
        budget=args.budget,
        precision=args.precision,
        seed=args.seed,
        out=args.out,
        format=args.format,
        options=_options_from_args(args),
    )
    return run, instance


def execute(run: RunConfig, instance: Optional[InstanceSpec]) -> Tuple[int, List[str], CommandOutcome]:
    """Ejecuta el subcomando y escribe los reportes; devuelve (código de salida, archivos, resultado)"""
    configure_precision(run.precision)
    reports = ReportService(run.out)
    canonical = run.canonical()
    provenance = {"constants": instance.provenance()} if instance is not None else {}
    preamble = [f"{TOOL_NAME} {__version__} run {run_id(canonical)} command {run.command}",
                f"config {canonical_json(canonical)}",
                f"provenance {canonical_json(provenance)}"]
    files = []

    try:
        outcome = HANDLERS[run.command](run, instance)
    except DiophantineError as e:
        error = {"error": e.to_dict()}
        files.append(reports.write_json(reports.path_for(run.command, canonical, "json"),
                                        reports.envelope(run.command, canonical, error, provenance)))
        raise

    verdict = outcome.verdict.value if outcome.verdict is not None else None
    result = dict(outcome.result, verdict=verdict)
    if run.format in (None, "json"):
        files.append(reports.write_json(reports.path_for(run.command, canonical, "json"),
                                        reports.envelope(run.command, canonical, result, provenance)))
    if run.format in (None, "csv") and outcome.csv_header:
        files.append(reports.write_csv(reports.path_for(run.command, canonical, "csv"),
                                       outcome.csv_header, outcome.csv_rows, preamble))
    exit_code = TheoremViolation.exit_code if outcome.verdict == Verdict.VIOLATED else 0
    return exit_code, files, outcome


def print_summary(run: RunConfig, status: str, lines: Sequence[str], files: Sequence[str]) -> None:
    """Imprime el resumen legible del run"""
    print("\n" + "=" * 80)
    print(f"{run.command.upper()} SUMMARY")
    print("=" * 80)
    print(f"Run ID: {run_id(run.canonical())}")
    print(f"Status: {status}")
    print(f"Seed: {run.seed}")
    for line in lines:
        print(f"  {line}")
    print("=" * 80)
    if files:
        print(f"REPORTS GENERATED ({len(files)}):")
        for path in files:
            size = os.path.getsize(path) if os.path.exists(path) else 0
            print(f"  - {path} ({size} bytes)")
    print("=" * 80 + "\n")


def _add_common(parser: argparse.ArgumentParser) -> None:
    source = parser.add_argument_group("instance")
    source.add_argument("--instance", help=f"Named instance ({', '.join(list_instances())})")
    source.add_argument("--matrix", help="Explicit matrix: rows separated by ';', entries by ','")
    source.add_argument("--weights", help="Weight pair preset 's;r' or 'w(s;r)'")
    source.add_argument("--weights-s", help="Weights s (comma separated rationals or 'uniform')")
    source.add_argument("--weights-r", help="Weights r (comma separated rationals or 'uniform')")
    source.add_argument("--theta", help="Explicit shift theta (comma separated tokens or 'zero')")

    run = parser.add_argument_group("run")
    run.add_argument("--tmin", default=str(config.TGRID_MIN), help="Smallest scale T of the grid")
    run.add_argument("--tmax", default=str(config.TGRID_MAX), help="Largest scale T of the grid")
    run.add_argument("--tratio", default=str(config.TGRID_RATIO), help="Ratio between consecutive scales")
    run.add_argument("--budget", type=int, default=config.ENUMERATION_BUDGET, help="Enumeration budget per call")
    run.add_argument("--precision", type=int, default=config.PRECISION_CAP_BITS, help="Precision cap in bits")
    run.add_argument("--seed", type=int, default=config.DEFAULT_SEED, help="Seed for every sampler")
    run.add_argument("--out", default=config.OUTPUT_DIR, help="Output directory (DIOPHANTINE_OUTPUT_DIR)")
    run.add_argument("--format", choices=["json", "csv"], default=None, help="Write only this format (default: both)")
    run.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")
    run.add_argument("--quiet", "-q", action="store_true", help="Suppress output (except errors)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Weighted, inhomogeneous and intermediate Diophantine approximation toolkit",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        _add_common(p)
        return p

    p = add("bestapprox", "Best approximation sequence (JSON + CSV)")
    p.add_argument("--bound", help="Largest size N(X) (default: --tmax)")
    p.add_argument("--tie-break", choices=["lex", "revlex"], default="lex", help="Representative among ties")
    p.add_argument("--verify", action="store_true", help="Re-check minimality by independent enumeration")

    p = add("exponents", "Ordinary and uniform exponents with certified lower bounds")
    p.add_argument("--method", choices=["auto", "sequence", "grid", "series"], default="auto",
                   help="Estimation path")
    p.add_argument("--multiplicative", action="store_true", help="Also estimate the multiplicative exponent")

    p = add("dyson", "Exact weighted and classical Dyson bounds")
    p.add_argument("--m", type=int, help="Rows of A")
    p.add_argument("--n", type=int, help="Columns of A")
    p.add_argument("--omega", default="1", help="Exponent omega (rational or 'inf')")
    p.add_argument("--weights-uniform", action="store_true", help="Uniform weights on both sides")
    p.add_argument("--validate", action="store_true", help="Also validate on the given instance")

    p = add("bl", "Inhomogeneous transference over sampled shifts")
    p.add_argument("--theta-samples", type=int, default=config.THETA_SAMPLES, help="Number of theta samples")
    p.add_argument("--tolerance", type=float, default=config.TOLERANCE_BAND, help="Near-equality band")
    p.add_argument("--psi", help="Power law 'c,e' for psi (enables the (psi, phi) check)")
    p.add_argument("--phi", help="Power law 'c,e' for phi")

    p = add("intermediate", "Intermediate exponents by rational subspaces")
    p.add_argument("--alpha", help="Point alpha in R^n (comma separated tokens)")
    p.add_argument("--d", type=int, default=0, help="Subspace dimension d (0 <= d <= n-1)")
    p.add_argument("--mode", choices=["ordinary", "uniform"], default="ordinary", help="Exponent mode")
    p.add_argument("--collapse", action="store_true", help="Compare d = 0 or d = n-1 with the exponents module")
    p.add_argument("--transfer", action="store_true", help="Run the intermediate transference check")
    p.add_argument("--theta-samples", type=int, default=None, help="Theta samples for --transfer")
    p.add_argument("--override", action="store_true", help="Allow n, d beyond desk-scale limits")

    p = add("badgen", "Certified point of the twisted badly approximable set")
    p.add_argument("--alpha", default="1/5", help="Cantor parameter alpha in (0, 1/2)")
    p.add_argument("--depth", type=int, default=6, help="Levels of the nested-box descent")
    p.add_argument("--check-bound", default="10000", help="Window bound for the epsilon check")
    p.add_argument("--selector", choices=["first", "random"], default="first", help="Surviving box selector")
    p.add_argument("--negative-control", action="store_true", help="Also check theta = frac(tA e_1)")
    return parser


def _normalize_args(args) -> None:
    for name in ("bound", "check_bound", "alpha"):
        value = getattr(args, name, None)
        if value is not None and args.command != "intermediate":
            setattr(args, name, str(parse_rational(value)))
    if getattr(args, "omega", None) is not None:
        args.omega = render_extended(parse_extended(args.omega))


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Función principal de la CLI"""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, config.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    elif args.quiet:
        logging.getLogger().setLevel(logging.ERROR)

    run = None
    try:
        _normalize_args(args)
        run, instance = build_config(args)
        exit_code, files, outcome = execute(run, instance)
        if not args.quiet:
            status = "SUCCESS" if exit_code == 0 else "VIOLATED"
            print_summary(run, status, outcome.summary, files)
        return exit_code

    except KeyboardInterrupt:
        print("\nRun interrupted by user", file=sys.stderr)
        return 130

    except DiophantineError as e:
        logger.error(f"❌ {type(e).__name__}: {e.message}")
        print(f"ERROR ({type(e).__name__}, exit {e.exit_code}): {e.message}", file=sys.stderr)
        if run is not None and not args.quiet:
            print_summary(run, type(e).__name__.upper(), [e.message], [])
        return e.exit_code

    except Exception as e:
        logger.error(f"Unexpected error: {str(e)}")
        print(f"UNEXPECTED ERROR: {str(e)}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
