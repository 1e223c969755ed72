"""
Tests de sucesiones de mejores aproximaciones contra fracciones continuas
"""
import math
from fractions import Fraction

import pytest

from app.core.errors import BudgetExceeded, DegenerateRank, PreconditionViolation
from app.core.numerics import WeightVector, parse_real
from app.services.bestapprox_service import BestApproxService, canonical_mask, canonical_pieces, product_chunks, shell_pieces
from app.services.types import EnumerationConfig, RankStatus, TargetMatrix

ONE = WeightVector.uniform(1)


def _quadratic_cf(D: int, terms: int):
    """Cociente parcial de sqrt(D) por el algoritmo entero (m, d, a)"""
    a0 = math.isqrt(D)
    m, d, a = 0, 1, a0
    out = [a0]
    while len(out) < terms:
        m = d * a - m
        d = (D - m * m) // d
        a = (a0 + m) // d
        out.append(a)
    return out


def _convergent_denominators(partials, bound):
    """q_k de las convergentes sin repeticiones, hasta bound"""
    q_prev, q = 0, 1
    out = [1]
    for a in partials[1:]:
        q_prev, q = q, a * q + q_prev
        if q > bound:
            break
        if q != out[-1]:
            out.append(q)
    return out


def _denominators(token: str, bound: int, budget: int = None):
    service = BestApproxService(EnumerationConfig(budget=budget) if budget else None)
    seq = service.compute_best_approx(TargetMatrix.scalar(parse_real(token)), ONE, ONE, bound)
    return [e.X[0] for e in seq.entries], seq


@pytest.mark.parametrize("token,partials,bound", [
    ("phi", [1] * 60, 10 ** 5),
    ("sqrt(2)", _quadratic_cf(2, 60), 16 * 10 ** 6),
    ("sqrt(3)", _quadratic_cf(3, 60), 10 ** 6),
])
def test_continued_fraction_oracle(token, partials, bound):
    """Los primeros 20 denominadores coinciden con las convergentes (Pell hasta 15994428)"""
    found, seq = _denominators(token, bound, budget=2 * 10 ** 7)
    expected = _convergent_denominators(partials, bound)
    assert len(expected) >= 20
    assert found == expected
    assert seq.candidates_examined == bound


def test_canonical_pieces_cover_one_representative_per_sign_pair():
    """Cada vector no nulo de la capa aparece una sola vez, con la primera coordenada no nula positiva"""
    for inner, outer in (([0, 0], [2, 1]), ([1, 2], [3, 2]), ([1, 0, 1], [2, 1, 1])):
        pieces = canonical_pieces(shell_pieces(inner, outer))
        found = sorted(tuple(int(v) for v in x) for axes in pieces for block in product_chunks(axes, 7) for x in block)
        full = [x for axes in shell_pieces(inner, outer) for x in product_chunks(axes, 7)]
        expected = sorted(tuple(int(v) for v in x) for block in full for x in block[canonical_mask(block)])
        assert found == expected
        assert len(found) == len(set(found))


def test_known_prefixes():
    """Fibonacci, Pell y sqrt(3): primeros términos"""
    assert _denominators("phi", 100)[0][:5] == [1, 2, 3, 5, 8]
    assert _denominators("sqrt(2)", 3000)[0] == [1, 2, 5, 12, 29, 70, 169, 408, 985, 2378]
    assert _denominators("sqrt(3)", 1000)[0] == [1, 3, 4, 11, 15, 41, 56, 153, 209, 571, 780]


def test_evaluate_returns_exact_error_and_witness():
    """L(5) para phi y el p entero que lo realiza"""
    service = BestApproxService()
    M, p = service.evaluate(TargetMatrix.scalar(parse_real("phi")), (5,), ONE)
    assert p == (8,)
    assert float(M) == pytest.approx(5 * (1 + math.sqrt(5)) / 2 - 8, rel=1e-9)


def test_rational_target_is_degenerate():
    """A = 1/2: rango degenerado con testigo 2 y la construcción se detiene"""
    service = BestApproxService()
    A = TargetMatrix.scalar(Fraction(1, 2))
    report = service.check_rank(A)
    assert report.status == RankStatus.DEGENERATE
    assert report.witness == (2,)
    with pytest.raises(DegenerateRank) as info:
        service.compute_best_approx(A, ONE, ONE, 100)
    assert info.value.exit_code == 3


def test_rank_of_related_constants():
    """sqrt(2) y sqrt(8) tienen una relación entera; phi no la tiene a altura baja"""
    service = BestApproxService()
    related = TargetMatrix.of([[parse_real("sqrt(2)")], [parse_real("sqrt(8)")]])
    report = service.check_rank(related)
    assert report.status == RankStatus.DEGENERATE
    assert report.witness == (2, -1)
    report = service.check_rank(TargetMatrix.scalar(parse_real("phi")))
    assert report.status == RankStatus.UNDECIDED


def test_verify_sequence_phi():
    """Monotonía estricta y minimalidad por enumeración independiente"""
    service = BestApproxService()
    A = TargetMatrix.scalar(parse_real("phi"))
    seq = service.compute_best_approx(A, ONE, ONE, 1000)
    check = service.verify_sequence(A, seq)
    assert check.monotone and check.minimal
    assert check.checked_points == 1000


def test_weighted_two_dimensional_sequence_is_verified():
    """Caso m = 2 con pesos (1/3, 2/3): sucesión monótona y minimal"""
    service = BestApproxService()
    A = TargetMatrix.of([[parse_real("sqrt(2)")], [parse_real("sqrt(3)")]])
    s = WeightVector((Fraction(1, 3), Fraction(2, 3)))
    seq = service.compute_best_approx(A, s, ONE, 400)
    assert len(seq) >= 4
    keys = [e.key for e in seq.entries]
    assert keys == sorted(set(keys))
    check = service.verify_sequence(A, seq)
    assert check.monotone and check.minimal


def test_weights_must_match_shape():
    """Pesos de longitud incorrecta"""
    service = BestApproxService()
    with pytest.raises(PreconditionViolation):
        service.compute_best_approx(TargetMatrix.scalar(parse_real("phi")), WeightVector.uniform(2), ONE, 10)


def test_budget_exhaustion_reports_partial_count():
    """El presupuesto agotado informa cuántas entradas se obtuvieron"""
    service = BestApproxService(EnumerationConfig(budget=100))
    with pytest.raises(BudgetExceeded) as info:
        service.compute_best_approx(TargetMatrix.scalar(parse_real("phi")), ONE, ONE, 10 ** 4)
    assert info.value.partial_count > 0
    assert info.value.exit_code == 4


def test_geometric_growth_m_n_one():
    """U = 4, V = 8 para m = n = 1 y Y_(i+V) >= 2 Y_i"""
    service = BestApproxService()
    _, seq = _denominators("phi", 1000)
    report = service.verify_geometric_growth(seq, ONE, ONE)
    assert (report.U, report.V) == (4, 8)
    assert report.violations == []
    assert report.fitted_gamma == pytest.approx((1 + math.sqrt(5)) / 2, rel=0.05)


def test_subsequence_extract_fibonacci():
    """R = 3 salta de tres en tres; R = 8 da 1, 8, 89, 987, 10946"""
    service = BestApproxService()
    _, seq = _denominators("phi", 20000)
    sub = service.subsequence_extract(seq, 3)
    assert sub.indices[:5] == (0, 2, 5, 8, 11)
    assert not sub.truncated
    sub = service.subsequence_extract(seq, 8, count=5)
    assert [seq.entries[i].X[0] for i in sub.indices] == [1, 8, 89, 987, 10946]
    assert sub.violations == []


def test_subsequence_needs_ratio_above_one():
    """R <= 1 se rechaza"""
    service = BestApproxService()
    with pytest.raises(PreconditionViolation):
        service.subsequence_extract([1, 2, 3], 1)


def test_tie_break_does_not_change_the_sequence():
    """Con rango maximal no hay empates exactos de L: lex y revlex dan los mismos representantes"""
    service = BestApproxService()
    A = TargetMatrix.of([[parse_real("sqrt(2)")], [parse_real("sqrt(3)")]])
    s = WeightVector((Fraction(1, 3), Fraction(2, 3)))
    lex = service.compute_best_approx(A, s, ONE, 300, tie_break="lex")
    revlex = service.compute_best_approx(A, s, ONE, 300, tie_break="revlex")
    assert [e.X for e in lex.entries] == [e.X for e in revlex.entries]
    keys = [e.key for e in revlex.entries]
    assert len(keys) == len(set(keys))
    assert revlex.tie_break == "revlex"
    with pytest.raises(PreconditionViolation):
        service.compute_best_approx(A, s, ONE, 300, tie_break="random")
