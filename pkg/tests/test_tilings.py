import pytest

from qwalks.src.errors import DomainError, EncodingError
from qwalks.src.tilings import (
    InterlacingPair,
    Partition,
    TilingEnsemble,
    array_volume,
    cond_prob_top_row,
    convergence_to_walks,
    decode_boundary,
    encode_boundary,
    interlaces,
    interlacing_arrays,
    lower_rows,
    row_particle_range,
    schur_by_patterns,
    schur_principal,
    top_row,
)
from qwalks.src.walks import WalkConfig


def test_partition_validation():
    with pytest.raises(DomainError):
        Partition((1, 2))
    with pytest.raises(DomainError):
        Partition((2, -1))
    lam = Partition((3, 1, 0))
    assert lam.N == 3 and lam.size == 4
    assert lam.shifted == [2, -1, -3]


def test_interlacing():
    assert interlaces((2, 1), (2, 1, 0))
    assert not interlaces((3, 1), (2, 1, 0))
    assert not interlaces((2,), (2, 1, 0))
    with pytest.raises(DomainError):
        InterlacingPair(Partition((3, 1)), Partition((2, 1, 0)))


def test_schur_principal_small():
    q = 0.5
    # s_(1)(q^-1, 1)
    assert schur_principal((1, 0), 2, q) == pytest.approx(1 / q + 1, rel=1e-14)
    assert schur_principal((0, 0, 0), 3, q) == pytest.approx(1.0, rel=1e-14)


def test_schur_by_patterns_counts_tableaux():
    # dimension of the GL(3) module with highest weight (2, 1, 0)
    assert schur_by_patterns((2, 1, 0), [1.0, 1.0, 1.0]) == 8
    assert len(list(interlacing_arrays((2, 1, 0)))) == 8


@pytest.mark.parametrize("lam", [(2, 1, 0), (3, 3, 1, 0), (4, 2, 1, 0)])
@pytest.mark.parametrize("q", [0.5, 0.8])
def test_schur_product_form_matches_patterns(lam, q):
    N = len(lam)
    variables = [q ** (n - N) for n in range(1, N + 1)]
    assert schur_by_patterns(lam, variables) == pytest.approx(schur_principal(lam, N, q), rel=1e-12)


@pytest.mark.parametrize("lam", [(2, 1, 0), (4, 2, 1, 0), (5, 5, 2, 0)])
def test_top_row_law_sums_to_one(lam):
    total = sum(cond_prob_top_row(mu, lam, 0.6) for mu in lower_rows(lam))
    assert total == pytest.approx(1.0, abs=1e-12)
    assert cond_prob_top_row(lam[1:], lam, 0.6) > 0
    assert cond_prob_top_row((lam[0] + 1,) + lam[2:], lam, 0.6) == 0.0


def test_boundary_encoding_round_trip():
    x = WalkConfig((3, 1))
    lam = top_row(x, 5)
    assert lam.parts == (7, 7, 7, 6, 5)
    assert decode_boundary(lam, 2) == x
    upper, lower = encode_boundary(x, WalkConfig((2, 1)), 5)
    assert upper == lam
    assert interlaces(lower, upper)


def test_boundary_encoding_needs_room():
    with pytest.raises(EncodingError):
        encode_boundary(WalkConfig((9, 1)), WalkConfig((8, 1)), 2)


@pytest.mark.parametrize("y", [(2, 1), (3, 1), (2, 0), (3, 0)])
def test_top_row_law_converges_to_walks(y):
    errors = convergence_to_walks(WalkConfig((3, 1)), WalkConfig(y), 0.5, [10, 20, 40, 60])
    assert errors[-1] < 1e-3
    assert all(later <= earlier + 1e-14 for earlier, later in zip(errors, errors[1:]))


def test_ensemble_probabilities():
    lam = Partition((2, 1, 0))
    ensemble = TilingEnsemble(lam, 0.7)
    assert len(ensemble.arrays) == 8
    assert ensemble.probabilities.sum() == pytest.approx(1.0, abs=1e-14)
    assert ensemble.partition_function == pytest.approx(schur_principal(lam, 3, 0.7), rel=1e-12)
    # lowest rows (1, 0) and (0)
    assert min(array_volume(array) for array in ensemble.arrays) == 1


def test_ensemble_rows_hold_n_particles():
    lam = Partition((3, 1, 0))
    ensemble = TilingEnsemble(lam, 0.6)
    for n in (1, 2):
        total = sum(ensemble.correlation([(p, n)]) for p in row_particle_range(lam, n))
        assert total == pytest.approx(n, abs=1e-12)
    assert row_particle_range(lam, 4) is None


def test_ensemble_size_limit():
    with pytest.raises(DomainError):
        TilingEnsemble(Partition((6, 5, 4, 3, 2, 1, 0)), 0.5)


def test_top_row_law_stays_accurate_at_large_N():
    errors = convergence_to_walks(WalkConfig((3, 1)), WalkConfig((2, 0)), 0.5, [40, 60, 80])
    assert errors[0] < 1e-11
    assert errors[1] < 1e-13
    assert errors[2] < 1e-13


@pytest.mark.parametrize("mu", [(2, 1), (1, 1), (2, 0)])
def test_top_row_law_matches_schur_ratio(mu):
    lam, q = (2, 1, 0), 0.7
    expected = q ** -sum(mu) * schur_principal(mu, 2, q) / schur_principal(lam, 3, q)
    assert cond_prob_top_row(mu, lam, q) == pytest.approx(expected, rel=1e-13)
