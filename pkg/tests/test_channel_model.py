from __future__ import annotations

import math
from itertools import product

import numpy as np
import pytest

from solver_testkit import all_sign_matrices, sylvester
from src.analytics.channel_model import (
    atm_equivalent,
    check_msp,
    draw_channel,
    draw_symbols,
    has_msp,
    observe,
    sample_instance,
    sigma_for_snr,
)
from src.core.errors import InputError
from src.models.channel import Atm
from src.repositories.witness_repository import WitnessRepository


def test_gaussian_channel_is_seeded_and_nonsingular() -> None:
    first = draw_channel(6, "gaussian", np.random.default_rng(3))
    second = draw_channel(6, "gaussian", np.random.default_rng(3))
    assert np.array_equal(first, second)
    assert abs(np.linalg.det(first)) > 0


def test_gaussian_channel_moments(rng: np.random.Generator) -> None:
    channel = draw_channel(300, "gaussian", rng)
    assert abs(channel.mean()) < 0.02
    assert channel.var() == pytest.approx(1.0, abs=0.03)


def test_rayleigh_channel_is_positive_with_unit_variance(rng: np.random.Generator) -> None:
    channel = draw_channel(300, "rayleigh", rng)
    assert np.all(channel > 0)
    assert channel.var() == pytest.approx(1.0, abs=0.03)


def test_unknown_distribution_is_rejected(rng: np.random.Generator) -> None:
    with pytest.raises(InputError):
        draw_channel(3, "cauchy", rng)  # type: ignore[arg-type]


def test_symbols_are_signs(rng: np.random.Generator) -> None:
    symbols = draw_symbols(4, 50, rng)
    assert symbols.shape == (4, 50)
    assert set(np.unique(symbols)) == {-1.0, 1.0}


def test_noiseless_observation_is_exact(rng: np.random.Generator) -> None:
    symbols = draw_symbols(3, 10, rng)
    assert np.array_equal(observe(np.eye(3), symbols, 0.0, rng), symbols)


def test_noise_has_requested_variance(rng: np.random.Generator) -> None:
    symbols = draw_symbols(4, 25_000, rng)
    noise = observe(np.eye(4), symbols, 0.5, rng) - symbols
    assert noise.var() == pytest.approx(0.25, rel=0.05)


def test_negative_sigma_is_rejected(rng: np.random.Generator) -> None:
    with pytest.raises(InputError):
        observe(np.eye(2), np.ones((2, 2)), -1.0, rng)


def test_sigma_for_snr_follows_average_receive_power() -> None:
    channel = np.eye(4)
    assert sigma_for_snr(channel, 0.0) == pytest.approx(1.0)
    assert sigma_for_snr(channel, 20.0) == pytest.approx(0.1)
    assert sigma_for_snr(2.0 * channel, 0.0) == pytest.approx(2.0)


def test_sample_instance_uses_snr(rng: np.random.Generator) -> None:
    instance = sample_instance(3, 12, rng, snr_db=10.0, seed=(1, 2))
    assert instance.Y.shape == (3, 12)
    assert instance.sigma == pytest.approx(sigma_for_snr(instance.A, 10.0))
    assert instance.seed == (1, 2)


def test_atm_equivalence_basic_cases() -> None:
    ok, witness = atm_equivalent(np.eye(2), np.eye(2))
    assert ok and witness is not None
    ok, witness = atm_equivalent(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.eye(2))
    assert ok and witness is not None
    assert witness.perm.tolist() == [1, 0]
    assert witness.signs.tolist() == [1.0, -1.0]
    ok, witness = atm_equivalent(np.eye(2), np.ones((2, 2)))
    assert not ok and witness is None


def test_atm_equivalence_recovers_random_transform(rng: np.random.Generator) -> None:
    symbols = sylvester(8)[:4]
    transform = Atm(perm=rng.permutation(4), signs=np.where(rng.random(4) < 0.5, -1.0, 1.0))
    transformed = transform.apply(symbols)
    assert np.array_equal(transform.as_matrix() @ symbols, transformed)
    ok, witness = atm_equivalent(transformed, symbols)
    assert ok and witness is not None
    assert np.array_equal(witness.apply(symbols), transformed)


def test_single_flip_breaks_atm_equivalence() -> None:
    symbols = sylvester(8)[:4]
    corrupted = symbols.copy()
    corrupted[0, 3] *= -1.0
    ok, _ = atm_equivalent(corrupted, symbols)
    assert not ok


def test_msp_small_cases() -> None:
    assert has_msp(np.array([[1.0, 1.0], [1.0, -1.0]]))
    assert not has_msp(np.ones((2, 3)))
    assert not has_msp(np.ones((3, 2)))


def test_msp_fraction_for_two_by_two_is_one_half() -> None:
    hits = sum(has_msp(matrix) for matrix in all_sign_matrices(2))
    assert hits == 8


def test_msp_is_invariant_under_column_and_row_transforms(rng: np.random.Generator) -> None:
    for _ in range(20):
        symbols = draw_symbols(3, 5, rng)
        shuffled = symbols[rng.permutation(3)][:, rng.permutation(5)]
        shuffled = shuffled * np.where(rng.random(5) < 0.5, -1.0, 1.0)
        shuffled = np.where(rng.random(3) < 0.5, -1.0, 1.0)[:, np.newaxis] * shuffled
        assert has_msp(symbols) == has_msp(shuffled)


def test_msp_witness_columns_index_the_input() -> None:
    symbols = np.hstack([np.ones((4, 3)), sylvester(4), -sylvester(4)[:, :1]])
    check = check_msp(symbols)
    assert check.has_msp and check.exhaustive
    chosen = symbols[:, list(check.witness_columns)]
    assert abs(round(np.linalg.det(chosen))) == 16


def test_randomized_msp_search_marks_result_non_exhaustive(rng: np.random.Generator) -> None:
    symbols = np.hstack([sylvester(4), draw_symbols(4, 12, rng)])
    check = check_msp(symbols, exhaustive_limit=1, random_budget=50_000, rng=rng)
    assert check.has_msp
    assert not check.exhaustive


def test_rank_one_symbols_never_have_msp() -> None:
    symbols = np.ones((3, 9)) * np.array([1.0, -1.0, 1.0])[:, np.newaxis]
    check = check_msp(symbols, exhaustive_limit=1, random_budget=100)
    assert not check.has_msp
    assert check.subsets_checked == 0


@pytest.mark.slow
def test_msp_probability_for_two_rows_and_nine_columns() -> None:
    rng = np.random.default_rng(11)
    hits = sum(has_msp(draw_symbols(2, 9, rng)) for _ in range(10_000))
    expected = 1.0 - math.pow(0.5, 8)
    assert hits / 10_000 == pytest.approx(expected, abs=0.02)


def _covers_an_orthogonal_four_class(symbols: np.ndarray) -> bool:
    # Up to sign there are 8 columns in {±1}^4; the even- and odd-parity halves are each a
    # Hadamard basis and no column of one half is orthogonal to one of the other.
    canonical = symbols * symbols[0]
    seen = {tuple(column) for column in canonical.T}
    for parity in (0, 1):
        group = {
            (1.0, *tail)
            for tail in product((-1.0, 1.0), repeat=3)
            if sum(value < 0 for value in tail) % 2 == parity
        }
        if group <= seen:
            return True
    return False


def _four_row_msp_probability(k: int) -> float:
    def cover(classes: int) -> float:
        return sum(
            (-1) ** j * math.comb(classes, j) * (1.0 - j / 8) ** k for j in range(classes + 1)
        )

    return 2.0 * cover(4) - cover(8)


def test_four_row_msp_means_covering_an_orthogonal_class(rng: np.random.Generator) -> None:
    for k in (6, 9, 13):
        for _ in range(40):
            symbols = draw_symbols(4, k, rng)
            assert has_msp(symbols) == _covers_an_orthogonal_four_class(symbols)


def test_four_row_msp_probability_stays_well_below_certainty_at_thirteen_columns() -> None:
    assert _four_row_msp_probability(4) == pytest.approx(2 * math.factorial(4) / 8**4)
    assert _four_row_msp_probability(13) == pytest.approx(0.7183, abs=1e-4)
    assert _four_row_msp_probability(26) > 0.99


def test_six_row_witness_gives_msp(witnesses: WitnessRepository, rng: np.random.Generator) -> None:
    symbols = np.hstack([draw_symbols(6, 5, rng), witnesses.load(6), draw_symbols(6, 3, rng)])
    check = check_msp(symbols)
    assert check.has_msp
    assert abs(round(np.linalg.det(symbols[:, list(check.witness_columns)]))) == 160


@pytest.mark.slow
def test_msp_probability_for_four_rows_matches_the_class_count() -> None:
    rng = np.random.default_rng(13)
    hits = sum(has_msp(draw_symbols(4, 13, rng)) for _ in range(4000))
    assert hits / 4000 == pytest.approx(_four_row_msp_probability(13), abs=0.03)


@pytest.mark.slow
def test_msp_probability_for_six_rows_and_eighteen_columns() -> None:
    rng = np.random.default_rng(18)
    hits = sum(has_msp(draw_symbols(6, 18, rng)) for _ in range(400))
    assert 0.38 <= hits / 400 <= 0.60
