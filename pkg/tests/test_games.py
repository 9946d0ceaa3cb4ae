import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cole.games import (
    DimensionMismatch,
    MatrixCoopGame,
    gen_convention_game,
    gen_dominant_game,
    payoff,
    payoff_std,
    pure,
    uniform,
)


def simplex(m):
    return st.lists(st.floats(0.01, 1.0), min_size=m, max_size=m).map(lambda v: np.array(v) / np.sum(v))


def test_core_is_symmetrised():
    game = MatrixCoopGame([[1.0, 2.0], [0.0, 3.0]])
    assert np.array_equal(game.payoff_core, [[1.0, 1.0], [1.0, 3.0]])


def test_pure_and_uniform_payoffs():
    rng = np.random.default_rng(0)
    game = MatrixCoopGame(rng.normal(size=(4, 4)))
    for a in range(4):
        assert payoff(game, pure(a, 4), pure(a, 4)) == game.payoff_core[a, a]
    assert payoff(game, uniform(4), uniform(4)) == pytest.approx(game.payoff_core.mean(), abs=1e-15)


def test_dimension_and_simplex_checks():
    game = gen_dominant_game(3, 1.0)
    with pytest.raises(DimensionMismatch):
        payoff(game, uniform(2), uniform(3))
    with pytest.raises(ValueError):
        payoff(game, [0.5, 0.6, -0.1], uniform(3))


def test_noisy_mode_within_three_sigma():
    rng = np.random.default_rng(1)
    core = rng.uniform(0, 1, size=(3, 3))
    s, p = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
    noisy = MatrixCoopGame(core, "bernoulli-episode", episodes=100_000)
    exact = payoff(noisy.exact(), s, p)
    sigma = payoff_std(noisy, s, p) / np.sqrt(noisy.episodes)
    assert abs(payoff(noisy, s, p, seed=42) - exact) <= 3 * sigma
    assert payoff(noisy, s, p, seed=42) == payoff(noisy, s, p, seed=42)


def test_noisy_estimator_unbiased_over_seeds():
    game = MatrixCoopGame(np.array([[1.0, 0.0], [0.0, 2.0]]), "bernoulli-episode", episodes=50)
    s = p = np.array([0.3, 0.7])
    means = [payoff(game, s, p, seed=i) for i in range(400)]
    exact = payoff(game.exact(), s, p)
    se = payoff_std(game, s, p) / np.sqrt(50 * 400)
    assert abs(np.mean(means) - exact) <= 3 * se


@settings(max_examples=50, deadline=None)
@given(simplex(4), simplex(4), simplex(4), st.floats(0, 1))
def test_bilinear_and_symmetric(s1, s2, p, lam):
    game = MatrixCoopGame(np.arange(16, dtype=float).reshape(4, 4) % 5)
    mix = lam * s1 + (1 - lam) * s2
    mix = mix / mix.sum()
    lhs = payoff(game, mix, p)
    rhs = lam * payoff(game, s1, p) + (1 - lam) * payoff(game, s2, p)
    assert lhs == pytest.approx(rhs, abs=1e-12)
    assert payoff(game, s1, p) == payoff(game, p, s1)


def test_convention_game_construction():
    game = gen_convention_game(2, 1.0, 0.0, jitter=False)
    expected = np.kron(np.eye(2), np.ones((2, 2)))
    assert np.array_equal(game.payoff_core, expected)
    assert payoff(game, pure(0, 4), pure(3, 4)) == 0.0


def test_convention_game_jitter_bound():
    for seed in range(20):
        game = gen_convention_game(3, 2.0, 0.5, seed=seed, block_size=3)
        label = np.repeat(np.arange(3), 3)
        same = label[:, None] == label[None, :]
        base = np.where(same, 2.0, 0.5)
        assert np.max(np.abs(game.payoff_core - base)) < (2.0 - 0.5) / 10
        assert np.array_equal(game.payoff_core, game.payoff_core.T)
        assert game.payoff_core[same].min() > game.payoff_core[~same].max()


@pytest.mark.parametrize("kwargs", [dict(blocks=1), dict(blocks=2, intra=0.0, inter=0.0), dict(blocks=2, inter=-1.0)])
def test_convention_game_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        gen_convention_game(**kwargs)


def test_dominant_game():
    assert np.array_equal(gen_dominant_game(3, 1.0).payoff_core, np.diag([1.0, 1.0, 2.0]))
    with pytest.raises(ValueError):
        gen_dominant_game(1, 1.0)
    with pytest.raises(ValueError):
        gen_dominant_game(3, 0.0)


def test_game_json_round_trip():
    game = MatrixCoopGame(np.random.default_rng(0).normal(size=(3, 3)), "bernoulli-episode", 77)
    back = MatrixCoopGame.from_json(game.to_json())
    assert np.array_equal(back.payoff_core, game.payoff_core)
    assert (back.noise_mode, back.episodes) == ("bernoulli-episode", 77)
