import itertools
from pathlib import Path

import numpy as np
import pytest

from phirm.arena import (
    JointEmpirical,
    MatrixGame,
    adversary_stream,
    ce_gap,
    load_game,
    parse_game,
    rock_paper_scissors,
    self_play,
)
from phirm.bounds import BoundMonitor
from phirm.links import PolynomialLink
from phirm.matcher import MatcherConfig, RegretMatcher
from phirm.odp import FixedSequence, RewardSystem, UniformLearner, ValidationError, run_odp
from phirm.regret import instantaneous_regret
from phirm.transforms import build_family


def test_constant_stream_repeats():
    adv = adversary_stream("constant", RewardSystem(3, 2.0), seed=0)
    assert all(adv.rewards(t).tolist() == [[2.0, 0.0, 0.0]] for t in range(1, 6))


def test_alternating_pattern():
    adv = adversary_stream("alternating", RewardSystem(2, 1.5), seed=0)
    assert [adv.rewards(t)[0].tolist() for t in range(1, 5)] == [[1.5, 0.0], [0.0, 1.5], [1.5, 0.0], [0.0, 1.5]]


def test_adaptive_stays_in_range_against_uniform():
    rs = RewardSystem(3, 1.0)
    tr = run_odp(UniformLearner(3), adversary_stream("adaptive_best_response", rs), 1000, seeds=[0])
    assert tr.rewards.min() >= 0 and tr.rewards.max() <= 1
    assert np.all(tr.rewards.sum(axis=-1) == 1.0)


def test_unknown_adversary():
    with pytest.raises(ValidationError):
        adversary_stream("omniscient", RewardSystem(2))


def _brute_gap(u1, u2, p):
    best = 0.0
    n1, n2 = p.shape
    for a, b in itertools.product(range(n1), repeat=2):
        best = max(best, sum(p[a, j] * (u1[b, j] - u1[a, j]) for j in range(n2)))
    for a, b in itertools.product(range(n2), repeat=2):
        best = max(best, sum(p[i, a] * (u2[i, b] - u2[i, a]) for i in range(n1)))
    return best


def test_ce_gap_zero_at_pure_nash_of_dominance_solvable_game():
    # prisoner's dilemma rescaled: defect (1) dominates for both
    u1 = np.array([[0.75, 0.0], [1.0, 0.25]])
    game = MatrixGame((u1, u1.T))
    counts = np.zeros((2, 2), dtype=np.int64)
    counts[1, 1] = 7
    assert ce_gap(game, JointEmpirical(counts, 7)) == 0.0


def test_ce_gap_matching_pennies_uniform_brute_force():
    game = MatrixGame.from_raw([[1, -1], [-1, 1]], [[-1, 1], [1, -1]])
    joint = JointEmpirical(np.ones((2, 2), dtype=np.int64), 4)
    u1, u2 = game.payoffs
    assert ce_gap(game, joint) == pytest.approx(_brute_gap(u1, u2, joint.distribution), abs=1e-15)


def test_ce_gap_random_joints_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n1, n2 = rng.integers(1, 5, 2)
        game = MatrixGame((rng.uniform(0, 1, (n1, n2)), rng.uniform(0, 1, (n1, n2))))
        counts = rng.integers(0, 5, (n1, n2))
        counts[0, 0] += 1
        joint = JointEmpirical(counts, int(counts.sum()))
        gap = ce_gap(game, joint)
        assert gap >= 0
        assert gap == pytest.approx(_brute_gap(*game.payoffs, joint.distribution), abs=1e-12)


def test_ce_gap_needs_data():
    with pytest.raises(ValidationError):
        ce_gap(rock_paper_scissors(), JointEmpirical(np.zeros((3, 3), dtype=np.int64), 0))


def _int_matcher(n=3):
    return RegretMatcher(MatcherConfig(build_family("int", n), PolynomialLink(2)))


@pytest.fixture(scope="module")
def rps_play():
    game = rock_paper_scissors()
    mons = (BoundMonitor(build_family("int", 3), PolynomialLink(2), 1.0),
            BoundMonitor(build_family("int", 3), PolynomialLink(2), 1.0))
    res = self_play(game, _int_matcher(), _int_matcher(), 2000, seeds=range(4), monitors=mons,
                    checkpoints=(100,))
    return game, res


def test_ce_gap_equals_internal_regret_over_t(rps_play):
    game, res = rps_play
    fam = build_family("int", 3)
    for s, joint in enumerate(res.joints):
        per_player = []
        for tr in res.traces:
            reg = instantaneous_regret(fam, tr.actions[:, s], tr.rewards[:, s]).sum(axis=0)
            per_player.append(reg.max() / joint.t)
        assert ce_gap(game, joint) == pytest.approx(max(per_player), abs=1e-9)


def test_self_play_players_satisfy_step_inequality(rps_play):
    _, res = rps_play
    for tr in res.traces:
        c = tr.columns
        assert np.all(c["blackwell_lhs"] <= c["blackwell_rhs"] + 1e-8)
        live = c["y_sum"] > 0
        assert np.all(np.abs(c["blackwell_lhs"][live]) <= 1e-8)


def test_self_play_counts_and_checkpoints(rps_play):
    _, res = rps_play
    assert all(j.counts.sum() == 2000 for j in res.joints)
    assert all(j.t == 100 and j.counts.sum() == 100 for j in res.checkpoints[100])


def test_self_play_is_deterministic():
    game = rock_paper_scissors()
    a = self_play(game, _int_matcher(), _int_matcher(), 300, seeds=[3, 9])
    b = self_play(game, _int_matcher(), _int_matcher(), 300, seeds=[3, 9])
    for ja, jb in zip(a.joints, b.joints):
        assert np.array_equal(ja.counts, jb.counts)


def test_one_column_game_reduces_to_plain_odp():
    u1 = np.array([[0.2], [0.9], [0.5]])
    game = MatrixGame((u1, np.full((3, 1), 0.5)))
    assert game.reward_system(1) is None
    res = self_play(game, _int_matcher(), None, 200, seeds=[1, 2])
    plain = run_odp(_int_matcher(), FixedSequence(RewardSystem(3), [u1[:, 0]]), 200, seeds=[1, 2])
    assert np.array_equal(res.traces[0].q, plain.q)
    assert np.array_equal(res.traces[0].actions, plain.actions)
    assert np.all(res.traces[1].actions == 0)


def test_self_play_dimension_mismatch():
    with pytest.raises(ValidationError):
        self_play(rock_paper_scissors(), _int_matcher(2), _int_matcher(3), 10)


def test_parse_game_and_normalization():
    text = """# prisoner's dilemma
    3 0
    5 1

    3 5   # column player
    0 1
    """
    game = parse_game(text)
    assert game.shape == (2, 2)
    assert game.normalization == ((0.2, 0.0), (0.2, 0.0))
    assert np.allclose(game.payoffs[0], [[0.6, 0.0], [1.0, 0.2]], rtol=0, atol=1e-15)


def test_in_range_tables_are_kept():
    game = MatrixGame.from_raw([[0.5, 1.0]], [[0.0, 0.25]])
    assert game.normalization == ((1.0, 0.0), (1.0, 0.0))
    assert game.payoffs[1].tolist() == [[0.0, 0.25]]


def test_negative_table_is_shifted():
    game = MatrixGame.from_raw([[-1.0, 1.0]], [[0.0, 0.0]])
    assert game.payoffs[0].tolist() == [[0.0, 1.0]]
    assert game.normalization[0] == (0.5, 0.5)


@pytest.mark.parametrize("text", ["1 2\n3 4\n", "1 2\n3\n\n1 2\n3 4\n", "1 x\n\n1 2\n"])
def test_bad_game_files(text):
    with pytest.raises(ValidationError):
        parse_game(text)


def test_rps_file_matches_builtin():
    game = load_game(Path(__file__).parents[1] / "configs" / "games" / "rps.txt")
    builtin = rock_paper_scissors()
    assert all(np.array_equal(a, b) for a, b in zip(game.payoffs, builtin.payoffs))
