# coding=utf-8

"""
Tests for trade execution, the decision rules and settlement under both
mechanisms.
"""

import numpy as np
import pytest

from src import costfn
from src import verify
from src.costfn import CostFunctionSpec
from src.engine import (
    DecisionRule,
    MarketSpec,
    SettlementPolicy,
    export_trade_log,
    load_trade_log,
    open_market,
    sample_index,
    trade_log_frame,
)
from src.enums import Mechanism
from src.errors import DecisionRuleError, InvariantViolationError, SettlementError, ShapeMismatchError, ShortSellingError
from src.scoring import Report

E = np.e
TOTAL_COST = np.log((E ** 2 + 1) / 2) + np.log((E + 1) / 2)   # 2.053896


def _example_state(allow_short=False, phi=(0.5, 0.5)):
    state = open_market(MarketSpec.uniform([2, 2], liquidity=1.0, allow_short=allow_short))
    state.execute_trade('trader', deltas=[[2.0, 0.0], [0.0, 1.0]])

    if phi is not None:
        state.fix_decision_rule(DecisionRule.fixed(phi))

    return state


def _random_market(rng, allow_short=False):
    m = int(rng.integers(2, 5))
    specs = []

    for _ in range(m):
        n = int(rng.integers(2, 6))
        specs.append(CostFunctionSpec(liquidity=rng.uniform(0.5, 2.0), prior=0.8 * rng.dirichlet(np.ones(n)) + 0.2 / n))

    return MarketSpec(specs, allow_short=allow_short)


def _random_phi(rng, m, floor=0.01):
    return floor + (1.0 - m * floor) * rng.dirichlet(np.ones(m))


class TestMarketSpec:

    def test_needs_two_actions(self):
        with pytest.raises(InvariantViolationError):
            MarketSpec([CostFunctionSpec(num_outcomes=2)])

    def test_negative_initial_quantities_in_no_short_market(self):
        specs = [CostFunctionSpec(num_outcomes=2), CostFunctionSpec(num_outcomes=2)]

        with pytest.raises(ShortSellingError):
            MarketSpec(specs, initial_quantities=[[-1.0, 0.0], [0.0, 0.0]])

        MarketSpec(specs, initial_quantities=[[-1.0, 0.0], [0.0, 0.0]], allow_short=True)

    def test_delta_shape(self):
        spec = MarketSpec.uniform([2, 3])

        with pytest.raises(ShapeMismatchError):
            spec.validate_deltas([[1.0, 0.0], [1.0, 0.0]])


class TestTrades:

    def test_example_trade(self):
        state = _example_state(phi=None)
        trade = state.trade_log[0]
        np.testing.assert_allclose(trade.cash_paid, 2.053896, atol=1e-6)
        np.testing.assert_allclose(trade.prices_after[0].probs, [0.880797, 0.119203], atol=1e-6)
        np.testing.assert_allclose(trade.prices_after[1].probs, [0.268941, 0.731059], atol=1e-6)
        np.testing.assert_allclose(state.cash_paid('trader'), TOTAL_COST, atol=1e-12)

    def test_trade_by_targets(self):
        state = open_market(MarketSpec.uniform([2, 2]))
        trade = state.execute_trade('trader', targets=[Report([E ** 2 / (E ** 2 + 1), 1 / (E ** 2 + 1)]), None])
        np.testing.assert_allclose(trade.deltas[0], [2.0, 0.0], atol=1e-9)
        np.testing.assert_allclose(trade.deltas[1], [0.0, 0.0], atol=1e-15)

    def test_exactly_one_of_deltas_or_targets(self):
        state = open_market(MarketSpec.uniform([2, 2]))

        with pytest.raises(ValueError):
            state.execute_trade('trader')

    def test_no_short_market_rejects_short_holdings(self):
        state = open_market(MarketSpec.uniform([2, 2]))

        with pytest.raises(ShortSellingError):
            state.execute_trade('trader', deltas=[[-1.0, 0.0], [0.0, 0.0]])

        assert state.trade_log == []

    def test_selling_held_securities_is_allowed(self):
        state = open_market(MarketSpec.uniform([2, 2]))
        state.execute_trade('trader', deltas=[[2.0, 0.0], [0.0, 1.0]])
        state.execute_trade('trader', deltas=[[-1.0, 0.0], [0.0, 0.0]])
        np.testing.assert_allclose(state.holdings('trader')[0], [1.0, 0.0])

    def test_short_market_allows_short_holdings(self):
        state = open_market(MarketSpec.uniform([2, 2], allow_short=True))
        trade = state.execute_trade('trader', deltas=[[0.0, -2.0], [-1.0, 0.0]])
        assert trade.cash_paid < 0.0

    def test_cash_is_sum_of_cost_changes(self):
        rng = np.random.default_rng(42)

        for _ in range(50):
            state = open_market(_random_market(rng))

            for t in range(3):
                deltas = [rng.uniform(0, 3, size=n) for n in state.spec.outcomes_per_action]
                before = [q.copy() for q in state.quantities]
                trade = state.execute_trade('t{}'.format(t), deltas=deltas)
                expected = sum(costfn.trade_cost(s, q0, q0 + d) for s, q0, d in zip(state.spec.cost_specs, before, deltas))
                np.testing.assert_allclose(trade.cash_paid, expected, atol=1e-12)

    def test_underwrite_keeps_prices(self):
        state = _example_state(phi=None)
        before = [r.probs.copy() for r in state.prices()]
        trade = state.underwrite('insurer', [-1.0, -0.5])
        np.testing.assert_allclose(trade.cash_paid, -1.5, atol=1e-12)

        for r, b in zip(state.prices(), before):
            np.testing.assert_allclose(r.probs, b, atol=1e-12)

        assert state.insurers == ['insurer']
        assert state.regular_traders == ['trader']

    def test_underwrite_rejects_long_bundles(self):
        state = _example_state(phi=None)

        with pytest.raises(ShortSellingError):
            state.underwrite('insurer', [1.0, 0.0])

    def test_market_is_frozen_after_decision(self):
        state = _example_state()

        with pytest.raises(SettlementError):
            state.execute_trade('late', deltas=[[1.0, 0.0], [0.0, 0.0]])


class TestDecisionRules:

    def test_fixed_rule_needs_full_support(self):
        with pytest.raises(DecisionRuleError) as e:
            DecisionRule.fixed([1.0, 0.0])

        assert 'full support' in str(e.value)

    def test_fixed_rule_below_floor(self):
        with pytest.raises(DecisionRuleError):
            DecisionRule.fixed([0.995, 0.005])

    def test_fixed_rule_with_smaller_floor(self):
        rule = DecisionRule.fixed([0.995, 0.005], floor=0.001)
        np.testing.assert_allclose(rule.realize(), [0.995, 0.005])

    def test_softmax_of_price(self):
        state = _example_state(phi=None)
        rule = DecisionRule.softmax_of_price([0, 0], temperature=0.05, floor=0.01)
        phi = rule.realize(state.prices())
        np.testing.assert_allclose(np.sum(phi), 1.0, atol=1e-12)
        assert np.all(phi >= 0.01 - 1e-12)
        assert phi[0] > phi[1]

    def test_softmax_at_low_temperature_keeps_floor(self):
        state = _example_state(phi=None)
        rule = DecisionRule.softmax_of_price([0, 0], temperature=1e-4, floor=0.01)
        phi = rule.realize(state.prices())
        np.testing.assert_allclose(phi, [0.99, 0.01], atol=1e-12)
        assert phi[1] >= 0.01 - 1e-12
        np.testing.assert_allclose(np.sum(phi), 1.0, atol=1e-12)

    def test_softmax_floor_too_large(self):
        with pytest.raises(DecisionRuleError):
            DecisionRule.softmax_of_price([0, 0, 0], floor=0.4)

    def test_decide_is_deterministic(self):
        selections = []

        for _ in range(2):
            state = _example_state(phi=None)
            selections.append(state.decide(DecisionRule.fixed([0.3, 0.7]), seed=123))

        assert selections[0] == selections[1]

    def test_decide_frequency_matches_phi(self):
        state = _example_state(phi=None)
        rule = DecisionRule.fixed([0.99, 0.01])
        draws = 10000
        selected = sum(state.decide(rule, seed=seed) for seed in range(draws))

        sigma = np.sqrt(draws * 0.01 * 0.99)
        assert abs(selected - draws * 0.01) <= 3 * sigma

    def test_sample_index(self):
        phi = np.array([0.2, 0.3, 0.5])
        assert sample_index(phi, 0.0) == 0
        assert sample_index(phi, 0.2) == 1
        assert sample_index(phi, 0.49) == 1
        assert sample_index(phi, 0.999999) == 2
        np.testing.assert_array_equal(sample_index(phi, np.array([0.1, 0.6])), [0, 2])

    def test_incentive_compatible_policy(self):
        phi = np.array([0.25, 0.75])
        assert SettlementPolicy.from_decision_rule(phi).is_incentive_compatible(phi)
        assert not SettlementPolicy.unscaled(2).is_incentive_compatible(phi)


class TestSettlement:

    def test_securities_example(self):
        state = _example_state()
        payoff = state.settle_securities(0, 0)['trader']
        np.testing.assert_allclose(payoff, 4.0 - TOTAL_COST, atol=1e-12)
        np.testing.assert_allclose(payoff, 1.946104, atol=1e-6)

    def test_scoring_example(self):
        state = _example_state()
        np.testing.assert_allclose(state.settle_scoring(0, 0)['trader'], 1.132439, atol=1e-6)
        np.testing.assert_allclose(state.settle_scoring(1, 1)['trader'], 0.759842, atol=1e-6)

    def test_extreme_trade_keeps_mechanisms_equivalent(self):
        state = open_market(MarketSpec.uniform([2, 2], liquidity=1.0))
        trade = state.execute_trade('trader', deltas=[[50.0, 0.0], [0.0, 0.0]])
        phi = state.fix_decision_rule(DecisionRule.fixed([0.5, 0.5]))
        assert state.prices()[0][1] < 1e-20

        for i in range(2):
            securities = state.settle_securities(0, i)['trader']
            scoring = state.settle_scoring(0, i)['trader']
            assert np.isfinite(scoring)
            np.testing.assert_allclose(securities - scoring, (1.0 - phi[0]) / phi[0] * trade.costs[0], atol=1e-9)

            outcome = state.settle(i, j=0)
            assert abs(outcome.total(Mechanism.SCORING)) < 1e-9

        # Outcome 1 of the traded market scores -50 - (C(50, 0) - C(0, 0)) = -100 + ln 2
        np.testing.assert_allclose(state.settle_scoring(0, 1)['trader'], (-100.0 + np.log(2.0)) / phi[0], atol=1e-9)

        uniform = [[0.5, 0.5], [0.5, 0.5]]
        securities = verify.exact_expected_payoff(state, 'trader', uniform, Mechanism.SECURITIES)
        scoring = verify.exact_expected_payoff(state, 'trader', uniform, Mechanism.SCORING)
        np.testing.assert_allclose(securities, scoring, atol=1e-9)

    def test_explicit_log_rule_matches_implied_scores(self):
        state = _example_state()
        rule = costfn.implied_log_rule(state.spec.cost_specs[0])

        for j in range(2):
            for i in range(2):
                np.testing.assert_allclose(state.settle_scoring(j, i, rule=rule)['trader'], state.settle_scoring(j, i)['trader'], atol=1e-9)
                np.testing.assert_allclose(state.creator_scoring_payoff(j, i, rule=rule), state.creator_scoring_payoff(j, i), atol=1e-9)

    def test_sequential_scores_telescope(self):
        rng = np.random.default_rng(11)

        for _ in range(50):
            spec = _random_market(rng)
            first = [rng.uniform(0, 3, size=n) for n in spec.outcomes_per_action]
            second = [rng.uniform(0, 3, size=n) for n in spec.outcomes_per_action]
            phi = DecisionRule.fixed(_random_phi(rng, spec.num_actions))

            split = open_market(spec)
            split.execute_trade('alice', deltas=first)
            split.execute_trade('bob', deltas=second)
            split.fix_decision_rule(phi)

            combined = open_market(spec)
            combined.execute_trade('carol', deltas=[a + b for a, b in zip(first, second)])
            combined.fix_decision_rule(phi)

            for j, n in enumerate(spec.outcomes_per_action):
                for i in range(n):
                    payoffs = split.settle_scoring(j, i)
                    np.testing.assert_allclose(payoffs['alice'] + payoffs['bob'], combined.settle_scoring(j, i)['carol'], atol=1e-9)

    def test_settle_before_decision(self):
        state = _example_state(phi=None)

        with pytest.raises(SettlementError):
            state.settle_securities(0, 0)

    def test_settle_needs_selected_action(self):
        state = _example_state()

        with pytest.raises(SettlementError):
            state.settle(0)

    def test_settle_selected_action(self):
        state = open_market(MarketSpec.uniform([2, 2]))
        state.execute_trade('trader', deltas=[[2.0, 0.0], [0.0, 1.0]])
        j = state.decide(DecisionRule.fixed([0.5, 0.5]), seed=1)
        outcome = state.settle(0)
        assert outcome.selected_action == j
        assert outcome.observed_outcome == 0

    def test_unselected_market_trade(self):
        state = open_market(MarketSpec.uniform([2, 2]))
        state.execute_trade('trader', deltas=[[0.0, 0.0], [0.0, 1.0]])
        state.fix_decision_rule(DecisionRule.fixed([0.5, 0.5]))
        cost = np.log((E + 1) / 2)

        for i in range(2):
            np.testing.assert_allclose(state.settle_securities(0, i)['trader'], -cost, atol=1e-12)
            assert state.settle_scoring(0, i)['trader'] == pytest.approx(0.0, abs=1e-15)

    def test_single_market_payoff_gap(self):
        rng = np.random.default_rng(42)

        for _ in range(200):
            spec = _random_market(rng)
            j = int(rng.integers(spec.num_actions))
            deltas = [np.zeros(n) for n in spec.outcomes_per_action]
            deltas[j] = rng.uniform(0, 3, size=spec.outcomes_per_action[j])

            state = open_market(spec)
            trade = state.execute_trade('trader', deltas=deltas)
            phi = state.fix_decision_rule(DecisionRule.fixed(_random_phi(rng, spec.num_actions)))
            expected_gap = (1.0 - phi[j]) / phi[j] * trade.costs[j]

            for i in range(spec.outcomes_per_action[j]):
                gap = state.settle_securities(j, i)['trader'] - state.settle_scoring(j, i)['trader']
                np.testing.assert_allclose(gap, expected_gap, atol=1e-9)

                if trade.costs[j] > 0.0:
                    assert gap > 0.0

    def test_conservation(self):
        rng = np.random.default_rng(7)

        for _ in range(50):
            allow_short = bool(rng.random() < 0.5)
            state = open_market(_random_market(rng, allow_short=allow_short))
            low = -3.0 if allow_short else 0.0

            for t in range(3):
                state.execute_trade('t{}'.format(t), deltas=[rng.uniform(low, 3, size=n) for n in state.spec.outcomes_per_action])

            state.underwrite('insurer', -rng.uniform(0, 1, size=state.num_actions))
            state.fix_decision_rule(DecisionRule.fixed(_random_phi(rng, state.num_actions)))

            for j, n in enumerate(state.spec.outcomes_per_action):
                for i in range(n):
                    outcome = state.settle(i, j=j)
                    assert abs(outcome.total(Mechanism.SECURITIES)) < 1e-9
                    assert abs(outcome.total(Mechanism.SCORING)) < 1e-9


class TestTradeLog:

    def test_frame_columns(self):
        frame = trade_log_frame(_example_state(phi=None))
        assert list(frame.columns) == ['trade_index', 'trader_id', 'insurer', 'action', 'delta_0', 'delta_1',
                                       'cash_paid', 'price_0', 'price_1']
        assert len(frame) == 2

    def test_round_trip(self, tmp_path):
        state = open_market(MarketSpec.uniform([2, 3]))
        state.execute_trade('alice', deltas=[[2.0, 0.0], [0.0, 1.0, 0.5]])
        state.execute_trade('bob', deltas=[[0.0, 1.5], [0.25, 0.0, 0.0]])
        state.underwrite('insurer', [-1.0, -0.5])

        path = str(tmp_path / 'trade_log.csv')
        export_trade_log(state, path)
        replayed = load_trade_log(state.spec, path)

        assert replayed.traders == state.traders
        assert replayed.insurers == ['insurer']

        for a, b in zip(replayed.quantities, state.quantities):
            np.testing.assert_allclose(a, b, atol=1e-12)

        for trader_id in state.traders:
            np.testing.assert_allclose(replayed.cash_paid(trader_id), state.cash_paid(trader_id), atol=1e-12)

        rule = DecisionRule.fixed([0.3, 0.7])
        state.fix_decision_rule(rule)
        replayed.fix_decision_rule(rule)

        for j, n in enumerate(state.spec.outcomes_per_action):
            for i in range(n):
                original, restored = state.settle(i, j=j), replayed.settle(i, j=j)

                for trader_id in state.traders:
                    np.testing.assert_allclose(restored.securities_payoffs[trader_id], original.securities_payoffs[trader_id], atol=1e-12)
                    np.testing.assert_allclose(restored.scoring_payoffs[trader_id], original.scoring_payoffs[trader_id], atol=1e-12)

                np.testing.assert_allclose(restored.creator_securities, original.creator_securities, atol=1e-12)
                np.testing.assert_allclose(restored.creator_scoring, original.creator_scoring, atol=1e-12)
