# coding=utf-8

"""
Tests for scenario parsing and market construction from scenario files.
"""

import json
import os

import numpy as np
import pytest

from src import scenario
from src.enums import InsurerMode, TradeTransform
from src.errors import ScenarioParseError, ShortSellingError

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'configs')


def _config_path(name):
    return os.path.join(CONFIG_DIR, name)


def _minimal():
    return {
        'schema_version': 1,
        'market': {'actions': [{'outcomes': ['yes', 'no']}, {'outcomes': ['yes', 'no']}]},
        'decision_rule': {'kind': 'fixed', 'phi': [0.5, 0.5]}
    }


def _write(tmp_path, text, name='scenario.json'):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestParsing:

    def test_example_scenario(self):
        config = scenario.load_scenario(_config_path('two_action_example.json'))
        assert config.num_actions == 2
        assert config.action_names == ['alpha_1', 'alpha_2']
        assert config.seed == 42
        assert config.draws == 20
        assert config.reproduce_example
        assert config.monte_carlo_replications == 100000
        assert config.phi_grid == {'start': 0.01, 'stop': 0.99, 'step': 0.01}
        assert config.trades[0]['transform'] == TradeTransform.NONE

    def test_insured_scenario(self):
        config = scenario.load_scenario(_config_path('insured_softmax.json'))
        assert config.insurer == {'trader': 'insurer', 'mode': InsurerMode.COST_MATCHED}
        assert config.decision_rule['target_outcomes'] == [0, 0, 0]
        assert config.trades[0]['targets'][1] is None
        assert config.beliefs[2] is None

    def test_defaults(self):
        config = scenario.ScenarioConfig(_minimal())
        assert config.seed == 0
        assert config.draws == 1
        assert config.exact_expectation
        assert not config.reproduce_example
        assert config.monte_carlo_replications == 0
        assert config.liquidity == [1.0, 1.0]
        assert config.initial_quantities == [[0.0, 0.0], [0.0, 0.0]]
        assert config.action_names == ['action_0', 'action_1']
        assert config.trades == []
        assert config.insurer is None
        assert config.beliefs is None

    def test_snapshot_is_a_copy(self):
        raw = _minimal()
        config = scenario.ScenarioConfig(raw)
        raw['schema_version'] = 99
        assert config.to_dict()['schema_version'] == 1

    def test_malformed_json_reports_position(self, tmp_path):
        path = _write(tmp_path, '{\n  "schema_version": 1,\n  "market": [\n}')

        with pytest.raises(ScenarioParseError) as e:
            scenario.load_scenario(path)

        assert e.value.line == 4
        assert e.value.column is not None
        assert 'line 4' in str(e.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IOError):
            scenario.load_scenario(str(tmp_path / 'missing.json'))

    def test_missing_schema_version(self):
        raw = _minimal()
        del raw['schema_version']

        with pytest.raises(ScenarioParseError) as e:
            scenario.ScenarioConfig(raw)

        assert e.value.field == 'schema_version'

    def test_unsupported_schema_version(self):
        raw = _minimal()
        raw['schema_version'] = 2

        with pytest.raises(ScenarioParseError) as e:
            scenario.ScenarioConfig(raw)

        assert e.value.field == 'schema_version'

    def test_missing_outcomes(self):
        raw = _minimal()
        del raw['market']['actions'][1]['outcomes']

        with pytest.raises(ScenarioParseError) as e:
            scenario.ScenarioConfig(raw)

        assert e.value.field == 'market.actions[1].outcomes'

    def test_single_action(self):
        raw = _minimal()
        raw['market']['actions'] = raw['market']['actions'][:1]

        with pytest.raises(ScenarioParseError):
            scenario.ScenarioConfig(raw)

    def test_wrong_type(self):
        raw = _minimal()
        raw['market']['actions'][0]['liquidity'] = 'high'

        with pytest.raises(ScenarioParseError) as e:
            scenario.ScenarioConfig(raw)

        assert e.value.field == 'market.actions[0].liquidity'

    def test_prior_length(self):
        raw = _minimal()
        raw['market']['actions'][0]['prior'] = [0.2, 0.3, 0.5]

        with pytest.raises(ScenarioParseError) as e:
            scenario.ScenarioConfig(raw)

        assert e.value.field == 'market.actions[0].prior'

    def test_unknown_decision_rule(self):
        raw = _minimal()
        raw['decision_rule'] = {'kind': 'argmax'}

        with pytest.raises(ScenarioParseError) as e:
            scenario.ScenarioConfig(raw)

        assert e.value.field == 'decision_rule.kind'

    def test_unknown_target_outcome(self):
        raw = _minimal()
        raw['decision_rule'] = {'kind': 'softmax_of_price', 'target_outcomes': ['yes', 'maybe']}

        with pytest.raises(ScenarioParseError) as e:
            scenario.ScenarioConfig(raw)

        assert e.value.field == 'decision_rule.target_outcomes[1]'

    def test_trade_needs_exactly_one_form(self):
        raw = _minimal()
        raw['trades'] = [{'trader': 't', 'deltas': [[1, 0], [0, 1]], 'targets': [[0.6, 0.4], None]}]

        with pytest.raises(ScenarioParseError):
            scenario.ScenarioConfig(raw)

        raw['trades'] = [{'trader': 't'}]

        with pytest.raises(ScenarioParseError):
            scenario.ScenarioConfig(raw)

    def test_unknown_transform(self):
        raw = _minimal()
        raw['trades'] = [{'trader': 't', 'deltas': [[1, 0], [0, 1]], 'transform': 'invert'}]

        with pytest.raises(ScenarioParseError) as e:
            scenario.ScenarioConfig(raw)

        assert e.value.field == 'trades[0].transform'

    def test_unknown_insurer_mode(self):
        raw = _minimal()
        raw['insurer'] = {'mode': 'min_matched'}

        with pytest.raises(ScenarioParseError) as e:
            scenario.ScenarioConfig(raw)

        assert e.value.field == 'insurer.mode'

    def test_draws(self):
        raw = _minimal()
        raw['settlement'] = {'draws': 0}

        with pytest.raises(ScenarioParseError):
            scenario.ScenarioConfig(raw)

    def test_belief_length(self):
        raw = _minimal()
        raw['beliefs'] = [[0.5, 0.5], [0.2, 0.3, 0.5]]

        with pytest.raises(ScenarioParseError) as e:
            scenario.ScenarioConfig(raw)

        assert e.value.field == 'beliefs[1]'

    def test_round_trip_through_file(self, tmp_path):
        path = _write(tmp_path, json.dumps(_minimal()))
        config = scenario.load_scenario(path)
        assert config.source == path
        assert config.to_dict() == _minimal()


class TestBuildMarket:

    def test_example(self):
        config = scenario.load_scenario(_config_path('two_action_example.json'))
        state = scenario.build_market(config)
        phi = state.fix_decision_rule(scenario.build_decision_rule(config))

        np.testing.assert_allclose(state.cash_paid('trader'), 2.053896, atol=1e-6)
        np.testing.assert_allclose(state.prices()[0].probs, [0.880797, 0.119203], atol=1e-6)
        np.testing.assert_allclose(phi, [0.5, 0.5])
        assert state.spec.action_names == ['alpha_1', 'alpha_2']

    def test_liability_free_short(self):
        config = scenario.load_scenario(_config_path('liability_free_short.json'))
        state = scenario.build_market(config)
        holdings = state.holdings('trader')
        np.testing.assert_array_equal(holdings[0], [0.0, -2.0])
        np.testing.assert_array_equal(holdings[1], [-1.0, 0.0])
        np.testing.assert_allclose(state.cash_paid('trader'), 2.053896 - 3.0, atol=1e-6)

    def test_liability_free_needs_short_selling(self):
        config = scenario.load_scenario(_config_path('liability_free_no_short.json'))

        with pytest.raises(ShortSellingError):
            scenario.build_market(config)

    def test_insured_softmax(self):
        config = scenario.load_scenario(_config_path('insured_softmax.json'))
        state = scenario.build_market(config)

        assert state.regular_traders == ['alice', 'bob']
        assert state.insurers == ['insurer']
        assert len(state.trade_log) == 4

        # Price targets are met before the final standardised trade
        np.testing.assert_allclose(state.trade_log[1].prices_after[1].probs, [0.65, 0.35], atol=1e-9)
        np.testing.assert_allclose(state.trade_log[0].prices_after[2].probs, [0.5, 0.25, 0.25], atol=1e-9)

        # Cost-matched insurer: the bundle costs minus the regular traders' payments
        np.testing.assert_allclose(state.cash_paid('insurer'), -(state.cash_paid('alice') + state.cash_paid('bob')), atol=1e-9)

        phi = state.fix_decision_rule(scenario.build_decision_rule(config))
        assert np.all(phi >= 0.01 - 1e-12)
        np.testing.assert_allclose(np.sum(phi), 1.0, atol=1e-12)

    def test_beliefs_default_to_final_prices(self):
        config = scenario.load_scenario(_config_path('insured_softmax.json'))
        state = scenario.build_market(config)
        beliefs = scenario.beliefs_for(state, config)
        assert beliefs[0] == [0.72, 0.28]
        np.testing.assert_allclose(beliefs[2], state.prices()[2].probs)

    def test_targets_with_transform(self):
        raw = _minimal()
        raw['market']['allow_short'] = True
        raw['trades'] = [{'trader': 't', 'targets': [[0.7, 0.3], [0.4, 0.6]], 'transform': 'scoring_equivalent'}]
        state = scenario.build_market(scenario.ScenarioConfig(raw))

        assert abs(state.cash_paid('t')) < 1e-12
        np.testing.assert_allclose(state.prices()[0].probs, [0.7, 0.3], atol=1e-9)
