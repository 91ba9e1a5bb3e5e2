# coding=utf-8

import copy
import json

import numpy as np

from . import settings
from . import strategies
from .costfn import CostFunctionSpec
from .engine import DecisionRule, MarketSpec, open_market
from .enums import InsurerMode, TradeTransform
from .errors import ScenarioParseError
from .logger import log


##############################################
# FIELD VALIDATION
##############################################

_NUMBER_TYPES = (int, float)


def _is_number(value):
    # type: (object) -> bool
    return isinstance(value, _NUMBER_TYPES) and not isinstance(value, bool)


def _require(mapping, key, field, types, optional=False, default=None):
    # type: (dict, str, str, tuple, bool, object) -> object
    if not isinstance(mapping, dict):
        raise ScenarioParseError('expected an object', field=field)

    if key not in mapping or mapping[key] is None:
        if optional:
            return default

        raise ScenarioParseError('missing required key', field='{}.{}'.format(field, key) if field else key)

    value = mapping[key]
    path = '{}.{}'.format(field, key) if field else key

    if types == 'number':
        if not _is_number(value):
            raise ScenarioParseError('expected a number, got: {}'.format(json.dumps(value)), field=path)
        return float(value)

    if types == 'integer':
        if not isinstance(value, int) or isinstance(value, bool):
            raise ScenarioParseError('expected an integer, got: {}'.format(json.dumps(value)), field=path)
        return value

    if not isinstance(value, types):
        raise ScenarioParseError('expected {}, got: {}'.format(_type_name(types), json.dumps(value)), field=path)

    return value


def _type_name(types):
    # type: (tuple) -> str
    names = {dict: 'an object', list: 'a list', str: 'a string', bool: 'a boolean'}
    types = types if isinstance(types, tuple) else (types,)
    return ' or '.join(names.get(t, t.__name__) for t in types)


def _number_list(value, field):
    # type: (object, str) -> list
    if not isinstance(value, list) or not all(_is_number(v) for v in value):
        raise ScenarioParseError('expected a list of numbers, got: {}'.format(json.dumps(value)), field=field)

    return [float(v) for v in value]


def _per_action_vectors(value, field, num_actions, allow_null=False):
    # type: (object, str, int, bool) -> list
    if not isinstance(value, list) or len(value) != num_actions:
        raise ScenarioParseError('expected a list with one entry per action ({})'.format(num_actions), field=field)

    vectors = []

    for k, entry in enumerate(value):
        if entry is None and allow_null:
            vectors.append(None)
        else:
            vectors.append(_number_list(entry, '{}[{}]'.format(field, k)))

    return vectors


def _enum_value(enum_type, value, field):
    # type: (type, object, str) -> object
    try:
        return enum_type(value)
    except ValueError:
        raise ScenarioParseError('unsupported value {}, expected one of: {}'
                                 .format(json.dumps(value), ', '.join(e.value for e in enum_type)), field=field)


##############################################
# SCENARIO CONFIGURATION
##############################################

class ScenarioConfig(object):
    """
    A parsed and validated scenario file. Values are accessed through
    _get_config_value; every validation failure raises ScenarioParseError
    naming the offending field.
    """

    def __init__(self, config, source=None):
        # type: (dict, str) -> None
        if not isinstance(config, dict):
            raise ScenarioParseError('expected a JSON object at the top level')

        self.config = copy.deepcopy(config)
        self.source = source

        schema_version = _require(self.config, 'schema_version', '', 'integer')

        if schema_version != settings.SCENARIO_SCHEMA_VERSION:
            raise ScenarioParseError('unsupported schema version {}, expected {}'
                                     .format(schema_version, settings.SCENARIO_SCHEMA_VERSION), field='schema_version')

        self._parse_market()
        self._parse_trades()
        self._parse_insurer()
        self._parse_decision_rule()
        self._parse_settlement()
        self._parse_verification()
        self._parse_beliefs()

    def _get_config_value(self, key):
        return self.config[key] if key in self.config else None

    def _parse_market(self):
        market = _require(self.config, 'market', '', dict)
        actions = _require(market, 'actions', 'market', list)

        if len(actions) < 2:
            raise ScenarioParseError('a decision market needs at least 2 actions, got: {}'.format(len(actions)), field='market.actions')

        self.action_names = []
        self.outcome_names = []
        self.liquidity = []
        self.priors = []
        self.initial_quantities = []

        for k, action in enumerate(actions):
            field = 'market.actions[{}]'.format(k)
            name = _require(action, 'name', field, str, optional=True, default='action_{}'.format(k))
            outcomes = _require(action, 'outcomes', field, list)

            if len(outcomes) < 2 or not all(isinstance(o, str) for o in outcomes):
                raise ScenarioParseError('expected at least 2 outcome names', field='{}.outcomes'.format(field))

            prior = action.get('prior')

            if prior is not None:
                prior = _number_list(prior, '{}.prior'.format(field))

                if len(prior) != len(outcomes):
                    raise ScenarioParseError('prior has {} entries for {} outcomes'.format(len(prior), len(outcomes)),
                                             field='{}.prior'.format(field))

            quantities = action.get('initial_quantities')

            if quantities is not None:
                quantities = _number_list(quantities, '{}.initial_quantities'.format(field))

                if len(quantities) != len(outcomes):
                    raise ScenarioParseError('initial quantities have {} entries for {} outcomes'.format(len(quantities), len(outcomes)),
                                             field='{}.initial_quantities'.format(field))

            self.action_names.append(name)
            self.outcome_names.append(list(outcomes))
            self.liquidity.append(_require(action, 'liquidity', field, 'number', optional=True, default=settings.DEFAULT_LIQUIDITY))
            self.priors.append(prior)
            self.initial_quantities.append(quantities if quantities is not None else [0.0] * len(outcomes))

        self.allow_short = _require(market, 'allow_short', 'market', bool, optional=True, default=False)

    @property
    def num_actions(self):
        # type: () -> int
        return len(self.action_names)

    def _parse_trades(self):
        trades = _require(self.config, 'trades', '', list, optional=True, default=[])
        self.trades = []

        for n, trade in enumerate(trades):
            field = 'trades[{}]'.format(n)
            trader = _require(trade, 'trader', field, str)
            has_targets = trade.get('targets') is not None
            has_deltas = trade.get('deltas') is not None

            if has_targets == has_deltas:
                raise ScenarioParseError('provide exactly one of targets or deltas', field=field)

            transform = _enum_value(TradeTransform, trade.get('transform', TradeTransform.NONE.value), '{}.transform'.format(field))

            if has_targets:
                targets = _per_action_vectors(trade['targets'], '{}.targets'.format(field), self.num_actions, allow_null=True)
                deltas = None
            else:
                deltas = _per_action_vectors(trade['deltas'], '{}.deltas'.format(field), self.num_actions)
                targets = None

            self.trades.append({'trader': trader, 'targets': targets, 'deltas': deltas, 'transform': transform})

    def _parse_insurer(self):
        insurer = _require(self.config, 'insurer', '', dict, optional=True)

        if insurer is None:
            self.insurer = None
            return

        self.insurer = {'trader': _require(insurer, 'trader', 'insurer', str, optional=True, default='insurer'),
                        'mode': _enum_value(InsurerMode, _require(insurer, 'mode', 'insurer', str), 'insurer.mode')}

    def _parse_decision_rule(self):
        rule = _require(self.config, 'decision_rule', '', dict)
        kind = _require(rule, 'kind', 'decision_rule', str)
        floor = _require(rule, 'floor', 'decision_rule', 'number', optional=True)

        if kind == 'fixed':
            phi = _number_list(_require(rule, 'phi', 'decision_rule', list), 'decision_rule.phi')

            if len(phi) != self.num_actions:
                raise ScenarioParseError('phi has {} entries for {} actions'.format(len(phi), self.num_actions), field='decision_rule.phi')

            self.decision_rule = {'kind': kind, 'phi': phi, 'floor': floor}
        elif kind == 'softmax_of_price':
            targets = _require(rule, 'target_outcomes', 'decision_rule', list)

            if len(targets) != self.num_actions:
                raise ScenarioParseError('expected one target outcome per action', field='decision_rule.target_outcomes')

            indices = [self._outcome_index(k, t) for k, t in enumerate(targets)]
            temperature = _require(rule, 'temperature', 'decision_rule', 'number', optional=True)
            self.decision_rule = {'kind': kind, 'target_outcomes': indices, 'temperature': temperature, 'floor': floor}
        else:
            raise ScenarioParseError('unsupported decision rule kind {}, expected fixed or softmax_of_price'.format(json.dumps(kind)),
                                     field='decision_rule.kind')

    def _outcome_index(self, k, target):
        # type: (int, object) -> int
        field = 'decision_rule.target_outcomes[{}]'.format(k)

        if isinstance(target, str):
            if target not in self.outcome_names[k]:
                raise ScenarioParseError('unknown outcome {} of action {}'.format(json.dumps(target), self.action_names[k]), field=field)
            return self.outcome_names[k].index(target)

        if isinstance(target, int) and not isinstance(target, bool) and 0 <= target < len(self.outcome_names[k]):
            return target

        raise ScenarioParseError('expected an outcome name or index, got: {}'.format(json.dumps(target)), field=field)

    def _parse_settlement(self):
        settlement = _require(self.config, 'settlement', '', dict, optional=True, default={})
        self.seed = _require(settlement, 'seed', 'settlement', 'integer', optional=True, default=0)
        self.draws = _require(settlement, 'draws', 'settlement', 'integer', optional=True, default=1)

        if self.draws < 1:
            raise ScenarioParseError('expected at least one draw, got: {}'.format(self.draws), field='settlement.draws')

    def _parse_verification(self):
        verification = _require(self.config, 'verification', '', dict, optional=True, default={})
        self.reproduce_example = _require(verification, 'reproduce_example', 'verification', bool, optional=True, default=False)
        self.exact_expectation = _require(verification, 'exact_expectation', 'verification', bool, optional=True, default=True)
        self.monte_carlo_replications = _require(verification, 'monte_carlo_replications', 'verification', 'integer',
                                                 optional=True, default=0)

        if self.monte_carlo_replications < 0:
            raise ScenarioParseError('expected a non-negative number of replications', field='verification.monte_carlo_replications')

        grid = _require(verification, 'phi_grid', 'verification', dict, optional=True, default={})
        self.phi_grid = {key: _require(grid, key, 'verification.phi_grid', 'number', optional=True)
                         for key in ('start', 'stop', 'step')}

    def _parse_beliefs(self):
        beliefs = self._get_config_value('beliefs')
        self.beliefs = None if beliefs is None else _per_action_vectors(beliefs, 'beliefs', self.num_actions, allow_null=True)

        if self.beliefs is not None:
            for k, (belief, names) in enumerate(zip(self.beliefs, self.outcome_names)):
                if belief is not None and len(belief) != len(names):
                    raise ScenarioParseError('belief has {} entries for {} outcomes'.format(len(belief), len(names)),
                                             field='beliefs[{}]'.format(k))

    def to_dict(self):
        # type: () -> dict
        return copy.deepcopy(self.config)


def load_scenario(path):
    # type: (str) -> ScenarioConfig

    """
    Loads and validates a JSON scenario file.

    # Arguments
        :param path: path to the scenario file
    # Returns
        :return: the ScenarioConfig
    """
    with open(path) as f:
        data = f.read()

    try:
        config = json.loads(data)
    except ValueError as e:
        # json.JSONDecodeError carries the position of the error
        raise ScenarioParseError('malformed JSON: {}'.format(getattr(e, 'msg', str(e))),
                                 line=getattr(e, 'lineno', None), column=getattr(e, 'colno', None))

    log('Loaded scenario: {}'.format(path))
    return ScenarioConfig(config, source=path)


##############################################
# MARKET CONSTRUCTION
##############################################

def build_market_spec(config):
    # type: (ScenarioConfig) -> MarketSpec
    cost_specs = [CostFunctionSpec(liquidity=b, prior=prior, num_outcomes=len(names))
                  for b, prior, names in zip(config.liquidity, config.priors, config.outcome_names)]

    return MarketSpec(cost_specs,
                      initial_quantities=config.initial_quantities,
                      allow_short=config.allow_short,
                      action_names=config.action_names,
                      outcome_names=config.outcome_names)


def build_market(config):
    # type: (ScenarioConfig) -> MarketState

    """
    Opens the market described by the scenario and executes its trades and
    the insurer's underwriting. The decision rule is not recorded yet.
    """
    state = open_market(build_market_spec(config))
    apply_trades(state, config)

    if config.insurer is not None:
        underwrite_insurer(state, config)

    return state


def apply_trades(state, config):
    # type: (MarketState, ScenarioConfig) -> list
    executed = []

    for trade in config.trades:
        if trade['targets'] is not None:
            deltas = state.deltas_for_targets(trade['targets'])
        else:
            deltas = [np.asarray(d, dtype=np.float64) for d in trade['deltas']]

        deltas = transform_trade(state, deltas, trade['transform'])
        executed.append(state.execute_trade(trade['trader'], deltas=deltas))

    return executed


def transform_trade(state, deltas, transform):
    # type: (MarketState, list, TradeTransform) -> list
    if transform == TradeTransform.NONE:
        return deltas

    if transform == TradeTransform.STANDARDIZE:
        return strategies.standardize(deltas)

    if transform == TradeTransform.SCORING_EQUIVALENT:
        return strategies.scoring_equivalent_transform(state, deltas)

    if transform == TradeTransform.LIABILITY_FREE:
        return strategies.liability_free_transform(deltas, allow_short=state.spec.allow_short)

    raise ValueError('Unsupported trade transform: {}'.format(transform))


def underwrite_insurer(state, config):
    # type: (MarketState, ScenarioConfig) -> TradeDelta
    bundle = strategies.insurer_position(state, config.insurer['mode'])
    log('Insurer {} underwrites bundle {} ({})'.format(config.insurer['trader'], bundle.betas.tolist(), config.insurer['mode'].value))
    return state.underwrite(config.insurer['trader'], bundle)


def build_decision_rule(config):
    # type: (ScenarioConfig) -> DecisionRule
    rule = config.decision_rule

    if rule['kind'] == 'fixed':
        return DecisionRule.fixed(rule['phi'], floor=rule['floor'])

    return DecisionRule.softmax_of_price(rule['target_outcomes'], temperature=rule['temperature'], floor=rule['floor'])


def beliefs_for(state, config):
    # type: (MarketState, ScenarioConfig) -> list

    """
    Per-action beliefs of the scenario; actions without a stated belief use
    the final market prices.
    """
    final_prices = state.prices()

    if config.beliefs is None:
        return [p.probs for p in final_prices]

    return [final_prices[k].probs if b is None else b for k, b in enumerate(config.beliefs)]
