# coding=utf-8

import collections

import numpy as np
import pandas as pd

from scipy.special import softmax

from . import settings
from . import costfn
from .costfn import CostFunctionSpec
from .enums import DecisionRuleType, Mechanism
from .errors import DecisionRuleError, InvariantViolationError, SettlementError, ShapeMismatchError, ShortSellingError
from .logger import LogLevel, log
from .scoring import ScoringRule
from .utils import general_utils


##############################################
# MARKET SPECIFICATION
##############################################

class MarketSpec(object):
    """
    Defines a decision market instance: a finite set of actions, one
    conditional market per action with its own outcome set and cost function,
    and the initial outstanding securities of every conditional market.
    """

    def __init__(self, cost_specs, initial_quantities=None, allow_short=False, action_names=None, outcome_names=None):
        # type: (list, list, bool, list, list) -> None

        """
        # Arguments
            :param cost_specs: one CostFunctionSpec per action
            :param initial_quantities: initial outstanding securities per action, zeros if None
            :param allow_short: whether trades may leave a trader with negative holdings
            :param action_names: optional action names
            :param outcome_names: optional outcome names per action
        # Returns
            Nothing
        """
        cost_specs = list(cost_specs)

        if len(cost_specs) < 2:
            raise InvariantViolationError('A decision market needs at least 2 actions, got: {}'.format(len(cost_specs)),
                                          invariant='action count')

        for spec in cost_specs:
            if not isinstance(spec, CostFunctionSpec):
                raise ValueError('Expected CostFunctionSpec instances, got: {}'.format(type(spec)))

        if initial_quantities is None:
            initial_quantities = [np.zeros(spec.num_outcomes) for spec in cost_specs]

        if len(initial_quantities) != len(cost_specs):
            raise ShapeMismatchError('Got initial quantities for {} actions, expected {}'.format(len(initial_quantities), len(cost_specs)))

        self.cost_specs = cost_specs
        self.initial_quantities = [costfn.as_quantities(spec, q).copy() for spec, q in zip(cost_specs, initial_quantities)]
        self.allow_short = bool(allow_short)

        if not self.allow_short:
            for k, q in enumerate(self.initial_quantities):
                if np.any(q < 0.0):
                    raise ShortSellingError('Initial quantities of action {} are negative in a no-short market: {}'.format(k, q))

        self.action_names = list(action_names) if action_names is not None else ['action_{}'.format(k) for k in range(len(cost_specs))]
        self.outcome_names = [list(names) for names in outcome_names] if outcome_names is not None else \
            [['outcome_{}'.format(i) for i in range(spec.num_outcomes)] for spec in cost_specs]

        if len(self.action_names) != self.num_actions:
            raise ShapeMismatchError('Got {} action names for {} actions'.format(len(self.action_names), self.num_actions))

        for k, names in enumerate(self.outcome_names):
            if len(names) != self.cost_specs[k].num_outcomes:
                raise ShapeMismatchError('Got {} outcome names for action {} with {} outcomes'
                                         .format(len(names), k, self.cost_specs[k].num_outcomes))

    @staticmethod
    def uniform(outcomes_per_action, liquidity=None, allow_short=False):
        # type: (list, float, bool) -> MarketSpec
        cost_specs = [CostFunctionSpec(liquidity=liquidity, num_outcomes=n) for n in outcomes_per_action]
        return MarketSpec(cost_specs, allow_short=allow_short)

    @property
    def num_actions(self):
        # type: () -> int
        return len(self.cost_specs)

    @property
    def outcomes_per_action(self):
        # type: () -> list
        return [spec.num_outcomes for spec in self.cost_specs]

    def validate_deltas(self, deltas):
        # type: (list) -> list
        if len(deltas) != self.num_actions:
            raise ShapeMismatchError('Got deltas for {} actions, expected {}'.format(len(deltas), self.num_actions))

        return [costfn.as_quantities(spec, d).copy() for spec, d in zip(self.cost_specs, deltas)]


##############################################
# DECISION RULES
##############################################

def sample_index(probabilities, uniforms):
    # type: (np.ndarray, object) -> object

    """
    Inverse-CDF sampling of indices from a probability vector.

    # Arguments
        :param probabilities: the probability vector
        :param uniforms: a scalar or an array of uniforms in [0, 1)
    # Returns
        :return: the sampled index (or indices, matching the shape of uniforms)
    """
    cdf = np.cumsum(probabilities)
    indices = np.searchsorted(cdf, uniforms, side='right')
    return np.minimum(indices, len(probabilities) - 1)


class DecisionRule(object):
    """
    A full-support stochastic decision rule over actions. FIXED rules carry a
    probability vector; SOFTMAX_OF_PRICE rules read the final price of a target
    outcome in every conditional market and mix a softmax of those prices with
    a uniform floor so that every action keeps probability >= floor.
    """

    def __init__(self, kind, phi=None, target_outcomes=None, temperature=None, floor=None):
        # type: (DecisionRuleType, list, list, float, float) -> None
        self.kind = kind
        self.floor = settings.DECISION_RULE_FLOOR if floor is None else float(floor)

        if not self.floor > 0.0:
            raise DecisionRuleError('decision rule must have full support: floor must be positive, got: {}'.format(self.floor))

        self.phi = None
        self.target_outcomes = None
        self.temperature = None

        if kind == DecisionRuleType.FIXED:
            if phi is None:
                raise DecisionRuleError('A fixed decision rule needs a probability vector')

            self.phi = self._validate_phi(np.asarray(phi, dtype=np.float64).ravel())
        elif kind == DecisionRuleType.SOFTMAX_OF_PRICE:
            temperature = settings.SOFTMAX_TEMPERATURE if temperature is None else float(temperature)

            if not temperature > 0.0:
                raise DecisionRuleError('Softmax decision rule temperature must be positive, got: {}'.format(temperature),
                                        invariant='positive temperature')

            if target_outcomes is None:
                raise DecisionRuleError('A softmax decision rule needs a target outcome per action')

            self.target_outcomes = [int(i) for i in target_outcomes]
            self.temperature = temperature

            if len(self.target_outcomes) * self.floor >= 1.0:
                raise DecisionRuleError('decision rule must have full support: floor {} too large for {} actions'
                                        .format(self.floor, len(self.target_outcomes)))
        else:
            raise ValueError('Unsupported decision rule kind: {}'.format(kind))

    @staticmethod
    def fixed(phi, floor=None):
        # type: (list, float) -> DecisionRule
        return DecisionRule(DecisionRuleType.FIXED, phi=phi, floor=floor)

    @staticmethod
    def softmax_of_price(target_outcomes, temperature=None, floor=None):
        # type: (list, float, float) -> DecisionRule
        return DecisionRule(DecisionRuleType.SOFTMAX_OF_PRICE, target_outcomes=target_outcomes, temperature=temperature, floor=floor)

    def _validate_phi(self, phi):
        # type: (np.ndarray) -> np.ndarray
        if phi.shape[0] < 2 or not np.all(np.isfinite(phi)):
            raise DecisionRuleError('decision rule must have full support over at least 2 actions: {}'.format(phi))

        if np.any(phi < self.floor - 1e-12):
            raise DecisionRuleError('decision rule must have full support: every probability must be >= {}, got: {}'
                                    .format(self.floor, phi))

        if abs(np.sum(phi) - 1.0) > settings.PROBABILITY_TOLERANCE:
            raise DecisionRuleError('Decision rule probabilities must sum to 1, sum: {}'.format(np.sum(phi)),
                                    invariant='normalized decision rule')

        phi = phi / np.sum(phi)
        phi.flags.writeable = False
        return phi

    def realize(self, prices=None):
        # type: (list) -> np.ndarray

        """
        Returns the probability vector over actions.

        # Arguments
            :param prices: final prices per action, required by SOFTMAX_OF_PRICE rules
        # Returns
            :return: the realized decision rule phi
        """
        if self.kind == DecisionRuleType.FIXED:
            return self.phi

        if prices is None or len(prices) != len(self.target_outcomes):
            raise ShapeMismatchError('Softmax decision rule needs final prices for {} actions'.format(len(self.target_outcomes)))

        target_prices = np.array([np.asarray(getattr(r, 'probs', r))[i] for r, i in zip(prices, self.target_outcomes)])
        m = len(target_prices)
        phi = self.floor + (1.0 - m * self.floor) * softmax(target_prices / self.temperature)
        return self._validate_phi(phi)

    def __repr__(self):
        if self.kind == DecisionRuleType.FIXED:
            return 'DecisionRule(FIXED, phi={})'.format(list(self.phi))

        return 'DecisionRule(SOFTMAX_OF_PRICE, targets={}, temperature={}, floor={})'\
            .format(self.target_outcomes, self.temperature, self.floor)


class SettlementPolicy(object):
    """
    Payout per winning security of the selected action. Incentive compatibility
    requires v_j = 1 / phi_j.
    """

    def __init__(self, payouts):
        # type: (list) -> None
        payouts = np.asarray(payouts, dtype=np.float64).ravel()

        if not np.all(np.isfinite(payouts)) or np.any(payouts <= 0.0):
            raise InvariantViolationError('Payouts per security must be positive and finite: {}'.format(payouts),
                                          invariant='positive payouts')

        self.payouts = payouts

    @staticmethod
    def from_decision_rule(phi):
        # type: (np.ndarray) -> SettlementPolicy
        return SettlementPolicy(1.0 / np.asarray(phi, dtype=np.float64))

    @staticmethod
    def unscaled(num_actions):
        # type: (int) -> SettlementPolicy
        return SettlementPolicy(np.ones(num_actions))

    def is_incentive_compatible(self, phi):
        # type: (np.ndarray) -> bool
        return bool(np.allclose(self.payouts * np.asarray(phi), 1.0, rtol=0.0, atol=settings.VERIFY_TOLERANCE))


##############################################
# TRADES AND SETTLEMENT OUTCOMES
##############################################

class TradeDelta(object):
    """
    One participation in the market: quantity changes in every conditional
    market and the cash paid for them. The cash is always recomputed from the
    cost functions, never taken from the caller.
    """

    def __init__(self, spec, trader_id, quantities_before, deltas, index=None, is_insurer=False):
        # type: (MarketSpec, str, list, list, int, bool) -> None
        self.trader_id = trader_id
        self.index = index
        self.is_insurer = bool(is_insurer)
        self.quantities_before = [np.array(q, dtype=np.float64) for q in quantities_before]
        self.deltas = spec.validate_deltas(deltas)
        self.quantities_after = [q + d for q, d in zip(self.quantities_before, self.deltas)]

        self.costs = np.array([costfn.trade_cost(s, q0, q1) for s, q0, q1 in
                               zip(spec.cost_specs, self.quantities_before, self.quantities_after)])
        self.prices_before = [costfn.prices(s, q) for s, q in zip(spec.cost_specs, self.quantities_before)]
        self.prices_after = [costfn.prices(s, q) for s, q in zip(spec.cost_specs, self.quantities_after)]

    @property
    def cash_paid(self):
        # type: () -> float
        return float(np.sum(self.costs))

    @property
    def num_actions(self):
        # type: () -> int
        return len(self.deltas)

    def __repr__(self):
        return 'TradeDelta(index={}, trader={}, deltas={}, cash_paid={:.6f})'\
            .format(self.index, self.trader_id, [list(d) for d in self.deltas], self.cash_paid)


class SettlementOutcome(object):

    def __init__(self, selected_action, observed_outcome, securities_payoffs, scoring_payoffs, creator_securities, creator_scoring):
        # type: (int, int, dict, dict, float, float) -> None
        self.selected_action = selected_action
        self.observed_outcome = observed_outcome
        self.securities_payoffs = securities_payoffs
        self.scoring_payoffs = scoring_payoffs
        self.creator_securities = creator_securities
        self.creator_scoring = creator_scoring

    def payoffs(self, mechanism):
        # type: (Mechanism) -> dict
        return self.securities_payoffs if mechanism == Mechanism.SECURITIES else self.scoring_payoffs

    def creator_payoff(self, mechanism):
        # type: (Mechanism) -> float
        return self.creator_securities if mechanism == Mechanism.SECURITIES else self.creator_scoring

    def total(self, mechanism):
        # type: (Mechanism) -> float

        """
        Sum of the realised payoffs of all parties, zero up to rounding.
        """
        return float(sum(self.payoffs(mechanism).values()) + self.creator_payoff(mechanism))


##############################################
# MARKET STATE
##############################################

class MarketState(object):
    """
    The mutable state of one decision market. Trades are applied sequentially
    by a single writer; once a decision rule has been recorded the trade log
    is frozen and settlement is read-only.
    """

    def __init__(self, spec):
        # type: (MarketSpec) -> None
        self.spec = spec
        self.quantities = [q.copy() for q in spec.initial_quantities]
        self.trade_log = []
        self.phi = None
        self.selected_action = None

        self._holdings = collections.OrderedDict()
        self._cash_paid = collections.OrderedDict()
        self._insurers = set()

    @property
    def num_actions(self):
        # type: () -> int
        return self.spec.num_actions

    @property
    def traders(self):
        # type: () -> list
        return list(self._holdings.keys())

    @property
    def regular_traders(self):
        # type: () -> list
        return [t for t in self._holdings if t not in self._insurers]

    @property
    def insurers(self):
        # type: () -> list
        return [t for t in self._holdings if t in self._insurers]

    @property
    def is_frozen(self):
        # type: () -> bool
        return self.phi is not None

    def prices(self):
        # type: () -> list
        return [costfn.prices(s, q) for s, q in zip(self.spec.cost_specs, self.quantities)]

    def holdings(self, trader_id):
        # type: (str) -> list
        if trader_id not in self._holdings:
            return [np.zeros(n) for n in self.spec.outcomes_per_action]

        return [h.copy() for h in self._holdings[trader_id]]

    def cash_paid(self, trader_id):
        # type: (str) -> float
        return self._cash_paid.get(trader_id, 0.0)

    def trades_of(self, trader_id):
        # type: (str) -> list
        return [t for t in self.trade_log if t.trader_id == trader_id]

    def regular_holdings(self):
        # type: () -> list

        """
        Aggregate holdings of all regular (non-insurer) traders per action.
        """
        total = [np.zeros(n) for n in self.spec.outcomes_per_action]

        for trader_id in self.regular_traders:
            total = [a + h for a, h in zip(total, self._holdings[trader_id])]

        return total

    def preview_trade(self, trader_id, deltas):
        # type: (str, list) -> TradeDelta

        """
        Prices a trade against the current quantities without applying it.
        """
        return TradeDelta(self.spec, trader_id, self.quantities, deltas)

    def execute_trade(self, trader_id, deltas=None, targets=None):
        # type: (str, list, list) -> TradeDelta

        """
        Executes a trade given either raw quantity deltas or target prices per
        action. Target prices are converted to standardized deltas; an action
        whose target is None is left unchanged.

        # Arguments
            :param trader_id: identifier of the trader
            :param deltas: quantity changes per action
            :param targets: target prices per action (alternative to deltas)
        # Returns
            :return: the executed TradeDelta
        """
        if (deltas is None) == (targets is None):
            raise ValueError('Provide exactly one of deltas or targets')

        if trader_id in self._insurers:
            raise InvariantViolationError('Trader {} is registered as an insurer and can only underwrite bundles'.format(trader_id),
                                          invariant='insurer role')

        if targets is not None:
            deltas = self.deltas_for_targets(targets)

        return self._apply(self.preview_trade(trader_id, deltas), enforce_no_short=True)

    def deltas_for_targets(self, targets):
        # type: (list) -> list
        if len(targets) != self.num_actions:
            raise ShapeMismatchError('Got targets for {} actions, expected {}'.format(len(targets), self.num_actions))

        return [np.zeros(s.num_outcomes) if t is None else costfn.quantities_for_prices(s, q, t)
                for s, q, t in zip(self.spec.cost_specs, self.quantities, targets)]

    def underwrite(self, insurer_id, bundle):
        # type: (str, object) -> TradeDelta

        """
        Executes a short bundle for an insurer. Bundles leave prices unchanged;
        insurers are the designated short side and may trade in no-short markets.

        # Arguments
            :param insurer_id: identifier of the insurer
            :param bundle: a BundleSpec or a sequence of beta_k <= 0
        # Returns
            :return: the executed TradeDelta
        """
        betas = np.asarray(getattr(bundle, 'betas', bundle), dtype=np.float64).ravel()

        if betas.shape[0] != self.num_actions:
            raise ShapeMismatchError('Got a bundle for {} actions, expected {}'.format(betas.shape[0], self.num_actions))

        if np.any(betas > 0.0):
            raise ShortSellingError('Insurers hold short bundles only, got: {}'.format(betas), invariant='short-only insurer')

        if insurer_id in self._holdings and insurer_id not in self._insurers:
            raise InvariantViolationError('Trader {} already holds regular positions'.format(insurer_id), invariant='insurer role')

        deltas = [np.full(n, beta) for n, beta in zip(self.spec.outcomes_per_action, betas)]
        self._insurers.add(insurer_id)
        return self._apply(TradeDelta(self.spec, insurer_id, self.quantities, deltas, is_insurer=True), enforce_no_short=False)

    def _apply(self, trade, enforce_no_short):
        # type: (TradeDelta, bool) -> TradeDelta
        if self.is_frozen:
            raise SettlementError('The market is closed: a decision rule has been recorded', invariant='frozen trade log')

        holdings = self._holdings.get(trade.trader_id, [np.zeros(n) for n in self.spec.outcomes_per_action])
        new_holdings = [h + d for h, d in zip(holdings, trade.deltas)]

        if enforce_no_short and not self.spec.allow_short:
            for k, h in enumerate(new_holdings):
                if np.any(h < -1e-12):
                    raise ShortSellingError('Trade by {} would leave a short position in action {}: {}'
                                            .format(trade.trader_id, k, h))

        trade.index = len(self.trade_log)
        self._holdings[trade.trader_id] = new_holdings
        self._cash_paid[trade.trader_id] = self._cash_paid.get(trade.trader_id, 0.0) + trade.cash_paid
        self.quantities = [q.copy() for q in trade.quantities_after]
        self.trade_log.append(trade)

        log('Executed trade {} by {}: cash paid {:.9f}'.format(trade.index, trade.trader_id, trade.cash_paid), LogLevel.DEBUG)
        return trade

    ##############################################
    # DECISION
    ##############################################

    def fix_decision_rule(self, rule):
        # type: (DecisionRule) -> np.ndarray

        """
        Realizes the decision rule on the final prices and records it. Freezes
        the trade log.
        """
        phi = rule.realize(self.prices())

        if phi.shape[0] != self.num_actions:
            raise ShapeMismatchError('Decision rule covers {} actions, expected {}'.format(phi.shape[0], self.num_actions))

        self.phi = phi
        return phi

    def decide(self, rule, seed):
        # type: (DecisionRule, int) -> int

        """
        Records the realized decision rule and samples the selected action from
        it with a seeded generator (inverse CDF on the first uniform drawn).
        """
        phi = self.fix_decision_rule(rule)
        rng = np.random.default_rng(seed)
        self.selected_action = int(sample_index(phi, rng.random()))

        log('Selected action {} ({}) with phi: {}'.format(self.selected_action, self.spec.action_names[self.selected_action],
                                                          np.round(phi, 6).tolist()))
        return self.selected_action

    def _check_settlement(self, j, i):
        # type: (int, int) -> None
        if self.phi is None:
            raise SettlementError('Cannot settle before a decision has been recorded')

        if not 0 <= j < self.num_actions:
            raise ShapeMismatchError('Selected action {} out of range for {} actions'.format(j, self.num_actions))

        if not 0 <= i < self.spec.cost_specs[j].num_outcomes:
            raise ShapeMismatchError('Observed outcome {} out of range for action {}'.format(i, j))

    ##############################################
    # SETTLEMENT
    ##############################################

    def settle_securities(self, j, i, policy=None):
        # type: (int, int, SettlementPolicy) -> collections.OrderedDict

        """
        Realised payoffs in the securities based market: each security (j, i)
        pays v_j, every other security pays zero, and the cash paid at trade
        time is subtracted.

        # Arguments
            :param j: selected action
            :param i: observed outcome
            :param policy: payout policy, v_j = 1 / phi_j if None
        # Returns
            :return: realised payoff per trader
        """
        self._check_settlement(j, i)
        policy = SettlementPolicy.from_decision_rule(self.phi) if policy is None else policy
        v_j = policy.payouts[j]

        return collections.OrderedDict((t, float(v_j * self._holdings[t][j][i] - self._cash_paid[t])) for t in self._holdings)

    def settle_scoring(self, j, i, rule=None):
        # type: (int, int, ScoringRule) -> collections.OrderedDict

        """
        Realised payoffs in the scoring rule based market: every report
        transition in the selected market is scored as (1/phi_j)(s_i(*r) - s_i(r)),
        transitions in the other markets are void.

        # Arguments
            :param j: selected action
            :param i: observed outcome
            :param rule: scoring rule, the score differences implied by market j's cost function if None
        # Returns
            :return: realised payoff per trader
        """
        self._check_settlement(j, i)

        spec_j = self.spec.cost_specs[j]
        payoffs = collections.OrderedDict((t, 0.0) for t in self._holdings)

        for trade in self.trade_log:
            if rule is None:
                difference = costfn.implied_score_differences(spec_j, trade.quantities_before[j], trade.quantities_after[j])[i]
            else:
                difference = rule.scores(trade.prices_after[j])[i] - rule.scores(trade.prices_before[j])[i]

            payoffs[trade.trader_id] += float(difference) / self.phi[j]

        return payoffs

    def creator_securities_payoff(self, j, i, policy=None):
        # type: (int, int, SettlementPolicy) -> float

        """
        The market creator's cash flow computed from the market maker's side:
        cost function revenue from the initial to the final quantities minus
        the payout on the outstanding securities of (j, i).
        """
        self._check_settlement(j, i)
        policy = SettlementPolicy.from_decision_rule(self.phi) if policy is None else policy

        revenue = sum(costfn.trade_cost(s, q0, q1) for s, q0, q1 in
                      zip(self.spec.cost_specs, self.spec.initial_quantities, self.quantities))
        outstanding = self.quantities[j][i] - self.spec.initial_quantities[j][i]
        return float(revenue - policy.payouts[j] * outstanding)

    def creator_scoring_payoff(self, j, i, rule=None):
        # type: (int, int, ScoringRule) -> float

        """
        The market creator pays the score of the final report in the selected
        market relative to the initial report.
        """
        self._check_settlement(j, i)
        spec_j = self.spec.cost_specs[j]

        if rule is None:
            difference = costfn.implied_score_differences(spec_j, self.spec.initial_quantities[j], self.quantities[j])[i]
            return -float(difference) / self.phi[j]

        initial = costfn.prices(spec_j, self.spec.initial_quantities[j])
        final = costfn.prices(spec_j, self.quantities[j])
        return -float(rule.scores(final)[i] - rule.scores(initial)[i]) / self.phi[j]

    def settle(self, i, j=None, policy=None, rule=None):
        # type: (int, int, SettlementPolicy, ScoringRule) -> SettlementOutcome

        """
        Settles both mechanisms for the observed outcome of the selected action.
        """
        j = self.selected_action if j is None else j

        if j is None:
            raise SettlementError('Cannot settle before an action has been selected')

        securities = self.settle_securities(j, i, policy=policy)
        scoring = self.settle_scoring(j, i, rule=rule)

        return SettlementOutcome(selected_action=j,
                                 observed_outcome=i,
                                 securities_payoffs=securities,
                                 scoring_payoffs=scoring,
                                 creator_securities=self.creator_securities_payoff(j, i, policy=policy),
                                 creator_scoring=self.creator_scoring_payoff(j, i, rule=rule))


def open_market(spec):
    # type: (MarketSpec) -> MarketState
    state = MarketState(spec)
    log('Opened market with {} actions, outcomes per action: {}, allow short: {}'
        .format(spec.num_actions, spec.outcomes_per_action, spec.allow_short))
    return state


##############################################
# TRADE LOG
##############################################

def trade_log_frame(state):
    # type: (MarketState) -> pd.DataFrame

    """
    One row per trade and action: trade_index, trader_id, insurer, action,
    delta_<i>, cash_paid (cost of this action's part of the trade), price_<i>
    (post-trade prices). Missing outcomes of smaller actions are left empty.
    """
    max_outcomes = max(state.spec.outcomes_per_action)
    rows = []

    for trade in state.trade_log:
        for k in range(trade.num_actions):
            row = collections.OrderedDict()
            row['trade_index'] = trade.index
            row['trader_id'] = trade.trader_id
            row['insurer'] = int(trade.is_insurer)
            row['action'] = k

            for i in range(max_outcomes):
                row['delta_{}'.format(i)] = trade.deltas[k][i] if i < len(trade.deltas[k]) else np.nan

            row['cash_paid'] = trade.costs[k]

            for i in range(max_outcomes):
                row['price_{}'.format(i)] = trade.prices_after[k][i] if i < len(trade.deltas[k]) else np.nan

            rows.append(row)

    columns = ['trade_index', 'trader_id', 'insurer', 'action'] + ['delta_{}'.format(i) for i in range(max_outcomes)] + \
              ['cash_paid'] + ['price_{}'.format(i) for i in range(max_outcomes)]
    return pd.DataFrame(rows, columns=columns)


def export_trade_log(state, file_path):
    # type: (MarketState, str) -> str
    return general_utils.write_data_frame(trade_log_frame(state), file_path, settings.CSV_FLOAT_FORMAT)


def load_trade_log(spec, file_path):
    # type: (MarketSpec, str) -> MarketState

    """
    Replays an exported trade log into a freshly opened market.
    """
    data_frame = pd.read_csv(file_path, dtype={'trader_id': str})
    state = open_market(spec)

    for trade_index, rows in data_frame.groupby('trade_index', sort=True):
        rows = rows.sort_values('action')

        if len(rows) != spec.num_actions:
            raise ShapeMismatchError('Trade {} has rows for {} actions, expected {}'.format(trade_index, len(rows), spec.num_actions))

        trader_id = rows['trader_id'].iloc[0]
        deltas = [rows.iloc[k][['delta_{}'.format(i) for i in range(n)]].to_numpy(dtype=np.float64)
                  for k, n in enumerate(spec.outcomes_per_action)]

        if int(rows['insurer'].iloc[0]):
            state.underwrite(trader_id, [d[0] for d in deltas])
        else:
            state.execute_trade(trader_id, deltas=deltas)

    return state
