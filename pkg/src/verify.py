# coding=utf-8

import os
import time
import collections

import jsonpickle
import numpy as np
import pandas as pd

from . import settings
from . import strategies
from .costfn import CostFunctionSpec
from .engine import DecisionRule, MarketSpec, SettlementPolicy, open_market, sample_index
from .enums import LiabilityMode, Mechanism
from .errors import ShapeMismatchError
from .logger import LogLevel, log
from .scoring import as_belief
from .utils import general_utils
from .utils.parallel_utils import map_work_items


##############################################
# THE TWO-ACTION EXAMPLE
##############################################

# Two actions with two outcomes each, b = 1, uniform priors, q0 = 0
EXAMPLE_TRADE = ((2.0, 0.0), (0.0, 1.0))
EXAMPLE_ARBITRARY_TRADE = ((3.0, 1.0), (1.0, 2.0))
EXAMPLE_TRADER = 'trader'


def example_market_spec(allow_short=False):
    # type: (bool) -> MarketSpec
    return MarketSpec.uniform([2, 2], liquidity=1.0, allow_short=allow_short)


def example_market(trade=EXAMPLE_TRADE, allow_short=False):
    # type: (tuple, bool) -> MarketState
    state = open_market(example_market_spec(allow_short=allow_short))
    state.execute_trade(EXAMPLE_TRADER, deltas=[np.asarray(d, dtype=np.float64) for d in trade])
    return state


def phi_grid(start=None, stop=None, step=None):
    # type: (float, float, float) -> np.ndarray
    start = settings.WORST_CASE_PHI_START if start is None else start
    stop = settings.WORST_CASE_PHI_STOP if stop is None else stop
    step = settings.WORST_CASE_PHI_STEP if step is None else step

    num = int(round((stop - start) / step)) + 1
    return np.round(start + step * np.arange(num), 12)


##############################################
# EXPECTED PAYOFFS
##############################################

def _check_beliefs(state, beliefs):
    # type: (MarketState, list) -> list
    if len(beliefs) != state.num_actions:
        raise ShapeMismatchError('Got beliefs for {} actions, expected {}'.format(len(beliefs), state.num_actions))

    beliefs = [as_belief(p) for p in beliefs]

    for k, (p, n) in enumerate(zip(beliefs, state.spec.outcomes_per_action)):
        if len(p) != n:
            raise ShapeMismatchError('Belief for action {} has {} entries, expected {}'.format(k, len(p), n))

    return beliefs


def payoff_table(state, trader_id, mechanism, policy=None):
    # type: (MarketState, str, Mechanism, SettlementPolicy) -> list

    """
    Realised payoff of one trader at every (selected action, observed outcome).
    """
    table = []

    for j, n in enumerate(state.spec.outcomes_per_action):
        if mechanism == Mechanism.SECURITIES:
            row = [state.settle_securities(j, i, policy=policy).get(trader_id, 0.0) for i in range(n)]
        else:
            row = [state.settle_scoring(j, i).get(trader_id, 0.0) for i in range(n)]

        table.append(np.array(row))

    return table


def exact_expected_payoff(state, trader_id, beliefs, mechanism, policy=None):
    # type: (MarketState, str, list, Mechanism, SettlementPolicy) -> float

    """
    Brute-force expectation of a trader's realised payoff: every (j, i) is
    weighted by phi_j * p_i^j. The decision rule must have been recorded.

    # Arguments
        :param state: the market with a recorded decision rule
        :param trader_id: the trader
        :param beliefs: belief vector per action
        :param mechanism: securities or scoring rule based settlement
        :param policy: payout policy for the securities mechanism, v_j = 1 / phi_j if None
    # Returns
        :return: the expected payoff
    """
    beliefs = _check_beliefs(state, beliefs)
    table = payoff_table(state, trader_id, mechanism, policy=policy)
    return float(sum(state.phi[j] * np.dot(beliefs[j].probs, table[j]) for j in range(state.num_actions)))


def payout_scaling_residual(state, trader_id, beliefs, policy):
    # type: (MarketState, str, list, SettlementPolicy) -> float

    """
    The gap between the securities and the scoring rule expectation for an
    arbitrary payout policy: sum_j (phi_j v_j - 1) sum_i p_i^j (*q_i^j - q_i^j).
    Zero exactly when v_j = 1 / phi_j.
    """
    beliefs = _check_beliefs(state, beliefs)
    holdings = state.holdings(trader_id)
    return float(sum((state.phi[j] * policy.payouts[j] - 1.0) * np.dot(beliefs[j].probs, holdings[j])
                     for j in range(state.num_actions)))


def monte_carlo_payoff(state, trader_id, beliefs, mechanism, replications, seed, policy=None):
    # type: (MarketState, str, list, Mechanism, int, int, SettlementPolicy) -> tuple

    """
    Samples the selected action from phi and the outcome from the belief of
    that action, and averages the trader's realised payoff.

    # Returns
        :return: (mean, standard error), the standard error is nan for a single replication
    """
    if replications < 1:
        raise ValueError('Expected at least one replication, got: {}'.format(replications))

    beliefs = _check_beliefs(state, beliefs)
    table = payoff_table(state, trader_id, mechanism, policy=policy)

    rng = np.random.default_rng(seed)
    uniforms = rng.random((replications, 2))
    actions = sample_index(state.phi, uniforms[:, 0])
    values = np.empty(replications)

    for j in range(state.num_actions):
        mask = actions == j

        if np.any(mask):
            outcomes = sample_index(beliefs[j].probs, uniforms[mask, 1])
            values[mask] = table[j][outcomes]

    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / np.sqrt(replications)) if replications > 1 else float('nan')
    return mean, stderr


##############################################
# EXAMPLE REPRODUCTION
##############################################

class ExampleResults(object):

    def __init__(self):
        self.tables = collections.OrderedDict()

    def __getitem__(self, name):
        return self.tables[name]


def _per_action_frame(columns):
    # type: (collections.OrderedDict) -> pd.DataFrame

    """
    Builds a frame with an 'action' column and one column per (name, outcome)
    from per-action vectors.
    """
    data = collections.OrderedDict()
    names = list(columns.keys())
    num_actions = len(columns[names[0]])
    data['action'] = ['alpha_{}'.format(k + 1) for k in range(num_actions)]

    for name in names:
        for i in range(len(columns[name][0])):
            data['{}_omega_{}'.format(name, i + 1)] = [float(v[i]) for v in columns[name]]

    return pd.DataFrame(data)


def reproduce_example(grid=None):
    # type: (np.ndarray) -> ExampleResults

    """
    Reproduces the two-action example: the prices of the example trade, its
    standardisation, the scoring rule equivalent and liability-free trades, the
    worst-case loss curves over phi_1 and the liability spectrum.
    """
    grid = phi_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    results = ExampleResults()

    state = example_market()
    trade = state.trade_log[0]
    results.tables['example_prices'] = _per_action_frame(collections.OrderedDict([
        ('report', [r.probs for r in trade.prices_after]),
        ('security', trade.deltas)]))

    standardized = strategies.standardize(EXAMPLE_ARBITRARY_TRADE)
    results.tables['standardised_trade'] = _per_action_frame(collections.OrderedDict([
        ('arbitrary', [np.asarray(d) for d in EXAMPLE_ARBITRARY_TRADE]),
        ('standardised', standardized)]))

    short_state = open_market(example_market_spec(allow_short=True))
    results.tables['scoring_equivalent_trade'] = _per_action_frame(collections.OrderedDict([
        ('standardised', trade.deltas),
        ('scoring_rule', strategies.scoring_equivalent_transform(short_state, trade.deltas))]))

    results.tables['liability_free_trade'] = _per_action_frame(collections.OrderedDict([
        ('standardised', trade.deltas),
        ('liability_free', strategies.liability_free_transform(trade.deltas))]))

    curve = strategies.worst_case_curve(state.spec, trade, grid)
    results.tables['worst_case_curve'] = pd.DataFrame(collections.OrderedDict([
        ('phi_1', grid),
        ('trader_scoring', [r.trader_wcl_scoring for r in curve]),
        ('trader_securities', [r.trader_wcl_securities for r in curve]),
        ('creator_scoring', [r.creator_wcl_scoring for r in curve]),
        ('creator_securities', [r.creator_wcl_securities for r in curve])]))

    spectrum = strategies.liability_spectrum(short_state, trade.deltas, np.array([0.5, 0.5]))
    rows = []

    for row in spectrum:
        flat = collections.OrderedDict()
        flat['bundle'] = row['bundle']

        for k, d in enumerate(row['deltas']):
            for i, value in enumerate(d):
                flat['delta_alpha_{}_omega_{}'.format(k + 1, i + 1)] = float(value)

        flat['trader_cash_paid'] = row['trader_cash_paid']
        flat['trader_wcl'] = row['trader_wcl']
        flat['creator_wcl'] = row['creator_wcl']
        flat['creator_bound'] = row['creator_bound'] if isinstance(row['creator_bound'], str) else \
            '{:.17g}'.format(row['creator_bound'])
        rows.append(flat)

    results.tables['liability_spectrum'] = pd.DataFrame(rows)
    return results


# File names the example tables are also published under
EXAMPLE_TABLE_FILE_NAMES = collections.OrderedDict([
    ('example_prices', 'table3.csv'),
    ('standardised_trade', 'table4.csv'),
    ('scoring_equivalent_trade', 'table5.csv'),
    ('liability_free_trade', 'table6.csv'),
    ('worst_case_curve', 'figure1.csv')])


def write_example_tables(results, output_dir):
    # type: (ExampleResults, str) -> list

    """
    Writes every table as <name>.csv and, for the tables listed in
    EXAMPLE_TABLE_FILE_NAMES, an identical copy under the published file name.
    """
    paths = []

    for name, data_frame in results.tables.items():
        file_names = ['{}.csv'.format(name)]

        if name in EXAMPLE_TABLE_FILE_NAMES:
            file_names.append(EXAMPLE_TABLE_FILE_NAMES[name])

        for file_name in file_names:
            path = os.path.join(output_dir, file_name)
            general_utils.write_data_frame(data_frame, path, settings.CSV_FLOAT_FORMAT)
            log('Wrote {} ({} rows) to: {}'.format(name, len(data_frame), path))
            paths.append(path)

    return paths


##############################################
# RANDOMIZED INSTANCES
##############################################

class RandomInstance(object):
    """
    A randomized market with one background trade and one trade by the
    trader under test. Plain lists only so jsonpickle output can be replayed.
    """

    def __init__(self, seed, liquidity, priors, initial_quantities, allow_short, phi, beliefs, background_deltas, trader_deltas):
        self.seed = seed
        self.liquidity = liquidity
        self.priors = priors
        self.initial_quantities = initial_quantities
        self.allow_short = allow_short
        self.phi = phi
        self.beliefs = beliefs
        self.background_deltas = background_deltas
        self.trader_deltas = trader_deltas

    def market_spec(self):
        # type: () -> MarketSpec
        cost_specs = [CostFunctionSpec(liquidity=b, prior=prior) for b, prior in zip(self.liquidity, self.priors)]
        return MarketSpec(cost_specs, initial_quantities=self.initial_quantities, allow_short=self.allow_short)

    def build_market(self, trader_deltas=None):
        # type: (list) -> MarketState

        """
        Opens the market, executes the background and the trader's trade and
        records the decision rule.
        """
        state = open_market(self.market_spec())
        state.execute_trade('background', deltas=self.background_deltas)
        state.execute_trade(EXAMPLE_TRADER, deltas=self.trader_deltas if trader_deltas is None else trader_deltas)
        state.fix_decision_rule(DecisionRule.fixed(self.phi, floor=settings.DECISION_RULE_FLOOR))
        return state


def _to_list(values):
    # type: (object) -> list
    return [float(v) for v in values]


def random_instance(seed):
    # type: (int) -> RandomInstance

    """
    Draws a random market with up to VERIFY_MAX_ACTIONS actions and
    VERIFY_MAX_OUTCOMES outcomes per action, Dirichlet(1) beliefs and a
    full-support decision rule with floor DECISION_RULE_FLOOR. Trades are in
    [-VERIFY_TRADE_RANGE, VERIFY_TRADE_RANGE] when shorting is allowed and
    non-negative otherwise.
    """
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, settings.VERIFY_MAX_ACTIONS + 1))
    outcomes = [int(n) for n in rng.integers(2, settings.VERIFY_MAX_OUTCOMES + 1, size=m)]
    allow_short = bool(rng.random() < 0.5)
    low = -settings.VERIFY_TRADE_RANGE if allow_short else 0.0

    floor = settings.DECISION_RULE_FLOOR
    phi = floor + (1.0 - m * floor) * rng.dirichlet(np.ones(m))

    return RandomInstance(seed=int(seed),
                          liquidity=_to_list(rng.uniform(0.5, 2.0, size=m)),
                          priors=[_to_list(0.8 * rng.dirichlet(np.ones(n)) + 0.2 / n) for n in outcomes],
                          initial_quantities=[_to_list(rng.uniform(0.0, 2.0, size=n)) for n in outcomes],
                          allow_short=allow_short,
                          phi=_to_list(phi / np.sum(phi)),
                          beliefs=[_to_list(rng.dirichlet(np.ones(n))) for n in outcomes],
                          background_deltas=[_to_list(rng.uniform(0.0, settings.VERIFY_TRADE_RANGE, size=n)) for n in outcomes],
                          trader_deltas=[_to_list(rng.uniform(low, settings.VERIFY_TRADE_RANGE, size=n)) for n in outcomes])


def serialize_instance(instance):
    # type: (RandomInstance) -> str
    return jsonpickle.encode(instance)


def load_instance(text):
    # type: (str) -> RandomInstance
    instance = jsonpickle.decode(text)

    if not isinstance(instance, RandomInstance):
        raise ValueError('Expected a serialized RandomInstance, got: {}'.format(type(instance)))

    return instance


class InstanceResult(object):

    def __init__(self, instance):
        # type: (RandomInstance) -> None
        self.instance = instance
        self.violations = []
        self.residual = None
        self.term_a = None

    @property
    def ok(self):
        # type: () -> bool
        return len(self.violations) == 0

    def fail(self, message):
        # type: (str) -> None
        self.violations.append(message)


def check_instance(instance, unscaled=False, tolerance=None):
    # type: (RandomInstance, bool, float) -> InstanceResult

    """
    Checks one randomized instance: equality of the securities and scoring rule
    expectations (or, with unscaled payouts, that their gap equals the payout
    scaling residual), the payoff decomposition and zero-mean lottery, payoff
    conservation, and for short-selling markets the scoring rule equivalent and
    liability-free transforms.

    # Arguments
        :param instance: the instance
        :param unscaled: settle securities with v_j = 1 instead of 1 / phi_j
        :param tolerance: absolute tolerance, settings.VERIFY_TOLERANCE if None
    # Returns
        :return: the InstanceResult
    """
    tolerance = settings.VERIFY_TOLERANCE if tolerance is None else tolerance
    result = InstanceResult(instance)
    state = instance.build_market()
    phi = state.phi
    beliefs = instance.beliefs
    policy = SettlementPolicy.unscaled(state.num_actions) if unscaled else SettlementPolicy.from_decision_rule(phi)

    securities = exact_expected_payoff(state, EXAMPLE_TRADER, beliefs, Mechanism.SECURITIES, policy=policy)
    scoring = exact_expected_payoff(state, EXAMPLE_TRADER, beliefs, Mechanism.SCORING)
    result.residual = securities - scoring
    result.term_a = payout_scaling_residual(state, EXAMPLE_TRADER, beliefs, policy)

    if abs(result.residual) >= tolerance:
        result.fail('expected payoffs differ: securities {:.12g}, scoring {:.12g}, residual {:.12g}, payout scaling term {:.12g}'
                    .format(securities, scoring, result.residual, result.term_a))

    if abs(result.residual - result.term_a) >= tolerance:
        result.fail('residual {:.12g} differs from the payout scaling term {:.12g}'.format(result.residual, result.term_a))

    # Payoff decomposition and zero-mean lottery
    costs = sum(t.costs for t in state.trades_of(EXAMPLE_TRADER))
    lottery_mean = 0.0

    for j, n in enumerate(state.spec.outcomes_per_action):
        lottery = costs[j] / phi[j] - np.sum(costs)
        lottery_mean += phi[j] * lottery

        for i in range(n):
            outcome = state.settle(i, j=j)
            gap = outcome.securities_payoffs[EXAMPLE_TRADER] - outcome.scoring_payoffs[EXAMPLE_TRADER]

            if abs(gap - lottery) >= tolerance:
                result.fail('payoff decomposition fails at (j={}, i={}): gap {:.12g}, lottery {:.12g}'.format(j, i, gap, lottery))

            for mechanism in (Mechanism.SECURITIES, Mechanism.SCORING):
                if abs(outcome.total(mechanism)) >= tolerance:
                    result.fail('payoffs not conserved at (j={}, i={}) under {}: {:.12g}'
                                .format(j, i, mechanism.value, outcome.total(mechanism)))

    if abs(lottery_mean) >= tolerance:
        result.fail('lottery term has non-zero mean: {:.12g}'.format(lottery_mean))

    if instance.allow_short:
        _check_transforms(instance, result, tolerance)

    return result


def _check_transforms(instance, result, tolerance):
    # type: (RandomInstance, InstanceResult, float) -> None
    trial = open_market(instance.market_spec())
    trial.execute_trade('background', deltas=instance.background_deltas)

    equivalent = strategies.scoring_equivalent_transform(trial, instance.trader_deltas)
    state = instance.build_market(trader_deltas=equivalent)

    if abs(state.cash_paid(EXAMPLE_TRADER)) >= tolerance:
        result.fail('scoring rule equivalent trade costs {:.12g}'.format(state.cash_paid(EXAMPLE_TRADER)))

    for j, n in enumerate(state.spec.outcomes_per_action):
        for i in range(n):
            securities = state.settle_securities(j, i)[EXAMPLE_TRADER]
            scoring = state.settle_scoring(j, i)[EXAMPLE_TRADER]

            if abs(securities - scoring) >= tolerance:
                result.fail('scoring rule equivalent trade pays {:.12g} instead of {:.12g} at (j={}, i={})'
                            .format(securities, scoring, j, i))

    trade = trial.preview_trade(EXAMPLE_TRADER, instance.trader_deltas)
    report = strategies.worst_case_losses(trial.spec, trade, np.asarray(instance.phi), liability_mode=LiabilityMode.LIABILITY_FREE)

    if report.creator_wcl_securities > report.creator_bound_known_ex_ante + tolerance:
        result.fail('liability-free creator loss {:.12g} exceeds the ex-ante bound {:.12g}'
                    .format(report.creator_wcl_securities, report.creator_bound_known_ex_ante))


class SuiteResult(object):

    def __init__(self, seed, results, elapsed):
        # type: (int, list, float) -> None
        self.seed = seed
        self.results = results
        self.elapsed = elapsed

    @property
    def failures(self):
        # type: () -> list
        return [r for r in self.results if not r.ok]

    @property
    def ok(self):
        # type: () -> bool
        return len(self.failures) == 0


def instance_seeds(seed, instances):
    # type: (int, int) -> list

    """
    Independent per-instance seeds spawned from the master seed.
    """
    children = np.random.SeedSequence(seed).spawn(instances)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def run_suite(seed, instances, unscaled=False, n_jobs=None):
    # type: (int, int, bool, int) -> SuiteResult

    """
    Runs check_instance on randomized instances spawned from the master seed.
    """
    if instances < 1:
        raise ValueError('Expected at least one instance, got: {}'.format(instances))

    start_time = time.time()
    log('Running verification suite with seed: {}, instances: {}, unscaled payouts: {}'.format(seed, instances, unscaled))

    results = map_work_items(lambda s: check_instance(random_instance(s), unscaled=unscaled), instance_seeds(seed, instances), n_jobs=n_jobs)
    suite = SuiteResult(seed, results, time.time() - start_time)
    log('Average time per instance: {:.6f}s'.format(suite.elapsed / instances), LogLevel.PROFILE)

    log('Verification suite finished in {:.3f}s with {} failing instances'.format(suite.elapsed, len(suite.failures)),
        LogLevel.INFO if suite.ok else LogLevel.WARNING)
    return suite
