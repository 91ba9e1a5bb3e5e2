# coding=utf-8

import collections

import numpy as np

from . import costfn
from .engine import DecisionRule, MarketSpec, TradeDelta
from .enums import BundleChoice, InsurerMode, LiabilityMode, Mechanism
from .errors import InvariantViolationError, ShapeMismatchError, ShortSellingError
from .logger import LogLevel, log


UNBOUNDED = 'unbounded'


##############################################
# BUNDLES
##############################################

class BundleSpec(object):
    """
    beta_k securities of every outcome of conditional market k. A bundle
    leaves prices unchanged but acts as a lottery: it costs sum_k beta_k and
    pays beta_j / phi_j when action j is selected.
    """

    def __init__(self, betas):
        # type: (list) -> None
        betas = np.asarray(betas, dtype=np.float64).ravel()

        if not np.all(np.isfinite(betas)):
            raise InvariantViolationError('Bundle entries must be finite: {}'.format(betas), invariant='finite bundle')

        self.betas = betas

    @staticmethod
    def zero(num_actions):
        # type: (int) -> BundleSpec
        return BundleSpec(np.zeros(num_actions))

    def __len__(self):
        return self.betas.shape[0]

    def __repr__(self):
        return 'BundleSpec({})'.format(self.betas.tolist())


def _as_deltas(deltas):
    # type: (list) -> list
    deltas = [np.asarray(d, dtype=np.float64).ravel() for d in deltas]

    for d in deltas:
        if not np.all(np.isfinite(d)):
            raise InvariantViolationError('Trade deltas must be finite: {}'.format(d), invariant='finite quantities')

    return deltas


def _check_no_short(deltas, allow_short, name):
    # type: (list, bool, str) -> None
    if allow_short:
        return

    for k, d in enumerate(deltas):
        if np.any(d < -1e-12):
            raise ShortSellingError('{} would leave a short position in action {} of a no-short market: {}'.format(name, k, d))


def standardize(deltas):
    # type: (list) -> list

    """
    Returns the price-equivalent trade with the smallest non-negative
    quantities: the minimum entry of every market is subtracted.
    """
    return [d - np.min(d) for d in _as_deltas(deltas)]


def apply_bundle(deltas, bundle, allow_short=True):
    # type: (list, BundleSpec, bool) -> list

    """
    Adds beta_k to every entry of market k's delta.

    # Arguments
        :param deltas: quantity deltas per action
        :param bundle: the bundle
        :param allow_short: False rejects results with negative entries
    # Returns
        :return: the transformed deltas
    """
    deltas = _as_deltas(deltas)

    if len(bundle) != len(deltas):
        raise ShapeMismatchError('Bundle covers {} actions, deltas cover {}'.format(len(bundle), len(deltas)))

    result = [d + beta for d, beta in zip(deltas, bundle.betas)]
    _check_no_short(result, allow_short, 'Bundle')
    return result


def lottery_payoff_shift(bundle, phi, j):
    # type: (BundleSpec, np.ndarray, int) -> float

    """
    Change of the realised payoff caused by a bundle when action j is
    selected: beta_j / phi_j - sum_k beta_k.
    """
    return float(bundle.betas[j] / phi[j] - np.sum(bundle.betas))


def scoring_equivalent_transform(state, deltas):
    # type: (MarketState, list) -> list

    """
    Adds the bundle beta_k = -(C_k(*q_k) - C_k(q_k)) so the trade costs nothing
    and its securities payoff equals the scoring rule payoff at every (j, i).
    Requires short selling.
    """
    if not state.spec.allow_short:
        raise ShortSellingError('transform requires short selling: scoring rule equivalent trades short the cost')

    deltas = state.spec.validate_deltas(deltas)
    betas = [-costfn.trade_cost(s, q, q + d) for s, q, d in zip(state.spec.cost_specs, state.quantities, deltas)]
    return apply_bundle(deltas, BundleSpec(betas))


def liability_free_transform(deltas, allow_short=True):
    # type: (list, bool) -> list

    """
    Subtracts the maximum entry of every market so the trader holds only short
    positions and the market creator's loss is bounded ex ante. Requires short
    selling.
    """
    if not allow_short:
        raise ShortSellingError('transform requires short selling: liability-free trades are entirely short')

    return [d - np.max(d) for d in _as_deltas(deltas)]


def transform_deltas(state, deltas, choice):
    # type: (MarketState, list, BundleChoice) -> list

    """
    Moves a trade along the liability spectrum by subtracting, per market,
    its max, its cost, its min or nothing.
    """
    if choice == BundleChoice.MAX:
        return liability_free_transform(deltas, allow_short=state.spec.allow_short)

    if choice == BundleChoice.COST:
        return scoring_equivalent_transform(state, deltas)

    if choice == BundleChoice.MIN:
        return standardize(deltas)

    if choice == BundleChoice.ZERO:
        return _as_deltas(deltas)

    raise ValueError('Unsupported bundle choice: {}'.format(choice))


##############################################
# INSURERS
##############################################

def insurer_position(state, mode):
    # type: (MarketState, InsurerMode) -> BundleSpec

    """
    The short bundle an insurer takes against the regular traders' aggregate
    position. COST_MATCHED shorts the cost of the outstanding securities in
    every market, MAX_MATCHED shorts the largest quantity bought.

    # Arguments
        :param state: the market after the regular traders' trades
        :param mode: the insurer mode
    # Returns
        :return: the insurer's bundle (entries <= 0)
    """
    aggregate = state.regular_holdings()

    for k, h in enumerate(aggregate):
        if np.any(h < -1e-12):
            log('Regular traders hold a short position in action {}, insurer bundles assume long positions'.format(k),
                LogLevel.WARNING)

    if mode == InsurerMode.COST_MATCHED:
        betas = [-costfn.trade_cost(s, q0, q0 + h) for s, q0, h in
                 zip(state.spec.cost_specs, state.spec.initial_quantities, aggregate)]
    elif mode == InsurerMode.MAX_MATCHED:
        betas = [-np.max(h) for h in aggregate]
    else:
        raise ValueError('Unsupported insurer mode: {}'.format(mode))

    # -0.0 reads badly in reports
    return BundleSpec(np.asarray(betas) + 0.0)


##############################################
# WORST-CASE LOSSES
##############################################

class WorstCaseReport(object):
    """
    Worst-case losses (positive numbers are losses) of the trader and the
    market creator under both mechanisms. creator_bound_known_ex_ante is a
    number only when the creator's position admits an ex-ante bound, it is
    UNBOUNDED otherwise.
    """

    def __init__(self, phi, trader_wcl_scoring, trader_wcl_securities, creator_wcl_scoring, creator_wcl_securities,
                 creator_bound_known_ex_ante=UNBOUNDED, liability_mode=LiabilityMode.PLAIN):
        # type: (np.ndarray, float, float, float, float, object, LiabilityMode) -> None
        self.phi = np.asarray(phi, dtype=np.float64)
        self.trader_wcl_scoring = trader_wcl_scoring
        self.trader_wcl_securities = trader_wcl_securities
        self.creator_wcl_scoring = creator_wcl_scoring
        self.creator_wcl_securities = creator_wcl_securities
        self.creator_bound_known_ex_ante = creator_bound_known_ex_ante
        self.liability_mode = liability_mode

    @property
    def has_ex_ante_bound(self):
        # type: () -> bool
        return not isinstance(self.creator_bound_known_ex_ante, str)

    def trader_wcl(self, mechanism):
        # type: (Mechanism) -> float
        return self.trader_wcl_securities if mechanism == Mechanism.SECURITIES else self.trader_wcl_scoring

    def creator_wcl(self, mechanism):
        # type: (Mechanism) -> float
        return self.creator_wcl_securities if mechanism == Mechanism.SECURITIES else self.creator_wcl_scoring

    def to_rows(self):
        # type: () -> list

        """
        One row per mechanism, keyed by the decision rule and the mechanism.
        """
        rows = []

        for mechanism in (Mechanism.SCORING, Mechanism.SECURITIES):
            row = collections.OrderedDict()
            row['phi'] = ';'.join('{:.17g}'.format(p) for p in self.phi)
            row['mechanism'] = mechanism.value
            row['liability_mode'] = self.liability_mode.value
            row['trader_wcl'] = self.trader_wcl(mechanism)
            row['creator_wcl'] = self.creator_wcl(mechanism)
            bound = self.creator_bound_known_ex_ante if mechanism == Mechanism.SECURITIES else UNBOUNDED
            row['creator_bound'] = bound if isinstance(bound, str) else '{:.17g}'.format(bound)
            rows.append(row)

        return rows

    def __repr__(self):
        return 'WorstCaseReport(phi={}, trader_scoring={:.6f}, trader_securities={:.6f}, creator_scoring={:.6f}, ' \
               'creator_securities={:.6f}, bound={})'.format(self.phi.tolist(), self.trader_wcl_scoring, self.trader_wcl_securities,
                                                             self.creator_wcl_scoring, self.creator_wcl_securities,
                                                             self.creator_bound_known_ex_ante)


def _realize_phi(rule, trade):
    # type: (object, TradeDelta) -> np.ndarray
    if isinstance(rule, DecisionRule):
        return rule.realize(trade.prices_after)

    return np.asarray(rule, dtype=np.float64)


def _grid_payoffs(values_per_action, phi, constant):
    # type: (list, np.ndarray, float) -> list
    return [v / phi[j] + constant for j, v in enumerate(values_per_action)]


def _worst(payoffs_per_action):
    # type: (list) -> float
    return -min(float(np.min(p)) for p in payoffs_per_action) + 0.0


def score_differences(spec, trade):
    # type: (MarketSpec, TradeDelta) -> list

    """
    s_i^k(*r_k) - s_i^k(r_k) for every action k and outcome i under the scoring
    rule implied by each market's cost function.
    """
    return [costfn.implied_score_differences(s, q0, q1) for s, q0, q1 in
            zip(spec.cost_specs, trade.quantities_before, trade.quantities_after)]


def ex_ante_bound(spec, trade):
    # type: (MarketSpec, TradeDelta) -> float

    """
    sum_k max_x (s_x^k(*r_k) - s_x^k(r_k)): the most a market creator facing a
    liability-free position can lose, independent of the decision rule.
    """
    return float(sum(np.max(d) for d in score_differences(spec, trade)))


def cost_matched_bound(spec, trade, phi):
    # type: (MarketSpec, TradeDelta, np.ndarray) -> float

    """
    max_j (1/phi_j) max_i -b_j ln r_i^j: the scoring rule subsidy bound of the
    pre-trade prices, which caps the creator's loss against a cost-matched
    insurer.
    """
    return float(max(costfn.worst_case_subsidy(s, q) / phi[j] for j, (s, q) in
                     enumerate(zip(spec.cost_specs, trade.quantities_before))))


def worst_case_losses(spec, trade, rule, liability_mode=LiabilityMode.PLAIN):
    # type: (MarketSpec, TradeDelta, object, LiabilityMode) -> WorstCaseReport

    """
    Enumerates every (selected action, observed outcome) pair and returns the
    worst realised losses of the trader and the market creator.

    # Arguments
        :param spec: the market specification
        :param trade: the price-moving trade (regular trader's position)
        :param rule: a DecisionRule or a realized phi vector
        :param liability_mode: which position the market creator faces under the securities mechanism
    # Returns
        :return: the WorstCaseReport
    """
    phi = _realize_phi(rule, trade)

    if phi.shape[0] != spec.num_actions:
        raise ShapeMismatchError('Decision rule covers {} actions, expected {}'.format(phi.shape[0], spec.num_actions))

    costs = trade.costs
    deltas = trade.deltas
    ds = score_differences(spec, trade)

    # Scoring rule based market
    trader_scoring = _grid_payoffs(ds, phi, 0.0)
    trader_wcl_scoring = _worst(trader_scoring)
    creator_wcl_scoring = _worst([-p for p in trader_scoring])

    # Securities based market
    bound = UNBOUNDED

    if liability_mode == LiabilityMode.PLAIN:
        trader_deltas, trader_cash, insurer_betas = deltas, float(np.sum(costs)), np.zeros(len(deltas))
    elif liability_mode == LiabilityMode.LIABILITY_FREE:
        trader_deltas = liability_free_transform(deltas, allow_short=spec.allow_short)
        trader_cash = float(np.sum(costs - np.array([np.max(d) for d in deltas])))
        insurer_betas = np.zeros(len(deltas))
        bound = ex_ante_bound(spec, trade)
    elif liability_mode == LiabilityMode.INSURER_COST_MATCHED:
        trader_deltas, trader_cash, insurer_betas = deltas, float(np.sum(costs)), -costs
        bound = cost_matched_bound(spec, trade, phi)
    elif liability_mode == LiabilityMode.INSURER_MAX_MATCHED:
        trader_deltas, trader_cash = deltas, float(np.sum(costs))
        insurer_betas = -np.array([np.max(d) for d in deltas])
        bound = ex_ante_bound(spec, trade)
    else:
        raise ValueError('Unsupported liability mode: {}'.format(liability_mode))

    trader_securities = _grid_payoffs(trader_deltas, phi, -trader_cash)
    trader_is_long = all(np.all(d >= 0.0) for d in trader_deltas)

    # Without short positions the trader can lose at most what was paid
    trader_wcl_securities = trader_cash if trader_is_long else _worst(trader_securities)

    creator_positions = [d + beta for d, beta in zip(trader_deltas, insurer_betas)]
    creator_revenue = trader_cash + float(np.sum(insurer_betas))
    creator_securities = _grid_payoffs([-d for d in creator_positions], phi, creator_revenue)
    creator_wcl_securities = _worst(creator_securities)

    return WorstCaseReport(phi=phi,
                           trader_wcl_scoring=trader_wcl_scoring,
                           trader_wcl_securities=trader_wcl_securities,
                           creator_wcl_scoring=creator_wcl_scoring,
                           creator_wcl_securities=creator_wcl_securities,
                           creator_bound_known_ex_ante=bound,
                           liability_mode=liability_mode)


def creator_securities_wcl_decomposition(spec, trade, phi):
    # type: (MarketSpec, TradeDelta, np.ndarray) -> dict

    """
    Splits the creator's securities payoff at every (j, i) into
        a = sum_{k != j} (C_k(*q_k) - C_k(q_k))     sales in the other markets
        b = s_i^j(*r_j) - s_i^j(r_j)                 the implied scoring rule
        c = ((1 - phi_j) / phi_j) (*q_i^j - q_i^j)   the lottery on the selected market
    so that the creator's payoff is a - (b + c) and the worst-case loss is
    max_{j,i} (b + c - a).

    # Returns
        :return: dict with per-action arrays 'a', 'b', 'c' and the recombined 'wcl'
    """
    phi = np.asarray(phi, dtype=np.float64)
    costs = trade.costs
    ds = score_differences(spec, trade)

    a = [float(np.sum(costs) - costs[j]) for j in range(spec.num_actions)]
    b = ds
    c = [(1.0 - phi[j]) / phi[j] * trade.deltas[j] for j in range(spec.num_actions)]
    wcl = max(float(np.max(b[j] + c[j] - a[j])) for j in range(spec.num_actions))

    return {'a': a, 'b': b, 'c': c, 'wcl': wcl}


def worst_case_curve(spec, trade, phi_grid, liability_mode=LiabilityMode.PLAIN):
    # type: (MarketSpec, TradeDelta, list, LiabilityMode) -> list

    """
    Worst-case losses of a two-action market over a grid of phi_1 values,
    phi = (phi_1, 1 - phi_1).
    """
    if spec.num_actions != 2:
        raise ShapeMismatchError('Worst-case curves are defined for two actions, got: {}'.format(spec.num_actions))

    return [worst_case_losses(spec, trade, np.array([phi_1, 1.0 - phi_1]), liability_mode=liability_mode) for phi_1 in phi_grid]


##############################################
# LIABILITY SPECTRUM
##############################################

# Left to right: trader liability grows, the creator's ex-ante bound is lost
SPECTRUM_ORDER = (BundleChoice.MAX, BundleChoice.COST, BundleChoice.MIN, BundleChoice.ZERO)


def liability_spectrum(state, deltas, rule):
    # type: (MarketState, list, object) -> list

    """
    Evaluates one report realised through the four named trades of the
    liability spectrum, from liability-free (beta_k = max) through scoring rule
    equivalent (beta_k = cost) and standardised (beta_k = min) to the trade as
    given (beta_k = 0). Requires a market that allows short selling.

    # Arguments
        :param state: the market before the trade
        :param deltas: the trade as given
        :param rule: a DecisionRule or a realized phi vector
    # Returns
        :return: list of rows (dicts), one per bundle choice
    """
    if not state.spec.allow_short:
        raise ShortSellingError('transform requires short selling: the liability spectrum includes short trades')

    base = state.preview_trade('spectrum', deltas)
    phi = _realize_phi(rule, base)
    rows = []

    for choice in SPECTRUM_ORDER:
        transformed = transform_deltas(state, deltas, choice)
        trade = state.preview_trade('spectrum', transformed)
        report = worst_case_losses(state.spec, trade, phi, liability_mode=LiabilityMode.PLAIN)

        if choice == BundleChoice.MAX:
            bound = ex_ante_bound(state.spec, base)
        elif choice == BundleChoice.COST:
            bound = cost_matched_bound(state.spec, base, phi)
        else:
            bound = UNBOUNDED

        row = collections.OrderedDict()
        row['bundle'] = choice.value
        row['deltas'] = transformed
        row['trader_cash_paid'] = trade.cash_paid
        row['trader_wcl'] = report.trader_wcl_securities
        row['creator_wcl'] = report.creator_wcl_securities
        row['creator_bound'] = bound
        rows.append(row)

    return rows
