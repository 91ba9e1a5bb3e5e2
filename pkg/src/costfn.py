# coding=utf-8

import numpy as np

from scipy.special import logsumexp, softmax

from . import settings
from .scoring import Report, ScoringRule, as_report
from .errors import InvariantViolationError, ShapeMismatchError, UnreachablePriceError


##############################################
# COST FUNCTION SPECIFICATION
##############################################

class CostFunctionSpec(object):
    """
    A prior-weighted logarithmic market scoring rule:

        C(q) = b * ln( sum_k pi_k * exp(q_k / b) )

    With b = 1 and a uniform prior over two outcomes this is
    ln((e^q1 + e^q2) / 2).
    """

    def __init__(self, liquidity=None, prior=None, num_outcomes=None):
        # type: (float, list, int) -> None

        """
        # Arguments
            :param liquidity: the liquidity parameter b > 0
            :param prior: initial prices pi, uniform over num_outcomes if None
            :param num_outcomes: number of outcomes, required if prior is None
        # Returns
            Nothing
        """
        liquidity = settings.DEFAULT_LIQUIDITY if liquidity is None else float(liquidity)

        if not np.isfinite(liquidity) or liquidity <= 0.0:
            raise InvariantViolationError('Liquidity must be positive and finite, got: {}'.format(liquidity),
                                          invariant='positive liquidity')

        if prior is None:
            if num_outcomes is None or num_outcomes < 2:
                raise ValueError('Provide a prior or at least 2 outcomes, got num_outcomes: {}'.format(num_outcomes))
            prior = np.full(num_outcomes, 1.0 / num_outcomes)

        prior = as_report(prior)

        if np.any(prior.probs <= 0.0) or np.any(prior.probs >= 1.0):
            raise InvariantViolationError('Prior entries must lie in (0, 1): {}'.format(prior),
                                          invariant='interior prior')

        if num_outcomes is not None and len(prior) != num_outcomes:
            raise ShapeMismatchError('Prior has {} entries, expected {}'.format(len(prior), num_outcomes))

        self.liquidity = liquidity
        self.prior = prior
        self.log_prior = np.log(prior.probs)

    @property
    def num_outcomes(self):
        # type: () -> int
        return len(self.prior)

    @property
    def is_uniform(self):
        # type: () -> bool
        return bool(np.allclose(self.prior.probs, 1.0 / self.num_outcomes, rtol=0.0, atol=1e-15))

    def __repr__(self):
        return 'CostFunctionSpec(liquidity={}, prior={})'.format(self.liquidity, self.prior)


def as_quantities(spec, q):
    # type: (CostFunctionSpec, object) -> np.ndarray
    q = np.asarray(q, dtype=np.float64).ravel()

    if q.shape[0] != spec.num_outcomes:
        raise ShapeMismatchError('Quantities have {} entries, expected {}'.format(q.shape[0], spec.num_outcomes))

    if not np.all(np.isfinite(q)):
        raise InvariantViolationError('Quantities must be finite: {}'.format(q), invariant='finite quantities')

    return q


##############################################
# COST, PRICES AND SCORES
##############################################

def cost(spec, q):
    # type: (CostFunctionSpec, np.ndarray) -> float
    q = as_quantities(spec, q)
    b = spec.liquidity
    return float(b * logsumexp(q / b, b=spec.prior.probs))


def prices(spec, q):
    # type: (CostFunctionSpec, np.ndarray) -> Report

    """
    Instantaneous prices r_k = pi_k e^{q_k/b} / sum_x pi_x e^{q_x/b}, the
    gradient of the cost function.
    """
    q = as_quantities(spec, q)
    return Report(softmax(q / spec.liquidity + spec.log_prior))


def log_prices(spec, q):
    # type: (CostFunctionSpec, np.ndarray) -> np.ndarray

    """
    Natural logarithm of prices(), computed without exponentiating so that
    prices which underflow to zero still have a finite logarithm.
    """
    q = as_quantities(spec, q)
    z = q / spec.liquidity + spec.log_prior
    return z - logsumexp(z)


def trade_cost(spec, q_from, q_to):
    # type: (CostFunctionSpec, np.ndarray, np.ndarray) -> float
    return cost(spec, q_to) - cost(spec, q_from)


def implied_score(spec, q, outcome_index):
    # type: (CostFunctionSpec, np.ndarray, int) -> float

    """
    The score s_i(r) = q_i - C(q) of the scoring rule the cost function is
    derived from. For the LMSR this equals b * ln(r_i / pi_i).
    """
    q = as_quantities(spec, q)

    if not 0 <= outcome_index < spec.num_outcomes:
        raise ShapeMismatchError('Outcome index {} out of range for {} outcomes'.format(outcome_index, spec.num_outcomes))

    return float(q[outcome_index] - cost(spec, q))


def implied_score_differences(spec, q_from, q_to):
    # type: (CostFunctionSpec, np.ndarray, np.ndarray) -> np.ndarray

    """
    Returns s_i(*r) - s_i(r) for every outcome i when the market moves from
    q_from to q_to, i.e. (*q_i - q_i) - (C(*q) - C(q)).
    """
    q_from = as_quantities(spec, q_from)
    q_to = as_quantities(spec, q_to)
    return (q_to - q_from) - trade_cost(spec, q_from, q_to)


def implied_log_rule(spec):
    # type: (CostFunctionSpec) -> ScoringRule

    """
    Returns the logarithmic scoring rule that scores reports exactly as
    implied_score() does, b * ln(r_i) + b * ln(n). Only uniform priors map to
    a single offset.
    """
    if not spec.is_uniform:
        raise ValueError('The implied logarithmic rule has a single offset only for uniform priors: {}'.format(spec.prior))

    return ScoringRule.logarithmic(offset=spec.liquidity * np.log(spec.num_outcomes), scale=spec.liquidity)


def quantities_for_prices(spec, q, target, shift=None):
    # type: (CostFunctionSpec, np.ndarray, Report, float) -> np.ndarray

    """
    Inverts the price map: returns the quantity change that moves the market
    from q to the target prices.

    # Arguments
        :param spec: the cost function
        :param q: current quantities
        :param target: target prices, every entry strictly positive
        :param shift: None for the standardized delta (minimum entry 0), otherwise the delta's minimum entry
    # Returns
        :return: the quantity delta
    """
    q = as_quantities(spec, q)
    target = as_report(target)

    if len(target) != spec.num_outcomes:
        raise ShapeMismatchError('Target has {} entries, expected {}'.format(len(target), spec.num_outcomes))

    zero_indices = np.flatnonzero(target.probs <= 0.0)

    if zero_indices.size > 0:
        raise UnreachablePriceError('Target price of outcome {} is zero, unreachable by a finite trade'.format(zero_indices[0]))

    delta = spec.liquidity * (np.log(target.probs) - log_prices(spec, q))
    delta = delta - np.min(delta)

    if shift is not None:
        delta = delta + float(shift)

    return delta


def worst_case_subsidy(spec, q):
    # type: (CostFunctionSpec, np.ndarray) -> float

    """
    Largest loss the market maker can suffer from a single report moving the
    market away from q: max_i -b ln r_i(q).
    """
    return float(np.max(-spec.liquidity * log_prices(spec, q)))
