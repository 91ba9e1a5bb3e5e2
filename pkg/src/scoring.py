# coding=utf-8

import numpy as np

from . import settings
from .enums import ScoringRuleType
from .errors import ProbabilityVectorError, ScoringDomainError, ShapeMismatchError


##############################################
# PROBABILITY VECTORS
##############################################

class ProbabilityVector(object):
    """
    An immutable probability vector over the outcomes of one action. Entries
    within PROBABILITY_TOLERANCE of a valid distribution are re-normalized,
    anything further off is rejected.
    """

    def __init__(self, probs, tolerance=None):
        # type: (list, float) -> None
        tolerance = settings.PROBABILITY_TOLERANCE if tolerance is None else tolerance
        probs = np.array(probs, dtype=np.float64).ravel()

        if probs.shape[0] < 2:
            raise ProbabilityVectorError('Expected at least 2 outcomes, got: {}'.format(probs.shape[0]))

        if not np.all(np.isfinite(probs)):
            raise ProbabilityVectorError('Probabilities must be finite: {}'.format(probs))

        if np.any(probs < -tolerance) or np.any(probs > 1.0 + tolerance):
            raise ProbabilityVectorError('Probabilities must lie in [0, 1]: {}'.format(probs))

        total = np.sum(probs)

        if abs(total - 1.0) > tolerance:
            raise ProbabilityVectorError('Probabilities must sum to 1 within {}, sum: {}'.format(tolerance, total))

        probs = np.clip(probs, 0.0, 1.0)
        probs = probs / np.sum(probs)
        probs.flags.writeable = False
        self._probs = probs

    @property
    def probs(self):
        # type: () -> np.ndarray
        return self._probs

    def __len__(self):
        return self._probs.shape[0]

    def __getitem__(self, index):
        return self._probs[index]

    def __iter__(self):
        return iter(self._probs)

    def __eq__(self, other):
        if not isinstance(other, ProbabilityVector):
            return NotImplemented

        return self._probs.shape == other.probs.shape and np.array_equal(self._probs, other.probs)

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __hash__(self):
        return hash(self._probs.tobytes())

    def __repr__(self):
        return '{}({})'.format(self.__class__.__name__, ', '.join('{:.6f}'.format(p) for p in self._probs))


class Report(ProbabilityVector):
    """
    A reported probability distribution, i.e. the prices of one conditional
    market.
    """
    pass


class Belief(ProbabilityVector):
    pass


def as_report(probs):
    # type: (object) -> Report
    if isinstance(probs, Report):
        return probs

    if isinstance(probs, ProbabilityVector):
        return Report(probs.probs)

    return Report(probs)


def as_belief(probs):
    # type: (object) -> Belief
    if isinstance(probs, Belief):
        return probs

    if isinstance(probs, ProbabilityVector):
        return Belief(probs.probs)

    return Belief(probs)


##############################################
# SCORING RULES
##############################################

class ScoringRule(object):

    def __init__(self, kind=ScoringRuleType.LOGARITHMIC, offset=0.0, scale=1.0, clamp=None):
        # type: (ScoringRuleType, float, float, bool) -> None

        """
        # Arguments
            :param kind: logarithmic or quadratic
            :param offset: constant added to every score
            :param scale: positive multiplier of the base score
            :param clamp: clamp logarithmic report entries to [LOG_CLAMP_EPSILON, 1], None for settings default
        # Returns
            Nothing
        """
        if not isinstance(kind, ScoringRuleType):
            raise ValueError('Unsupported scoring rule kind: {}'.format(kind))

        if not scale > 0.0 or not np.isfinite(scale):
            raise ValueError('Scoring rule scale must be positive and finite, got: {}'.format(scale))

        if not np.isfinite(offset):
            raise ValueError('Scoring rule offset must be finite, got: {}'.format(offset))

        self.kind = kind
        self.offset = float(offset)
        self.scale = float(scale)
        self.clamp = settings.CLAMP_LOG_SCORES if clamp is None else bool(clamp)

    @staticmethod
    def logarithmic(offset=0.0, scale=1.0, clamp=None):
        # type: (float, float, bool) -> ScoringRule
        return ScoringRule(ScoringRuleType.LOGARITHMIC, offset=offset, scale=scale, clamp=clamp)

    @staticmethod
    def quadratic(offset=0.0, scale=1.0):
        # type: (float, float) -> ScoringRule
        return ScoringRule(ScoringRuleType.QUADRATIC, offset=offset, scale=scale)

    def base_scores(self, report):
        # type: (Report) -> np.ndarray

        """
        Returns the unscaled score of every outcome for the given report.
        """
        r = report.probs

        if self.kind == ScoringRuleType.LOGARITHMIC:
            if self.clamp:
                return np.log(np.clip(r, settings.LOG_CLAMP_EPSILON, 1.0))

            # Zero entries score -inf here, score() rejects them for the observed outcome
            with np.errstate(divide='ignore'):
                return np.log(r)

        if self.kind == ScoringRuleType.QUADRATIC:
            return 2.0 * r - np.sum(r * r)

        raise ValueError('Unsupported scoring rule kind: {}'.format(self.kind))

    def scores(self, report):
        # type: (Report) -> np.ndarray
        return self.offset + self.scale * self.base_scores(as_report(report))

    def __repr__(self):
        return 'ScoringRule(kind={}, offset={}, scale={}, clamp={})'.format(self.kind.name, self.offset, self.scale, self.clamp)


def score(rule, report, outcome_index):
    # type: (ScoringRule, Report, int) -> float

    """
    Scores a report for an observed outcome: ln(r_i) for the logarithmic rule
    and 2 r_i - sum_k r_k^2 for the quadratic rule, both subject to the rule's
    offset and scale.

    # Arguments
        :param rule: the scoring rule
        :param report: the report
        :param outcome_index: index of the observed outcome
    # Returns
        :return: the score
    """
    report = as_report(report)

    if not 0 <= outcome_index < len(report):
        raise ShapeMismatchError('Outcome index {} out of range for {} outcomes'.format(outcome_index, len(report)))

    if rule.kind == ScoringRuleType.LOGARITHMIC and not rule.clamp and report[outcome_index] <= 0.0:
        raise ScoringDomainError('Logarithmic score of a zero probability at outcome index {}'
                                 .format(outcome_index), outcome_index=outcome_index)

    return float(rule.scores(report)[outcome_index])


def score_difference(rule, report_from, report_to, outcome_index):
    # type: (ScoringRule, Report, Report, int) -> float
    return score(rule, report_to, outcome_index) - score(rule, report_from, outcome_index)


def expected_score(rule, belief, report):
    # type: (ScoringRule, Belief, Report) -> float

    """
    Expected score sum_k p_k s_k(r) of a report under a belief.
    """
    belief = as_belief(belief)
    report = as_report(report)

    if len(belief) != len(report):
        raise ShapeMismatchError('Belief and report lengths differ: {} != {}'.format(len(belief), len(report)))

    p = belief.probs
    s = rule.scores(report)

    # Zero-probability outcomes contribute nothing, even with an unclamped -inf score
    mask = p > 0.0
    return float(np.dot(p[mask], s[mask]))


def properness_witness(rule, belief, trials, seed):
    # type: (ScoringRule, Belief, int, int) -> bool

    """
    Spot-checks strict properness: samples random reports r != p from a seeded
    generator and checks that the truthful report scores strictly better in
    expectation than every sample.

    # Arguments
        :param rule: the scoring rule
        :param belief: the forecaster's belief p
        :param trials: number of sampled reports
        :param seed: seed of the report generator
    # Returns
        :return: True iff G(p, p) > G(p, r) for all sampled r
    """
    if trials < 1:
        raise ValueError('Expected at least one trial, got: {}'.format(trials))

    belief = as_belief(belief)
    rng = np.random.default_rng(seed)
    n = len(belief)

    truthful = expected_score(rule, belief, Report(belief.probs))

    for _ in range(trials):
        candidate = rng.dirichlet(np.ones(n))

        # Only reports that actually differ from the belief are witnesses
        if np.max(np.abs(candidate - belief.probs)) <= 1e-6:
            continue

        if not truthful > expected_score(rule, belief, Report(candidate)):
            return False

    return True
