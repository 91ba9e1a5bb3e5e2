# coding=utf-8

from enum import Enum


class ScoringRuleType(Enum):
    LOGARITHMIC = 0
    QUADRATIC = 1


class DecisionRuleType(Enum):
    FIXED = 0
    SOFTMAX_OF_PRICE = 1


class Mechanism(Enum):
    SECURITIES = 'securities'
    SCORING = 'scoring'


class TradeTransform(Enum):
    NONE = 'none'
    STANDARDIZE = 'standardize'
    SCORING_EQUIVALENT = 'scoring_equivalent'
    LIABILITY_FREE = 'liability_free'


class InsurerMode(Enum):
    COST_MATCHED = 'cost_matched'   # Short the cost of the regular traders' securities
    MAX_MATCHED = 'max_matched'     # Short the largest quantity bought in each market


class LiabilityMode(Enum):
    PLAIN = 'plain'
    LIABILITY_FREE = 'liability_free'
    INSURER_COST_MATCHED = 'insurer_cost_matched'
    INSURER_MAX_MATCHED = 'insurer_max_matched'


class BundleChoice(Enum):
    MAX = 'max'         # Market creator liability-free
    COST = 'cost'       # Scoring rule equivalent
    MIN = 'min'         # Standardised trade
    ZERO = 'zero'       # Arbitrary trade as given
