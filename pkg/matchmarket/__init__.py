"""
matchmarket: centralized two-sided matching markets with UCB learners
under cost and transfer rules
"""

from matchmarket.core import AgentId, MarketShape, Matching, PreferenceTable, Side
from matchmarket.errors import MatchMarketError
from matchmarket.market import Matcher, Scenario, run
from matchmarket.rules import RuleRegime

__version__ = '0.1.0'

__all__ = [
    'AgentId',
    'MarketShape',
    'Matching',
    'PreferenceTable',
    'Side',
    'MatchMarketError',
    'Matcher',
    'Scenario',
    'run',
    'RuleRegime',
]
