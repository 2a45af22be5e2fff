"""
Exception types for the matchmarket library
Every failure the library can signal derives from MatchMarketError
"""


class MatchMarketError(Exception):
    """Base class for all library errors"""


class InvalidPairError(MatchMarketError):
    """Raised when two agents on the same side are paired"""


class AmbiguousPreferencesError(MatchMarketError):
    """Raised when a preference or payoff row contains ties"""


class PairwiseUniquenessError(AmbiguousPreferencesError):
    """Raised when balanced edge weights repeat across distinct pairs"""


class InfeasibleMatchingError(MatchMarketError):
    """Raised when an operation requires a feasible matching"""


class ParameterError(MatchMarketError):
    """Raised for out-of-range numeric parameters"""


class MissingWarmStartError(MatchMarketError):
    """Raised when a UCB index is requested for a pair with no samples"""


class InstanceTooLargeError(MatchMarketError):
    """Raised when brute-force enumeration would exceed its budget"""


class RuleMismatchError(MatchMarketError):
    """Raised when a trace and a report request disagree on the rule"""


class InsufficientDataError(MatchMarketError):
    """Raised when a curve has too few checkpoints to classify"""


class ScenarioError(MatchMarketError):
    """Raised when a scenario file fails validation

    Args:
        field (str): Dotted path of the offending field
        message (str): What is wrong with it
    """

    def __init__(self, field, message):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")
