"""
Error types for DP Channel Lab
Every failure raised by the library derives from ChannelLabError
"""


class ChannelLabError(Exception):
    """Base class for all library errors"""
    pass


class InvalidAlphabet(ChannelLabError, ValueError):
    """Empty alphabet or repeated labels"""
    pass


class InvalidDistribution(ChannelLabError):
    """Prior with negative entries or mass not summing to 1"""
    pass


class InvalidChannel(ChannelLabError):
    """Channel matrix that is not row-stochastic"""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = violations or []


class AlphabetMismatch(ChannelLabError):
    """Two objects that must share an alphabet do not"""
    pass


class MatrixFormatError(ChannelLabError):
    """Malformed CSV matrix, prior file or edge list"""
    pass


class GraphSpecError(ChannelLabError):
    """Malformed graph-spec string or unreadable graph file"""
    pass


class DisconnectedGraph(ChannelLabError):
    """Operation needs a finite diameter but the graph is disconnected"""
    pass


class NotAutomorphism(ChannelLabError):
    """Permutation maps an edge to a non-edge (or vice versa)"""
    pass


class HypothesisViolated(ChannelLabError):
    """A construction's precondition failed

    `reason` is a machine-readable dict, e.g.
    {"check": "border_regularity", "node": 0, "distance": 2, "size": 1, "expected": 2}
    """

    def __init__(self, message, reason=None):
        super().__init__(message)
        self.reason = reason or {}


class Remark1Inapplicable(HypothesisViolated):
    """Even ring with (e^eps)^2 < 2: antipodal doubling would break DP"""
    pass


class MoreRowsThanColumns(ChannelLabError):
    """Square-with-diagonal-maxima reduction needs rows <= columns"""
    pass


class UniverseTooLarge(ChannelLabError):
    """Exhaustive enumeration over a database universe exceeds the guard"""
    pass


class SearchTooLarge(ChannelLabError):
    """Brute-force oracle input exceeds its size guard"""
    pass


class SamplerError(ChannelLabError):
    """Bisection in the DP sampler failed to converge"""
    pass


class QuerySpecError(ChannelLabError):
    """Malformed query spec or query file, or values that do not fit the query"""
    pass


class InvalidParameter(ChannelLabError, ValueError):
    """Numeric parameter outside its domain (v < 2, eps < 0, lambda not in (0,1), ...)"""
    pass
