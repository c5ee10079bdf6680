"""Exception hierarchy.

Every error carries a stable machine-readable ``code`` that the CLI prints
to stderr, and a ``kind`` that selects the exit status (usage vs domain).
"""


class DvpError(Exception):
    code = "dvp_error"
    kind = "domain"


class UsageError(DvpError):
    code = "usage"
    kind = "usage"


# prob
class NegativeEntry(DvpError, ValueError):
    code = "negative_entry"


class SumNotOne(DvpError, ValueError):
    code = "sum_not_one"


class DegreeMismatch(DvpError, ValueError):
    code = "degree_mismatch"
    kind = "usage"


class NoPositiveSupport(DvpError, ValueError):
    code = "no_positive_support"


class Overflow(DvpError, OverflowError):
    code = "overflow"


# graph
class UnknownGraph(DvpError, ValueError):
    code = "unknown_graph"
    kind = "usage"


class RadiusTooLarge(DvpError, ValueError):
    code = "radius_too_large"


class RadiusTooSmall(DvpError, ValueError):
    code = "radius_too_small"


# sampler
class NotComparable(DvpError, ValueError):
    code = "not_comparable"


# cluster / mc
class ShellOutOfRange(DvpError, ValueError):
    code = "shell_out_of_range"


class AllZeroReach(DvpError, ValueError):
    code = "all_zero_reach"


# exact
class P2IsOne(DvpError, ValueError):
    code = "p2_is_one"


class KOutOfRange(DvpError, ValueError):
    code = "k_out_of_range"


# events
class SupportTooLarge(DvpError, ValueError):
    code = "support_too_large"


class DirectionNotTangent(DvpError, ValueError):
    code = "direction_not_tangent"


class SimplexExit(DvpError, ValueError):
    code = "simplex_exit"


class NotIncreasing(DvpError, ValueError):
    code = "not_increasing"


class OffPairEdge(DvpError, ValueError):
    code = "off_pair_edge"
