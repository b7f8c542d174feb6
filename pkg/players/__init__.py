from .evaluation import (
    GuaranteeReport,
    LiminfReport,
    MonteCarloResult,
    PlayoutRecord,
    evaluate_exact,
    evaluate_monte_carlo,
    liminf_bound_check,
    upper_guarantee_check,
)
from .informed import (
    InformedStrategy,
    full_revealing_strategy,
    informed_tree,
    make_informed_strategy,
    nonrevealing_strategy,
    strategy_from_tree,
)
from .uninformed import (
    BestReplyStrategy,
    PureUninformedStrategy,
    UninformedStrategy,
    UniformStrategy,
    history_label,
    make_uninformed_best_reply,
    parse_history,
)

__all__ = [
    'BestReplyStrategy',
    'GuaranteeReport',
    'InformedStrategy',
    'LiminfReport',
    'MonteCarloResult',
    'PlayoutRecord',
    'PureUninformedStrategy',
    'UniformStrategy',
    'UninformedStrategy',
    'evaluate_exact',
    'evaluate_monte_carlo',
    'full_revealing_strategy',
    'history_label',
    'informed_tree',
    'liminf_bound_check',
    'make_informed_strategy',
    'make_uninformed_best_reply',
    'nonrevealing_strategy',
    'parse_history',
    'strategy_from_tree',
    'upper_guarantee_check',
]
