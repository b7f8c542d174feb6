from .splitting import (
    SplittingPlan,
    atom_probabilities,
    bayes_posterior_sample,
    sample_atoms,
)
from .tree import (
    MartingaleTree,
    TreeBuilder,
    TreeNode,
    TreeReport,
    constant_tree,
    d1_variation,
    expected_cost,
    jensen_check,
    mixture_tree,
    read_tree,
    riemann_error_bound,
    splitting_tree,
    tree_from_table,
    validate_tree,
    write_tree,
)

__all__ = [
    'MartingaleTree',
    'SplittingPlan',
    'TreeBuilder',
    'TreeNode',
    'TreeReport',
    'atom_probabilities',
    'bayes_posterior_sample',
    'constant_tree',
    'd1_variation',
    'expected_cost',
    'jensen_check',
    'mixture_tree',
    'read_tree',
    'riemann_error_bound',
    'sample_atoms',
    'splitting_tree',
    'tree_from_table',
    'validate_tree',
    'write_tree',
]
