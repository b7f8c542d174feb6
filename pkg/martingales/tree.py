"""Finite measure-valued martingales.

A tree node carries the time index of the partition it lives at.  A child
either shares its parent's index (a splitting of the belief at that time) or
sits at the next index (heat evolution, possibly followed by a splitting
encoded in the same step).  On every root-to-leaf path, M at t_q is the
belief of the last node with index q.
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from games import hamiltonian_value
from measures import GridMeasure, SpatialGrid, heat_evolve, heat_flow, second_moment, wasserstein1
from payoffs.base import PayoffSpec
from solvers.partition import Partition
from utils.errors import EnumerationBudgetError, InvalidTreeError
from utils.file_utils import read_comment_lines, write_frame

logger = logging.getLogger(__name__)

TREE_TOL = 1e-9
MAX_NODES = 200_000


@dataclass(frozen=True, eq=False)
class TreeNode:
    node_id: int
    parent_id: int
    time_index: int
    prob: float
    belief: GridMeasure


@dataclass(frozen=True)
class TreeViolation:
    constraint: str
    node_id: int
    path: Tuple[int, ...]
    residual: float

    def __str__(self):
        return (f"{self.constraint} violated at node {self.node_id} "
                f"(path {'/'.join(map(str, self.path))}), residual {self.residual:.3e}")


@dataclass
class TreeReport:
    violations: List[TreeViolation] = field(default_factory=list)
    worst: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    @property
    def first(self) -> Optional[TreeViolation]:
        return self.violations[0] if self.violations else None

    def record(self, constraint: str, residual: float, node_id: int, path, tol: float):
        self.worst[constraint] = max(self.worst.get(constraint, 0.0), residual)
        if residual > tol:
            self.violations.append(TreeViolation(constraint, node_id, tuple(path), residual))


class MartingaleTree:
    def __init__(self, partition: Partition, nodes: Iterable[TreeNode]):
        self.partition = partition
        self.nodes: Dict[int, TreeNode] = {}
        self.children: Dict[int, List[int]] = {}
        roots = []
        for node in nodes:
            if node.node_id in self.nodes:
                raise InvalidTreeError(f'duplicate node id {node.node_id}')
            self.nodes[node.node_id] = node
            self.children.setdefault(node.node_id, [])
        for node in self.nodes.values():
            if node.parent_id < 0:
                roots.append(node.node_id)
            elif node.parent_id not in self.nodes:
                raise InvalidTreeError(f'node {node.node_id} has unknown parent {node.parent_id}')
            else:
                self.children[node.parent_id].append(node.node_id)
        if len(roots) != 1:
            raise InvalidTreeError(f'a tree needs exactly one root, found {len(roots)}')
        self.root_id = roots[0]

    def __len__(self):
        return len(self.nodes)

    def __repr__(self):
        return f'MartingaleTree({len(self)} nodes, N={self.partition.n_steps})'

    @property
    def root(self) -> TreeNode:
        return self.nodes[self.root_id]

    @property
    def prior(self) -> GridMeasure:
        return self.root.belief

    @property
    def grid(self) -> SpatialGrid:
        return self.prior.grid

    def preorder(self) -> List[int]:
        order, stack = [], [self.root_id]
        while stack:
            node_id = stack.pop()
            order.append(node_id)
            stack.extend(reversed(self.children[node_id]))
        return order

    def path(self, node_id: int) -> List[int]:
        path = [node_id]
        while self.nodes[path[-1]].parent_id >= 0:
            path.append(self.nodes[path[-1]].parent_id)
        return path[::-1]

    @cached_property
    def probabilities(self) -> Dict[int, float]:
        """Unconditional probability of reaching each node."""
        probs = {self.root_id: self.root.prob}
        for node_id in self.preorder():
            for child in self.children[node_id]:
                probs[child] = probs[node_id] * self.nodes[child].prob
        return probs

    def is_stage_node(self, node_id: int) -> bool:
        """True when the node is the last one at its time index on its paths."""
        node = self.nodes[node_id]
        return all(self.nodes[c].time_index > node.time_index for c in self.children[node_id])

    def stage_nodes(self, q: int) -> List[int]:
        return [n for n in self.preorder() if self.nodes[n].time_index == q and self.is_stage_node(n)]

    def stage_ancestor(self, node_id: int, q: int) -> int:
        """The last node with index q on the path to ``node_id``."""
        found = None
        for n in self.path(node_id):
            if self.nodes[n].time_index == q:
                found = n
            elif self.nodes[n].time_index > q:
                break
        if found is None:
            raise InvalidTreeError(f'no node at time index {q} above node {node_id}')
        return found

    def descendants(self, node_id: int) -> List[int]:
        out, stack = [], [node_id]
        while stack:
            n = stack.pop()
            out.append(n)
            stack.extend(self.children[n])
        return out

    def marginal(self, q: int) -> np.ndarray:
        """E[M_{t_q}] as a weight vector."""
        probs = self.probabilities
        return sum(probs[n] * self.nodes[n].belief.weights for n in self.stage_nodes(q))

    def records(self) -> List[TreeNode]:
        return [self.nodes[n] for n in self.preorder()]


class TreeBuilder:
    def __init__(self, partition: Partition, max_nodes: int = MAX_NODES):
        self.partition = partition
        self.max_nodes = max_nodes
        self._nodes: List[TreeNode] = []

    def add(self, parent_id: int, time_index: int, prob: float, belief: GridMeasure) -> int:
        if len(self._nodes) >= self.max_nodes:
            raise EnumerationBudgetError(f'tree exceeds {self.max_nodes} nodes')
        node_id = len(self._nodes)
        self._nodes.append(TreeNode(node_id, parent_id, time_index, float(prob), belief))
        return node_id

    def build(self) -> MartingaleTree:
        return MartingaleTree(self.partition, self._nodes)


def splitting_tree(partition: Partition, root_atom, belief_fn: Callable, plan_fn: Callable,
                   max_nodes: int = MAX_NODES) -> MartingaleTree:
    """Tree of a splitting-form process.

    ``belief_fn(q, atom)`` gives the belief attached to an atom at index q and
    ``plan_fn(q, atom)`` the list of ``(probability, atom)`` it splits into at t_q.
    """
    builder = TreeBuilder(partition, max_nodes)
    root = builder.add(-1, 0, 1.0, belief_fn(0, root_atom))
    frontier = [(root, root_atom)]
    n_steps = partition.n_steps
    for q in range(n_steps + 1):
        next_frontier = []
        for node, atom in frontier:
            split = [(p, a) for p, a in plan_fn(q, atom) if p > 0] if q < n_steps else [(1.0, atom)]
            if len(split) == 1 and split[0][1] == atom:
                posteriors = [(node, atom)]
            else:
                posteriors = [(builder.add(node, q, p, belief_fn(q, a)), a) for p, a in split]
            if q < n_steps:
                next_frontier.extend(
                    (builder.add(post, q + 1, 1.0, belief_fn(q + 1, a)), a) for post, a in posteriors)
        frontier = next_frontier
    return builder.build()


def constant_tree(partition: Partition, m: GridMeasure) -> MartingaleTree:
    """The no-splitting martingale M_s = heat flow of m."""
    flow = heat_flow(m, partition.times)
    builder = TreeBuilder(partition)
    node = builder.add(-1, 0, 1.0, flow[0])
    for q in range(1, len(flow)):
        node = builder.add(node, q, 1.0, flow[q])
    return builder.build()


def tree_from_table(table, point_id: int, max_nodes: int = MAX_NODES) -> MartingaleTree:
    """The posterior tree announced by the optimal splitting plans of a value table."""
    if table.scheme != 'heat':
        raise InvalidTreeError('Voronoi tables carry projected beliefs and do not define a martingale')
    points = table.lattice.points

    def plan_fn(q, atom):
        split = table.splits[(q, atom)]
        return list(zip(split.weights, split.atom_ids.tolist()))

    return splitting_tree(table.partition, point_id,
                          lambda q, atom: table.measure(q, points[atom]), plan_fn, max_nodes)


def validate_tree(tree: MartingaleTree, m: Optional[GridMeasure] = None, tol: float = TREE_TOL) -> TreeReport:
    """Check the martingale conditions node by node.

    Covers the root law, the heat-martingale identity at every node, the
    mean-measure identity per time index and the second-moment submartingale
    property.  Violations are collected in preorder.
    """
    report = TreeReport()
    times = tree.partition.times
    n_steps = tree.partition.n_steps
    root = tree.root
    if m is not None:
        report.record('root-law', float(np.abs(root.belief.weights - m.weights).max()),
                      root.node_id, [root.node_id], tol)
    if root.time_index != 0 or abs(root.prob - 1.0) > tol:
        report.record('root-index', 1.0, root.node_id, [root.node_id], 0.0)

    for node_id in tree.preorder():
        node = tree.nodes[node_id]
        children = [tree.nodes[c] for c in tree.children[node_id]]
        if not children:
            if node.time_index != n_steps:
                report.record('leaf-before-horizon', float(n_steps - node.time_index), node_id, tree.path(node_id), 0.0)
            continue
        indices = {c.time_index for c in children}
        if len(indices) != 1 or not indices <= {node.time_index, node.time_index + 1}:
            report.record('child-time-index', 1.0, node_id, tree.path(node_id), 0.0)
            continue
        q_child = indices.pop()
        probs = np.array([c.prob for c in children])
        if probs.min() < -tol:
            report.record('negative-probability', float(-probs.min()), node_id, tree.path(node_id), tol)
        report.record('probabilities-sum', float(abs(probs.sum() - 1.0)), node_id, tree.path(node_id), tol)

        expected = heat_evolve(node.belief, times[node.time_index], times[q_child]).weights
        mixture = probs @ np.stack([c.belief.weights for c in children])
        report.record('heat-martingale', float(np.abs(mixture - expected).max()), node_id, tree.path(node_id), tol)

        moment = float(probs @ np.array([second_moment(c.belief) for c in children]))
        report.record('second-moment-submartingale', max(0.0, second_moment(node.belief) - moment),
                      node_id, tree.path(node_id), tol)

    flow = heat_flow(root.belief, times)
    for q in range(n_steps + 1):
        residual = float(np.abs(tree.marginal(q) - flow[q].weights).max())
        stage = tree.stage_nodes(q)
        report.record('mean-measure', residual, stage[0] if stage else root.node_id,
                      tree.path(stage[0]) if stage else [root.node_id], tol)

    if report.passed:
        logger.debug(f'{tree!r} valid, worst residuals {report.worst}')
    return report


def _require_valid(tree: MartingaleTree):
    report = validate_tree(tree)
    if not report.passed:
        raise InvalidTreeError(str(report.first))


def expected_cost(tree: MartingaleTree, spec: PayoffSpec) -> float:
    """E sum_q step_q H(t_q, M_{t_q}) by enumeration of the tree."""
    _require_valid(tree)
    probs = tree.probabilities
    times, steps = tree.partition.times, tree.partition.steps
    total = 0.0
    for q, step in enumerate(steps):
        for n in tree.stage_nodes(q):
            if probs[n] > 0:
                total += probs[n] * step * hamiltonian_value(spec, times[q], tree.nodes[n].belief).value
    return float(total)


def mixture_tree(tree1: MartingaleTree, tree2: MartingaleTree, lam: float) -> MartingaleTree:
    """Root split (lam, 1 - lam) into the roots of the two trees."""
    if tree1.partition != tree2.partition:
        raise InvalidTreeError('cannot mix trees on different partitions')
    if not 0.0 <= lam <= 1.0:
        raise InvalidTreeError(f'mixture weight {lam} outside [0, 1]')
    builder = TreeBuilder(tree1.partition)
    root = builder.add(-1, 0, 1.0, tree1.prior.mix(tree2.prior, 1.0 - lam))
    for tree, weight in ((tree1, lam), (tree2, 1.0 - lam)):
        if weight <= 0:
            continue
        remap = {}
        for n in tree.preorder():
            node = tree.nodes[n]
            if node.parent_id < 0:
                remap[n] = builder.add(root, 0, weight, node.belief)
            else:
                remap[n] = builder.add(remap[node.parent_id], node.time_index, node.prob, node.belief)
    return builder.build()


def _stage_flow_from(tree: MartingaleTree, node_id: int, q_to: int) -> GridMeasure:
    node = tree.nodes[node_id]
    return heat_flow(node.belief, tree.partition.times[node.time_index:q_to + 1])[-1]


def jensen_check(tree: MartingaleTree, q1: int, q2: int, q3: int, tol: float = TREE_TOL) -> pd.DataFrame:
    """d1(heat(M_{t2} -> t3), M_{t1}) <= E[d1(M_{t3}, M_{t1}) | node] at every time-t2 node."""
    if not 0 <= q1 <= q2 <= q3 <= tree.partition.n_steps:
        raise InvalidTreeError(f'time indices must satisfy 0 <= {q1} <= {q2} <= {q3} <= N')
    probs = tree.probabilities
    rows = []
    for n in tree.stage_nodes(q2):
        if probs[n] <= 0:
            continue
        anchor = tree.nodes[tree.stage_ancestor(n, q1)].belief
        lhs = wasserstein1(_stage_flow_from(tree, n, q3), anchor)
        later = [d for d in tree.descendants(n)
                 if tree.nodes[d].time_index == q3 and tree.is_stage_node(d)]
        rhs = sum(probs[d] * wasserstein1(tree.nodes[d].belief, anchor) for d in later) / probs[n]
        rows.append({'node_id': n, 'lhs': lhs, 'rhs': rhs, 'slack': rhs - lhs, 'passed': rhs - lhs >= -tol})
    return pd.DataFrame(rows, columns=['node_id', 'lhs', 'rhs', 'slack', 'passed'])


def _prediction_gaps(tree: MartingaleTree, shift: int) -> float:
    """E sum_q step_q d1(M_{t_{q+shift}}, heat prediction of M_{t_{q+shift-1}})."""
    _require_valid(tree)
    probs = tree.probabilities
    times, steps = tree.partition.times, tree.partition.steps
    total = 0.0
    for q, step in enumerate(steps):
        target = q + shift
        for n in tree.stage_nodes(target):
            if probs[n] <= 0:
                continue
            if target == 0:
                predicted = tree.prior
            else:
                previous = tree.nodes[tree.stage_ancestor(n, target - 1)].belief
                predicted = heat_evolve(previous, times[target - 1], times[target])
            total += probs[n] * step * wasserstein1(tree.nodes[n].belief, predicted)
    return float(total)


def d1_variation(tree: MartingaleTree) -> float:
    """E sum_q step_q d1(M_{t_q}, M^_{t_q}) with M^ the one-step heat prediction (M^_{t_0} = m)."""
    return _prediction_gaps(tree, 0)


def riemann_error_bound(tree: MartingaleTree, spec: PayoffSpec) -> float:
    """Bound on |stage-sum cost - time-integral cost| of the tree."""
    mesh = tree.partition.mesh
    span = tree.partition.horizon - tree.partition.start
    return spec.bound * span * (_prediction_gaps(tree, 1) + mesh + 2.0 * np.sqrt(mesh))


def write_tree(tree: MartingaleTree, path: str, header: Sequence[str] = ()):
    grid = tree.grid
    lines = list(header) + [
        f'grid half_width={grid.half_width!r} n_points={grid.n_points}',
        'partition ' + ','.join(repr(t) for t in tree.partition.times),
    ]
    records = tree.records()
    frame = pd.DataFrame({
        'node_id': [n.node_id for n in records],
        'parent_id': [n.parent_id for n in records],
        'time_index': [n.time_index for n in records],
        'prob': [n.prob for n in records],
    })
    weights = pd.DataFrame(np.stack([n.belief.weights for n in records]),
                           columns=[f'w{i}' for i in range(grid.n_points)])
    write_frame(pd.concat([frame, weights], axis=1), path, lines)


def read_tree(path: str) -> MartingaleTree:
    meta = {}
    for line in read_comment_lines(path):
        key, _, rest = line.partition(' ')
        meta[key] = rest
    if 'grid' not in meta or 'partition' not in meta:
        raise InvalidTreeError(f'{path} lacks the grid/partition header lines')
    fields = dict(item.split('=') for item in meta['grid'].split())
    grid = SpatialGrid(half_width=float(fields['half_width']), n_points=int(fields['n_points']))
    partition = Partition(tuple(float(t) for t in meta['partition'].split(',')))
    frame = pd.read_csv(path, comment='#')
    weight_cols = [f'w{i}' for i in range(grid.n_points)]
    nodes = [
        TreeNode(int(row.node_id), int(row.parent_id), int(row.time_index), float(row.prob),
                 GridMeasure(grid, weights))
        for row, weights in zip(frame.itertuples(index=False), frame[weight_cols].to_numpy(np.float64))
    ]
    return MartingaleTree(partition, nodes)
