import logging
from collections import deque
from typing import Callable, Dict, Hashable, List, Optional, Tuple

import numpy as np

from games import hamiltonian_value
from martingales import MartingaleTree, SplittingPlan, splitting_tree, validate_tree
from measures import GridMeasure, heat_evolve, heat_kernel
from payoffs.base import PayoffSpec
from solvers import BeliefLattice, Partition
from utils.errors import ConfigError, InvalidTreeError, ProjectionError

logger = logging.getLogger(__name__)

Joint = Dict[Hashable, np.ndarray]


class InformedStrategy:
    """Strategy of the informed player in splitting form.

    At stage q the current atom splits according to ``plans[(q, atom)]``
    (Bayes-consistent with the realized state), then the player draws its
    action from ``mixes[(q, new atom)]``.  Given the atom path, the state at
    t_q has law ``belief(q, atom)``.
    """

    def __init__(self, partition: Partition, root, belief: Callable[[int, Hashable], GridMeasure],
                 plans: Dict[Tuple[int, Hashable], List[Tuple[float, Hashable]]],
                 mixes: Dict[Tuple[int, Hashable], np.ndarray], label: str = 'sigma'):
        self.partition = partition
        self.root = root
        self.belief = belief
        self.plans = plans
        self.mixes = mixes
        self.label = label
        self._plan_cache: Dict[Tuple[int, Hashable], SplittingPlan] = {}
        self._kernels = {}

    def __repr__(self):
        return f'InformedStrategy({self.label}, root={self.root}, N={self.partition.n_steps})'

    @property
    def prior(self) -> GridMeasure:
        return self.belief(0, self.root)

    @property
    def grid(self):
        return self.prior.grid

    def split(self, q: int, atom) -> List[Tuple[float, Hashable]]:
        return self.plans.get((q, atom), [(1.0, atom)])

    def plan(self, q: int, atom) -> SplittingPlan:
        key = (q, atom)
        if key not in self._plan_cache:
            split = self.split(q, atom)
            self._plan_cache[key] = SplittingPlan(
                np.array([w for w, _ in split]),
                [self.belief(q, a) for _, a in split],
                np.array([a for _, a in split]),
            )
        return self._plan_cache[key]

    def mix(self, q: int, atom) -> np.ndarray:
        return self.mixes[(q, atom)]

    def kernel(self, q: int) -> np.ndarray:
        if q not in self._kernels:
            self._kernels[q] = heat_kernel(self.grid, self.partition.steps[q]).matrix
        return self._kernels[q]

    def reachable(self) -> List[Tuple[int, Hashable]]:
        """(q, atom) pairs the strategy can play from, after splitting."""
        seen, order = set(), []
        queue = deque([(0, self.root)])
        while queue:
            q, atom = queue.popleft()
            for weight, child in self.split(q, atom):
                if weight > 0 and (q, child) not in seen:
                    seen.add((q, child))
                    order.append((q, child))
                    if q + 1 < self.partition.n_steps:
                        queue.append((q + 1, child))
        return order

    def split_joint(self, q: int, joint: Joint) -> Joint:
        """Joint mass over (atom, state) after the stage-q splitting."""
        out: Joint = {}
        for atom, mass in joint.items():
            plan = self.plan(q, atom)
            if len(plan) == 1:
                out[plan.atom_ids[0]] = out.get(plan.atom_ids[0], 0.0) + mass
                continue
            parts = plan.joint()
            total = parts.sum(axis=0)
            if np.any((mass > 0) & (total <= 0)):
                raise ProjectionError(f'state off the support of atom {atom} at stage {q}')
            ratio = np.divide(mass, total, out=np.zeros_like(mass), where=total > 0)
            for k, child in enumerate(plan.atom_ids):
                out[child] = out.get(child, 0.0) + parts[k] * ratio
        return out

    def emit(self, q: int, joint: Joint, u: int) -> Joint:
        """Mass of (atom, state) jointly with the action u."""
        return {atom: mass * self.mix(q, atom)[u] for atom, mass in joint.items() if self.mix(q, atom)[u] > 0}

    def propagate(self, q: int, joint: Joint) -> Joint:
        kernel = self.kernel(q)
        return {atom: mass @ kernel for atom, mass in joint.items()}

    def tree(self, max_nodes: int = 200_000) -> MartingaleTree:
        """The posterior process this strategy announces."""
        return splitting_tree(self.partition, self.root, self.belief, self.split, max_nodes)


def _optimal_mixes(spec: PayoffSpec, partition: Partition, pairs, belief) -> Dict:
    return {
        (q, atom): hamiltonian_value(spec, partition.times[q], belief(q, atom)).optimal_row_mixed
        for q, atom in pairs
    }


def _lattice_belief(lattice: BeliefLattice, partition: Partition):
    cache = {}

    def belief(q, atom):
        if (q, atom) not in cache:
            cache[(q, atom)] = lattice.measure(partition, q, lattice.points[atom])
        return cache[(q, atom)]

    return belief


def _finish(strategy: InformedStrategy, spec: PayoffSpec) -> InformedStrategy:
    strategy.mixes.update(_optimal_mixes(spec, strategy.partition, strategy.reachable(), strategy.belief))
    return strategy


def make_informed_strategy(table, spec: PayoffSpec, point_id: Optional[int] = None) -> InformedStrategy:
    """Optimal splitting plans of ``table`` followed by minmax actions at each posterior."""
    if table.scheme != 'heat':
        raise ConfigError('informed strategies need a value table solved with the heat scheme')
    lattice, partition = table.lattice, table.partition
    point_id = lattice.find(lattice.barycenter) if point_id is None else point_id
    plans = {
        key: list(zip(split.weights.tolist(), split.atom_ids.tolist()))
        for key, split in table.splits.items()
    }
    strategy = InformedStrategy(partition, point_id, _lattice_belief(lattice, partition), plans, {},
                                label='optimal')
    return _finish(strategy, spec)


def nonrevealing_strategy(lattice: BeliefLattice, partition: Partition, spec: PayoffSpec,
                          point_id: int) -> InformedStrategy:
    """Never splits; plays minmax of the heat-flow belief."""
    strategy = InformedStrategy(partition, point_id, _lattice_belief(lattice, partition), {}, {},
                                label='nonrevealing')
    return _finish(strategy, spec)


def full_revealing_strategy(lattice: BeliefLattice, partition: Partition, spec: PayoffSpec,
                            point_id: int) -> InformedStrategy:
    """Splits into the support vertices at the first stage, never afterwards."""
    coords = lattice.points[point_id]
    vertices = lattice.vertex_ids
    plans = {(0, point_id): [(float(c), int(v)) for c, v in zip(coords, vertices) if c > 0]}
    strategy = InformedStrategy(partition, point_id, _lattice_belief(lattice, partition), plans, {},
                                label='fullrevealing')
    return _finish(strategy, spec)


def informed_tree(strategy: InformedStrategy, max_nodes: int = 200_000) -> MartingaleTree:
    return strategy.tree(max_nodes)


def strategy_from_tree(tree: MartingaleTree, spec: PayoffSpec) -> InformedStrategy:
    """Splitting-form strategy announcing the posterior process of ``tree``.

    Atoms are node ids.  The atom played at stage q is the stage node of
    stage q - 1 (its belief carried to t_q by the heat flow) until it splits
    into its children; splits nested at one time index are flattened.
    """
    report = validate_tree(tree)
    if not report.passed:
        raise InvalidTreeError(str(report.first))
    times = tree.partition.times
    nodes, children = tree.nodes, tree.children

    def belief(q, atom):
        node = nodes[atom]
        if node.time_index == q:
            return node.belief
        return heat_evolve(node.belief, times[node.time_index], times[q])

    def leaves(node_id, prob):
        same = [c for c in children[node_id] if nodes[c].time_index == nodes[node_id].time_index]
        if not same:
            return [(prob, node_id)]
        return [leaf for c in same for leaf in leaves(c, prob * nodes[c].prob)]

    plans, entries = {}, [(0, tree.root_id)]
    while entries:
        q, atom = entries.pop()
        if nodes[atom].time_index == q:
            split = leaves(atom, 1.0)
        else:
            split = [leaf for c in children[atom] for leaf in leaves(c, nodes[c].prob)]
        if split != [(1.0, atom)]:
            plans[(q, atom)] = split
        if q + 1 < tree.partition.n_steps:
            entries.extend((q + 1, stage_node) for _, stage_node in split)
    strategy = InformedStrategy(tree.partition, tree.root_id, belief, plans, {}, label='tree')
    return _finish(strategy, spec)
