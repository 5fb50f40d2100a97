"""Monte Carlo tree search over the interval environment.

The statistics tree grows one node per iteration (select, expand, rollout,
backpropagate). Child choice during selection is argmax of a pluggable
policy expression evaluated on (Q child, N parent, N child); exact value
ties are broken uniformly at random.
"""

from __future__ import annotations

from typing import Callable, List, Optional, Tuple

from .expr import Expr, compile_expr
from .fop import (
    ROOT,
    FopConfig,
    FopState,
    FunctionId,
    bernoulli,
    center,
    child_bounds,
    children,
    f_eval,
    is_terminal,
)


class TreeNode:
    """One statistics node; terminal states have no actions at all."""

    __slots__ = ("state", "visits", "total_reward", "children", "untried_actions")

    def __init__(self, state: FopState, n_actions: int):
        self.state = state
        self.visits = 0
        self.total_reward = 0
        self.children: List[TreeNode] = []
        self.untried_actions = list(range(n_actions))


class SearchTree:
    """Root node plus counters and the installed selection policy."""

    def __init__(self, policy: Expr, cfg: FopConfig = FopConfig()):
        self.cfg = cfg
        self.root = self.make_node(ROOT)
        self.iterations_done = 0
        self.expansions_done = 0
        self.policy: Expr = None
        self._policy_fn = None
        self.set_policy(policy)

    def set_policy(self, e: Expr):
        self.policy = e
        self._policy_fn = compile_expr(e)

    def make_node(self, state: FopState) -> TreeNode:
        n = 0 if is_terminal(state, self.cfg) else self.cfg.branching
        return TreeNode(state, n)


def select(tree: SearchTree, rng) -> List[TreeNode]:
    """Path from the root to the first node that is expandable or terminal.

    Descends through fully expanded nodes by policy argmax; every child on
    the way has at least one visit, so the policy inputs are well defined.
    """
    node = tree.root
    path = [node]
    fn = tree._policy_fn
    while not node.untried_actions and node.children:
        kids = node.children
        np = node.visits
        vals = [fn(k.total_reward / k.visits, np, k.visits) for k in kids]
        m = max(vals)
        if vals.count(m) == 1:
            node = kids[vals.index(m)]
        else:
            tied = [k for k, v in zip(kids, vals) if v == m]
            node = tied[rng.randrange(len(tied))]
        path.append(node)
    return path


def expand(tree: SearchTree, node: TreeNode, rng) -> Optional[TreeNode]:
    """Attach one new child under node, or None when node is terminal."""
    acts = node.untried_actions
    if not acts:
        return None
    i = acts.pop(rng.randrange(len(acts)))
    child = tree.make_node(children(node.state, tree.cfg)[i])
    node.children.append(child)
    tree.expansions_done += 1
    return child


def rollout(fid: FunctionId, state: FopState, rng, cfg: FopConfig = FopConfig()) -> int:
    """Uniform random descent to a terminal interval, then one reward draw."""
    a, b = state.a, state.b
    k = cfg.branching
    t = cfg.threshold
    while (b - a) >= t:
        a, b = child_bounds(a, b, int(rng.random() * k), k)
    return bernoulli(f_eval(fid, (a + b) / 2.0), rng)


def backpropagate(path: List[TreeNode], reward: int):
    for n in path:
        n.visits += 1
        n.total_reward += reward


def run_iterations(
    tree: SearchTree,
    fid: FunctionId,
    n: int,
    rng,
    stage_hooks: Optional[Callable[[SearchTree], None]] = None,
) -> List[int]:
    """Run n complete iterations; returns the sampled rewards in order.

    stage_hooks, when given, is called with the tree after every iteration
    (snapshot collectors decide for themselves which counts they care about).
    """
    rewards = []
    for _ in range(n):
        path = select(tree, rng)
        child = expand(tree, path[-1], rng)
        if child is not None:
            path.append(child)
        r = rollout(fid, path[-1].state, rng, tree.cfg)
        backpropagate(path, r)
        tree.iterations_done += 1
        rewards.append(r)
        if stage_hooks is not None:
            stage_hooks(tree)
    return rewards


def _descend(node: TreeNode, key, rng) -> TreeNode:
    while True:
        kids = [k for k in node.children if k.visits > 0]
        if not kids:
            return node
        vals = [key(k) for k in kids]
        m = max(vals)
        if vals.count(m) == 1:
            node = kids[vals.index(m)]
        else:
            tied = [k for k, v in zip(kids, vals) if v == m]
            node = tied[rng.randrange(len(tied))]


def recommend_most_visited(tree: SearchTree, fid: FunctionId, rng) -> Tuple[float, float]:
    """Follow max-visits children to a leaf; report its midpoint and value.

    The reported value is the true landscape value at the midpoint, not a
    reward sample. Ties are broken uniformly at random.
    """
    node = _descend(tree.root, lambda k: k.visits, rng)
    x = center(node.state)
    return x, f_eval(fid, x)


def recommend_best_reward(tree: SearchTree, fid: FunctionId, rng) -> Tuple[float, float]:
    """Like recommend_most_visited but following max mean reward."""
    node = _descend(tree.root, lambda k: k.total_reward / k.visits, rng)
    x = center(node.state)
    return x, f_eval(fid, x)


def iter_nodes(tree: SearchTree):
    """Yield (node, depth below root) over the whole tree, preorder."""
    stack = [(tree.root, 0)]
    while stack:
        node, d = stack.pop()
        yield node, d
        for k in reversed(node.children):
            stack.append((k, d + 1))


def dump_tree(tree: SearchTree) -> str:
    """Line per node: depth,a,b,visits,total_reward (preorder). Debug aid."""
    lines = []
    for node, d in iter_nodes(tree):
        s = node.state
        lines.append(f"{d},{s.a!r},{s.b!r},{node.visits},{node.total_reward}")
    return "\n".join(lines) + "\n"
