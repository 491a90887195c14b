"""Explicit tree expansion of the low-order coefficients.

Each tree is built from ordered nodes; slot 0 of a trivalent node is the
conjugated factor.  Node kinds:

``leaf``  order-0 packet coefficient ``+-a_m`` at ``(m^2, +-m)``;
``w3``    cubic node on an off-diagonal line, factor ``eps * g(n, m)``,
          children orders summing to ``k - 1``;
``w1a``   counterterm node ``nu^a_m g(n, m)``, momentum passed through;
``w1b``   counterterm node ``nu^b_m g(n, m)``, output ``(n, -m_child)``;
``v``     cubic node on a diagonal line, node factor ``eta_v`` and line
          factor from the Q-equation inverse, children orders summing to
          ``k`` with the starred restriction.  On the mode set the inverse
          mixes wave numbers, so the line may leave at ``(m'^2, m')`` with
          ``m' != m``; ``shift`` records that jump.

Because slots are ordered, summing the values of all trees reproduces the
recursion without symmetry factors.  The enumeration is exponential and is
refused above order 3.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import product


from ..amplitudes import AmplitudeVector, odd_extension
from ..errors import StructuralError
from .frequencies import FrequencyState
from .series import _block_inverse, propagator

MAX_TREE_ORDER = 3


@dataclass(frozen=True, eq=False)
class TreeNode:
    kind: str
    order: int
    n: int
    m: int
    value: float
    children: tuple = ()
    flip: bool = False
    shift: tuple[int, int] = (0, 0)

    @property
    def diagonal(self) -> bool:
        return self.n == self.m * self.m

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()

    def count(self, kind: str) -> int:
        return sum(1 for node in self.walk() if node.kind == kind)

    def path_to(self, target: "TreeNode"):
        """Nodes from ``self`` down to ``target`` (inclusive), or ``None``."""
        if self is target:
            return [self]
        for c in self.children:
            p = c.path_to(target)
            if p is not None:
                return [self] + p
        return None


def _compositions(total: int, parts: int = 3):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _leaves(av: AmplitudeVector):
    out = []
    for m in av.modes:
        a = av.a[m]
        out.append(TreeNode("leaf", 0, m * m, m, a))
        out.append(TreeNode("leaf", 0, m * m, -m, -a))
    return out


def enumerate_trees(av: AmplitudeVector, fs: FrequencyState, k_max: int,
                    eta_v: float = 1.0) -> dict[int, list[TreeNode]]:
    """All trees of order ``0 .. k_max`` keyed by order."""
    if k_max > MAX_TREE_ORDER:
        raise StructuralError(f"tree enumeration refused above order {MAX_TREE_ORDER} (got {k_max})")
    if k_max < 0:
        raise StructuralError("order must be >= 0")
    eps = fs.eps
    norm4 = float(4 * av.norm_sq)
    full, d2 = odd_extension(_block_inverse(av), av.modes)
    index = {m: i for i, m in enumerate(full)}

    u_trees: dict[int, list[TreeNode]] = {0: _leaves(av)}
    w_trees: dict[int, list[TreeNode]] = {0: []}
    for k in range(1, k_max + 1):
        w = []
        for ks in _compositions(k - 1):
            for c1, c2, c3 in product(*(u_trees[j] for j in ks)):
                n = -c1.n + c2.n + c3.n
                m = -c1.m + c2.m + c3.m
                if n == m * m:
                    continue
                val = eps * propagator(n, m, fs) * c1.value * c2.value * c3.value
                w.append(TreeNode("w3", k, n, m, val, (c1, c2, c3)))
        for c in w_trees[k - 1]:
            g = propagator(c.n, c.m, fs)
            nu_a, nu_b = fs.nu_a_at(c.m), fs.nu_b_at(c.m)
            if nu_a:
                w.append(TreeNode("w1a", k, c.n, c.m, nu_a * g * c.value, (c,)))
            if nu_b:
                w.append(TreeNode("w1b", k, c.n, -c.m, nu_b * g * c.value, (c,), flip=True))
        w_trees[k] = w

        v = []
        pools = {j: u_trees[j] for j in range(k)}
        pools[k] = w
        for ks in _compositions(k):
            for children in product(*(pools[j] for j in ks)):
                if all(c.diagonal for c in children) and sum(1 for j in ks if j) == 1:
                    continue
                c1, c2, c3 = children
                n = -c1.n + c2.n + c3.n
                m = -c1.m + c2.m + c3.m
                if n != m * m or m == 0:
                    continue
                prod_val = eta_v * c1.value * c2.value * c3.value
                if m in index:
                    for m_out in full:
                        line = d2[index[m_out], index[m]]
                        v.append(TreeNode("v", k, m_out * m_out, m_out, line * prod_val, children,
                                          shift=(m_out * m_out - n, m_out - m)))
                else:
                    v.append(TreeNode("v", k, n, m, prod_val / (m * m - norm4), children))
        u_trees[k] = w + v
    return u_trees


def tree_coefficients(av: AmplitudeVector, fs: FrequencyState, k: int,
                      eta_v: float = 1.0, trees=None) -> dict[tuple[int, int], float]:
    """Sum of tree values per output momentum at order ``k``."""
    trees = trees or enumerate_trees(av, fs, k, eta_v)
    out: dict = {}
    for t in trees[k]:
        out[(t.n, t.m)] = out.get((t.n, t.m), 0.0) + t.value
    return out


def tree_oracle(k: int, n: int, m: int, fs: FrequencyState, av: AmplitudeVector,
                eta_v: float = 1.0) -> float:
    """``u^(k)[n, m]`` as the sum over all trees of order ``k``."""
    return tree_coefficients(av, fs, k, eta_v).get((n, m), 0.0)


def _recompute(node: TreeNode, cut: TreeNode):
    """Output momentum of ``node`` with the line leaving ``cut`` set to zero."""
    if node is cut:
        return 0, 0
    if node.kind == "leaf":
        return node.n, node.m
    moms = [_recompute(c, cut) for c in node.children]
    if len(moms) == 1:
        n, m = moms[0]
    else:
        (n1, m1), (n2, m2), (n3, m3) = moms
        n, m = -n1 + n2 + n3, -m1 + m2 + m3
    if node.flip:
        m = -m
    return n + node.shift[0], m + node.shift[1]


def detect_self_energy(theta: TreeNode, top: TreeNode, entering: TreeNode) -> str:
    """Classify the subgraph between ``top`` and the line leaving ``entering``.

    The subgraph's external lines are the one leaving ``top`` and the one
    leaving ``entering``.  With ``(n_T, m_T)`` the momentum its own end-points
    inject, the result is ``"type-a"`` if ``n_T = 0`` and ``m_T = 0``,
    ``"type-b"`` if ``n_T = 0`` and ``m_T = 2 m_out``, otherwise ``"none"``.
    """
    if theta.path_to(top) is None:
        raise StructuralError("top node is not part of the tree")
    path = top.path_to(entering)
    if path is None or entering is top:
        raise StructuralError("entering node must be a strict descendant of the top node")
    n_t, m_t = _recompute(top, entering)
    if n_t != 0:
        return "none"
    if m_t == 0:
        return "type-a"
    if m_t == 2 * top.m:
        return "type-b"
    return "none"


def count_self_energies(trees) -> Counter:
    """Tally classifications over all off-diagonal (top, entering) line pairs."""
    tally: Counter = Counter()
    for theta in trees:
        nodes = [x for x in theta.walk() if x.kind != "leaf" and not x.diagonal]
        for top in nodes:
            for entering in top.walk():
                if entering is top or entering.kind == "leaf" or entering.diagonal:
                    continue
                tally[detect_self_energy(theta, top, entering)] += 1
    return tally


def max_deviation(av: AmplitudeVector, fs: FrequencyState, ladder, k: int,
                  m_window: int | None = None, eta_v: float = 1.0) -> tuple[float, int]:
    """Largest ``|tree - recursion|`` over reachable points; also the point count."""
    tc = tree_coefficients(av, fs, k, eta_v)
    keys = set(tc) | {key for key, v in ladder.per_k[k].items() if v != 0}
    if m_window is not None:
        keys = {key for key in keys if abs(key[1]) <= m_window}
    worst = 0.0
    for key in keys:
        worst = max(worst, abs(tc.get(key, 0.0) - ladder.per_k[k].get(*key).real))
    return worst, len(keys)
