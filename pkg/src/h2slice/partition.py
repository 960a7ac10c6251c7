"""Binary cluster tree over ordered points and block classification.

Levels are numbered from the root (level 0) to the leaves (level ``depth``);
level l holds 2**l clusters obtained by recursive range halving, so the tree
is a perfect binary tree and some trailing leaves may be small or empty.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

DEFAULT_LEAF_SIZE = 32
DEFAULT_ETA = 1.0


@dataclass
class ClusterTree:
    n: int
    leaf_size: int
    depth: int
    degenerate: bool  # True when the root itself is the only leaf
    ranges: list  # ranges[l][i] = (start, stop)
    boxes: list  # boxes[l][i] = (lo, hi) ndarray pair, or None when empty

    def num_clusters(self, level):
        return 2**level

    def index_range(self, level, i):
        return self.ranges[level][i]

    def size(self, level, i):
        s, e = self.ranges[level][i]
        return e - s

    def indices(self, level, i):
        s, e = self.ranges[level][i]
        return np.arange(s, e)

    def children(self, level, i):
        return (level + 1, 2 * i), (level + 1, 2 * i + 1)

    def is_leaf_level(self, level):
        return level == self.depth


def build_tree(cloud, leaf_size=DEFAULT_LEAF_SIZE):
    """Cluster tree by recursive halving of the (already ordered) index range.

    Depth is the smallest value for which every leaf holds at most
    ``leaf_size`` points; inputs smaller than one leaf produce a degenerate
    single-leaf tree.
    """
    if leaf_size < 1:
        raise ConfigError("leaf_size must be positive")
    n = cloud.n
    if n == 0:
        raise ConfigError("cannot build a tree over zero points")
    depth = 0
    while (n + (1 << depth) - 1) >> depth > leaf_size:
        depth += 1

    ranges = [[(0, n)]]
    for _ in range(depth):
        nxt = []
        for s, e in ranges[-1]:
            mid = s + (e - s + 1) // 2
            nxt.append((s, mid))
            nxt.append((mid, e))
        ranges.append(nxt)

    boxes = []
    for level_ranges in ranges:
        row = []
        for s, e in level_ranges:
            if e > s:
                pts = cloud.coords[s:e]
                row.append((pts.min(axis=0), pts.max(axis=0)))
            else:
                row.append(None)
        boxes.append(row)

    return ClusterTree(
        n=n,
        leaf_size=leaf_size,
        depth=depth,
        degenerate=(depth == 0),
        ranges=ranges,
        boxes=boxes,
    )


@dataclass(frozen=True)
class Admissibility:
    kind: str  # "weak" or "strong"
    eta: float = DEFAULT_ETA


WEAK = Admissibility("weak")


def strong(eta=DEFAULT_ETA):
    return Admissibility("strong", float(eta))


def admissible(box_i, box_j, eta):
    """Geometric admissibility: max(diam_i, diam_j) <= eta * dist(box_i, box_j).

    Touching or overlapping boxes (distance zero) are never admissible.
    """
    lo_i, hi_i = box_i
    lo_j, hi_j = box_j
    gap = np.maximum(0.0, np.maximum(lo_j - hi_i, lo_i - hi_j))
    dist = float(np.sqrt(np.sum(gap * gap)))
    if dist <= 0.0:
        return False
    diam = max(float(np.linalg.norm(hi_i - lo_i)), float(np.linalg.norm(hi_j - lo_j)))
    return diam <= eta * dist


@dataclass
class BlockStructure:
    """Classified same-level cluster pairs.

    ``lowrank[l]`` lists pairs stored through shared bases and couplings,
    ``dense`` lists inadmissible leaf pairs kept verbatim, and
    ``deferred[l]`` lists non-leaf pairs whose children carry the content
    (these re-surface as dense blocks when eliminated systems merge upward).
    Pairs are canonical (i < j); ``kind`` is "weak", "strong", or "flat"
    (single-level, the BLR2 layout).
    """

    kind: str
    eta: float
    lowrank: dict = field(default_factory=dict)
    dense: list = field(default_factory=list)
    deferred: dict = field(default_factory=dict)

    def lowrank_at(self, level):
        return self.lowrank.get(level, [])

    def deferred_at(self, level):
        return self.deferred.get(level, [])

    def lowrank_levels(self):
        return sorted(self.lowrank)

    def lowrank_partners(self, level, i):
        """Classified low-rank partners of cluster i at this level."""
        out = []
        for a, b in self.lowrank.get(level, []):
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)


def _pair_admissible(tree, adm, level, i, j):
    bi = tree.boxes[level][i]
    bj = tree.boxes[level][j]
    if bi is None or bj is None:
        return False
    if adm.kind == "weak":
        return True
    return admissible(bi, bj, adm.eta)


def classify(tree, adm):
    """Level-order classification of cluster pairs.

    A visited pair is low-rank when admissible, dense when both clusters are
    leaves, and otherwise deferred to its four child pairs. Weak mode marks
    every visited off-diagonal pair low-rank at the coarsest level where the
    clusters are distinct, which yields the nested sibling-pair pattern.
    """
    st = BlockStructure(kind=adm.kind, eta=adm.eta)
    if tree.depth == 0:
        return st
    active = [(0, 1)]
    for level in range(1, tree.depth + 1):
        nxt = []
        lowrank = []
        deferred = []
        for i, j in active:
            if tree.size(level, i) == 0 or tree.size(level, j) == 0:
                continue
            if _pair_admissible(tree, adm, level, i, j):
                lowrank.append((i, j))
            elif tree.is_leaf_level(level):
                st.dense.append((i, j))
            else:
                deferred.append((i, j))
        if lowrank:
            st.lowrank[level] = lowrank
        if deferred:
            st.deferred[level] = deferred
        if level < tree.depth:
            for i in range(tree.num_clusters(level)):
                nxt.append((2 * i, 2 * i + 1))
            for i, j in deferred:
                for ci in (2 * i, 2 * i + 1):
                    for cj in (2 * j, 2 * j + 1):
                        nxt.append((ci, cj))
            active = sorted(nxt)
    return st


def flat_structure(tree):
    """Single-level layout: every off-diagonal leaf pair is low-rank.

    This is the BLR2 block pattern; the eliminated leaf system merges
    straight into one dense root matrix.
    """
    st = BlockStructure(kind="flat", eta=0.0)
    if tree.depth == 0:
        return st
    level = tree.depth
    pairs = []
    for i in range(tree.num_clusters(level)):
        if tree.size(level, i) == 0:
            continue
        for j in range(i + 1, tree.num_clusters(level)):
            if tree.size(level, j) == 0:
                continue
            pairs.append((i, j))
    if pairs:
        st.lowrank[level] = pairs
    return st


def construction_partners(tree, st, level, i):
    """Same-level partners whose blocks the shared basis of cluster i must
    span: every admissible partner, including pairs covered by a coarser
    classified block (admissibility is inherited by descendants, so a
    cluster's total far field at this level is exactly this set)."""
    if tree.size(level, i) == 0:
        return []
    out = []
    for j in range(tree.num_clusters(level)):
        if j == i or tree.size(level, j) == 0:
            continue
        if st.kind in ("weak", "flat"):
            out.append(j)
        else:
            if _pair_admissible(tree, Admissibility("strong", st.eta), level, i, j):
                out.append(j)
    return out
