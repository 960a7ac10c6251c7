"""Rank-structured approximation of symmetric kernel matrices.

Shared row bases are built per cluster from the concatenation of all
admissible blocks in the cluster's row; non-leaf bases are transfer matrices
expressed in the children's skeleton coordinates, so the representation is
nested. Classified low-rank blocks store only a small coupling matrix
between the two skeletons. Construction samples kernel entries densely
(desk scale by design); blocks are evaluated in column slabs to bound
transient memory.
"""

from dataclasses import dataclass, field

import numpy as np

from .dense import rrqr_truncated, _oracle_cap
from .errors import ConfigError, OracleTooLarge
from .geometry import DenseKernel
from .partition import construction_partners

COLUMN_SLAB = 1024


@dataclass
class RankStructuredMatrix:
    """Symmetric matrix in BLR2, HSS, or H2 form over a cluster tree.

    ``leaf_diag`` holds the (possibly shifted) dense diagonal blocks,
    ``leaf_offdiag`` the inadmissible off-diagonal leaf blocks (strong
    admissibility only), ``bases`` the per-cluster basis splits (leaf level:
    point coordinates; other levels: transfer matrices over the children's
    skeletons), and ``couplings`` the skeleton-to-skeleton block contents
    keyed by (level, i, j) with i < j. ``shift`` records the accumulated
    diagonal shift relative to the constructed matrix.
    """

    fmt: str
    tree: object
    structure: object
    eps: float
    leaf_diag: dict
    leaf_offdiag: dict = field(default_factory=dict)
    bases: dict = field(default_factory=dict)
    couplings: dict = field(default_factory=dict)
    shift: float = 0.0
    _origin: object = None  # unshifted ancestor owning the skeleton cache
    _skel_diag: dict = field(default_factory=dict)
    _skel_offdiag: dict = field(default_factory=dict)
    _scale0: float = -1.0

    @property
    def n(self):
        return self.tree.n

    def origin(self):
        return self._origin if self._origin is not None else self

    def max_rank(self):
        """Largest skeleton rank across all levels."""
        if not self.bases:
            return 0
        return max(bs.rank for bs in self.bases.values())

    def storage_bytes(self):
        total = sum(a.nbytes for a in self.leaf_diag.values())
        total += sum(a.nbytes for a in self.leaf_offdiag.values())
        total += sum(bs.U_S.nbytes + bs.U_R.nbytes for bs in self.bases.values())
        total += sum(a.nbytes for a in self.couplings.values())
        return total

    def scale_estimate(self):
        """Cheap upper-level magnitude estimate of the represented matrix.

        The largest diagonal-block entry is a lower bound on the spectral
        norm of a symmetric matrix and serves as the relative scale for
        absolute drop tolerances during factorization.
        """
        org = self.origin()
        if org._scale0 < 0.0:
            vals = [float(np.max(np.abs(b))) for b in org.leaf_diag.values() if b.size]
            org._scale0 = max(vals) if vals else 0.0
        return org._scale0 + abs(self.shift - org.shift)

    def copy(self):
        """Independent replica (deep copies of all numeric payload)."""
        return RankStructuredMatrix(
            fmt=self.fmt,
            tree=self.tree,
            structure=self.structure,
            eps=self.eps,
            leaf_diag={k: v.copy() for k, v in self.leaf_diag.items()},
            leaf_offdiag={k: v.copy() for k, v in self.leaf_offdiag.items()},
            bases=dict(self.bases),
            couplings=dict(self.couplings),
            shift=self.shift,
        )

    # --- skeleton caches shared across shifts -------------------------------
    def skeleton_diag(self, i):
        """[U_R U_S]^T (leaf_diag_i) [U_R U_S] for the current shift.

        The rotation of the unshifted block is cached on the origin object;
        a diagonal shift commutes with the orthogonal congruence.
        """
        org = self.origin()
        got = org._skel_diag.get(i)
        if got is None:
            key = (org.tree.depth, i)
            Q = org.bases[key].square() if key in org.bases else None
            base = org.leaf_diag[i]
            got = base if Q is None else Q.T @ base @ Q
            org._skel_diag[i] = got
        delta = self.shift - org.shift
        if delta == 0.0:
            return got.copy()
        return got - delta * np.eye(got.shape[0])

    def skeleton_offdiag(self, i, j):
        org = self.origin()
        got = org._skel_offdiag.get((i, j))
        if got is None:
            L = org.tree.depth
            Qi = org.bases[(L, i)].square()
            Qj = org.bases[(L, j)].square()
            got = Qi.T @ org.leaf_offdiag[(i, j)] @ Qj
            org._skel_offdiag[(i, j)] = got
        return got.copy()


def shift_diagonal(H, mu):
    """Matrix representing H - mu*I; only leaf diagonal blocks change."""
    return RankStructuredMatrix(
        fmt=H.fmt,
        tree=H.tree,
        structure=H.structure,
        eps=H.eps,
        leaf_diag={i: blk - mu * np.eye(blk.shape[0]) for i, blk in H.leaf_diag.items()},
        leaf_offdiag=H.leaf_offdiag,
        bases=H.bases,
        couplings=H.couplings,
        shift=H.shift + mu,
        _origin=H.origin(),
    )


def _leaf_concat(kernel, tree, st, i):
    I = tree.indices(tree.depth, i)
    cols = []
    for j in construction_partners(tree, st, tree.depth, i):
        cols.append(kernel.block(I, tree.indices(tree.depth, j)))
    if not cols:
        return np.zeros((len(I), 0))
    return np.hstack(cols)


def build_leaf_basis(kernel, tree, structure, i, eps):
    """Skeleton/redundant split of the row concatenation of all admissible
    leaf blocks of cluster i."""
    return rrqr_truncated(_leaf_concat(kernel, tree, structure, i), eps)


def build_transfer(kernel, tree, structure, level, i, eps, expanded):
    """Transfer-matrix split for a non-leaf cluster.

    The row concatenation of the level's admissible blocks is projected onto
    the children's expanded skeletons (given in ``expanded``), so the result
    lives in children-skeleton coordinates and keeps the basis nested.
    """
    (lc, c1), (_, c2) = tree.children(level, i)
    e1 = expanded[(lc, c1)]
    e2 = expanded[(lc, c2)]
    I1 = tree.indices(lc, c1)
    I2 = tree.indices(lc, c2)
    cols = []
    for j in construction_partners(tree, structure, level, i):
        J = tree.indices(level, j)
        for s in range(0, len(J), COLUMN_SLAB):
            Js = J[s : s + COLUMN_SLAB]
            top = e1.T @ kernel.block(I1, Js)
            bot = e2.T @ kernel.block(I2, Js)
            cols.append(np.vstack([top, bot]))
    rows = e1.shape[1] + e2.shape[1]
    Z = np.hstack(cols) if cols else np.zeros((rows, 0))
    return rrqr_truncated(Z, eps)


def _expand(tree, bases, level, i, cache):
    """Leaf-coordinate column basis of cluster (level, i), composed through
    transfer matrices."""
    key = (level, i)
    got = cache.get(key)
    if got is not None:
        return got
    bs = bases[key]
    if tree.is_leaf_level(level):
        out = bs.U_S
    else:
        (lc, c1), (_, c2) = tree.children(level, i)
        e1 = _expand(tree, bases, lc, c1, cache)
        e2 = _expand(tree, bases, lc, c2, cache)
        r1 = e1.shape[1]
        out = np.vstack([e1 @ bs.U_S[:r1], e2 @ bs.U_S[r1:]])
    cache[key] = out
    return out


def _coupling_block(kernel, tree, level, i, j, ei, ej):
    I = tree.indices(level, i)
    J = tree.indices(level, j)
    W = np.zeros((len(I), ej.shape[1]))
    for s in range(0, len(J), COLUMN_SLAB):
        Js = J[s : s + COLUMN_SLAB]
        W += kernel.block(I, Js) @ ej[s : s + COLUMN_SLAB]
    return ei.T @ W


def build_couplings(kernel, tree, structure, bases):
    """Skeleton coupling matrices for every classified low-rank pair."""
    cache = {}
    couplings = {}
    for level in structure.lowrank_levels():
        for i, j in structure.lowrank_at(level):
            ei = _expand(tree, bases, level, i, cache)
            ej = _expand(tree, bases, level, j, cache)
            couplings[(level, i, j)] = _coupling_block(kernel, tree, level, i, j, ei, ej)
    return couplings


def construct(kernel, tree, structure, eps):
    """Build the rank-structured approximation of a symmetric kernel matrix.

    The format is deduced from the structure: flat single-level layout gives
    BLR2, weak nested layout HSS, strong admissibility H2.
    """
    if eps <= 0:
        raise ConfigError("eps must be positive")
    if structure.kind == "flat":
        fmt = "blr2"
    elif structure.kind == "weak":
        fmt = "hss" if len(structure.lowrank_levels()) > 1 else "blr2"
    else:
        fmt = "h2"

    L = tree.depth
    leaf_diag = {}
    for i in range(tree.num_clusters(L)):
        I = tree.indices(L, i)
        leaf_diag[i] = kernel.block(I, I) if len(I) else np.zeros((0, 0))

    leaf_offdiag = {}
    for i, j in structure.dense:
        leaf_offdiag[(i, j)] = kernel.block(tree.indices(L, i), tree.indices(L, j))

    bases = {}
    if L > 0:
        for i in range(tree.num_clusters(L)):
            bases[(L, i)] = build_leaf_basis(kernel, tree, structure, i, eps)
        if structure.kind != "flat":
            expanded = {}
            cache = {}
            for i in range(tree.num_clusters(L)):
                expanded[(L, i)] = bases[(L, i)].U_S
            for level in range(L - 1, 0, -1):
                for i in range(tree.num_clusters(level)):
                    bs = build_transfer(kernel, tree, structure, level, i, eps, expanded)
                    bases[(level, i)] = bs
                    expanded[(level, i)] = _expand(tree, bases, level, i, cache)

    couplings = build_couplings(kernel, tree, structure, bases)
    return RankStructuredMatrix(
        fmt=fmt,
        tree=tree,
        structure=structure,
        eps=eps,
        leaf_diag=leaf_diag,
        leaf_offdiag=leaf_offdiag,
        bases=bases,
        couplings=couplings,
    )


def reconstruct_dense(H, cap=None):
    """Dense realization of the represented matrix (including any shift).

    Desk-scale validation path; raises OracleTooLarge above the cap
    (default 4096, H2SPEC_ORACLE_CAP environment override).
    """
    n = H.n
    if cap is None:
        cap = _oracle_cap()
    if n > cap:
        raise OracleTooLarge(n, cap)
    tree = H.tree
    A = np.zeros((n, n))
    L = tree.depth
    for i, blk in H.leaf_diag.items():
        s, e = tree.index_range(L, i)
        A[s:e, s:e] = blk
    for (i, j), blk in H.leaf_offdiag.items():
        si, ei = tree.index_range(L, i)
        sj, ej = tree.index_range(L, j)
        A[si:ei, sj:ej] = blk
        A[sj:ej, si:ei] = blk.T
    cache = {}
    for (level, i, j), S in H.couplings.items():
        ei = _expand(tree, H.bases, level, i, cache)
        ej = _expand(tree, H.bases, level, j, cache)
        blk = ei @ S @ ej.T
        si, se = tree.index_range(level, i)
        sj, sje = tree.index_range(level, j)
        A[si:se, sj:sje] = blk
        A[sj:sje, si:se] = blk.T
    return A


def save_matrix_file(path, A):
    """Binary symmetric-matrix format: ASCII 'n' header line, then the
    lower triangle in row-major order as little-endian float64."""
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    with open(path, "wb") as fh:
        fh.write(f"{n}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(A[np.tril_indices(n)], dtype="<f8").tobytes())


def load_matrix_file(path):
    """Read the symmetric-matrix format written by save_matrix_file."""
    with open(path, "rb") as fh:
        header = fh.readline()
        try:
            n = int(header.decode("ascii").strip())
        except ValueError as exc:
            raise ConfigError(f"{path}: bad matrix header {header!r}") from exc
        payload = fh.read()
    want = n * (n + 1) // 2
    data = np.frombuffer(payload, dtype="<f8")
    if data.size != want:
        raise ConfigError(f"{path}: expected {want} lower-triangle doubles, got {data.size}")
    A = np.zeros((n, n))
    A[np.tril_indices(n)] = data
    A = A + np.tril(A, -1).T
    return A


def matrix_kernel(A):
    """Kernel view of an explicit dense symmetric matrix."""
    return DenseKernel(A)
