"""Generalized LDL^T factorization of rank-structured symmetric matrices.

Redundant (non-skeleton) coordinates are eliminated level by level from the
leaves up; surviving skeleton blocks merge into their parents and a dense
LDL^T finishes the root. Every step is an orthogonal congruence or a
symmetric elimination, so the sign counts of the collected pivot blocks give
the inertia of the represented matrix.

Strong-admissibility formats create fill-in between redundant and live
coordinates. Just before a cluster is eliminated, the redundant-side content
of its fill blocks is compressed and absorbed by extending the cluster's
skeleton basis (rank growth only; existing couplings are zero-padded, never
rotated), and the residue below an absolute drop tolerance is discarded.
Weak-admissibility formats generate no fill and skip the machinery entirely.
"""

from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.linalg import qr as _qr
from scipy.linalg import solve_triangular

from .compress import shift_diagonal
from .dense import inertia_of, ldl_symmetric
from .errors import Breakdown, InertiaUnstable, ShiftHitEigenvalue

RETRY_DELTA = 1e-11
MAX_SHIFT_RETRIES = 3


@dataclass
class InertiaCount:
    """Signature of a symmetric matrix: eigenvalue counts by sign."""

    neg: int
    zero: int
    pos: int

    @property
    def n(self):
        return self.neg + self.zero + self.pos

    def as_tuple(self):
        return (self.neg, self.zero, self.pos)


class _Cluster:
    """Per-cluster split bookkeeping during elimination.

    Split coordinates are ordered [redundant block, skeleton block]; the
    skeleton block keeps original directions first and recompression extras
    appended, so coupling matrices pad with zero rows instead of rotating.
    """

    __slots__ = ("m", "mR", "rS", "r_orig", "Q")

    def __init__(self, m, mR, rS, r_orig, Q):
        self.m = m
        self.mR = mR
        self.rS = rS
        self.r_orig = r_orig
        self.Q = Q


def _absolute_split(G, tol):
    """Column-pivoted QR split of G with an absolute Frobenius drop bound.

    Returns (rank, U_keep, U_drop, dropped_norm): the leading `rank`
    orthogonal directions capture G up to `dropped_norm <= tol`.
    """
    Q, R, _ = _qr(G, mode="full", pivoting=True)
    k = min(G.shape)
    row_sq = np.sum(R[:k] ** 2, axis=1)
    tails = np.sqrt(np.concatenate([np.cumsum(row_sq[::-1])[::-1], [0.0]]))
    rank = int(np.searchsorted(-tails, -tol))
    dropped = float(tails[rank])
    return rank, Q[:, :rank], Q[:, rank:], dropped


@dataclass
class GldlFactorization:
    """Result of a generalized LDL^T run: inertia plus optional factors."""

    n: int
    shift: float
    inertia_counts: InertiaCount
    stats: dict = field(default_factory=dict)
    _records: list = None
    _root_res: object = None

    @property
    def kept(self):
        return self._records is not None

    def reconstruct(self):
        """Dense matrix the recorded factors represent (shift included).

        Walks the elimination top-down, reassembling each level from its
        pivot blocks, elimination columns, and the coarser-level remainder,
        then undoing the per-cluster orthogonal congruences. Requires
        keep_factors=True at factorization time.
        """
        if not self.kept:
            raise ValueError("factors were not kept; factor with keep_factors=True")
        res = self._root_res
        if res is None or res.n == 0:
            prev = np.zeros((0, 0))
        else:
            B = res.L @ res.D @ res.L.T
            inv = np.argsort(res.perm)
            prev = B[np.ix_(inv, inv)]
        for rec in reversed(self._records):
            order = rec["order"]
            offs = rec["offs"]
            msz = rec["m"]
            mR = rec["mR"]
            smap = rec["s_map"]
            N = sum(msz[i] for i in order)
            M = np.zeros((N, N))
            for i in order:
                ri = msz[i] - mR[i]
                if ri == 0:
                    continue
                si = offs[i] + mR[i]
                for j in order:
                    rj = msz[j] - mR[j]
                    if rj == 0:
                        continue
                    sj = offs[j] + mR[j]
                    M[si : si + ri, sj : sj + rj] = prev[
                        smap[i] : smap[i] + ri, smap[j] : smap[j] + rj
                    ]
            G = np.eye(N)
            for i, w, res_i, xmap in rec["elims"]:
                c0 = offs[i]
                for t, Xf in xmap.items():
                    G[offs[t] : offs[t] + msz[t], c0 : c0 + w] = Xf
                inv = np.argsort(res_i.perm)
                G[c0 : c0 + w, c0 : c0 + w] = res_i.L[inv, :]
                M[c0 : c0 + w, c0 : c0 + w] = res_i.D
            M = G @ M @ G.T
            Qs = rec["Q"]
            for i in order:
                seg = slice(offs[i], offs[i] + msz[i])
                M[seg, :] = Qs[i] @ M[seg, :]
            for j in order:
                seg = slice(offs[j], offs[j] + msz[j])
                M[:, seg] = M[:, seg] @ Qs[j].T
            prev = M
        return prev

    def debug_dump(self):
        """Structural summary of the run for inspection and logging."""
        out = {
            "n": self.n,
            "shift": self.shift,
            "inertia": self.inertia_counts.as_tuple(),
            "stats": dict(self.stats),
            "kept": self.kept,
        }
        if self.kept:
            levels = []
            for rec in self._records:
                levels.append(
                    {
                        "level": rec["level"],
                        "clusters": len(rec["order"]),
                        "eliminated": sum(w for _, w, _, _ in rec["elims"]),
                        "skeleton": sum(rec["m"][i] - rec["mR"][i] for i in rec["order"]),
                    }
                )
            out["levels"] = levels
            out["root_dim"] = 0 if self._root_res is None else self._root_res.n
        return out


class _Engine:
    def __init__(self, H, keep_factors):
        self.H = H
        self.tree = H.tree
        self.st = H.structure
        self.keep = keep_factors
        self.neg = 0
        self.zero = 0
        self.pos = 0
        self.records = [] if keep_factors else None
        self.stats = {
            "fill_blocks": 0,
            "recompressions": 0,
            "rank_added": 0,
            "dropped_fro": 0.0,
            "max_front": 0,
        }
        self.drop_tol = H.eps * H.scale_estimate()
        self.root_res = None

    # ------------------------------------------------------------------ run
    def run(self):
        tree = self.tree
        if tree.depth == 0:
            self._factor_root(self.H.skeleton_diag(0))
        else:
            self._assemble_leaf()
            level = tree.depth
            while True:
                self._process_level(level)
                if self.st.kind == "flat":
                    root = self._merge_flat()
                    break
                if level == 1:
                    root = self._merge_pairwise(1, to_root=True)
                    break
                self._merge_pairwise(level, to_root=False)
                level -= 1
            self._factor_root(root)
        counts = InertiaCount(self.neg, self.zero, self.pos)
        return GldlFactorization(
            n=tree.n,
            shift=self.H.shift,
            inertia_counts=counts,
            stats=self.stats,
            _records=self.records,
            _root_res=self.root_res,
        )

    # ------------------------------------------------------------- assembly
    def _assemble_leaf(self):
        tree = self.tree
        L = tree.depth
        self.cl = {}
        self.diag = {}
        self.offd = {}
        self.coup = {}
        self.fill = {}
        self.adj_offd = defaultdict(set)
        self.adj_fill = defaultdict(set)
        self.adj_coup = defaultdict(set)
        for i in range(tree.num_clusters(L)):
            m = tree.size(L, i)
            if m == 0:
                self.cl[i] = _Cluster(0, 0, 0, 0, np.zeros((0, 0)))
                self.diag[i] = np.zeros((0, 0))
                continue
            bs = self.H.bases[(L, i)]
            self.cl[i] = _Cluster(m, m - bs.rank, bs.rank, bs.rank, bs.square())
            self.diag[i] = self.H.skeleton_diag(i)
        for key in self.st.dense:
            self.offd[key] = self.H.skeleton_offdiag(*key)
            self.adj_offd[key[0]].add(key)
            self.adj_offd[key[1]].add(key)
        for key in self.st.lowrank_at(L):
            self.coup[key] = self.H.couplings[(L,) + key].copy()
            self.adj_coup[key[0]].add(key)
            self.adj_coup[key[1]].add(key)

    # ---------------------------------------------------------- elimination
    def _process_level(self, level):
        elims = []
        order = list(range(self.tree.num_clusters(level)))
        for i in order:
            if self.cl[i].m == 0:
                continue
            self._recompress(i, elims)
            self._factor_cluster(i, elims)
        if self.keep:
            offs = {}
            pos = 0
            for i in order:
                offs[i] = pos
                pos += self.cl[i].m
            self.records.append(
                {
                    "level": level,
                    "order": order,
                    "m": {i: self.cl[i].m for i in order},
                    "mR": {i: self.cl[i].mR for i in order},
                    "offs": offs,
                    "Q": {i: self.cl[i].Q for i in order},
                    "elims": elims,
                    "s_map": None,
                }
            )
        # fills on classified pairs are fully absorbed now; merge them into
        # the coupling content so only ancestor-covered fills flow upward
        lowrank = set(self.st.lowrank_at(level))
        for key in list(self.fill):
            if key in lowrank:
                a, b = key
                F = self.fill.pop(key)
                self.coup[key] = self.coup[key] + F[self.cl[a].mR :, self.cl[b].mR :]
                self.adj_fill[a].discard(key)
                self.adj_fill[b].discard(key)

    def _recompress(self, i, elims):
        cl = self.cl[i]
        mR = cl.mR
        keys = self.adj_fill[i]
        if mR == 0 or not keys:
            return
        pieces = []
        for k in keys:
            F = self.fill[k]
            part = F[:mR, :] if k[0] == i else F[:, :mR].T
            if np.any(part):
                pieces.append(part)
        if pieces:
            G = np.hstack(pieces)
            t, Us, Ur, dropped = _absolute_split(G, self.drop_tol)
            self.stats["recompressions"] += 1
            self.stats["dropped_fro"] += dropped
            if t:
                rS = cl.rS
                nR = mR - t
                T = np.zeros((cl.m, cl.m))
                T[:nR, :mR] = Ur.T
                T[nR : nR + rS, mR:] = np.eye(rS)
                T[nR + rS :, :mR] = Us.T
                self.diag[i] = T @ self.diag[i] @ T.T
                for store, ks in ((self.offd, self.adj_offd[i]), (self.fill, self.adj_fill[i])):
                    for k in ks:
                        if k[0] == i:
                            store[k] = T @ store[k]
                        else:
                            store[k] = store[k] @ T.T
                for k in self.adj_coup[i]:
                    if k[0] == i:
                        self.coup[k] = np.pad(self.coup[k], ((0, t), (0, 0)))
                    else:
                        self.coup[k] = np.pad(self.coup[k], ((0, 0), (0, t)))
                if self.keep:
                    for _j, _w, _res, xmap in elims:
                        if i in xmap:
                            xmap[i] = T @ xmap[i]
                cl.Q = cl.Q @ T.T
                cl.mR = nR
                cl.rS = rS + t
                self.stats["rank_added"] += t
        # everything left in the redundant rows/columns is below the drop
        # tolerance (or was just rotated out); discard it
        nR = cl.mR
        for k in keys:
            if k[0] == i:
                self.fill[k][:nR, :] = 0.0
            else:
                self.fill[k][:, :nR] = 0.0

    def _factor_cluster(self, i, elims):
        cl = self.cl[i]
        mR = cl.mR
        if mR == 0:
            return
        D = self.diag[i]
        self.stats["max_front"] = max(self.stats["max_front"], cl.m)
        try:
            res = ldl_symmetric(D[:mR, :mR])
        except Breakdown as exc:
            raise ShiftHitEigenvalue(self.H.shift) from exc
        c = inertia_of(res)
        self.neg += c[0]
        self.zero += c[1]
        self.pos += c[2]

        partners = sorted({k[1] if k[0] == i else k[0] for k in self.adj_offd[i]})
        segs = [D[mR:, :mR]]
        for j in partners:
            k = (i, j) if i < j else (j, i)
            arr = self.offd[k]
            segs.append(arr[:mR, :].T if k[0] == i else arr[:, :mR])
        Ball = np.vstack(segs)
        if Ball.shape[0]:
            Wall = solve_triangular(
                res.L, Ball[:, res.perm].T, lower=True, unit_diagonal=True
            ).T
            Xall = np.linalg.solve(res.D, Wall.T).T
        else:
            Wall = Xall = np.zeros((0, mR))
        W = {}
        X = {}
        pos = cl.rS
        W[i], X[i] = Wall[:pos], Xall[:pos]
        for j in partners:
            end = pos + self.cl[j].m
            W[j], X[j] = Wall[pos:end], Xall[pos:end]
            pos = end

        D[mR:, mR:] -= X[i] @ W[i].T
        for j in partners:
            self.diag[j] -= X[j] @ W[j].T
            k = (i, j) if i < j else (j, i)
            if k[0] == i:
                self.offd[k][mR:, :] -= X[i] @ W[j].T
            else:
                self.offd[k][:, mR:] -= X[j] @ W[i].T
        for j, k2 in combinations(partners, 2):
            key = (j, k2)
            upd = X[j] @ W[k2].T
            if key in self.offd:
                self.offd[key] -= upd
            else:
                F = self.fill.get(key)
                if F is None:
                    F = np.zeros((self.cl[j].m, self.cl[k2].m))
                    self.fill[key] = F
                    self.adj_fill[j].add(key)
                    self.adj_fill[k2].add(key)
                    self.stats["fill_blocks"] += 1
                F -= upd

        D[:mR, :] = 0.0
        D[:, :mR] = 0.0
        for k in self.adj_offd[i]:
            if k[0] == i:
                self.offd[k][:mR, :] = 0.0
            else:
                self.offd[k][:, :mR] = 0.0

        if self.keep:
            xmap = {}
            Xi = np.zeros((cl.m, mR))
            Xi[mR:] = X[i]
            xmap[i] = Xi
            for j in partners:
                xmap[j] = X[j].copy()
            elims.append((i, mR, res, xmap))

    # ---------------------------------------------------------------- merge
    def _pair_content(self, key):
        """Skeleton-to-skeleton content of a pair after its level finished."""
        if key in self.coup:
            return self.coup[key]
        a, b = key
        if key in self.offd:
            return self.offd[key][self.cl[a].mR :, self.cl[b].mR :]
        if key in self.fill:
            return self.fill[key][self.cl[a].mR :, self.cl[b].mR :]
        return None

    def _merge_flat(self):
        order = list(range(self.tree.num_clusters(self.tree.depth)))
        offs = {}
        pos = 0
        for i in order:
            offs[i] = pos
            pos += self.cl[i].rS
        R = np.zeros((pos, pos))
        for i in order:
            cl = self.cl[i]
            R[offs[i] : offs[i] + cl.rS, offs[i] : offs[i] + cl.rS] = self.diag[i][
                cl.mR :, cl.mR :
            ]
        for key in set(self.coup) | set(self.offd) | set(self.fill):
            C = self._pair_content(key)
            if C is None or C.size == 0:
                continue
            a, b = key
            sa, sb = offs[a], offs[b]
            R[sa : sa + C.shape[0], sb : sb + C.shape[1]] = C
            R[sb : sb + C.shape[1], sa : sa + C.shape[0]] = C.T
        if self.keep:
            self.records[-1]["s_map"] = offs
        return R

    def _merge_pairwise(self, level, to_root):
        tree = self.tree
        Cp = tree.num_clusters(level - 1)
        smap = {}
        parent_off = {}
        pos = 0
        for p in range(Cp):
            parent_off[p] = pos
            smap[2 * p] = pos
            smap[2 * p + 1] = pos + self.cl[2 * p].rS
            pos += self.cl[2 * p].rS + self.cl[2 * p + 1].rS
        if self.keep:
            self.records[-1]["s_map"] = smap

        raw_diag = {}
        for p in range(Cp):
            c1, c2 = 2 * p, 2 * p + 1
            s1, s2 = self.cl[c1].rS, self.cl[c2].rS
            R = np.zeros((s1 + s2, s1 + s2))
            R[:s1, :s1] = self.diag[c1][self.cl[c1].mR :, self.cl[c1].mR :]
            R[s1:, s1:] = self.diag[c2][self.cl[c2].mR :, self.cl[c2].mR :]
            C = self._pair_content((c1, c2))
            if C is not None and C.size:
                R[:s1, s1:] = C
                R[s1:, :s1] = C.T
            raw_diag[p] = R

        raw_pair = {}
        for key in set(self.coup) | set(self.offd) | set(self.fill):
            a, b = key
            p, q = a >> 1, b >> 1
            if p == q:
                continue
            C = self._pair_content(key)
            if C is None or C.size == 0:
                continue
            dest = raw_pair.get((p, q))
            if dest is None:
                dest = np.zeros((raw_diag[p].shape[0], raw_diag[q].shape[0]))
                raw_pair[(p, q)] = dest
            ro = smap[a] - parent_off[p]
            co = smap[b] - parent_off[q]
            dest[ro : ro + C.shape[0], co : co + C.shape[1]] += C

        if to_root:
            return raw_diag[0]

        newcl = {}
        ndiag = {}
        plevel = level - 1
        for p in range(Cp):
            m_p = raw_diag[p].shape[0]
            if m_p == 0:
                newcl[p] = _Cluster(0, 0, 0, 0, np.zeros((0, 0)))
                ndiag[p] = np.zeros((0, 0))
                continue
            Q, rk = self._parent_split(level, p)
            newcl[p] = _Cluster(m_p, m_p - rk, rk, rk, Q)
            ndiag[p] = Q.T @ raw_diag[p] @ Q

        noffd = {}
        nfill = {}
        adj_offd = defaultdict(set)
        adj_fill = defaultdict(set)
        adj_coup = defaultdict(set)
        deferred = set(self.st.deferred_at(plevel))
        for key in deferred:
            p, q = key
            raw = raw_pair.pop(key, None)
            if raw is None:
                raw = np.zeros((newcl[p].m, newcl[q].m))
            noffd[key] = newcl[p].Q.T @ raw @ newcl[q].Q
            adj_offd[p].add(key)
            adj_offd[q].add(key)
        for key, raw in raw_pair.items():
            p, q = key
            nfill[key] = newcl[p].Q.T @ raw @ newcl[q].Q
            adj_fill[p].add(key)
            adj_fill[q].add(key)
            self.stats["fill_blocks"] += 1

        ncoup = {}
        for key in self.st.lowrank_at(plevel):
            ncoup[key] = self.H.couplings[(plevel,) + key].copy()
            adj_coup[key[0]].add(key)
            adj_coup[key[1]].add(key)

        self.cl = newcl
        self.diag = ndiag
        self.offd = noffd
        self.coup = ncoup
        self.fill = nfill
        self.adj_offd = adj_offd
        self.adj_fill = adj_fill
        self.adj_coup = adj_coup

    def _parent_split(self, level, p):
        """Parent basis split over merged child skeletons.

        Extra directions added to a child's skeleton by recompression are not
        covered by the stored transfer basis; they embed as zero rows in it
        and as identity columns classified redundant, so their content is
        eliminated (after any needed re-absorption) at the parent level.
        """
        c1 = self.cl[2 * p]
        c2 = self.cl[2 * p + 1]
        bs = self.H.bases[(level - 1, p)]
        e1 = c1.rS - c1.r_orig
        e2 = c2.rS - c2.r_orig
        if e1 == 0 and e2 == 0:
            return bs.square(), bs.rank
        m_p = c1.rS + c2.rS
        rk = bs.rank
        nR_h = c1.r_orig + c2.r_orig - rk
        pos_orig = list(range(c1.r_orig)) + list(range(c1.rS, c1.rS + c2.r_orig))
        pos_extra = list(range(c1.r_orig, c1.rS)) + list(range(c1.rS + c2.r_orig, m_p))
        Q = np.zeros((m_p, m_p))
        if nR_h:
            Q[np.ix_(pos_orig, range(nR_h))] = bs.U_R
        if pos_extra:
            Q[np.ix_(pos_extra, range(nR_h, nR_h + len(pos_extra)))] = np.eye(len(pos_extra))
        if rk:
            Q[np.ix_(pos_orig, range(m_p - rk, m_p))] = bs.U_S
        return Q, rk

    # ----------------------------------------------------------------- root
    def _factor_root(self, M):
        if M.size == 0:
            return
        try:
            res = ldl_symmetric(M)
        except Breakdown as exc:
            raise ShiftHitEigenvalue(self.H.shift) from exc
        c = inertia_of(res)
        self.neg += c[0]
        self.zero += c[1]
        self.pos += c[2]
        self.root_res = res


def generalized_ldl(H, keep_factors=False):
    """Inertia-revealing LDL^T of a rank-structured symmetric matrix.

    Raises ShiftHitEigenvalue when a pivot block is numerically singular,
    which means the represented matrix (shift included) is singular to
    working precision.
    """
    return _Engine(H, keep_factors).run()


def inertia(H, mu=0.0, max_retries=MAX_SHIFT_RETRIES):
    """Eigenvalue sign counts of H - mu*I.

    A shift that hits an eigenvalue is retried with a tiny relative
    perturbation; persistent singularity raises InertiaUnstable.
    """
    delta = RETRY_DELTA * max(1.0, abs(mu))
    m = mu
    last = None
    for _ in range(max_retries + 1):
        try:
            f = generalized_ldl(shift_diagonal(H, m) if m != 0.0 else H)
            if f.inertia_counts.zero:
                raise ShiftHitEigenvalue(m)
            return f.inertia_counts
        except ShiftHitEigenvalue as exc:
            last = exc
            m = m * (1.0 + delta) + delta
    raise InertiaUnstable(mu, max_retries + 1) from last
