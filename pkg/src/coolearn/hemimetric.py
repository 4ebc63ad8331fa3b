"""Weighted projection onto the r-bounded hemimetric polytope.

The polytope is the set of n x n matrices with zero diagonal, off-diagonal
entries in [0, r], and every directed triangle inequality
w[i,j] <= w[i,k] + w[k,j].  Symmetry is not required.

The solver minimizes sum_ij q[i,j] * (w[i,j] - target[i,j])^2 by dual
coordinate ascent over the triangle constraints (weighted triangle fixing).
Box constraints are enforced through clamped primal responses rather than
separate dual steps, so the iterate stays inside the box throughout.  Pairs
with weight 0 carry no objective; any feasible completion of them is optimal,
and the dual accounts for them as box-constrained slack coordinates.

After every sweep a feasible candidate is produced by completing the weight-0
pairs at their (clamped) targets lifted just far enough to stop triangles
from crushing observed pairs, then running a directed Floyd-Warshall repair.
Primal and dual values are recomputed from scratch each sweep; their gap
certifies the accuracy of the best candidate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from .core import JointWeights, id_to_pair, num_pairs

GAP_FLOOR = 1e-9  # gap below which a solve is considered exact


# ---------------------------------------------------------------------------
# pair-vector <-> matrix bridges


@lru_cache(maxsize=None)
def _pair_index_arrays(n: int) -> tuple[np.ndarray, np.ndarray]:
    rows = np.empty(num_pairs(n), dtype=np.int64)
    cols = np.empty(num_pairs(n), dtype=np.int64)
    for z in range(num_pairs(n)):
        rows[z], cols[z] = id_to_pair(z, n)
    return rows, cols


def matrix_from_weights(w: JointWeights, n: int) -> np.ndarray:
    """Spread the K = n^2 - n per-pair scalars into an n x n matrix (diag 0)."""
    if w.dim != 1 or w.num_problems != num_pairs(n):
        raise ValueError(f"expected ({num_pairs(n)}, 1) weights for n={n}, got {w.values.shape}")
    rows, cols = _pair_index_arrays(n)
    m = np.zeros((n, n))
    m[rows, cols] = w.values[:, 0]
    return m


def matrix_from_pair_values(vec: np.ndarray, n: int) -> np.ndarray:
    """Same spreading for a flat per-pair vector (weights, costs, ...)."""
    vec = np.asarray(vec, dtype=float).reshape(-1)
    if vec.shape[0] != num_pairs(n):
        raise ValueError(f"expected {num_pairs(n)} pair values for n={n}, got {vec.shape[0]}")
    rows, cols = _pair_index_arrays(n)
    m = np.zeros((n, n))
    m[rows, cols] = vec
    return m


def weights_from_matrix(m: np.ndarray, n: int) -> JointWeights:
    rows, cols = _pair_index_arrays(n)
    return JointWeights(np.asarray(m, dtype=float)[rows, cols].reshape(-1, 1))


# ---------------------------------------------------------------------------
# domain types


def satisfies_triangles(m: np.ndarray, tol: float = 1e-9) -> bool:
    """All directed triangle inequalities within an absolute tolerance."""
    m = np.asarray(m, dtype=float)
    two_hop = np.min(m[:, :, None] + m[None, :, :], axis=1)
    return bool(np.all(m <= two_hop + tol))


@dataclass
class HemimetricMatrix:
    """n x n matrix of pairwise dissimilarities in the r-bounded hemimetric set."""

    n: int
    values: np.ndarray
    r: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.n < 2 or self.values.shape != (self.n, self.n):
            raise ValueError(f"need an n x n matrix with n >= 2, got {self.values.shape}")
        if self.r <= 0:
            raise ValueError(f"r must be > 0, got {self.r}")
        if np.any(np.abs(np.diag(self.values)) > 1e-9):
            raise ValueError("diagonal must be zero")
        off = ~np.eye(self.n, dtype=bool)
        if np.any(self.values[off] < -1e-9) or np.any(self.values[off] > self.r + 1e-9):
            raise ValueError(f"off-diagonal entries must lie in [0, {self.r}]")
        if not satisfies_triangles(self.values, 1e-9):
            raise ValueError("triangle inequalities violated")

    @classmethod
    def _feasible_by_construction(cls, n: int, values: np.ndarray, r: float):
        # repair output is feasible by construction; skip the O(n^3) recheck
        m = object.__new__(cls)
        m.n = n
        m.values = values
        m.r = float(r)
        return m


@dataclass
class TriangleDuals:
    """Nonnegative multipliers: one per directed triangle (i, j, k), plus the
    box multipliers implied by the clamped responses at the final iterate."""

    triangle: np.ndarray  # (n, n, n), entry [i, j, k] for w[i,j] <= w[i,k] + w[k,j]
    box_upper: np.ndarray  # (n, n)
    box_lower: np.ndarray  # (n, n)


@dataclass
class SolverReport:
    """Feasible primal candidate plus the certificate bookkeeping of a solve."""

    primal: HemimetricMatrix
    dual_value: float
    primal_value: float
    gap: float
    sweeps: int
    wall_time: float
    converged: bool
    dual_history: np.ndarray
    _lam: np.ndarray = None
    _v: np.ndarray = None
    _q: np.ndarray = None
    _t: np.ndarray = None
    _isfree: np.ndarray = None

    @property
    def duals(self) -> TriangleDuals:
        """Triangle multipliers plus the box multipliers implied by the final
        clamped responses (computed on demand)."""
        r = self.primal.r
        q, t, v, isfree = self._q, self._t, self._v, self._isfree
        off = ~np.eye(self.primal.n, dtype=bool)
        invq = np.zeros_like(q)
        np.divide(1.0, q, out=invq, where=q > 0.0)
        x = np.where(isfree, self.primal.values, np.clip(t - v * invq, 0.0, r))
        box_upper = np.zeros_like(q)
        box_lower = np.zeros_like(q)
        at_upper = off & (x >= r)
        at_lower = off & (x <= 0.0)
        box_upper[at_upper] = np.maximum(0.0, (q * (t - r) - v)[at_upper])
        box_lower[at_lower] = np.maximum(0.0, (v - q * t)[at_lower])
        return TriangleDuals(self._lam, box_upper, box_lower)


def duality_gap(report: SolverReport) -> float:
    """Primal minus dual value; nonnegative by weak duality."""
    return report.primal_value - report.dual_value


# ---------------------------------------------------------------------------
# kernels


@njit(cache=True, nogil=True)
def _fw_inplace(d):
    n = d.shape[0]
    for k in range(n):
        for i in range(n):
            dik = d[i, k]
            for j in range(n):
                alt = dik + d[k, j]
                if alt < d[i, j]:
                    d[i, j] = alt


@njit(cache=True, nogil=True, inline="always")
def _resp(q, invq, fe, t, vv, s, r):
    # right-limit response of one edge at shifted dual value vv; s is the sign
    # with which the edge's dual moves as the step grows (tie direction at 0)
    if not fe:
        x = t - vv * invq
        if x < 0.0:
            return 0.0
        if x > r:
            return r
        return x
    if vv > 0.0:
        return 0.0
    if vv < 0.0:
        return r
    return 0.0 if s > 0.0 else r


@njit(cache=True, nogil=True)
def _sweep(q, invq, isfree, t, v, w, lam, r):
    """One lexicographic pass of exact coordinate ascent over all triangles."""
    n = q.shape[0]
    bp = np.empty(6)
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            for k in range(n):
                if k == i or k == j:
                    continue
                lam0 = lam[i, j, k]
                qa = q[i, j]
                qb = q[i, k]
                qc = q[k, j]
                ia = invq[i, j]
                ib = invq[i, k]
                ic = invq[k, j]
                fa = isfree[i, j]
                fb = isfree[i, k]
                fc = isfree[k, j]
                ta = t[i, j]
                tb = t[i, k]
                tc = t[k, j]
                va = v[i, j]
                vb = v[i, k]
                vc = v[k, j]

                # constraint value if the multiplier were removed entirely
                d0 = -lam0
                phi = (
                    _resp(qa, ia, fa, ta, va + d0, 1.0, r)
                    - _resp(qb, ib, fb, tb, vb - d0, -1.0, r)
                    - _resp(qc, ic, fc, tc, vc - d0, -1.0, r)
                )
                if phi <= 0.0:
                    dstar = d0
                    if lam0 == 0.0:
                        continue
                else:
                    # collect response breakpoints beyond d0, ascending
                    m = 0
                    if fa:
                        cand = -va
                        if cand > d0:
                            bp[m] = cand
                            m += 1
                    else:
                        cand = qa * (ta - r) - va
                        if cand > d0:
                            bp[m] = cand
                            m += 1
                        cand = qa * ta - va
                        if cand > d0:
                            bp[m] = cand
                            m += 1
                    if fb:
                        cand = vb
                        if cand > d0:
                            bp[m] = cand
                            m += 1
                    else:
                        cand = vb - qb * (tb - r)
                        if cand > d0:
                            bp[m] = cand
                            m += 1
                        cand = vb - qb * tb
                        if cand > d0:
                            bp[m] = cand
                            m += 1
                    if fc:
                        cand = vc
                        if cand > d0:
                            bp[m] = cand
                            m += 1
                    else:
                        cand = vc - qc * (tc - r)
                        if cand > d0:
                            bp[m] = cand
                            m += 1
                        cand = vc - qc * tc
                        if cand > d0:
                            bp[m] = cand
                            m += 1
                    for a_ in range(1, m):
                        key = bp[a_]
                        b_ = a_ - 1
                        while b_ >= 0 and bp[b_] > key:
                            bp[b_ + 1] = bp[b_]
                            b_ -= 1
                        bp[b_ + 1] = key

                    cur = d0
                    phicur = phi
                    dstar = d0
                    found = False
                    for seg in range(m + 1):
                        if seg < m:
                            seg_end = bp[seg]
                            mid = 0.5 * (cur + seg_end)
                        else:
                            seg_end = cur + 1.0
                            mid = cur + 1.0
                        # slope of phi on this segment: unclamped weighted edges
                        slope = 0.0
                        if not fa:
                            u = ta - (va + mid) * ia
                            if 0.0 < u < r:
                                slope -= ia
                        if not fb:
                            u = tb - (vb - mid) * ib
                            if 0.0 < u < r:
                                slope -= ib
                        if not fc:
                            u = tc - (vc - mid) * ic
                            if 0.0 < u < r:
                                slope -= ic
                        if slope < 0.0:
                            droot = cur - phicur / slope
                            if seg == m or droot <= seg_end:
                                dstar = droot
                                found = True
                                break
                        if seg == m:
                            dstar = cur
                            found = True
                            break
                        phinext = (
                            _resp(qa, ia, fa, ta, va + seg_end, 1.0, r)
                            - _resp(qb, ib, fb, tb, vb - seg_end, -1.0, r)
                            - _resp(qc, ic, fc, tc, vc - seg_end, -1.0, r)
                        )
                        if phinext <= 0.0:
                            dstar = seg_end
                            found = True
                            break
                        cur = seg_end
                        phicur = phinext
                    if not found:
                        dstar = cur

                if dstar == 0.0:
                    continue
                newlam = lam0 + dstar
                if newlam < 0.0:
                    newlam = 0.0
                lam[i, j, k] = newlam
                va += dstar
                vb -= dstar
                vc -= dstar
                v[i, j] = va
                v[i, k] = vb
                v[k, j] = vc
                # refresh the stored responses of the touched weighted edges
                if not fa:
                    w[i, j] = _resp(qa, ia, fa, ta, va, 1.0, r)
                if not fb:
                    w[i, k] = _resp(qb, ib, fb, tb, vb, -1.0, r)
                if not fc:
                    w[k, j] = _resp(qc, ic, fc, tc, vc, -1.0, r)


@njit(cache=True, nogil=True)
def _lift_free(w, isfree, r):
    """Raise weight-0 entries just enough that no triangle forces a
    shortest-path crush of its left-hand side; lifted values are themselves
    protected in later passes.  Entries are only ever lifted, so repair paths
    lengthen and observed pairs are shielded."""
    n = w.shape[0]
    for _ in range(8):
        changed = False
        for i in range(n):
            for j in range(n):
                if j == i:
                    continue
                for k in range(n):
                    if k == i or k == j:
                        continue
                    need = w[i, j] - w[i, k] - w[k, j]
                    if need <= 0.0:
                        continue
                    fik = isfree[i, k]
                    fkj = isfree[k, j]
                    if fik and fkj:
                        add = 0.5 * need
                        a = w[i, k] + add
                        b = w[k, j] + add
                        if a > r:
                            b += a - r
                            a = r
                        if b > r:
                            a += b - r
                            if a > r:
                                a = r
                            b = r
                        if a > w[i, k]:
                            w[i, k] = a
                            changed = True
                        if b > w[k, j]:
                            w[k, j] = b
                            changed = True
                    elif fik:
                        val = w[i, j] - w[k, j]
                        if val > r:
                            val = r
                        if val > w[i, k]:
                            w[i, k] = val
                            changed = True
                    elif fkj:
                        val = w[i, j] - w[i, k]
                        if val > r:
                            val = r
                        if val > w[k, j]:
                            w[k, j] = val
                            changed = True
        if not changed:
            break


@njit(cache=True, nogil=True)
def _dual_value_half(q, invq, isfree, t, v, r):
    """Lagrangian dual of (1/2) sum q (w - t)^2 with triangles dualized and the
    box kept as domain; the reported dual is twice this."""
    n = q.shape[0]
    g = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            vv = v[i, j]
            if isfree[i, j]:
                if vv < 0.0:
                    g += r * vv
            else:
                x = t[i, j] - vv * invq[i, j]
                if x < 0.0:
                    x = 0.0
                elif x > r:
                    x = r
                diff = x - t[i, j]
                g += 0.5 * q[i, j] * diff * diff + vv * x
    return g


@njit(cache=True, nogil=True)
def _primal_value(q, t, w):
    n = q.shape[0]
    s = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            diff = w[i, j] - t[i, j]
            s += q[i, j] * diff * diff
    return s


@njit(cache=True, nogil=True)
def _solve(target, weights, r, tol, max_sweeps):
    """Full solve loop: coordinate-ascent sweeps with per-sweep repair and
    certificate bookkeeping.  Stops when the gap reaches tol, the dual and
    best primal stop moving, or max_sweeps runs out."""
    n = target.shape[0]
    q = np.zeros((n, n))
    invq = np.zeros((n, n))
    isfree = np.zeros((n, n), dtype=np.bool_)
    t = np.zeros((n, n))
    v = np.zeros((n, n))
    w = np.zeros((n, n))
    has_free = False
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            qq = weights[i, j]
            q[i, j] = qq
            t[i, j] = target[i, j]
            if qq > 0.0:
                invq[i, j] = 1.0 / qq
            else:
                isfree[i, j] = True
                has_free = True
            x = target[i, j]
            if x < 0.0:
                x = 0.0
            elif x > r:
                x = r
            w[i, j] = x
    lam = np.zeros((n, n, n))
    hist = np.empty(max_sweeps)
    best_w = w.copy()
    best_primal = np.inf
    dual_f = 0.0
    sweeps = 0
    # termination is by gap <= tol or sweep exhaustion only; an exact request
    # (tol 0) therefore grinds until the gap is identically zero or the
    # sweep budget runs out
    for s in range(1, max_sweeps + 1):
        sweeps = s
        _sweep(q, invq, isfree, t, v, w, lam, r)
        # minimal-lift completion: weight-0 pairs keep their (clamped) targets,
        # raised only where triangles would crush a held value
        cand = w.copy()
        if has_free:
            _lift_free(cand, isfree, r)
        _fw_inplace(cand)
        primal_f = _primal_value(q, t, cand)
        dual_f = 2.0 * _dual_value_half(q, invq, isfree, t, v, r)
        hist[s - 1] = dual_f
        if primal_f < best_primal:
            best_primal = primal_f
            best_w = cand
        if best_primal - dual_f <= tol:
            break
    return best_w, best_primal, dual_f, sweeps, lam, v, q, t, isfree, hist


# ---------------------------------------------------------------------------
# public operations


_warmed = False


def warmup() -> None:
    """Compile the solver kernels on a toy instance so that first-call jit
    time never pollutes measured projection wall times."""
    global _warmed
    if _warmed:
        return
    toy = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
    weights = np.ones((3, 3))
    np.fill_diagonal(weights, 0.0)
    project_hemimetric(toy, weights, 5.0, gap_tolerance=1.0, max_sweeps=2)
    _warmed = True


def fw_repair(m: np.ndarray, r: float) -> HemimetricMatrix:
    """Clamp into [0, r], zero the diagonal, then run directed all-pairs
    shortest paths.  Shortest paths only shrink entries, so the output stays in
    the box and satisfies every triangle inequality."""
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    if r <= 0:
        raise ValueError(f"r must be > 0, got {r}")
    out = np.clip(m, 0.0, r)
    np.fill_diagonal(out, 0.0)
    _fw_inplace(out)
    return HemimetricMatrix(m.shape[0], out, r)


def project_hemimetric(
    target: np.ndarray,
    weights: np.ndarray,
    r: float,
    gap_tolerance: float = 0.0,
    max_sweeps: int = 1000,
) -> SolverReport:
    """Weighted projection of `target` onto the r-bounded hemimetric polytope.

    Minimizes sum_{i != j} weights[i,j] * (w[i,j] - target[i,j])^2 and returns
    the best feasible candidate found, certified by the duality gap.  Weights
    must be nonnegative; weight-0 pairs are excluded from the objective and
    receive feasible completion values.  Sweeps stop when the gap reaches
    gap_tolerance or max_sweeps runs out, whichever comes first; the best
    candidate seen is returned either way, with its achieved gap.  A result
    counts as converged when its gap is within max(gap_tolerance, 1e-9), so a
    gap_tolerance of 0 demands an exact solve up to that resolution.
    """
    start = time.perf_counter()
    target = np.ascontiguousarray(target, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    n = target.shape[0]
    if target.shape != (n, n) or weights.shape != (n, n):
        raise ValueError("target and weights must both be n x n")
    if not np.all(np.isfinite(target)):
        raise ValueError("target entries must be finite")
    if r <= 0:
        raise ValueError(f"r must be > 0, got {r}")
    if gap_tolerance < 0:
        raise ValueError(f"gap_tolerance must be >= 0, got {gap_tolerance}")
    if weights.min() < 0:
        raise ValueError("negative weight on a constrained pair")
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be >= 1")

    best_w, best_primal, dual_f, sweeps, lam, v, q, t, isfree, hist = _solve(
        target, weights, float(r), float(gap_tolerance), max_sweeps
    )
    gap = best_primal - dual_f
    return SolverReport(
        primal=HemimetricMatrix._feasible_by_construction(n, best_w, r),
        dual_value=dual_f,
        primal_value=best_primal,
        gap=gap,
        sweeps=sweeps,
        wall_time=time.perf_counter() - start,
        converged=gap <= max(gap_tolerance, GAP_FLOOR),
        dual_history=hist[:sweeps],
        _lam=lam,
        _v=v,
        _q=q,
        _t=t,
        _isfree=isfree,
    )
