"""Flow kernels behind the exact Prokhorov distance.

For two weight vectors ``a`` (p,) and ``b`` (q,) and a cross-distance matrix
``D`` (p, q), the transport deficiency at threshold ``t`` is the mass of ``a``
that cannot be coupled to ``b`` using only pairs with ``D <= t``.  It equals
``max_A a(A) - b(A^t)`` (closed enlargement) and is computed as one minus a
maximum flow on the bipartite network source -> i -> j -> sink.

All functions here are compiled with numba unless ``BAYESBRITTLE_NO_NUMBA`` is
set; see :mod:`bayesbrittle._accel`.
"""
import numpy as np

from ._accel import USE_NUMBA, kernel

# each augmentation zeroes some residual exactly, so no positive cutoff is needed
FLOW_EPS = 0.0


@kernel
def transport_deficiency(a, b, D, t):
    p = a.shape[0]
    q = b.shape[0]
    rs = a.copy()
    rt = b.copy()
    F = np.zeros((p, q))

    # greedy warm start
    for i in range(p):
        for j in range(q):
            if rs[i] <= FLOW_EPS:
                break
            if rt[j] > FLOW_EPS and D[i, j] <= t:
                x = min(rs[i], rt[j])
                F[i, j] += x
                rs[i] -= x
                rt[j] -= x

    lvl_l = np.empty(p, np.int64)
    lvl_r = np.empty(q, np.int64)
    it_l = np.empty(p, np.int64)
    it_r = np.empty(q, np.int64)
    queue = np.empty(p + q, np.int64)
    # node codes: i < p is left node i, p + j is right node j
    stack = np.empty(p + q + 1, np.int64)

    while True:
        # BFS levels in the residual graph
        lvl_l[:] = -1
        lvl_r[:] = -1
        head = 0
        tail = 0
        for i in range(p):
            if rs[i] > FLOW_EPS:
                lvl_l[i] = 0
                queue[tail] = i
                tail += 1
        sink_level = -1
        while head < tail:
            u = queue[head]
            head += 1
            if u < p:
                lu = lvl_l[u]
                if sink_level >= 0 and lu + 1 >= sink_level:
                    continue
                for j in range(q):
                    if lvl_r[j] < 0 and D[u, j] <= t:
                        lvl_r[j] = lu + 1
                        queue[tail] = p + j
                        tail += 1
                        if rt[j] > FLOW_EPS and sink_level < 0:
                            sink_level = lu + 2
            else:
                j = u - p
                lj = lvl_r[j]
                if sink_level >= 0 and lj + 1 >= sink_level:
                    continue
                for i in range(p):
                    if lvl_l[i] < 0 and F[i, j] > FLOW_EPS:
                        lvl_l[i] = lj + 1
                        queue[tail] = i
                        tail += 1
        if sink_level < 0:
            break
        last = sink_level - 1

        # blocking flow by DFS with current-arc pointers
        it_l[:] = 0
        it_r[:] = 0
        for root in range(p):
            if lvl_l[root] != 0:
                continue
            while rs[root] > FLOW_EPS:
                top = 0
                stack[0] = root
                found = False
                while top >= 0:
                    u = stack[top]
                    advanced = False
                    if u < p:
                        lu = lvl_l[u]
                        while it_l[u] < q:
                            j = it_l[u]
                            if lvl_r[j] == lu + 1 and lvl_r[j] <= last and D[u, j] <= t:
                                top += 1
                                stack[top] = p + j
                                advanced = True
                                break
                            it_l[u] += 1
                        if not advanced:
                            lvl_l[u] = -1
                    else:
                        j = u - p
                        lj = lvl_r[j]
                        if lj == last and rt[j] > FLOW_EPS:
                            found = True
                            break
                        if lj < last:
                            while it_r[j] < p:
                                i = it_r[j]
                                if lvl_l[i] == lj + 1 and F[i, j] > FLOW_EPS:
                                    top += 1
                                    stack[top] = i
                                    advanced = True
                                    break
                                it_r[j] += 1
                        if not advanced:
                            lvl_r[j] = -1
                    if not advanced:
                        top -= 1
                        if top >= 0:
                            parent = stack[top]
                            if parent < p:
                                it_l[parent] += 1
                            else:
                                it_r[parent - p] += 1
                if not found:
                    break

                end_j = stack[top] - p
                bott = min(rs[root], rt[end_j])
                for k in range(1, top + 1):
                    u = stack[k]
                    if u < p:
                        bott = min(bott, F[u, stack[k - 1] - p])
                rs[root] -= bott
                rt[end_j] -= bott
                for k in range(1, top + 1):
                    prev = stack[k - 1]
                    u = stack[k]
                    if prev < p:
                        F[prev, u - p] += bott
                    else:
                        F[u, prev - p] -= bott

    total = 0.0
    for i in range(p):
        if rs[i] > 0.0:
            total += rs[i]
    return total


@kernel
def prokhorov_dense(a, b, D):
    """Exact Prokhorov distance between ``a`` and ``b`` given cross distances ``D``.

    The deficiency f(t) is a nonincreasing step function of t that only moves
    at entries of D, so the distance is min_k max(t_k, f(t_k)) over the sorted
    thresholds t_0 = 0 < t_1 < ... .  Because f(t_k) - t_k is strictly
    decreasing, the first k with f(t_k) <= t_k is found by bisection and the
    answer is min(t_k, f(t_{k-1})).
    """
    flat = np.unique(D.ravel())
    n_small = 0
    for v in flat:
        if 0.0 < v < 1.0:
            n_small += 1
    # thresholds: 0, all distances in (0, 1), sentinel 1 (f <= 1 always)
    ts = np.empty(n_small + 2)
    ts[0] = 0.0
    k = 1
    for v in flat:
        if 0.0 < v < 1.0:
            ts[k] = v
            k += 1
    ts[k] = 1.0
    nt = n_small + 2
    fv = np.full(nt, -1.0)

    lo = 0
    hi = nt - 1
    while lo < hi:
        mid = (lo + hi) // 2
        f = transport_deficiency(a, b, D, ts[mid])
        fv[mid] = f
        if f <= ts[mid]:
            hi = mid
        else:
            lo = mid + 1
    if lo == 0:
        return 0.0
    f_prev = fv[lo - 1]
    if f_prev < 0.0:
        f_prev = transport_deficiency(a, b, D, ts[lo - 1])
    return min(ts[lo], f_prev)


@kernel
def ky_fan_sorted(d):
    """Smallest eps with #{d_i > eps}/N <= eps for an ascending array ``d``."""
    n = d.shape[0]
    # eps = 0 candidate: all strictly positive entries exceed it
    npos = 0
    for x in d:
        if x > 0.0:
            npos += 1
    best = npos / n
    i = 0
    while i < n:
        t = d[i]
        # skip ties so that the count of entries > t is exact
        while i + 1 < n and d[i + 1] == t:
            i += 1
        above = (n - 1 - i) / n
        cand = t if t > above else above
        if cand < best:
            best = cand
        i += 1
    return best


def backend() -> str:
    return "numba" if USE_NUMBA else "python"
