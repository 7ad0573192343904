"""Compiled kernels.

Trees arrive as the flat tuple from ``kernel_view()``::

    (implicit, root_children, branching, D, level_start,
     parent, depth, cptr, cidx, leafcount, treasure, tau_path)

and advice sources as::

    (use_ptr, ptr, semi, q_node, q_degree, adv_rule, adv_map)

With ``use_ptr`` set, ``ptr[u]`` is the advice at ``u``.  Otherwise advice is
computed on demand from the trial seed (see ``_rng``), which is what lets the
walkers run on implicit trees with billions of nodes.
"""
from __future__ import annotations

import math

import numpy as np

from ._jit import njit, prange
from ._rng import hash3, uniform, SLOT_FAULT, SLOT_POINTER

TIE_TOL = 1e-9
SLOT_WALK = 2

# tree accessors -----------------------------------------------------------


@njit
def t_depth(T, u):
    if T[0] == 1:
        lvl = T[4]
        k = 0
        while k + 1 < lvl.size - 1 and lvl[k + 1] <= u:
            k += 1
        return k
    return T[6][u]


@njit
def t_nchild(T, u, du):
    if T[0] == 1:
        if du >= T[3]:
            return 0
        return T[1] if du == 0 else T[2]
    return T[7][u + 1] - T[7][u]


@njit
def t_child(T, u, du, j):
    if T[0] == 1:
        if du == 0:
            return 1 + j
        lvl = T[4]
        return lvl[du + 1] + (u - lvl[du]) * T[2] + j
    return T[8][T[7][u] + j]


@njit
def t_parent(T, u, du):
    if T[0] == 1:
        if du == 0:
            return -1
        if du == 1:
            return 0
        lvl = T[4]
        return lvl[du - 1] + (u - lvl[du]) // T[2]
    return T[5][u]


@njit
def t_degree(T, u, du):
    return t_nchild(T, u, du) + (1 if u != 0 else 0)


@njit
def t_leafcount(T, u, du):
    if T[0] == 1:
        D = T[3]
        if du >= D:
            return 1.0
        if du == 0:
            return float(T[1]) * float(T[2]) ** (D - 1)
        return float(T[2]) ** (D - du)
    return float(T[9][u])


@njit
def t_correct(T, u, du):
    if u == T[10]:
        return -1
    tp = T[11]
    if du < tp.size - 1 and tp[du] == u:
        return tp[du + 1]
    return t_parent(T, u, du)


@njit
def t_neighbor(T, u, du, k):
    """k-th neighbor: parent first (non-root), then children."""
    if u != 0:
        if k == 0:
            return t_parent(T, u, du)
        return t_child(T, u, du, k - 1)
    return t_child(T, u, du, k)


@njit
def t_distance(T, u, du, v, dv):
    d = 0
    while u != v:
        if du >= dv:
            u = t_parent(T, u, du)
            du -= 1
        else:
            v = t_parent(T, v, dv)
            dv -= 1
        d += 1
    return d


# advice ----------------------------------------------------------------------


@njit
def q_of(T, A, u, du):
    qn = A[3]
    if qn.size > 0:
        return qn[u]
    qd = A[4]
    deg = t_degree(T, u, du)
    if deg >= qd.size:
        deg = qd.size - 1
    return qd[deg]


@njit
def adv_target(T, A, u, du):
    rule = A[5]
    if rule == 2:
        return A[6][u]
    if rule == 1 and t_nchild(T, u, du) > 0:
        return t_child(T, u, du, 0)
    if u != 0:
        return t_parent(T, u, du)
    return t_child(T, u, du, 0)


@njit
def is_faulty(T, A, seed, u, du):
    return uniform(hash3(seed, u, SLOT_FAULT)) < q_of(T, A, u, du)


@njit
def advice(T, A, seed, u, du):
    if A[0] == 1:
        return A[1][u]
    if u == T[10]:
        return -1
    if not is_faulty(T, A, seed, u, du):
        return t_correct(T, u, du)
    if A[2] == 1:
        return adv_target(T, A, u, du)
    deg = t_degree(T, u, du)
    k = int(uniform(hash3(seed, u, SLOT_POINTER)) * deg)
    if k >= deg:
        k = deg - 1
    return t_neighbor(T, u, du, k)


@njit
def sample_all(T, A, seed, ptr, faulty):
    """Eager advice for every node of an explicit tree."""
    n = T[5].size
    for u in range(n):
        du = T[6][u]
        if u == T[10]:
            ptr[u] = -1
            faulty[u] = False
        else:
            faulty[u] = is_faulty(T, A, seed, u, du)
            ptr[u] = advice(T, A, seed, u, du)


# binary max-heap with lowest-id tie-break -----------------------------------


@njit
def _better(k1, i1, k2, i2):
    if k1 > k2 + TIE_TOL:
        return True
    if k2 > k1 + TIE_TOL:
        return False
    return i1 < i2


@njit
def _sift_up(hk, hi, hx, pos):
    while pos > 0:
        par = (pos - 1) >> 1
        if _better(hk[pos], hi[pos], hk[par], hi[par]):
            hk[pos], hk[par] = hk[par], hk[pos]
            hi[pos], hi[par] = hi[par], hi[pos]
            hx[pos], hx[par] = hx[par], hx[pos]
            pos = par
        else:
            break


@njit
def _sift_down(hk, hi, hx, size, pos):
    while True:
        l = 2 * pos + 1
        if l >= size:
            break
        best = l
        r = l + 1
        if r < size and _better(hk[r], hi[r], hk[l], hi[l]):
            best = r
        if _better(hk[best], hi[best], hk[pos], hi[pos]):
            hk[pos], hk[best] = hk[best], hk[pos]
            hi[pos], hi[best] = hi[best], hi[pos]
            hx[pos], hx[best] = hx[best], hx[pos]
            pos = best
        else:
            break


@njit
def _grow_f(a):
    b = np.empty(2 * a.size, dtype=a.dtype)
    b[: a.size] = a
    return b


# frontier search on the whole tree (walkers) -----------------------------

MODE_BETA = 0
MODE_THETA = 1
MODE_COUNT = 2


@njit
def walk_search(T, A, seed, mode, want_log):
    """Best-first frontier search from the root.

    Keys are static: for a candidate c with explored parent,
    key(c) = ψ(c) - (2/3) log β(c) (mode 0), ψ(c) + (2/3) log leaves(c)
    (mode 1) or the ±1 arrow count ψ(c) (mode 2), where ψ sums over the
    ancestors of c the signed weight of their advice (+ toward c, - up).
    This ranks candidates exactly as the running score does, because the
    two differ by a quantity shared by every candidate.

    Returns (queries, moves, visit log, moves-at-visit log).
    """
    tau = T[10]
    cap_log = 64 if want_log else 1
    vis = np.empty(cap_log, dtype=np.int64)
    mv = np.empty(cap_log, dtype=np.int64)
    vis[0] = 0
    mv[0] = 0
    queries = 1
    moves = 0
    if tau == 0:
        return queries, moves, vis[:1], mv[:1]
    cap = 64
    hk = np.empty(cap)
    hi = np.empty(cap, dtype=np.int64)
    hx = np.empty(cap, dtype=np.int64)  # slot into the side tables below
    sd = np.empty(cap, dtype=np.int64)
    spsi = np.empty(cap)
    slb = np.empty(cap)
    nslot = 0
    size = 0
    cur = 0
    cdep = 0
    u = 0
    du = 0
    psi_u = 0.0
    lb_u = 0.0
    while True:
        a = advice(T, A, seed, u, du)
        nc = t_nchild(T, u, du)
        deg = t_degree(T, u, du)
        ldeg = math.log(deg)
        w = 1.0 if mode == MODE_COUNT else ldeg
        par = t_parent(T, u, du)
        for j in range(nc):
            c = t_child(T, u, du, j)
            x = 0.0
            if a == c:
                x = w
            elif par >= 0 and a == par:
                x = -w
            psi = psi_u + x
            lb = lb_u + ldeg
            if mode == MODE_BETA:
                key = psi - (2.0 / 3.0) * lb
            elif mode == MODE_THETA:
                key = psi + (2.0 / 3.0) * math.log(t_leafcount(T, c, du + 1))
            else:
                key = psi
            if size >= hk.size:
                hk = _grow_f(hk)
                hi = _grow_f(hi)
                hx = _grow_f(hx)
            if nslot >= sd.size:
                sd = _grow_f(sd)
                spsi = _grow_f(spsi)
                slb = _grow_f(slb)
            sd[nslot] = du + 1
            spsi[nslot] = psi
            slb[nslot] = lb
            hk[size] = key
            hi[size] = c
            hx[size] = nslot
            nslot += 1
            size += 1
            _sift_up(hk, hi, hx, size - 1)
        if size == 0:
            break
        c = hi[0]
        s = hx[0]
        size -= 1
        if size > 0:
            hk[0] = hk[size]
            hi[0] = hi[size]
            hx[0] = hx[size]
            _sift_down(hk, hi, hx, size, 0)
        dc = sd[s]
        moves += t_distance(T, cur, cdep, c, dc)
        cur = c
        cdep = dc
        if want_log:
            if queries >= vis.size:
                vis = _grow_f(vis)
                mv = _grow_f(mv)
            vis[queries] = c
            mv[queries] = moves
        queries += 1
        if c == tau:
            break
        u = c
        du = dc
        psi_u = spsi[s]
        lb_u = slb[s]
    n_log = queries if want_log else 1
    return queries, moves, vis[:n_log], mv[:n_log]


@njit(parallel=True)
def walk_trials(T, A, seeds, mode, out_q, out_m):
    for i in prange(seeds.size):
        q, m, _, _ = walk_search(T, A, seeds[i], mode, False)
        out_q[i] = q
        out_m[i] = m


# probabilistic following -------------------------------------------------------


@njit
def pf_walk(T, A, seed, walk_seed, lam, cap):
    """Steps until τ, or -1 once ``cap`` steps were taken without reaching it."""
    tau = T[10]
    u = 0
    du = 0
    steps = 0
    while u != tau:
        if steps >= cap:
            return -1
        r = uniform(hash3(walk_seed, steps, SLOT_WALK))
        if r < lam:
            v = advice(T, A, seed, u, du)
        else:
            deg = t_degree(T, u, du)
            k = int((r - lam) / (1.0 - lam) * deg)
            if k >= deg:
                k = deg - 1
            v = t_neighbor(T, u, du, k)
        if u != 0 and v == t_parent(T, u, du):
            du -= 1
        else:
            du += 1
        u = v
        steps += 1
    return steps


@njit(parallel=True)
def pf_trials(T, A, seeds, walk_seeds, lam, cap, out):
    for i in prange(seeds.size):
        out[i] = pf_walk(T, A, seeds[i], walk_seeds[i], lam, cap)


# static best-first / level loop on explicit (local) trees ---------------------


@njit
def best_first_static(cptr, cidx, key, tie, stop, budget, order):
    """Frontier search from local node 0 with precomputed keys.

    Returns (queries, stopped).  ``order`` receives the local ids queried.
    """
    m = cptr.size - 1
    hk = np.empty(m)
    hi = np.empty(m, dtype=np.int64)
    hx = np.empty(m, dtype=np.int64)
    order[0] = 0
    cnt = 1
    if stop[0]:
        return cnt, True
    if cnt >= budget:
        return cnt, False
    size = 0
    v = 0
    while True:
        for e in range(cptr[v], cptr[v + 1]):
            c = cidx[e]
            hk[size] = key[c]
            hi[size] = tie[c]
            hx[size] = c
            size += 1
            _sift_up(hk, hi, hx, size - 1)
        if size == 0:
            return cnt, False
        v = hx[0]
        size -= 1
        if size > 0:
            hk[0] = hk[size]
            hi[0] = hi[size]
            hx[0] = hx[size]
            _sift_down(hk, hi, hx, size, 0)
        order[cnt] = v
        cnt += 1
        if stop[v]:
            return cnt, True
        if cnt >= budget:
            return cnt, False


@njit
def loop_static(cptr, cidx, ldepth, key, tie, stop, budget, order):
    """Level-cycling search: one query per non-empty level per sweep."""
    m = cptr.size - 1
    dmax = 0
    for i in range(m):
        if ldepth[i] > dmax:
            dmax = ldepth[i]
    cnt_lvl = np.zeros(dmax + 2, dtype=np.int64)
    for i in range(m):
        cnt_lvl[ldepth[i]] += 1
    off = np.zeros(dmax + 3, dtype=np.int64)
    for k in range(dmax + 1):
        off[k + 1] = off[k] + cnt_lvl[k]
    hk = np.empty(m)
    hi = np.empty(m, dtype=np.int64)
    hx = np.empty(m, dtype=np.int64)
    hs = np.zeros(dmax + 2, dtype=np.int64)
    order[0] = 0
    cnt = 1
    if stop[0]:
        return cnt, True
    if cnt >= budget:
        return cnt, False
    for e in range(cptr[0], cptr[1]):
        c = cidx[e]
        b = off[1]
        hk[b + hs[1]] = key[c]
        hi[b + hs[1]] = tie[c]
        hx[b + hs[1]] = c
        hs[1] += 1
        _sift_up(hk[b:], hi[b:], hx[b:], hs[1] - 1)
    while True:
        progressed = False
        for lvl in range(1, dmax + 1):
            if hs[lvl] == 0:
                continue
            b = off[lvl]
            v = hx[b]
            hs[lvl] -= 1
            sz = hs[lvl]
            if sz > 0:
                hk[b] = hk[b + sz]
                hi[b] = hi[b + sz]
                hx[b] = hx[b + sz]
                _sift_down(hk[b:], hi[b:], hx[b:], sz, 0)
            order[cnt] = v
            cnt += 1
            progressed = True
            if stop[v]:
                return cnt, True
            if cnt >= budget:
                return cnt, False
            nb = off[lvl + 1]
            for e in range(cptr[v], cptr[v + 1]):
                c = cidx[e]
                p = nb + hs[lvl + 1]
                hk[p] = key[c]
                hi[p] = tie[c]
                hx[p] = c
                hs[lvl + 1] += 1
                _sift_up(hk[nb:], hi[nb:], hx[nb:], hs[lvl + 1] - 1)
        if not progressed:
            return cnt, False


@njit
def psi_count_global(parent, order, ptr):
    """±1 arrow sums ψ(v) over ancestors of every node (root-relative)."""
    n = parent.size
    psi = np.zeros(n, dtype=np.int64)
    for i in range(1, n):
        v = order[i]
        p = parent[v]
        a = ptr[p]
        x = 0
        if a == v:
            x = 1
        elif p != 0 and a == parent[p]:
            x = -1
        psi[v] = psi[p] + x
    return psi


@njit(parallel=True)
def loop_trials(T, A, seeds, order_bfs, out_q):
    """Whole-tree A_loop for many trials (explicit trees; local id = node id)."""
    parent = T[5]
    n = parent.size
    depth = T[6]
    cptr = T[7]
    cidx = T[8]
    tau = T[10]
    tie = np.arange(n)
    stop = np.zeros(n, dtype=np.bool_)
    stop[tau] = True
    for i in prange(seeds.size):
        ptr = np.empty(n, dtype=np.int64)
        fl = np.empty(n, dtype=np.bool_)
        sample_all(T, A, seeds[i], ptr, fl)
        psi = psi_count_global(parent, order_bfs, ptr)
        key = psi.astype(np.float64)
        buf = np.empty(n, dtype=np.int64)
        q, _ = loop_static(cptr, cidx, depth, key, tie, stop, n + 1, buf)
        out_q[i] = q


# local balls ---------------------------------------------------------------


@njit
def build_ball(parent, cptr, cidx, degree, center, h, weighted, log_delta, dom, ptr):
    """Ball around ``center`` inside the component ``dom``.

    Returns local arrays in BFS order: global id, local parent, local depth,
    log β_center, children CSR, nominee flag, ψ with log-degree weights,
    ψ with ±1 weights.
    """
    n = parent.size
    glob = np.empty(n, dtype=np.int64)
    lpar = np.empty(n, dtype=np.int64)
    ldep = np.empty(n, dtype=np.int64)
    llb = np.empty(n)
    lcs = np.zeros(n + 1, dtype=np.int64)
    psi_w = np.empty(n)
    psi_c = np.empty(n)
    glob[0] = center
    lpar[0] = -1
    ldep[0] = 0
    llb[0] = 0.0
    psi_w[0] = 0.0
    psi_c[0] = 0.0
    lim = h * log_delta - 1e-9
    m = 1
    head = 0
    while head < m:
        x = glob[head]
        lcs[head] = m
        inner = llb[head] < lim if weighted else ldep[head] < h
        if inner:
            gp = glob[lpar[head]] if head > 0 else -1
            lw = math.log(degree[x])
            a = ptr[x]
            up = gp >= 0 and a == gp
            # neighbors: parent then children
            for k in range(-1, cptr[x + 1] - cptr[x]):
                if k == -1:
                    y = parent[x]
                    if y < 0:
                        continue
                else:
                    y = cidx[cptr[x] + k]
                if y == gp or not dom[y]:
                    continue
                glob[m] = y
                lpar[m] = head
                ldep[m] = ldep[head] + 1
                llb[m] = llb[head] + lw
                if a == y:
                    psi_w[m] = psi_w[head] + lw
                    psi_c[m] = psi_c[head] + 1.0
                elif up:
                    psi_w[m] = psi_w[head] - lw
                    psi_c[m] = psi_c[head] - 1.0
                else:
                    psi_w[m] = psi_w[head]
                    psi_c[m] = psi_c[head]
                m += 1
        head += 1
    lcs[m] = m
    nom = np.zeros(m, dtype=np.bool_)
    for i in range(m):
        if weighted:
            nom[i] = llb[i] >= lim
        else:
            nom[i] = ldep[i] == h
    return (glob[:m].copy(), lpar[:m].copy(), ldep[:m].copy(), llb[:m].copy(),
            lcs[: m + 1].copy(), nom, psi_w[:m].copy(), psi_c[:m].copy())


# beating leaves ------------------------------------------------------------


@njit(parallel=True)
def beating_trials(T, A, seeds, order, is_leaf, out):
    parent = T[5]
    n = parent.size
    tau = T[10]
    for i in prange(seeds.size):
        ptr = np.empty(n, dtype=np.int64)
        fl = np.empty(n, dtype=np.bool_)
        sample_all(T, A, seeds[i], ptr, fl)
        psi = psi_count_global(parent, order, ptr)
        ref = psi[tau]
        c = 0
        for u in range(n):
            if is_leaf[u] and u != tau and psi[u] > ref:
                c += 1
        out[i] = c


# misleading test at the root of an implicit/explicit tree -----------------


@njit
def misleading_at_root(T, A, seed, h, weighted, log_delta):
    """h-misleading test for u = σ by pruned depth-first search.

    Nominees of σ's ball are enumerated lazily; a branch is cut as soon as
    even all-favourable remaining arrows cannot reach the threshold.
    """
    tau = T[10]
    if tau == 0:
        return False
    thr = (2.0 / 3.0) * h * (log_delta if weighted else 1.0) - 1e-9
    lim = h * log_delta - 1e-9
    tp = T[11]
    # leaf(σ): walk the treasure path until the ball boundary
    s = 0.0
    lb = 0.0
    k = 0
    u = 0
    while True:
        inner = lb < lim if weighted else k < h
        if not inner or u == tau:
            break
        nxt = tp[k + 1]
        deg = t_degree(T, u, k)
        lw = math.log(deg)
        wt = lw if weighted else 1.0
        a = advice(T, A, seed, u, k)
        if a == nxt:
            s += wt
        elif k > 0 and a == tp[k - 1]:
            s -= wt
        lb += lw
        u = nxt
        k += 1
    if u != tau and s < thr:
        return True
    # other root subtrees: any promising nominee?
    nroot = t_nchild(T, 0, 0)
    a0 = advice(T, A, seed, 0, 0)
    side = tp[1]
    max_w = math.log(float(_max_degree(T))) if weighted else 1.0
    stack_u = np.empty(4096, dtype=np.int64)
    stack_d = np.empty(4096, dtype=np.int64)
    stack_s = np.empty(4096)
    stack_lb = np.empty(4096)
    lw0 = math.log(t_degree(T, 0, 0))
    for j in range(nroot):
        c = t_child(T, 0, 0, j)
        if c == side:
            continue
        top = 0
        stack_u[0] = c
        stack_d[0] = 1
        stack_s[0] = (lw0 if weighted else 1.0) if a0 == c else 0.0
        stack_lb[0] = lw0
        top = 1
        while top > 0:
            top -= 1
            v = stack_u[top]
            dv = stack_d[top]
            sv = stack_s[top]
            lbv = stack_lb[top]
            inner = lbv < lim if weighted else dv < h
            if not inner:
                if sv >= thr:
                    return True
                continue
            nc = t_nchild(T, v, dv)
            if nc == 0:
                continue
            # best case: every remaining arrow on the way down is favourable;
            # weighted, those arrows weigh less than lim - lbv + one degree
            if weighted:
                if sv + (lim - lbv) + max_w < thr:
                    continue
            elif sv + (h - dv) < thr:
                continue
            deg = t_degree(T, v, dv)
            lw = math.log(deg)
            wt = lw if weighted else 1.0
            a = advice(T, A, seed, v, dv)
            par = t_parent(T, v, dv)
            for jj in range(nc):
                cc = t_child(T, v, dv, jj)
                x = 0.0
                if a == cc:
                    x = wt
                elif a == par:
                    x = -wt
                if top >= stack_u.size:
                    stack_u = _grow_f(stack_u)
                    stack_d = _grow_f(stack_d)
                    stack_s = _grow_f(stack_s)
                    stack_lb = _grow_f(stack_lb)
                stack_u[top] = cc
                stack_d[top] = dv + 1
                stack_s[top] = sv + x
                stack_lb[top] = lbv + lw
                top += 1
    return False


@njit
def _max_degree(T):
    if T[0] == 1:
        b = T[2] + 1 if T[3] >= 2 else 1
        return max(T[1], b)
    cptr = T[7]
    best = 0
    for u in range(cptr.size - 1):
        dg = cptr[u + 1] - cptr[u] + (1 if u != 0 else 0)
        if dg > best:
            best = dg
    return best


@njit(parallel=True)
def misleading_trials(T, A, seeds, h, weighted, log_delta, out):
    for i in prange(seeds.size):
        out[i] = misleading_at_root(T, A, seeds[i], h, weighted, log_delta)
