"""Compiled inner loops for the exact and local-search solvers."""
import numpy as np
from numba import njit

INF = np.inf


@njit(cache=True)
def _completion_bounds(dist):
    """Per node: half the sum of its two cheapest incident edges, and half the cheapest one."""
    n = dist.shape[0]
    half2 = np.empty(n)
    half1 = np.empty(n)
    for v in range(n):
        a = INF
        b = INF
        for w in range(n):
            if w == v:
                continue
            x = dist[v, w]
            if x < a:
                b = a
                a = x
            elif x < b:
                b = x
        half2[v] = 0.5 * (a + b)
        half1[v] = 0.5 * a
    return half2, half1


@njit(cache=True)
def held_karp(dist, upper):
    """Exact tour via the Held-Karp subset DP with node 0 fixed as start.

    ``upper`` is the length of any known tour (``inf`` if none). States whose
    cost plus an admissible completion bound exceeds it cannot lie on an optimal
    tour and are not expanded. Returns ``(order, length)``; ties among
    predecessors resolve to the lowest index.
    """
    n = dist.shape[0]
    m = n - 1
    full = (1 << m) - 1
    half2, half1 = _completion_bounds(dist)
    # rest[mask]: bound contribution of the nodes (other than 0) not yet in mask
    rest = np.empty(1 << m)
    tot = 0.0
    for j in range(m):
        tot += half2[j + 1]
    rest[0] = tot
    for mask in range(1, full + 1):
        low = mask & (-mask)
        j = 0
        while (low >> j) > 1:
            j += 1
        rest[mask] = rest[mask ^ low] - half2[j + 1]
    limit = upper * (1.0 + 1e-9) + 1e-12
    dp = np.full((1 << m, m), INF)
    for j in range(m):
        dp[1 << j, j] = dist[0, j + 1]
    for mask in range(1, full):
        r = rest[mask] + half1[0]
        for j in range(m):
            if not (mask >> j) & 1:
                continue
            cur = dp[mask, j]
            if cur == INF or cur + r + half1[j + 1] > limit:
                continue
            for k in range(m):
                if (mask >> k) & 1:
                    continue
                nm = mask | (1 << k)
                c = cur + dist[j + 1, k + 1]
                if c < dp[nm, k]:
                    dp[nm, k] = c
    best = INF
    last = -1
    for j in range(m):
        c = dp[full, j] + dist[j + 1, 0]
        if c < best:
            best = c
            last = j
    order = np.empty(n, dtype=np.int64)
    order[0] = 0
    mask = full
    j = last
    pos = n - 1
    while pos > 0:
        order[pos] = j + 1
        pos -= 1
        prev_mask = mask ^ (1 << j)
        if prev_mask == 0:
            break
        target = dp[mask, j]
        pick = -1
        for i in range(m):
            if (prev_mask >> i) & 1 and dp[prev_mask, i] + dist[i + 1, j + 1] == target:
                pick = i
                break
        mask = prev_mask
        j = pick
    return order, best


@njit(cache=True)
def _reverse(tour, pos, i, j):
    """Reverse the tour segment from position i to j (inclusive, cyclic), choosing the shorter side."""
    n = tour.shape[0]
    inner = (j - i) % n + 1
    if 2 * inner > n:
        # reverse the complement instead: positions j+1 .. i-1
        i, j = (j + 1) % n, (i - 1 + n) % n
        inner = n - inner
    for _ in range(inner // 2):
        a = tour[i]
        b = tour[j]
        tour[i] = b
        pos[b] = i
        tour[j] = a
        pos[a] = j
        i = (i + 1) % n
        j = (j - 1 + n) % n


@njit(cache=True)
def two_opt_pass(dist, tour, pos, cand, eps):
    """One sweep of first-improvement 2-opt over candidate lists; returns total gain."""
    n = tour.shape[0]
    total = 0.0
    for a in range(n):
        for direction in range(2):
            pa = pos[a]
            if direction == 0:
                b = tour[(pa + 1) % n]
            else:
                b = tour[(pa - 1 + n) % n]
            dab = dist[a, b]
            for t in range(cand.shape[1]):
                c = cand[a, t]
                if c < 0:
                    break
                dac = dist[a, c]
                if dac >= dab:
                    break
                pc = pos[c]
                if direction == 0:
                    d = tour[(pc + 1) % n]
                else:
                    d = tour[(pc - 1 + n) % n]
                if c == b or d == a:
                    continue
                gain = dab + dist[c, d] - dac - dist[b, d]
                if gain > eps:
                    if direction == 0:
                        # edges (a,b) (c,d) -> (a,c) (b,d): reverse b..c
                        _reverse(tour, pos, pos[b], pos[c])
                    else:
                        # edges (b,a) (d,c) -> (c,a) (d,b): reverse a..d... i.e. c..b
                        _reverse(tour, pos, pos[a], pos[d])
                    total += gain
                    b = tour[(pos[a] + 1) % n] if direction == 0 else tour[(pos[a] - 1 + n) % n]
                    dab = dist[a, b]
                    break
    return total


@njit(cache=True)
def _move_segment(tour, pos, start, seg_len, after, reverse):
    """Cut ``seg_len`` nodes starting at position ``start`` and reinsert them after node ``after``."""
    n = tour.shape[0]
    seg = np.empty(seg_len, dtype=tour.dtype)
    for t in range(seg_len):
        seg[t] = tour[(start + t) % n]
    if reverse:
        seg = seg[::-1].copy()
    rest = np.empty(n - seg_len, dtype=tour.dtype)
    k = 0
    p = (start + seg_len) % n
    for _ in range(n - seg_len):
        rest[k] = tour[p]
        k += 1
        p = (p + 1) % n
    k = 0
    for t in range(n - seg_len):
        v = rest[t]
        tour[k] = v
        pos[v] = k
        k += 1
        if v == after:
            for s in range(seg_len):
                tour[k] = seg[s]
                pos[seg[s]] = k
                k += 1


@njit(cache=True)
def or_opt_pass(dist, tour, pos, cand, eps):
    """One sweep of first-improvement Or-opt (segments of 1-3 nodes, both orientations)."""
    n = tour.shape[0]
    total = 0.0
    for seg_len in range(1, 4):
        if seg_len > n - 3:
            break
        for start_node in range(n):
            i = pos[start_node]
            s1 = tour[i]
            se = tour[(i + seg_len - 1) % n]
            p = tour[(i - 1 + n) % n]
            q = tour[(i + seg_len) % n]
            removal = dist[p, s1] + dist[se, q] - dist[p, q]
            if removal <= eps:
                continue
            done = False
            for end in range(2):
                anchor = s1 if end == 0 else se
                for t in range(cand.shape[1]):
                    c = cand[anchor, t]
                    if c < 0:
                        break
                    if dist[anchor, c] >= removal:
                        break
                    # skip candidates inside the segment
                    off = (pos[c] - i + n) % n
                    if off < seg_len:
                        continue
                    for side in range(2):
                        if side == 0:
                            u = c
                            v = tour[(pos[c] + 1) % n]
                        else:
                            u = tour[(pos[c] - 1 + n) % n]
                            v = c
                        if (pos[u] - i + n) % n < seg_len or (pos[v] - i + n) % n < seg_len:
                            continue
                        if u == p and v == q:
                            continue
                        base = dist[u, v]
                        fwd = dist[u, s1] + dist[se, v] - base
                        rev = dist[u, se] + dist[s1, v] - base
                        if fwd <= rev:
                            add = fwd
                            flip = False
                        else:
                            add = rev
                            flip = True
                        gain = removal - add
                        if gain > eps:
                            _move_segment(tour, pos, i, seg_len, u, flip)
                            total += gain
                            done = True
                            break
                    if done:
                        break
                if done:
                    break
    return total


@njit(cache=True)
def local_optimum(dist, tour, cand, full, eps):
    """Alternate 2-opt and Or-opt sweeps until neither improves.

    ``cand`` holds pruned candidate lists; ``full`` holds all other nodes sorted
    by distance and is used for the final unpruned polish.
    """
    n = tour.shape[0]
    pos = np.empty(n, dtype=np.int64)
    for k in range(n):
        pos[tour[k]] = k
    for lists in (cand, full):
        while True:
            g = two_opt_pass(dist, tour, pos, lists, eps)
            g += or_opt_pass(dist, tour, pos, lists, eps)
            if g <= 0.0:
                break
    return tour


@njit(cache=True)
def tour_cost(dist, tour):
    n = tour.shape[0]
    s = 0.0
    for k in range(n):
        s += dist[tour[k], tour[(k + 1) % n]]
    return s


@njit(cache=True)
def nearest_neighbor(dist, start, noise, seed):
    """Greedy nearest-unvisited tour. With ``noise > 0`` each step instead takes the
    second-nearest candidate with that probability (randomized restarts)."""
    n = dist.shape[0]
    np.random.seed(seed)
    visited = np.zeros(n, dtype=np.bool_)
    tour = np.empty(n, dtype=np.int64)
    cur = start
    visited[cur] = True
    tour[0] = cur
    for k in range(1, n):
        b1 = -1
        b2 = -1
        for j in range(n):
            if visited[j]:
                continue
            if b1 < 0 or dist[cur, j] < dist[cur, b1]:
                b2 = b1
                b1 = j
            elif b2 < 0 or dist[cur, j] < dist[cur, b2]:
                b2 = j
        nxt = b1
        if noise > 0.0 and b2 >= 0 and np.random.random() < noise:
            nxt = b2
        visited[nxt] = True
        tour[k] = nxt
        cur = nxt
    return tour


@njit(cache=True)
def double_bridge(tour, rng_state):
    """Segment-local double-bridge kick: A B C D -> A C B D with B, C at most 30 nodes long.

    ``rng_state`` is a one-element uint64 array advanced in place (xorshift64*).
    """
    n = tour.shape[0]
    span = min(30, (n - 4) // 3)
    r = np.empty(4, dtype=np.int64)
    for t in range(4):
        x = rng_state[0]
        x ^= x >> np.uint64(12)
        x ^= x << np.uint64(25)
        x ^= x >> np.uint64(27)
        rng_state[0] = x
        r[t] = np.int64((x * np.uint64(2685821657736338717)) >> np.uint64(11))
    shift = r[0] % n
    p1 = 1 + r[1] % span
    p2 = p1 + 1 + r[2] % span
    p3 = p2 + 1 + r[3] % span
    rot = np.empty(n, dtype=np.int64)
    for k in range(n):
        rot[k] = tour[(k + shift) % n]
    out = np.empty(n, dtype=np.int64)
    k = 0
    for t in range(p1):
        out[k] = rot[t]
        k += 1
    for t in range(p2, p3):
        out[k] = rot[t]
        k += 1
    for t in range(p1, p2):
        out[k] = rot[t]
        k += 1
    for t in range(p3, n):
        out[k] = rot[t]
        k += 1
    return out


@njit(cache=True)
def iterated_local_search(dist, tour, cand, full, eps, patience, seed):
    """Local optimum, then double-bridge kicks kept only when they shorten the
    tour; stops after ``patience`` consecutive failed kicks."""
    tour = local_optimum(dist, tour, cand, full, eps)
    cost = tour_cost(dist, tour)
    if tour.shape[0] < 8:
        return tour
    state = np.empty(1, dtype=np.uint64)
    state[0] = np.uint64(seed) | np.uint64(1)
    fails = 0
    while fails < patience:
        trial = local_optimum(dist, double_bridge(tour, state), cand, full, eps)
        c = tour_cost(dist, trial)
        if c < cost - eps:
            tour = trial
            cost = c
            fails = 0
        else:
            fails += 1
    return tour
