"""
Shortest Hamiltonian path and tour solvers over explicit distance matrices.

Node 0 of every matrix is the fixed start (the turret's current aim); the
remaining nodes are targets. ``held_karp_path`` is exact and vectorized over
subsets of equal size, so it is practical up to ``MAX_EXACT`` targets.
"""

from __future__ import annotations

import numpy as np

from .errors import InstanceTooLarge

MAX_EXACT = 22


def _popcounts(size: int) -> np.ndarray:
    masks = np.arange(size, dtype=np.int64)
    counts = np.zeros(size, dtype=np.int8)
    bit = 1
    while bit < size:
        counts += ((masks & bit) != 0).astype(np.int8)
        bit <<= 1
    return counts


def _held_karp(dist: np.ndarray, close: bool):
    """Exact DP from node 0 through all other nodes, optionally returning to 0."""
    dist = np.asarray(dist, dtype=float)
    m = dist.shape[0] - 1
    if m == 0:
        return [], 0.0
    if m > MAX_EXACT:
        raise InstanceTooLarge(f"{m} targets exceed the exact solver limit of {MAX_EXACT}")
    d = dist[1:, 1:]
    size = 1 << m
    dp = np.full((size, m), np.inf)
    single = 1 << np.arange(m)
    dp[single, np.arange(m)] = dist[0, 1:]

    counts = _popcounts(size)
    masks = np.arange(size, dtype=np.int64)
    for c in range(2, m + 1):
        layer = masks[counts == c]
        for j in range(m):
            sel = layer[(layer >> j) & 1 == 1]
            prev = sel ^ (1 << j)
            dp[sel, j] = np.min(dp[prev] + d[:, j], axis=1)

    full = size - 1
    finish = dp[full] + (dist[1:, 0] if close else 0.0)
    j = int(np.argmin(finish))
    total = float(finish[j])
    order = [j]
    mask = full
    while mask != (1 << j):
        prev = mask ^ (1 << j)
        k = int(np.argmin(dp[prev] + d[:, j]))
        order.append(k)
        mask, j = prev, k
    order.reverse()
    return [i + 1 for i in order], total


def held_karp_path(dist: np.ndarray):
    """Optimal open path from node 0 visiting every other node once.

    Returns ``(order, total)`` where ``order`` lists node indices (never 0).
    """
    return _held_karp(dist, close=False)


def held_karp_tour(dist: np.ndarray):
    """Optimal closed tour through all nodes, starting and ending at node 0."""
    return _held_karp(dist, close=True)


def path_length(dist: np.ndarray, order) -> float:
    seq = [0, *order]
    return float(sum(dist[a, b] for a, b in zip(seq[:-1], seq[1:])))


def nearest_neighbor_path(dist: np.ndarray):
    """Greedy chain from node 0; ties go to the lowest index."""
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    unvisited = np.ones(n, dtype=bool)
    unvisited[0] = False
    order = []
    cur = 0
    total = 0.0
    for _ in range(n - 1):
        cand = np.where(unvisited, dist[cur], np.inf)
        nxt = int(np.argmin(cand))
        total += float(cand[nxt])
        unvisited[nxt] = False
        order.append(nxt)
        cur = nxt
    return order, total


def two_opt_path(dist: np.ndarray, order, tol: float = 1e-12):
    """Improve an open path from node 0 by segment reversals until 2-optimal."""
    dist = np.asarray(dist, dtype=float)
    seq = np.array([0, *order], dtype=np.int64)
    n = len(seq) - 1
    improved = True
    while improved:
        improved = False
        for i in range(1, n):
            js = np.arange(i + 1, n + 1)
            a, b = seq[i - 1], seq[i]
            c = seq[js]
            nxt = np.where(js < n, seq[np.minimum(js + 1, n)], -1)
            has_next = js < n
            old = dist[a, b] + np.where(has_next, dist[c, np.maximum(nxt, 0)], 0.0)
            new = dist[a, c] + np.where(has_next, dist[b, np.maximum(nxt, 0)], 0.0)
            delta = new - old
            k = int(np.argmin(delta))
            if delta[k] < -tol:
                j = int(js[k])
                seq[i:j + 1] = seq[i:j + 1][::-1].copy()
                improved = True
    order = [int(x) for x in seq[1:]]
    return order, path_length(dist, order)


def or_opt_path(dist: np.ndarray, order, max_segment: int = 3, tol: float = 1e-12):
    """Relocate short segments (optionally reversed) while that shortens the path."""
    dist = np.asarray(dist, dtype=float)
    seq = [0, *order]
    improved = True
    while improved:
        improved = False
        n = len(seq) - 1
        for seg in range(1, max_segment + 1):
            i = 1
            while i + seg - 1 <= n:
                j = i + seg - 1
                prev, first, last = seq[i - 1], seq[i], seq[j]
                after = seq[j + 1] if j < n else None
                removed = dist[prev, first] + (dist[last, after] - dist[prev, after] if after is not None else 0.0)
                rest = seq[:i] + seq[j + 1:]
                best, best_pos, best_rev = tol, None, False
                for p in range(len(rest)):
                    u = rest[p]
                    w = rest[p + 1] if p + 1 < len(rest) else None
                    base = -dist[u, w] if w is not None else 0.0
                    fwd = dist[u, first] + (dist[last, w] if w is not None else 0.0) + base
                    rev = dist[u, last] + (dist[first, w] if w is not None else 0.0) + base
                    if removed - fwd > best:
                        best, best_pos, best_rev = removed - fwd, p, False
                    if removed - rev > best:
                        best, best_pos, best_rev = removed - rev, p, True
                if best_pos is not None:
                    chunk = seq[i:j + 1]
                    if best_rev:
                        chunk = chunk[::-1]
                    seq = rest[:best_pos + 1] + chunk + rest[best_pos + 1:]
                    improved = True
                else:
                    i += 1
    order = seq[1:]
    return order, path_length(dist, order)
