"""Exact lattice enumeration on real bases (rows are generators).

All routines work on ``||u @ B - t||`` with integer coefficient vectors ``u``.
The basis is triangularised once with a QR factorisation; nothing here reduces
the basis beyond size reduction, so callers keep dimensions small.
"""

from __future__ import annotations

import math

import numpy as np

MAX_DIMENSION = 16
DEFAULT_MAX_POINTS = 4_000_000


class DimensionError(ValueError):
    """Enumeration requested above the exact-search dimension guard."""


class EnumerationTooLarge(RuntimeError):
    """The requested ball holds more points than the configured limit."""


def _check_dim(n: int) -> None:
    if n > MAX_DIMENSION:
        raise DimensionError(f"exact enumeration limited to real dimension {MAX_DIMENSION}, got {n}")


def triangularize(basis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(q, r)`` with ``basis.T == q @ r`` and ``diag(r) > 0``."""
    q, r = np.linalg.qr(np.asarray(basis, dtype=float).T)
    s = np.sign(np.diag(r))
    s[s == 0] = 1.0
    return q * s, r * s[:, None]


def size_reduce(basis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Size-reduce ``basis``; returns ``(reduced, T)`` with ``reduced = T @ basis``."""
    b = np.array(basis, dtype=float)
    n = b.shape[0]
    t = np.eye(n, dtype=np.int64)
    _, r = triangularize(b)
    for i in range(1, n):
        for j in range(i - 1, -1, -1):
            q = int(np.floor(r[j, i] / r[j, j] + 0.5))
            if q:
                b[i] -= q * b[j]
                t[i] -= q * t[j]
                r[:, i] -= q * r[:, j]
    return b, t


def ball_points(
    basis: np.ndarray,
    center: np.ndarray,
    radius: float,
    max_points: int = DEFAULT_MAX_POINTS,
) -> tuple[np.ndarray, np.ndarray]:
    """All ``u`` with ``||u @ basis - center|| <= radius``.

    Breadth-first over the triangular form, one coordinate at a time, fully
    vectorised. Returns ``(coords, squared_distances)``.
    """
    basis = np.asarray(basis, dtype=float)
    n = basis.shape[0]
    _check_dim(n)
    q, r = triangularize(basis)
    r2 = radius * radius * (1.0 + 1e-12) + 1e-300
    y = (q.T @ np.asarray(center, dtype=float))[None, :]
    dist = np.zeros(1)
    coords = np.zeros((1, n), dtype=np.int64)
    for i in range(n - 1, -1, -1):
        rii = r[i, i]
        c = y[:, i] / rii
        w = np.sqrt(np.maximum(r2 - dist, 0.0)) / rii
        lo = np.ceil(c - w - 1e-12).astype(np.int64)
        hi = np.floor(c + w + 1e-12).astype(np.int64)
        counts = np.maximum(hi - lo + 1, 0)
        total = int(counts.sum())
        if total == 0:
            return np.zeros((0, n), dtype=np.int64), np.zeros(0)
        if total > max_points:
            raise EnumerationTooLarge(f"ball of radius {radius:.4g} holds more than {max_points} candidates")
        idx = np.repeat(np.arange(len(counts)), counts)
        starts = np.cumsum(counts) - counts
        z = lo[idx] + (np.arange(total) - starts[idx])
        yi = y[idx, i]
        d = dist[idx] + (rii * z - yi) ** 2
        keep = d <= r2
        idx, z, d = idx[keep], z[keep], d[keep]
        y = y[idx] - z[:, None] * r[:, i][None, :]
        coords = coords[idx]
        coords[:, i] = z
        dist = d
    return coords, dist


def _schnorr_euchner(r: np.ndarray, target: np.ndarray, bound: float, exclude_zero: bool):
    """Depth-first zig-zag search; returns (best_sq_dist, coords) or (bound, None)."""
    n = r.shape[0]
    rl = r.tolist()
    tp = target.tolist()
    diag = [rl[i][i] for i in range(n)]
    best = bound
    best_u = None
    u = [0] * n
    c = [0.0] * n
    step = [0] * n
    partial = [0.0] * (n + 1)

    def center(i):
        s = tp[i]
        row = rl[i]
        for j in range(i + 1, n):
            s -= row[j] * u[j]
        return s / diag[i]

    def start(i):
        c[i] = center(i)
        u[i] = int(math.floor(c[i] + 0.5))
        step[i] = 1 if c[i] >= u[i] else -1

    def advance(i):
        u[i] += step[i]
        step[i] = -step[i] - (1 if step[i] > 0 else -1)

    k = n - 1
    start(k)
    while True:
        e = diag[k] * (u[k] - c[k])
        d = partial[k + 1] + e * e
        if d <= best:
            if k == 0:
                if not (exclude_zero and not any(u)):
                    if d < best or best_u is None:
                        best = d
                        best_u = list(u)
                advance(0)
            else:
                partial[k] = d
                k -= 1
                start(k)
        else:
            k += 1
            if k == n:
                break
            advance(k)
    return best, best_u


def closest_coords(basis: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact CVP. Ties (to relative 1e-9) resolve to the lexicographically smallest coordinates."""
    basis = np.asarray(basis, dtype=float)
    n = basis.shape[0]
    _check_dim(n)
    q, r = triangularize(basis)
    tp = q.T @ np.asarray(target, dtype=float)
    babai = np.zeros(n)
    y = tp.copy()
    for i in range(n - 1, -1, -1):
        babai[i] = np.floor(y[i] / r[i, i] + 0.5)
        y = y - babai[i] * r[:, i]
    bound = float(y @ y) * (1 + 1e-9) + 1e-300
    best, u = _schnorr_euchner(r, tp, bound, exclude_zero=False)
    if u is None:  # pragma: no cover - babai point always qualifies
        u = babai.astype(np.int64).tolist()
        best = float(y @ y)
    ties, d = ball_points(basis, target, math.sqrt(best * (1 + 1e-9)) + 1e-12)
    if len(ties) > 1:
        order = np.lexsort(ties.T[::-1])
        u = ties[order[0]].tolist()
        best = float(d[order[0]])
    return np.array(u, dtype=np.int64), float(best)


def shortest_coords(basis: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact SVP (shortest non-zero vector) after size reduction."""
    basis = np.asarray(basis, dtype=float)
    n = basis.shape[0]
    _check_dim(n)
    reduced, t = size_reduce(basis)
    _, r = triangularize(reduced)
    bound = float(np.min(np.sum(reduced**2, axis=1))) * (1 + 1e-9)
    best, u = _schnorr_euchner(r, np.zeros(n), bound, exclude_zero=True)
    coords = np.array(u, dtype=np.int64) @ t
    return coords, float(best)
