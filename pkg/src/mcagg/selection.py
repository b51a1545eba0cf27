"""Choosing the number of superstates.

For each candidate partition we score how far member rows spread around
their aggregated row (per-superstate heterogeneity, the largest eigenvalue
of a deviation covariance restricted to the simplex tangent basis), then
pick the k whose heterogeneity drop from k-1 is largest on a log scale.
"""
from dataclasses import dataclass, field

import numpy as np

from .core import Partition, as_rho, as_rows, simplex_basis
from .errors import FloorViolation, NonConsecutiveK, ZeroHeterogeneity

__all__ = ["SelectionOptions", "SelectionReport", "hard_membership",
           "covariance_matrix", "heterogeneity", "marginal_return",
           "select_k"]

_EXACT_FIT = 1e-14   # t_bar below this is reported as an exact fit


@dataclass(frozen=True)
class SelectionOptions:
    mode: str = "plain"            # "plain" | "whiten"
    membership: str = "normalized"  # "normalized" | "raw"
    floor: float = 1e-12


@dataclass
class SelectionReport:
    k_t: int
    t_bars: dict
    nus: dict
    options: SelectionOptions = field(default_factory=SelectionOptions)
    exact_fit: bool = False
    per_superstate: dict = field(default_factory=dict)  # k -> [lambda_max]


def hard_membership(partition, rho=None, mode="normalized"):
    """Membership matrix Q (n x k). Normalized columns hold the weight each
    state contributes to its cluster centroid (so W = Q^T Pi has stochastic
    rows); raw columns are plain 0/1 indicators."""
    if mode not in ("normalized", "raw"):
        raise ValueError(f"unknown membership mode {mode!r}")
    n, k = partition.n, partition.k
    Q = np.zeros((n, k))
    Q[np.arange(n), partition.assign] = 1.0
    if mode == "raw":
        return Q
    rho = as_rho(rho, n)
    Q = Q * rho[:, None]
    return Q / Q.sum(axis=0, keepdims=True)


def _guard_floor(j, members, w, floor):
    """Coordinates where the centroid sits below the floor are dropped when
    no member row deviates there; a real deviation over a floored coordinate
    is unrecoverable."""
    low = w < floor
    if not low.any():
        return np.maximum(w, floor), slice(None)
    dev = np.abs(members - w).max(axis=0)
    bad = low & (dev > floor)
    if bad.any():
        raise FloorViolation(j, int(np.where(bad)[0][0]))
    keep = ~low
    return w[keep], keep


def covariance_matrix(members, w, q, mode="plain", floor=1e-12, j=0):
    """Deviation covariance of one superstate in the simplex tangent basis.

    members: rows of the cluster (m x n); w: its aggregated row; q: weights
    (need not be normalized in raw mode). Plain mode measures relative
    deviations (pi(i) - w) ./ w directly; whiten mode rescales them by the
    local curvature (Cholesky of the Theta^T Lambda Theta form) so the
    output eigenvalues are comparable to annealing temperatures.
    """
    members = np.atleast_2d(np.asarray(members, dtype=float))
    w = np.asarray(w, dtype=float)
    q = np.asarray(q, dtype=float)
    wsafe, keep = _guard_floor(j, members, w, floor)
    sub = members[:, keep] if not isinstance(keep, slice) else members
    theta = simplex_basis(wsafe.shape[0]).theta
    V = (sub - wsafe) / wsafe
    B = V @ theta
    if mode == "plain":
        C = B.T @ (q[:, None] * B)
        return 0.5 * (C + C.T)
    if mode != "whiten":
        raise ValueError(f"unknown covariance mode {mode!r}")
    qn = q / q.sum()
    lam = (qn @ sub) / wsafe**2
    H0 = theta.T @ (lam[:, None] * theta)
    H1 = B.T @ (qn[:, None] * B)
    L = np.linalg.cholesky(H0)
    C = np.linalg.solve(L, np.linalg.solve(L, H1).T).T
    return 0.5 * (C + C.T)


def _lambda_max(C, n_hint=None):
    m = C.shape[0]
    if m <= 200:
        return float(np.linalg.eigvalsh(C)[-1])
    # large problems: power iteration on the PSD matrix
    v = np.ones(m) / np.sqrt(m)
    lam = 0.0
    for _ in range(10000):
        w = C @ v
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        new = float(v @ (C @ v))
        if abs(new - lam) <= 1e-13 * max(1.0, abs(new)):
            return new
        lam = new
    return lam


def heterogeneity_profile(pi, partition, rho=None,
                          options=SelectionOptions()):
    """Per-superstate largest deviation eigenvalues (length k)."""
    rows = as_rows(pi)
    rho = as_rho(rho, rows.shape[0])
    Q = hard_membership(partition, rho, options.membership)
    W = Q.T @ rows
    out = np.zeros(partition.k)
    for jj in range(partition.k):
        idx = np.where(partition.assign == jj)[0]
        C = covariance_matrix(rows[idx], W[jj], Q[idx, jj],
                              mode=options.mode, floor=options.floor, j=jj)
        out[jj] = max(_lambda_max(C), 0.0)
    return out


def heterogeneity(pi, partition, rho=None, options=SelectionOptions()):
    """t_bar: the largest per-superstate deviation eigenvalue under the
    given partition."""
    prof = heterogeneity_profile(pi, partition, rho, options)
    return float(prof.max()) if len(prof) else 0.0


def marginal_return(t_bars):
    """nu(k) = log t_bar(k-1) - log t_bar(k) for every k whose predecessor
    is present. A vanishing t_bar(k) is an exact fit: nu(k) = +inf."""
    nus = {}
    for k in sorted(t_bars):
        if (k - 1) not in t_bars:
            continue
        prev, cur = t_bars[k - 1], t_bars[k]
        if cur < _EXACT_FIT:
            nus[k] = np.inf
        elif prev < _EXACT_FIT:
            # already exact at k-1; no further return to gain
            nus[k] = 0.0
        else:
            nus[k] = float(np.log(prev) - np.log(cur))
    return nus


def select_k(pi, partitions, rho=None, options=SelectionOptions()):
    """Score a consecutive family of partitions and pick k_t = argmax nu
    (ties to the smallest k). Exact fits short-circuit: the smallest k with
    t_bar = 0 wins."""
    rows = as_rows(pi)
    rho = as_rho(rho, rows.shape[0])
    ks = sorted(partitions)
    gaps = [k for k in range(ks[0], ks[-1] + 1) if k not in partitions]
    if gaps:
        raise NonConsecutiveK(gaps)
    profiles = {k: heterogeneity_profile(rows, partitions[k], rho, options)
                for k in ks}
    t_bars = {k: (float(p.max()) if len(p) else 0.0)
              for k, p in profiles.items()}
    nus = marginal_return(t_bars)
    per = {k: [float(v) for v in p] for k, p in profiles.items()}
    exact = [k for k in ks[1:] if t_bars[k] < _EXACT_FIT]
    if exact:
        k_t = min(exact)
        return SelectionReport(k_t=k_t, t_bars=t_bars, nus=nus,
                               options=options, exact_fit=True,
                               per_superstate=per)
    if not nus:
        return SelectionReport(k_t=ks[0], t_bars=t_bars, nus=nus,
                               options=options, per_superstate=per)
    best = max(nus.values())
    k_t = min(k for k, v in nus.items() if v == best)
    return SelectionReport(k_t=k_t, t_bars=t_bars, nus=nus, options=options,
                           per_superstate=per)
