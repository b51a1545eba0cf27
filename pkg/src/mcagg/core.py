"""Shared domain types: stochastic matrices, state weights, partitions, and
the deterministic zero-sum basis used by every spectral computation.
"""
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (DimensionMismatch, NegativeEntry, NoConvergence,
                     NonSquare, RowSumViolation)


@dataclass(frozen=True)
class StochasticMatrix:
    """A finite Markov chain: row-stochastic n x n matrix, optional labels."""
    rows: np.ndarray
    labels: Optional[Sequence[str]] = None

    @property
    def n(self):
        return self.rows.shape[0]


@dataclass(frozen=True)
class StateWeights:
    """Relative state weights rho, normalized to sum 1."""
    rho: np.ndarray


@dataclass(frozen=True)
class Partition:
    """Assignment of n states to k superstates; surjective onto range(k)."""
    n: int
    k: int
    assign: np.ndarray

    def groups(self):
        return [np.where(self.assign == j)[0] for j in range(self.k)]


@dataclass(frozen=True)
class AggregatedModel:
    """An aggregated chain: partition, k x k transitions psi, and the bank of
    superstate distribution vectors (rows over the original states)."""
    partition: Partition
    psi: np.ndarray
    distributions: np.ndarray


@dataclass(frozen=True)
class SimplexBasis:
    """Orthonormal basis of the hyperplane {v : sum(v) = 0}."""
    n: int
    theta: np.ndarray


def as_rows(pi):
    """Accept a StochasticMatrix or a bare ndarray and return the ndarray."""
    if isinstance(pi, StochasticMatrix):
        return pi.rows
    return np.asarray(pi, dtype=float)


def as_rho(rho, n=None):
    if isinstance(rho, StateWeights):
        return rho.rho
    if rho is None:
        if n is None:
            raise DimensionMismatch("need n to build uniform weights")
        return np.full(n, 1.0 / n)
    return np.asarray(rho, dtype=float)


def uniform_weights(n):
    return StateWeights(np.full(n, 1.0 / n))


def validate_stochastic(rows, tol=1e-9, labels=None):
    """Validate (and lightly repair) a candidate transition matrix.

    Entries in [-tol, 0) are clamped to zero and each row renormalized, so
    ingestion rounding does not get rejected. Genuine violations raise.
    """
    rows = np.array(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
        raise NonSquare(f"expected square matrix, got shape {rows.shape}")
    n = rows.shape[0]
    neg = np.argwhere(rows < -tol)
    if len(neg):
        i, j = neg[0]
        raise NegativeEntry(int(i), int(j), float(rows[i, j]))
    rows[rows < 0] = 0.0
    sums = rows.sum(axis=1)
    bad = np.argwhere(np.abs(sums - 1.0) > tol)
    if len(bad):
        i = int(bad[0][0])
        raise RowSumViolation(i, float(sums[i]))
    rows = rows / sums[:, None]
    if labels is not None:
        labels = tuple(labels)
        if len(labels) != n:
            raise DimensionMismatch(
                f"{len(labels)} labels for {n} states")
    return StochasticMatrix(rows=rows, labels=labels)


def make_partition(assign, k=None):
    """Build a Partition from an assignment array, checking surjectivity."""
    assign = np.asarray(assign, dtype=int)
    n = len(assign)
    if k is None:
        k = int(assign.max()) + 1 if n else 0
    if assign.min(initial=0) < 0 or (n and assign.max() >= k):
        raise DimensionMismatch("assignment indices outside [0, k)")
    used = np.unique(assign)
    if len(used) != k:
        missing = sorted(set(range(k)) - set(used.tolist()))
        raise DimensionMismatch(f"superstates {missing} are empty")
    return Partition(n=n, k=k, assign=assign)


def simplex_basis(n):
    """Helmert basis of the zero-sum hyperplane.

    Column m (1-indexed) carries 1/sqrt(m(m+1)) on the first m coordinates
    and -m/sqrt(m(m+1)) on coordinate m+1. Deterministic, so eigenvalue
    computations are reproducible across runs.
    """
    if n < 2:
        raise DimensionMismatch("simplex basis needs n >= 2")
    theta = np.zeros((n, n - 1))
    for m in range(1, n):
        c = 1.0 / np.sqrt(m * (m + 1))
        theta[:m, m - 1] = c
        theta[m, m - 1] = -m * c
    return SimplexBasis(n=n, theta=theta)


def stationary_distribution(pi, tol=1e-12, max_iter=100000):
    """Left fixed vector of Pi by power iteration from the uniform start."""
    rows = as_rows(pi)
    n = rows.shape[0]
    rho = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = rho @ rows
        nxt = nxt / nxt.sum()
        if np.abs(nxt - rho).max() < tol:
            return StateWeights(nxt)
        rho = nxt
    raise NoConvergence(
        f"stationary distribution: residual above {tol} after {max_iter} "
        "iterations", last=StateWeights(rho))
