"""End-to-end aggregation: anneal, refine per-k partitions, select k.

The annealing sweep gives one partition per k it passes through. Refinement
closes gaps and repairs near-critical artifacts deterministically: for each
k we collect the sweep partition (polished) together with single-group
splits of the chosen (k-1)-partition, and keep whichever has the lowest
distortion. Selection then scores the chosen family.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from .anneal import AnnealConfig, _lloyd, aggregate_fixed_k, anneal
from .core import as_rho, as_rows, make_partition
from .klgeom import build_model, distance_matrix, distortion, hard_centroids
from .selection import SelectionOptions, SelectionReport, select_k

__all__ = ["PipelineResult", "run_pipeline", "refine_per_k"]


@dataclass
class PipelineResult:
    partitions: dict            # k -> Partition, consecutive from 1
    models: dict                # k -> AggregatedModel
    report: SelectionReport
    trace: list = field(default_factory=list)

    @property
    def k_t(self):
        return self.report.k_t


def _score(rows, rho, assign):
    W = hard_centroids(rows, assign, rho)
    return distortion(rows, (assign, W), rho)


def _move_descent(rows, rho, assign, max_passes=50):
    """Single-state relocation descent with immediate centroid updates.

    Batch reassignment (Lloyd) stalls on stale centroids; moving one state
    at a time escapes those plateaus. Total distortion decomposes per group
    as SE_g - S_g . log(S_g / M_g), with S_g the rho-weighted row sum, M_g
    the group mass and SE_g the weighted self-entropies, so each candidate
    move is evaluated in O(n) from running sums.
    """
    assign = np.asarray(assign, dtype=int).copy()
    n = rows.shape[0]
    k = int(assign.max()) + 1
    if k == 1:
        return assign
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(rows > 0, rows * np.log(np.where(rows > 0, rows, 1.0)), 0.0)
    se = plogp.sum(axis=1) * rho
    wrows = rho[:, None] * rows

    S = np.zeros((k, rows.shape[1]))
    M = np.zeros(k)
    SE = np.zeros(k)
    for j in range(k):
        m = assign == j
        S[j] = wrows[m].sum(axis=0)
        M[j] = rho[m].sum()
        SE[j] = se[m].sum()

    def contrib(Sg, Mg, SEg):
        if Mg <= 0.0:
            return 0.0
        z = Sg / Mg
        lz = np.log(np.maximum(z, 1e-300))
        return SEg - float(Sg @ lz)

    cur = np.array([contrib(S[j], M[j], SE[j]) for j in range(k)])
    counts = np.bincount(assign, minlength=k)
    for _ in range(max_passes):
        improved = False
        for i in range(n):
            a = assign[i]
            if counts[a] <= 1:
                continue
            Sa, Ma, SEa = S[a] - wrows[i], M[a] - rho[i], SE[a] - se[i]
            ca = contrib(Sa, Ma, SEa)
            best_gain, best_j, best_cb = 0.0, a, None
            for j in range(k):
                if j == a:
                    continue
                cb = contrib(S[j] + wrows[i], M[j] + rho[i], SE[j] + se[i])
                gain = (cur[a] + cur[j]) - (ca + cb)
                if gain > best_gain + 1e-14:
                    best_gain, best_j, best_cb = gain, j, cb
            if best_j != a:
                S[a], M[a], SE[a], cur[a] = Sa, Ma, SEa, ca
                S[best_j] += wrows[i]
                M[best_j] += rho[i]
                SE[best_j] += se[i]
                cur[best_j] = best_cb
                counts[a] -= 1
                counts[best_j] += 1
                assign[i] = best_j
                improved = True
        if not improved:
            break
    return assign


def _polish(rows, rho, assign):
    return _move_descent(rows, rho, _lloyd(rows, rho, assign))


def _split_two(rows, rho, assign, g, knew):
    """2-way Lloyd split of group g seeded by its farthest member; None if
    the split collapses."""
    idx = np.where(assign == g)[0]
    w = rho[idx] / rho[idx].sum()
    z = w @ rows[idx]
    d = distance_matrix(rows[idx], z[None, :])[:, 0]
    sub = np.zeros(len(idx), dtype=int)
    sub[np.argmax(d)] = 1
    for _ in range(50):
        Z = np.zeros((2, rows.shape[1]))
        for j in (0, 1):
            m = sub == j
            if not m.any():
                return None
            ww = rho[idx][m]
            Z[j] = (ww @ rows[idx][m]) / ww.sum()
        new = np.argmin(distance_matrix(rows[idx], Z), axis=1)
        if np.array_equal(new, sub):
            break
        sub = new
    if sub.min() == sub.max():
        return None
    out = assign.copy()
    out[idx[sub == 1]] = knew
    return out


def refine_per_k(pi, rho, sweep_parts, k_max, cfg=AnnealConfig()):
    """Consecutive k -> assignment map, each the lowest-distortion candidate
    among the sweep snapshot and one-group splits of the previous choice."""
    rows = as_rows(pi)
    n = rows.shape[0]
    rho = as_rho(rho, n)
    chosen = {1: np.zeros(n, dtype=int)}
    for k in range(2, k_max + 1):
        cands = []
        if k in sweep_parts:
            raw = np.asarray(sweep_parts[k], dtype=int)
            a = _polish(rows, rho, raw)
            cands.append(a if a.max() + 1 == k else raw)
        prev = chosen[k - 1]
        kprev = int(prev.max()) + 1
        for g in range(kprev):
            idx = np.where(prev == g)[0]
            if len(idx) < 2:
                continue
            w = rho[idx] / rho[idx].sum()
            z = w @ rows[idx]
            d = distance_matrix(rows[idx], z[None, :])[:, 0]
            far = idx[np.argmax(d)]
            a = prev.copy()
            a[far] = kprev
            ap = _polish(rows, rho, a)
            for cand in (a, ap):
                if cand.max() + 1 == k:
                    cands.append(cand)
            s = _split_two(rows, rho, prev, g, kprev)
            if s is not None:
                sp = _polish(rows, rho, s)
                for cand in (s, sp):
                    if cand.max() + 1 == k:
                        cands.append(cand)
        if not cands:
            # sweep skipped k and no split applies: independent fixed-k run
            part, _ = aggregate_fixed_k(rows, rho, k, cfg)
            if part.k == k:
                cands.append(part.assign)
            else:
                chosen[k] = prev
                continue
        scores = [_score(rows, rho, a) for a in cands]
        chosen[k] = cands[int(np.argmin(scores))]
    return chosen


def run_pipeline(pi, rho=None, k_max=None, cfg=None,
                 options=SelectionOptions()):
    """Aggregate then select. Returns PipelineResult with one partition and
    model per k in 1..k_max and the selection report."""
    rows = as_rows(pi)
    n = rows.shape[0]
    rho = as_rho(rho, n)
    if k_max is None:
        k_max = cfg.k_max if cfg is not None and cfg.k_max else min(n, 8)
    k_max = min(int(k_max), n)
    if cfg is None:
        cfg = AnnealConfig(k_max=k_max)
    elif cfg.k_max != k_max:
        cfg = replace(cfg, k_max=k_max)
    result = anneal(rows, rho, cfg)
    sweep_parts = {k: part.assign for k, part, _ in result.entries}
    chosen = refine_per_k(rows, rho, sweep_parts, k_max, cfg)
    partitions = {}
    models = {}
    for k in sorted(chosen):
        a = chosen[k]
        kk = int(a.max()) + 1
        part = make_partition(a, k=kk)
        partitions[k] = part
        models[k] = build_model(rows, part.assign, rho)
    report = select_k(rows, partitions, rho, options)
    return PipelineResult(partitions=partitions, models=models,
                          report=report, trace=result.trace)
