"""Minimize the principal eigenvalue over designs of fixed measure.

The scheme alternates an eigensolve with a superlevel-set update: given the
current eigenfunction u, the next favorable set maximizes the weighted mass
integral m -> int m u^2 at fixed measure, which by the rearrangement
principle is the superlevel set of u^2 at the measure-matching threshold.
Each update cannot increase the Rayleigh quotient of the current u, and the
following eigensolve minimizes it, so the eigenvalue history is
non-increasing.  Multi-start over seed designs mitigates (without removing)
convergence to local minima.

Seeds are independent; ``optimize`` can fan them out over processes.  The
best-state reduction is the deterministic minimum of (lambda, seed_id).
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .eigensolver import (
    Design,
    EigenResult,
    design_measure_fraction,
    element_mean_square,
    principal_lambda,
)
from .errors import EigendesignError
from .meshing import Mesh

__all__ = [
    "OptState",
    "BoundaryCaps",
    "RandomCaps",
    "Centered",
    "bathtub_update",
    "optimize",
    "seed_designs",
    "default_seeds",
    "symmetric_difference",
]


@dataclass(eq=False)
class OptState:
    """Trajectory of one seed: designs, eigenvalues and stagnation measures."""

    design: Design
    eigen: EigenResult
    iteration: int
    lambda_history: list[float]
    sym_diff_history: list[float]
    converged: bool
    seed_id: int


@dataclass(frozen=True)
class BoundaryCaps:
    count: int


@dataclass(frozen=True)
class RandomCaps:
    """Caps grown around uniformly drawn elements.

    Scattered random element subsets are discretely infeasible in 2D (an
    isolated linear-element triangle cannot carry positive weighted mass
    against its unfavorable neighbors), so random seeding draws randomly
    centered connected caps instead.
    """

    count: int
    rng_seed: int = 0


@dataclass(frozen=True)
class Centered:
    pass


SeedStrategy = Union[BoundaryCaps, RandomCaps, Centered]


def _prefix_design(mesh: Mesh, beta: float, delta: float, order: np.ndarray) -> Design:
    """Fill elements in the given order up to measure delta; the element at
    the cut receives the fractional weight that makes the measure exact."""
    measures = mesh.element_measure[order]
    cum = np.cumsum(measures)
    weights = np.full(len(mesh.elements), -beta, dtype=float)
    k = int(np.searchsorted(cum, delta, side="left"))
    if k >= len(order):
        raise ValueError("delta exceeds the total mesh measure")
    weights[order[:k]] = 1.0
    before = cum[k - 1] if k else 0.0
    theta = min(1.0, (delta - before) / measures[k])
    if theta > 1e-15:
        weights[order[k]] = theta * (1.0 + beta) - beta
    return Design(mesh, beta, weights, None)


def bathtub_update(u: np.ndarray, mesh: Mesh, beta: float, delta: float):
    """Measure-delta design maximizing the weighted mass of u^2.

    Element scores are exact means of u^2; elements are admitted in
    descending score order (ties broken by ascending element index) until
    the cumulative measure reaches delta, the element at the cut taking the
    fractional weight that makes the measure exact.  Returns the design and
    the realized threshold, the score at the cut.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("u must be nonnegative")
    if not delta < beta * mesh.domain_measure / (beta + 1.0):
        raise ValueError("delta exceeds the admissible bound")
    scores = element_mean_square(mesh, u)
    if np.ptp(scores) == 0:
        raise ValueError("u is constant; the superlevel update is undefined")
    order = np.argsort(-scores, kind="stable")
    design = _prefix_design(mesh, beta, delta, order)
    frac = design_measure_fraction(beta, design.element_weight)
    cut = order[np.flatnonzero(frac[order] > 0)[-1]]
    return design, float(scores[cut])


def symmetric_difference(a: Design, b: Design) -> float:
    """Measure of the symmetric difference of two designs on one mesh,
    counting fractional elements by their favorable fraction."""
    if a.mesh_ref is not b.mesh_ref:
        raise ValueError("designs live on different meshes")
    da = design_measure_fraction(a.beta, a.element_weight)
    db = design_measure_fraction(b.beta, b.element_weight)
    return float(a.mesh_ref.element_measure @ np.abs(da - db))


def _run_seed(mesh: Mesh, beta: float, delta: float, seed: Design, seed_id: int,
              tol: float, max_iter: int) -> OptState:
    eigen = principal_lambda(mesh, seed, lambda0=None)
    design = seed
    history = [eigen.lam]
    sym_hist: list[float] = []
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        new_design, _ = bathtub_update(eigen.u, mesh, beta, delta)
        sym = symmetric_difference(design, new_design)
        sym_hist.append(sym)
        if sym <= 1e-15 * mesh.domain_measure:
            design = new_design
            converged = True
            break
        new_eigen = principal_lambda(mesh, new_design, lambda0=eigen.lam)
        drop = history[-1] - new_eigen.lam
        design, eigen = new_design, new_eigen
        history.append(eigen.lam)
        if drop < tol * max(abs(eigen.lam), 1e-300) and sym < tol * mesh.domain_measure:
            converged = True
            break
    return OptState(design=design, eigen=eigen, iteration=iteration,
                    lambda_history=history, sym_diff_history=sym_hist,
                    converged=converged, seed_id=seed_id)


def optimize(mesh: Mesh, beta: float, delta: float, seeds: Sequence[Design],
             tol: float = 1e-9, max_iter: int = 100, workers: int = 1,
             return_all: bool = False):
    """Alternate eigensolves with superlevel updates from every seed.

    Stops a seed when the relative eigenvalue decrease drops below ``tol``
    and the design symmetric difference drops below ``tol * |Omega|`` (an
    unchanged design is an exact fixed point and stops immediately).
    Returns the state with the smallest eigenvalue, ties broken by seed id;
    with ``return_all`` the full per-seed list is returned alongside.
    A failed seed is skipped with a warning unless every seed fails.
    """
    if not seeds:
        raise ValueError("at least one seed design is required")
    for s in seeds:
        if abs(s.delta - delta) > 1e-9 * (1.0 + mesh.domain_measure):
            raise ValueError(f"seed measure {s.delta} does not match delta {delta}")

    states: list[OptState] = []
    failures: list[str] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_seed, mesh, beta, delta, s, i, tol, max_iter)
                for i, s in enumerate(seeds)
            ]
            for i, fut in enumerate(futures):
                try:
                    states.append(fut.result())
                except EigendesignError as exc:
                    failures.append(f"seed {i}: {exc}")
    else:
        for i, s in enumerate(seeds):
            try:
                states.append(_run_seed(mesh, beta, delta, s, i, tol, max_iter))
            except EigendesignError as exc:
                failures.append(f"seed {i}: {exc}")
    for msg in failures:
        warnings.warn(f"optimizer seed failed: {msg}", RuntimeWarning, stacklevel=2)
    if not states:
        raise EigendesignError(f"all seeds failed: {'; '.join(failures)}")

    best = min(states, key=lambda st: (st.eigen.lam, st.seed_id))
    if return_all:
        return best, states
    return best


def _boundary_arclength_points(mesh: Mesh, count: int) -> np.ndarray:
    """``count`` equispaced points along the boundary polyline."""
    if mesh.dim == 1:
        ends = mesh.vertices[mesh.boundary_vertices, 0]
        pts = [[float(ends.min())], [float(ends.max())]]
        return np.asarray(pts[: max(1, min(count, 2))], dtype=float)
    nxt = {int(a): int(b) for a, b in mesh.boundary_edges}
    start = int(mesh.boundary_edges[0, 0])
    loop = [start]
    while True:
        cur = nxt[loop[-1]]
        if cur == start:
            break
        loop.append(cur)
    pts = mesh.vertices[loop]
    seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]
    targets = total * np.arange(count) / count
    out = []
    for t in targets:
        k = int(np.searchsorted(arc, t, side="right")) - 1
        k = min(k, len(loop) - 1)
        frac = (t - arc[k]) / seg[k]
        out.append(pts[k] + frac * (pts[(k + 1) % len(loop)] - pts[k]))
    return np.asarray(out)


def seed_designs(mesh: Mesh, beta: float, delta: float,
                 strategy: SeedStrategy) -> list[Design]:
    """Initial designs of measure exactly delta.

    BoundaryCaps places cap-like sets at equispaced boundary points,
    RandomCaps draws reproducible randomly centered caps, Centered grows
    one ball around the domain centroid.  All use the fractional-element
    rule, so every seed has measure exactly delta.
    """
    cent = mesh.centroids()
    if isinstance(strategy, Centered):
        target = (mesh.element_measure @ cent) / mesh.domain_measure
        order = np.argsort(np.linalg.norm(cent - target, axis=1), kind="stable")
        return [_prefix_design(mesh, beta, delta, order)]
    if isinstance(strategy, BoundaryCaps):
        points = _boundary_arclength_points(mesh, strategy.count)
        out = []
        for p in points:
            order = np.argsort(np.linalg.norm(cent - p, axis=1), kind="stable")
            out.append(_prefix_design(mesh, beta, delta, order))
        return out
    if isinstance(strategy, RandomCaps):
        rng = np.random.default_rng(strategy.rng_seed)
        out = []
        for _ in range(strategy.count):
            center = cent[rng.integers(len(mesh.elements))]
            order = np.argsort(np.linalg.norm(cent - center, axis=1), kind="stable")
            out.append(_prefix_design(mesh, beta, delta, order))
        return out
    raise TypeError(f"unknown seed strategy {strategy!r}")


def default_seeds(mesh: Mesh, beta: float, delta: float, caps: int = 8) -> list[Design]:
    """Boundary caps plus one centered seed; boundary concentration is the
    expected optimum for small measure, the interior seed guards large
    measures."""
    seeds = seed_designs(mesh, beta, delta, BoundaryCaps(caps))
    seeds += seed_designs(mesh, beta, delta, Centered())
    return seeds
