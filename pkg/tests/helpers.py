"""Shared oracles, independent of the code paths they are used to check."""

import itertools
import math

import numpy as np
from scipy import optimize
from scipy.linalg import solve_banded

from eigendesign.eigensolver import Design
from eigendesign.meshing import Mesh


def exact_interval_lambda(delta: float, beta: float) -> float:
    """Positive principal eigenvalue for the favorable set (0, delta) on
    (0, 1): root of tan(x) = sqrt(beta) tanh(sqrt(beta) x (1-delta)/delta)
    in x = sqrt(lambda) delta, solved by scalar bracketing."""
    ratio = (1.0 - delta) / delta

    def g(x):
        return math.tan(x) - math.sqrt(beta) * math.tanh(math.sqrt(beta) * x * ratio)

    x = optimize.brentq(g, 1e-12, math.pi / 2 - 1e-12, rtol=1e-15)
    return (x / delta) ** 2


def prefix_design(mesh: Mesh, beta: float, delta: float) -> Design:
    """Design filling elements in storage order up to measure delta."""
    weights = np.full(len(mesh.elements), -beta)
    cum = 0.0
    for i, a in enumerate(mesh.element_measure):
        if cum + a <= delta * (1 + 1e-14):
            weights[i] = 1.0
            cum += a
        else:
            theta = (delta - cum) / a
            if theta > 1e-15:
                weights[i] = theta * (1 + beta) - beta
            break
    return Design(mesh, beta, weights, None)


def radial_disk_lambda(radius: float, r_favorable: float, beta: float,
                       n: int = 20000) -> float:
    """Principal eigenvalue of the disk problem with a centered favorable
    sub-disk, via a dense radial discretization (measure r dr) independent
    of the 2D code path."""
    r = np.linspace(0.0, radius, n + 1)
    h = r[1] - r[0]
    rm = 0.5 * (r[:-1] + r[1:])
    m_elem = np.where(rm < r_favorable, 1.0, -beta)

    k_off = -rm / h
    k_diag = np.zeros(n + 1)
    k_diag[:-1] += rm / h
    k_diag[1:] += rm / h
    m11 = h * (3 * r[:-1] + r[1:]) / 12
    m12 = h * (r[:-1] + r[1:]) / 12
    m22 = h * (r[:-1] + 3 * r[1:]) / 12
    m_off = m12
    m_diag = np.zeros(n + 1)
    m_diag[:-1] += m11
    m_diag[1:] += m22
    w_off = m_elem * m12
    w_diag = np.zeros(n + 1)
    w_diag[:-1] += m_elem * m11
    w_diag[1:] += m_elem * m22

    def matvec(diag, off, x):
        y = diag * x
        y[:-1] += off * x[1:]
        y[1:] += off * x[:-1]
        return y

    def rho(lam):
        a_diag = k_diag - lam * w_diag
        a_off = k_off - lam * w_off
        sigma = -lam * max(1.0, beta) - 1.0
        ab = np.zeros((3, n + 1))
        ab[0, 1:] = a_off - sigma * m_off
        ab[1, :] = a_diag - sigma * m_diag
        ab[2, :-1] = a_off - sigma * m_off
        x = np.ones(n + 1)
        val = None
        for _ in range(400):
            y = solve_banded((1, 1), ab, matvec(m_diag, m_off, x))
            y /= math.sqrt(y @ matvec(m_diag, m_off, y))
            new = y @ matvec(a_diag, a_off, y)
            if val is not None and abs(new - val) < 1e-14 * max(1.0, abs(new)):
                return new
            val, x = new, y
        return val

    lo = 1.0
    while rho(lo) < 0:
        lo /= 2
    hi = lo
    while rho(hi) > 0:
        hi *= 2
    return optimize.brentq(rho, lo, hi, rtol=1e-12)


def enumerate_weighted_mass_max(measures, scores, beta, delta):
    """Best value of sum_e w_e * scores_e * measures_e over admissible
    weights of measure delta (all subsets plus one fractional element)."""
    measures = np.asarray(measures, float)
    scores = np.asarray(scores, float)
    ne = len(measures)
    gain = scores * measures
    best = -math.inf
    for r in range(ne + 1):
        for subset in itertools.combinations(range(ne), r):
            m_s = measures[list(subset)].sum() if subset else 0.0
            if m_s > delta * (1 + 1e-12):
                continue
            base = gain[list(subset)].sum() if subset else 0.0
            rem = delta - m_s
            if rem <= 1e-15:
                val = (1 + beta) * base - beta * (scores * measures).sum()
                best = max(best, val)
                continue
            for f in range(ne):
                if f in subset or rem > measures[f] * (1 + 1e-12):
                    continue
                theta = min(1.0, rem / measures[f])
                val = (1 + beta) * (base + theta * gain[f]) \
                    - beta * (scores * measures).sum()
                best = max(best, val)
    return best


def all_subset_designs(mesh: Mesh, beta: float, k: int):
    """All designs made of exactly k full elements (uniform-mesh measures)."""
    ne = len(mesh.elements)
    for subset in itertools.combinations(range(ne), k):
        weights = np.full(ne, -beta)
        weights[list(subset)] = 1.0
        yield Design(mesh, beta, weights, None)


def dense_interval_lambda(x: np.ndarray, weights: np.ndarray, beta: float) -> float:
    """Positive principal eigenvalue on a 1D mesh with vertices x and
    per-element weights, built densely from scratch.

    Returns math.inf when no discrete function carries positive weighted
    mass (then the positive principal eigenvalue does not exist).  Fully
    independent of the package's FEM and eigensolver code paths.
    """
    from scipy.linalg import eigh

    n = len(x) - 1
    h = np.diff(x)
    K = np.zeros((n + 1, n + 1))
    M = np.zeros_like(K)
    W = np.zeros_like(K)
    for e in range(n):
        ke = np.array([[1.0, -1.0], [-1.0, 1.0]]) / h[e]
        me = np.array([[2.0, 1.0], [1.0, 2.0]]) * h[e] / 6.0
        K[e:e + 2, e:e + 2] += ke
        M[e:e + 2, e:e + 2] += me
        W[e:e + 2, e:e + 2] += weights[e] * me

    top = eigh(W, M, eigvals_only=True, subset_by_index=[n, n])[0]
    if top <= 1e-12:
        return math.inf

    def rho(lam):
        return eigh(K - lam * W, M, eigvals_only=True,
                    subset_by_index=[0, 0])[0]

    x_top = eigh(W, M, subset_by_index=[n, n])[1][:, 0]
    hi = float((x_top @ K @ x_top) / (x_top @ M @ x_top)) / top * 1.001
    lo = hi
    while rho(lo) <= 0:
        lo /= 2
    return optimize.brentq(rho, lo, hi, rtol=1e-13)
