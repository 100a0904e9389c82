"""Principal positive eigenvalue of the weighted Neumann problem on a mesh.

Discretization is piecewise-linear Galerkin.  The indefinite weighted pencil
is never solved directly: the positive principal eigenvalue lambda(m) is the
positive root of the auxiliary function

    rho(lambda) = smallest eigenvalue of (K - lambda*W, M),

which satisfies rho(0) = 0, is concave and strictly positive on
(0, lambda(m)) whenever the weight has negative average.  The inner smallest
eigenvalue is computed by shift-and-invert iteration with a shift placed
below the spectrum.

Matrices are immutable once assembled; distinct solves on distinct designs
share no mutable state and may run in parallel.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize, sparse
from scipy.sparse.linalg import ArpackNoConvergence, eigsh, splu

from .errors import (
    BracketingError,
    EigenSolveError,
    NonNegativeAverageWeightError,
)
from .meshing import Mesh

__all__ = [
    "Design",
    "EigenResult",
    "assemble",
    "fem_matrices",
    "rho",
    "principal_lambda",
    "element_mean_square",
    "design_measure_fraction",
]

_DENSE_CUTOFF = 260


def design_measure_fraction(beta: float, weights: np.ndarray) -> np.ndarray:
    """Per-element favorable fraction theta = (w + beta) / (1 + beta)."""
    return (np.asarray(weights) + beta) / (1.0 + beta)


@dataclass(eq=False)
class Design:
    """Per-element weights representing 1 on D and -beta off D.

    At most one element may carry an intermediate value; ``delta`` is the
    measure of the favorable set including that element's fractional part.
    """

    mesh_ref: Mesh
    beta: float
    element_weight: np.ndarray
    delta: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        w = np.ascontiguousarray(self.element_weight, dtype=float)
        self.element_weight = w
        mesh, beta = self.mesh_ref, self.beta
        if beta <= 0:
            raise ValueError("beta must be positive")
        if w.shape != (len(mesh.elements),):
            raise ValueError("element_weight must have one entry per element")
        tol = 1e-12 * (1.0 + beta)
        if w.min() < -beta - tol or w.max() > 1.0 + tol:
            raise ValueError(f"weights must lie in [-{beta}, 1]")
        interior = np.count_nonzero((w > -beta + tol) & (w < 1.0 - tol))
        if interior > 1:
            raise ValueError(f"{interior} fractional elements; at most one allowed")
        measured = float(mesh.element_measure @ design_measure_fraction(beta, w))
        if self.delta is None:
            self.delta = measured
        elif abs(measured - self.delta) > 1e-12 * (1.0 + mesh.domain_measure):
            raise ValueError(
                f"declared delta {self.delta!r} disagrees with weights ({measured!r})")
        bound = beta * mesh.domain_measure / (beta + 1.0)
        if not self.delta < bound:
            raise ValueError(
                f"delta = {self.delta} must stay below beta*|Omega|/(beta+1) = {bound}")

    def theta(self) -> np.ndarray:
        return design_measure_fraction(self.beta, self.element_weight)

    def weight_integral(self) -> float:
        """Discrete integral of m over the domain."""
        return float(self.mesh_ref.element_measure @ self.element_weight)


@dataclass(eq=False)
class EigenResult:
    """Converged principal pair: lam > 0, u positive and max-normalized."""

    lam: float
    u: np.ndarray
    rho_residual: float
    rayleigh: float
    iterations: int


class _FemWorkspace:
    """Per-mesh assembly scratch: COO layout shared by K, M and any W."""

    def __init__(self, mesh: Mesh):
        verts, elems = mesh.vertices, mesh.elements
        ne, npe = elems.shape
        if mesh.dim == 1:
            length = mesh.element_measure
            kloc = np.array([[1.0, -1.0], [-1.0, 1.0]])
            mloc = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
            k_data = kloc[None, :, :] / length[:, None, None]
            m_data = mloc[None, :, :] * length[:, None, None]
        else:
            p = verts[elems]
            b = np.stack([p[:, 1, 1] - p[:, 2, 1],
                          p[:, 2, 1] - p[:, 0, 1],
                          p[:, 0, 1] - p[:, 1, 1]], axis=1)
            c = np.stack([p[:, 2, 0] - p[:, 1, 0],
                          p[:, 0, 0] - p[:, 2, 0],
                          p[:, 1, 0] - p[:, 0, 0]], axis=1)
            area = mesh.element_measure
            k_data = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :])
            k_data /= 4.0 * area[:, None, None]
            mloc = (np.ones((3, 3)) + np.eye(3)) / 12.0
            m_data = mloc[None, :, :] * area[:, None, None]

        rows = np.repeat(elems[:, :, None], npe, axis=2)
        cols = np.repeat(elems[:, None, :], npe, axis=1)
        self.rows = rows.ravel()
        self.cols = cols.ravel()
        self.k_flat = k_data.ravel()
        self.m_flat = m_data.ravel()
        self.elem_of_entry = np.repeat(np.arange(ne), npe * npe)
        n = len(verts)
        self.stiffness = self._to_csr(self.k_flat, n)
        self.mass = self._to_csr(self.m_flat, n)
        # identical canonical pattern lets A = K - lam*W be a pure data update
        assert np.array_equal(self.stiffness.indices, self.mass.indices)
        assert np.array_equal(self.stiffness.indptr, self.mass.indptr)

    def _to_csr(self, data, n):
        mat = sparse.coo_matrix((data, (self.rows, self.cols)), shape=(n, n)).tocsr()
        mat.sum_duplicates()
        return mat

    def weighted_mass(self, element_weight: np.ndarray):
        data = self.m_flat * element_weight[self.elem_of_entry]
        n = self.mass.shape[0]
        return self._to_csr(data, n)


_workspaces: "weakref.WeakKeyDictionary[Mesh, _FemWorkspace]" = weakref.WeakKeyDictionary()


def _workspace(mesh: Mesh) -> _FemWorkspace:
    ws = _workspaces.get(mesh)
    if ws is None:
        ws = _FemWorkspace(mesh)
        _workspaces[mesh] = ws
    return ws


def fem_matrices(mesh: Mesh, element_weight: np.ndarray):
    """(stiffness, mass, weighted_mass) for arbitrary per-element weights."""
    ws = _workspace(mesh)
    w = np.ascontiguousarray(element_weight, dtype=float)
    if w.shape != (len(mesh.elements),):
        raise ValueError("element_weight must have one entry per element")
    return ws.stiffness, ws.mass, ws.weighted_mass(w)


def assemble(mesh: Mesh, design: Design):
    """FEM matrices for a design; the design must reference this mesh."""
    if design.mesh_ref is not mesh:
        raise ValueError("design was built for a different mesh")
    return fem_matrices(mesh, design.element_weight)


def element_mean_square(mesh: Mesh, u: np.ndarray) -> np.ndarray:
    """Exact mean of u^2 over each element for piecewise-linear u."""
    ue = u[mesh.elements]
    if mesh.dim == 1:
        a, b = ue[:, 0], ue[:, 1]
        return (a * a + a * b + b * b) / 3.0
    a, b, c = ue[:, 0], ue[:, 1], ue[:, 2]
    return (a * a + b * b + c * c + a * b + a * c + b * c) / 6.0


def _pattern_combination(base, coeffs_mats):
    """Same-pattern CSR linear combination without symbolic work."""
    data = base.data.copy()
    for coeff, mat in coeffs_mats:
        data += coeff * mat.data
    return sparse.csr_matrix((data, base.indices, base.indptr), shape=base.shape)


def _smallest_pair(A, M, sigma, v0):
    """Smallest eigenpair of (A, M) by shift-and-invert below the spectrum."""
    n = A.shape[0]
    if n <= _DENSE_CUTOFF:
        vals, vecs = linalg.eigh(A.toarray(), M.toarray(), subset_by_index=[0, 0])
        return float(vals[0]), vecs[:, 0]
    try:
        vals, vecs = eigsh(A, k=1, M=M, sigma=sigma, which="LM", v0=v0, tol=0)
    except ArpackNoConvergence as exc:
        raise EigenSolveError(
            f"inner eigenvalue iteration did not converge: {exc}") from exc
    return float(vals[0]), vecs[:, 0]


def rho(mesh: Mesh, design: Design, lambda_trial: float, return_vector: bool = False,
        v0: np.ndarray | None = None):
    """Smallest eigenvalue of (K - lambda*W, M).

    rho(0) = 0 with the constant eigenvector; rho is concave in lambda and
    its positive root is the principal eigenvalue of the weighted problem.
    """
    if lambda_trial < 0:
        raise ValueError("lambda_trial must be nonnegative")
    K, M, W = assemble(mesh, design)
    A = _pattern_combination(K, [(-lambda_trial, W)])
    wmax = max(1.0, design.beta)
    sigma = -lambda_trial * wmax - max(1.0, 1.0 / mesh.diameter_bound() ** 2)
    if v0 is None:
        v0 = np.ones(A.shape[0])
    value, vec = _smallest_pair(A, M, sigma, v0)
    if return_vector:
        return value, vec
    return value


def _polish_eigenvector(A, M, shift, u, sweeps=2):
    """Inverse iteration about the converged eigenvalue; cleans the far-field
    entries of the eigenvector down to the local equation's accuracy."""
    lu = splu((A - shift * M).tocsc())
    for _ in range(sweeps):
        u = lu.solve(M @ u)
        u /= np.linalg.norm(u)
    return u


def _top_weighted_mode(W, M):
    """Largest eigenpair of (W, M); decides whether any discrete function
    carries positive favorable mass.  Eigenvalues lie in [-beta, 1]."""
    n = W.shape[0]
    if n <= _DENSE_CUTOFF:
        vals, vecs = linalg.eigh(W.toarray(), M.toarray(),
                                 subset_by_index=[n - 1, n - 1])
        return float(vals[0]), vecs[:, 0]
    try:
        vals, vecs = eigsh(W, k=1, M=M, sigma=1.001, which="LM",
                           v0=np.ones(n), tol=0)
    except ArpackNoConvergence as exc:
        raise EigenSolveError(
            f"feasibility eigensolve did not converge: {exc}") from exc
    return float(vals[0]), vecs[:, 0]


def principal_lambda(mesh: Mesh, design: Design, rtol: float = 1e-12,
                     lambda0: float | None = None) -> EigenResult:
    """Positive root of rho by geometric bracket scan plus Brent refinement.

    ``lambda0`` seeds the scan (e.g. with the previous eigenvalue during
    optimization); the default is the scale-aware guess 1/diam(Omega)^2.
    """
    if design.weight_integral() >= 0:
        raise NonNegativeAverageWeightError(
            "weight has nonnegative average; no positive principal eigenvalue")

    evaluations = 0
    last_vec = None

    def f(lam):
        nonlocal evaluations, last_vec
        value, vec = rho(mesh, design, lam, return_vector=True, v0=last_vec)
        evaluations += 1
        last_vec = vec
        return value

    K, M, W = assemble(mesh, design)
    start = lambda0 if lambda0 and lambda0 > 0 else 1.0 / mesh.diameter_bound() ** 2
    lam, val = start, f(start)
    if val > 0:
        lo, lo_val = lam, val
        hi = None
        for _ in range(30):
            lam *= 2.0
            val = f(lam)
            if val <= 0:
                hi, hi_val = lam, val
                break
            lo, lo_val = lam, val
        if hi is None:
            # certify a bracket from the top mode of (W, M): along its
            # direction rho(lam) <= rayleigh(K) - lam * top, so a root exists
            # iff the favorable set carries discretely positive mass
            top, x = _top_weighted_mode(W, M)
            if top <= 1e-10:
                raise EigenSolveError(
                    "favorable set carries no discretely positive mass "
                    f"(top weighted-mass eigenvalue {top:.3e}); the design is "
                    "too scattered for this mesh")
            certified = float((x @ (K @ x)) / (x @ (M @ x))) / top
            lam = max(certified * 1.001, lo * (1.0 + 1e-9))
            val = f(lam)
            if val > 0:
                raise BracketingError(
                    f"rho positive at certified bracket lambda = {lam:.6e}")
            hi, hi_val = lam, val
    else:
        hi, hi_val = lam, val
        lo = None
        for _ in range(80):
            lam *= 0.5
            val = f(lam)
            if val > 0:
                lo, lo_val = lam, val
                break
            hi, hi_val = lam, val
        if lo is None:
            raise BracketingError(f"rho stayed nonpositive down to lambda = {lam:.3e}")

    if hi_val == 0.0:
        lam_root = hi
    else:
        lam_root = optimize.brentq(f, lo, hi, rtol=max(rtol, 8.9e-16), maxiter=200)
    rho_res, u_raw = rho(mesh, design, lam_root, return_vector=True, v0=last_vec)
    evaluations += 1

    A = _pattern_combination(K, [(-lam_root, W)])
    candidates = []
    try:
        # Rayleigh-quotient sweeps track the mode nearest the ARPACK vector
        # and clean its exponentially small far field
        u = u_raw / np.linalg.norm(u_raw)
        for _ in range(3):
            shift = float((u @ (A @ u)) / (u @ (M @ u)))
            u = _polish_eigenvector(A, M, shift, u, sweeps=1)
        candidates.append(u)
    except RuntimeError:
        pass
    candidates.append(u_raw / np.linalg.norm(u_raw))

    chosen = None
    for u in candidates:
        if float(np.ones_like(u) @ (M @ u)) < 0:
            u = -u
        if u.min() > -1e-12 * u.max():
            chosen = u
            break
    if chosen is None:
        worst = min(u.min() / u.max() for u in candidates)
        raise EigenSolveError(
            f"principal eigenvector not positive (min/max {worst:.3e})")
    u = chosen / chosen.max()

    rayleigh = float((u @ (K @ u)) / (u @ (W @ u)))
    return EigenResult(lam=float(lam_root), u=u, rho_residual=abs(float(rho_res)),
                       rayleigh=rayleigh, iterations=evaluations)
