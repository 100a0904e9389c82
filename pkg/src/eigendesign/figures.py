"""Matplotlib rendering of solver results to image files.

Import of the plotting backend is deferred into the functions so that the
numerical core stays import-light; every function returns the list of files
it wrote.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_limit(sol, constants, outdir: str | Path) -> list[Path]:
    """Profile and compensated-tail plots for a radial limit solution."""
    from .radial import compensated_tail, eval_profile

    plt = _plt()
    outdir = Path(outdir)
    paths = []

    r = np.linspace(0.0, 8.0 * sol.rbar, 600)
    w, dw = eval_profile(sol, r)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(r, w, label="w(r)")
    ax.plot(r, dw, label="w'(r)", alpha=0.7)
    ax.axvline(sol.rbar, color="k", lw=0.8, ls=":")
    ax.set_xlabel("r")
    ax.set_title(f"radial profile, N={sol.config.dim}, beta={sol.config.beta}, "
                 f"mu={sol.mu:.6f}")
    ax.legend()
    p = outdir / "fig_profile.png"
    fig.savefig(p, dpi=130, bbox_inches="tight")
    plt.close(fig)
    paths.append(p)

    r = np.linspace(2.0 * sol.rbar, 30.0 * sol.rbar, 400)
    comp = compensated_tail(sol, r)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(r / sol.rbar, comp)
    ax.set_xlabel("r / rbar")
    ax.set_ylabel("log w + sqrt(mu beta) r + (N-1)/2 log r")
    ax.set_title("compensated exponential tail")
    p = outdir / "fig_tail.png"
    fig.savefig(p, dpi=130, bbox_inches="tight")
    plt.close(fig)
    paths.append(p)
    return paths


def render_field(mesh, design, u, outdir: str | Path,
                 stem: str = "fig") -> list[Path]:
    """Design and eigenfunction plots on a mesh (1D line, 2D tripcolor)."""
    plt = _plt()
    outdir = Path(outdir)
    paths = []
    if mesh.dim == 1:
        x = mesh.vertices[:, 0]
        fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
        centers = mesh.centroids()[:, 0]
        order = np.argsort(centers)
        ax1.step(centers[order], design.element_weight[order], where="mid")
        ax1.set_ylabel("weight")
        order_v = np.argsort(x)
        ax2.plot(x[order_v], u[order_v])
        ax2.set_ylabel("u")
        ax2.set_xlabel("x")
        p = outdir / f"{stem}_design.png"
        fig.savefig(p, dpi=130, bbox_inches="tight")
        plt.close(fig)
        paths.append(p)
        return paths

    import matplotlib.tri as mtri

    tri = mtri.Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1],
                             mesh.elements)
    fig, ax = plt.subplots(figsize=(5.5, 5))
    tpc = ax.tripcolor(tri, facecolors=design.element_weight, cmap="coolwarm")
    fig.colorbar(tpc, ax=ax, label="weight")
    ax.set_aspect("equal")
    p = outdir / f"{stem}_design.png"
    fig.savefig(p, dpi=130, bbox_inches="tight")
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(5.5, 5))
    tpc = ax.tripcolor(tri, u, shading="gouraud", cmap="viridis")
    fig.colorbar(tpc, ax=ax, label="u")
    ax.set_aspect("equal")
    p = outdir / f"{stem}_eigenfunction.png"
    fig.savefig(p, dpi=130, bbox_inches="tight")
    plt.close(fig)
    paths.append(p)
    return paths


def render_sweep(records, dim: int, outdir: str | Path,
                 target: float | None = None,
                 bound: dict[float, float] | None = None) -> list[Path]:
    """Rescaled-convergence and log-log power-law plots for a sweep."""
    plt = _plt()
    outdir = Path(outdir)
    paths = []
    deltas = np.array([r.delta for r in records])
    od = np.array([r.od_value for r in records])
    rescaled = np.array([r.rescaled for r in records])

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(deltas, rescaled, "o-", label="od(delta) * delta^(2/N)")
    if bound:
        bd = np.array([bound[r.delta] * r.delta ** (2.0 / dim) for r in records])
        ax.semilogx(deltas, bd, "s--", label="curvature-corrected bound")
    if target is not None:
        ax.axhline(target, color="k", lw=0.8, ls=":", label="limit coefficient")
    ax.set_xlabel("delta")
    ax.legend()
    p = outdir / "fig_rescaled.png"
    fig.savefig(p, dpi=130, bbox_inches="tight")
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(deltas, od, "o-", label="od(delta)")
    ref = od[-1] * (deltas / deltas[-1]) ** (-2.0 / dim)
    ax.loglog(deltas, ref, "k:", label=f"slope -2/{dim}")
    ax.set_xlabel("delta")
    ax.legend()
    p = outdir / "fig_loglog.png"
    fig.savefig(p, dpi=130, bbox_inches="tight")
    plt.close(fig)
    paths.append(p)
    return paths
