"""Figure rendering for scan surfaces and tomographed density matrices."""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .qstate import basis_labels, n_qubits_of  # noqa: E402

SPIN_NAMES = {1: "$^{1}$H", 2: "$^{19}$F", 3: "$^{13}$C"}

plt.rcParams.update({"font.size": 9, "axes.titlesize": 9, "savefig.dpi": 150})


def plot_surfaces(surf: dict, stage: str, path) -> str:
    """Mesh (top row) and contour (bottom row) of the real signal per spin."""
    fig = plt.figure(figsize=(10, 6))
    for col, spin in enumerate((1, 2, 3)):
        thetas, phis, z = surf[(stage, spin)]
        pp, tt = np.meshgrid(phis, thetas)
        ax = fig.add_subplot(2, 3, col + 1, projection="3d")
        ax.plot_wireframe(pp, tt, z, color="k", linewidth=0.4)
        ax.set_zlim(-1.05, 1.05)
        ax.set_xlabel(r"$\phi$ (deg)")
        ax.set_ylabel(r"$\theta$ (deg)")
        ax.set_title(f"{SPIN_NAMES[spin]} ({stage})")
        ax2 = fig.add_subplot(2, 3, col + 4)
        cs = ax2.contourf(pp, tt, z, levels=np.linspace(-1.05, 1.05, 22), cmap="RdBu_r")
        ax2.set_xlabel(r"$\phi$ (deg)")
        ax2.set_ylabel(r"$\theta$ (deg)")
        if col == 2:
            fig.colorbar(cs, ax=ax2, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def plot_density(rho, path, title: str = "") -> str:
    """3D bars of the real and imaginary parts of a density matrix."""
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    labels = basis_labels(n_qubits_of(d))
    xx, yy = np.meshgrid(np.arange(d), np.arange(d))
    fig = plt.figure(figsize=(9, 4))
    for k, (part, name) in enumerate(((rho.real, "Re"), (rho.imag, "Im"))):
        ax = fig.add_subplot(1, 2, k + 1, projection="3d")
        z = part.ravel()
        ax.bar3d(xx.ravel(), yy.ravel(), np.minimum(z, 0), 0.6, 0.6, np.abs(z),
                 color=np.where(z >= 0, "#4c72b0", "#c44e52"), shade=True)
        ax.set_xticks(np.arange(d) + 0.3)
        ax.set_xticklabels(labels, fontsize=6)
        ax.set_yticks(np.arange(d) + 0.3)
        ax.set_yticklabels(labels, fontsize=6)
        ax.set_zlim(-0.6, 0.6)
        ax.set_title(f"{name} {title}".strip())
    # tight_layout cannot size 3D axes; fixed margins instead
    fig.subplots_adjust(left=0.02, right=0.98, bottom=0.05, top=0.92, wspace=0.05)
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def render_scan(surf: dict, out_dir) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    return [plot_surfaces(surf, stage, os.path.join(out_dir, f"signals_{stage}.png"))
            for stage in ("input", "output")]


def render_tomo(result: dict, out_dir) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    return [
        plot_density(result["rho"], os.path.join(out_dir, "output_density.png"), "output state"),
        plot_density(result["marginal_12"], os.path.join(out_dir, "bell_marginal.png"), "qubits 1,2"),
    ]
