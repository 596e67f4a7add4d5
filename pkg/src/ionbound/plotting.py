"""Report figures (matplotlib, file output only)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_run(result, outdir, stem):
    """Energy, particle-number and moment panels for one run; returns paths."""
    recs = result.records
    t = np.array([r.t for r in recs])
    E = np.array([r.energy.total for r in recs])
    paths = []

    fig, ax = plt.subplots(1, 2, figsize=(10, 4))
    ax[0].plot(t, (E - E[0]) / abs(E[0]))
    ax[0].set_xlabel("t")
    ax[0].set_ylabel("(E(t) - E(0)) / |E(0)|")
    ax[0].set_title("energy drift")
    ax[1].plot(t, [r.N for r in recs], label="N(t)")
    ax[1].plot(t, [r.N_in_B for r in recs], label="N(t, B)")
    ax[1].plot(t, [r.escaped for r in recs], label="escaped")
    ax[1].set_xlabel("t")
    ax[1].legend()
    ax[1].set_title("particle numbers")
    paths.append(_save(fig, outdir / f"{stem}_energy.png"))

    fig, ax = plt.subplots(1, 2, figsize=(10, 4))
    Z = result.spec.Z
    for j, p in enumerate(result.certificate.per_R):
        line, = ax[0].plot(t, [r.M[j] for r in recs], lw=0.8, label=f"R={p.R:g}")
        ax[0].plot(t, p.avg_M, color=line.get_color(), ls="--")
        a = np.array([r.virial[j].a_boundary for r in recs])
        ax[1].plot(t[1:], np.abs(a[1:] - a[0]) / t[1:], color=line.get_color(), label=f"R={p.R:g}")
    ax[0].axhline(2 * Z, color="k", lw=0.8, ls=":")
    ax[0].set_xlabel("t")
    ax[0].set_ylabel("M_R (solid), <M_R>_T (dashed)")
    ax[0].legend(fontsize=8)
    ax[1].set_xscale("log")
    ax[1].set_yscale("log")
    ax[1].set_xlabel("T")
    ax[1].set_ylabel("|A(T)|")
    ax[1].legend(fontsize=8)
    paths.append(_save(fig, outdir / f"{stem}_moments.png"))
    return paths


def plot_tf_ground_states(states, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    for s in states:
        ax.loglog(s.grid.r, s.rho, label=f"Z={s.Z:g}")
    ax.set_xlabel("r")
    ax.set_ylabel("rho_TF")
    ax.set_xlim(1e-3, 50)
    ax.set_ylim(1e-8, None)
    ax.legend()
    return _save(fig, path)


def plot_convergence(report, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.semilogy(report["levels"], report["energy_drift"], "o-")
    ax.set_xlabel("refinement level")
    ax.set_ylabel("max relative energy drift")
    return _save(fig, path)
