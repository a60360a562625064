"""Static SVG views of trajectories (pure functions of the numbers passed in)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed hash salt and no date: identical inputs give byte-identical files
matplotlib.rcParams["svg.hashsalt"] = "pngdyn"
matplotlib.rcParams["svg.fonttype"] = "none"
_META = {"Date": None, "Creator": "pngdyn"}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def compare_svg(path, abm, ode, qre_policies, title=""):
    """Mean policy of every population/action: ABM solid, ODE dashed, QRE dotted."""
    n = abm.n_populations
    fig, axes = plt.subplots(1, n, figsize=(4.5 * n, 3.6), squeeze=False)
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, ax in enumerate(axes[0]):
        t_abm = np.maximum(abm.t.astype(float), 1.0)
        for a, label in enumerate(abm.actions[i]):
            c = colors[a % len(colors)]
            ax.plot(t_abm, abm.mean_policy[i][:, a], "-", color=c, lw=1.4, label=f"{label} ABM")
            ax.plot(ode.time, ode.policy[i][:, a], "--", color=c, lw=1.2, label=f"{label} model")
            if qre_policies is not None:
                ax.axhline(qre_policies[i][a], color="k", ls=":", lw=1.0)
        ax.set_xscale("log")
        ax.set_ylim(-0.02, 1.02)
        ax.set_xlabel("t")
        ax.set_ylabel("mean policy")
        ax.set_title(f"{title} population {i}")
        ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    _save(fig, path)


def variance_svg(path, curves, title=""):
    """Log-log regret variance against ``t`` with a slope -2 reference line.

    ``curves`` is a list of ``(label, t, variance)`` with positive entries.
    """
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    lo, hi, vref = np.inf, 0.0, None
    for label, t, v in curves:
        m = (t > 0) & (v > 0)
        if not m.any():
            continue
        ax.loglog(t[m], v[m], lw=1.0, label=label)
        lo, hi = min(lo, t[m][0]), max(hi, t[m][-1])
        vref = v[m][0] if vref is None else max(vref, v[m][0])
    if vref is not None:
        tt = np.array([lo, hi])
        ax.loglog(tt, vref * (tt / lo) ** -2.0, "k--", lw=1.0, label="slope -2")
    ax.set_xlabel("t")
    ax.set_ylabel("regret variance")
    ax.set_title(title)
    ax.legend(fontsize=6, loc="best", ncol=2)
    fig.tight_layout()
    _save(fig, path)
