"""Figures written next to the CSV/table output (optional ``--figures DIR``)."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .power import PowerInputs, local_power_sf, local_power_zc  # noqa: E402
from .simulation import SIM_METHODS, CellError  # noqa: E402

_STYLE = {
    "SF": dict(color="#1b6ca8", marker="o"),
    "ZC": dict(color="#d1495b", marker="s"),
    "EB": dict(color="#66a182", marker="^"),
}
_RC = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "savefig.dpi": 150,
}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def plot_simulation(results, outdir) -> list[Path]:
    """Rejection rate against ||beta||^2, one file per (residual, scenario, T).

    Panels are (n, p) by alternative shape; the null cells are the point at 0.
    """
    outdir = Path(outdir)
    groups = defaultdict(list)
    for res in results:
        if isinstance(res, CellError):
            continue
        c = res.config
        groups[(c.residual, c.scenario, c.T)].append(res)

    written = []
    with plt.rc_context(_RC):
        for (residual, scenario, T), cells in groups.items():
            sizes = sorted({(r.config.n, r.config.p) for r in cells})
            shapes = [s for s in ("Nonsparse", "Sparse5") if any(r.config.alternative == s for r in cells)]
            shapes = shapes or ["Null"]
            fig, axes = plt.subplots(len(sizes), len(shapes), squeeze=False,
                                     figsize=(3.2 * len(shapes), 2.4 * len(sizes)), sharey=True)
            for i, (n, p) in enumerate(sizes):
                for j, shape in enumerate(shapes):
                    ax = axes[i][j]
                    pts = sorted(
                        (r for r in cells
                         if (r.config.n, r.config.p) == (n, p)
                         and r.config.alternative in (shape, "Null")),
                        key=lambda r: r.config.beta_norm_sq,
                    )
                    x = [r.config.beta_norm_sq for r in pts]
                    for m in SIM_METHODS:
                        y = [r.rejection_rate(m) for r in pts]
                        err = [2 * r.mc_standard_error(m) for r in pts]
                        ax.errorbar(x, y, yerr=err, label=m, lw=1.2, ms=4, capsize=2, **_STYLE[m])
                    ax.axhline(pts[0].config.alpha if pts else 0.05, color="0.6", lw=0.8, ls=":")
                    ax.set_ylim(0, 1)
                    ax.set_title(f"(n,p)=({n},{p}), {shape.lower()}")
                    if i == len(sizes) - 1:
                        ax.set_xlabel(r"$\|\beta\|^2$")
                    if j == 0:
                        ax.set_ylabel("rejection rate")
            axes[0][0].legend(loc="upper left")
            fig.suptitle(f"{residual} residuals, scenario {scenario}, T={T}")
            fig.tight_layout()
            written.append(_save(fig, outdir / f"power_{residual}_{scenario}_T{T}.png"))
    return written


def plot_power_cases(cases, outdir) -> list[Path]:
    """Local power of SF and ZC against the sample size, one file per case."""
    outdir = Path(outdir)
    written = []
    with plt.rc_context(_RC):
        for case in cases:
            inp = case.inputs
            ns = np.unique(np.linspace(5, max(10, 3 * inp.n), 60).astype(int))
            sf, zc = [], []
            for n in ns:
                scaled = PowerInputs(inp.sigma, inp.delta_beta, inp.sigma2, int(n),
                                     inp.kurtosis_excess, inp.gamma)
                sf.append(local_power_sf(scaled, case.alpha))
                zc.append(local_power_zc(scaled, case.alpha))
            fig, ax = plt.subplots(figsize=(4, 3))
            ax.plot(ns, sf, label="SF", color=_STYLE["SF"]["color"])
            ax.plot(ns, zc, label="ZC", color=_STYLE["ZC"]["color"], ls="--")
            ax.axvline(inp.n, color="0.6", lw=0.8, ls=":")
            ax.set_ylim(0, 1)
            ax.set_xlabel("n")
            ax.set_ylabel("asymptotic power")
            ax.set_title(case.name)
            ax.legend(loc="lower right")
            safe = "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in case.name)
            written.append(_save(fig, outdir / f"local_power_{safe}.png"))
    return written
