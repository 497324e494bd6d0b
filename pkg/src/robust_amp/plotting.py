"""Matplotlib renderings of the reproduction data (PNG files next to the CSVs)."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "figure.figsize": (6.0, 4.2),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "legend.fontsize": 8,
    "savefig.dpi": 150,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_potentials(curves, path):
    """``curves``: iterable of ``(rho, PotentialCurve)``."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for rho, curve in curves:
            # shift so curves with different rho share a vertical range
            ref = curve.phi[-1]
            line, = ax.semilogx(curve.grid, curve.phi - ref, label=f"rho={rho:g}")
            for mx in curve.maxima:
                ax.plot(mx.e, mx.phi - ref, "o", color=line.get_color(), ms=4)
        ax.set_xlabel("E")
        ax.set_ylabel("Phi(E) - Phi(rho)")
        ax.legend()
        return _save(fig, path)


def plot_mse_vs_eta(lines, amp_points, path):
    """``lines``: rows of (rho, eta, bayes_mse, trap_mse); ``amp_points``: (rho, eta, mse)."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        lines = np.asarray(lines, dtype=float).reshape(-1, 4)
        colors = {}
        for rho in np.unique(lines[:, 0]):
            sel = lines[lines[:, 0] == rho]
            line, = ax.loglog(sel[:, 1], sel[:, 2], label=f"rho={rho:g}")
            colors[rho] = line.get_color()
            trap = np.isfinite(sel[:, 3])
            if trap.any():
                ax.loglog(sel[trap, 1], sel[trap, 3], "--", color=line.get_color())
        for rho, eta, mse in amp_points:
            ax.loglog(eta, mse, "o", color=colors.get(rho, "k"), ms=4)
        ax.set_xlabel("eta")
        ax.set_ylabel("MSE")
        ax.legend()
        return _save(fig, path)


def plot_phase_diagram(line_sets, path):
    """``line_sets``: mapping label -> list of TransitionLine (alpha columns, rho/alpha sweep)."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for (label, lines), color in zip(line_sets.items(), ("tab:blue", "tab:red", "tab:green")):
            for line in lines:
                if not line.points:
                    continue
                x, yv = np.array(line.points).T
                style = ":" if line.kind.value == "spinodal" else "-"
                ax.plot(x, yv, style, color=color, label=f"{label} {line.kind.value}")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1)
        ax.set_xlabel("alpha = M/N")
        ax.set_ylabel("rho/alpha = K/M")
        ax.legend()
        return _save(fig, path)


def plot_trajectories(series, path):
    """``series``: iterable of (label, de_seq, amp_mse_seq)."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for label, de_seq, amp_seq in series:
            line, = ax.semilogy(np.arange(len(de_seq)), de_seq, label=f"DE {label}")
            if amp_seq is not None and len(amp_seq):
                ax.semilogy(np.arange(1, len(amp_seq) + 1), amp_seq, "o",
                            color=line.get_color(), ms=3)
        ax.set_xlabel("iteration t")
        ax.set_ylabel("MSE")
        ax.legend()
        return _save(fig, path)
