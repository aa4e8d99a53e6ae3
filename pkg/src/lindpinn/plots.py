"""SVG figures for evaluation runs."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def plot_trajectories(grid, predicted, truth, labels, path, data_times=None, data_values=None):
    """Predicted (solid) and oracle (dashed) observables, data as x markers."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for j, lab in enumerate(labels):
        (line,) = ax.plot(grid, predicted[:, j], label=f"<{lab}> learned")
        ax.plot(grid, truth[:, j], "--", color=line.get_color(), alpha=0.7)
        if data_times is not None:
            ax.plot(data_times, data_values[:, j], "x", color=line.get_color())
    ax.set_xlabel("t")
    ax.set_ylabel("expectation value")
    ax.legend(fontsize="small", ncol=2)
    return _save(fig, path)


def plot_rates(grid, learned, truth, channels, path):
    """Learned (solid) against true (dashed) time-dependent rates."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for k, ch in enumerate(channels):
        (line,) = ax.plot(grid, learned[:, k], label=f"gamma_{ch} learned")
        if truth is not None:
            ax.plot(grid, truth[:, k], "--", color=line.get_color(), label=f"gamma_{ch} true")
    ax.set_xlabel("t")
    ax.set_ylabel("rate")
    ax.legend(fontsize="small")
    return _save(fig, path)


def plot_concurrence(grid, learned, truth, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(grid, learned, label="learned")
    ax.plot(grid, truth, "--", label="oracle")
    ax.set_xlabel("t")
    ax.set_ylabel("concurrence")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize="small")
    return _save(fig, path)
