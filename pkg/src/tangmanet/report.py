"""Figure rendering for training reports.

Renders the standard four-panel training summary (train loss, val loss,
val accuracy, epoch time), the learnable-parameter trajectories, and an
overlay comparing several activations.  Uses matplotlib's object API
directly so no interactive backend is ever touched.
"""

from pathlib import Path

from matplotlib.figure import Figure

_PANELS = (
    ("train_loss", "Training loss"),
    ("val_loss", "Validation loss"),
    ("val_accuracy", "Validation accuracy (%)"),
    ("epoch_time_s", "Epoch time (s)"),
)


def _new_grid():
    fig = Figure(figsize=(10.5, 7.0), dpi=110)
    axes = fig.subplots(2, 2).ravel()
    for ax, (_, title) in zip(axes, _PANELS):
        ax.set_title(title)
        ax.set_xlabel("epoch")
        ax.grid(True, alpha=0.3)
    return fig, axes


def render_metrics_figure(records, path):
    """Four-panel summary of one run's epoch records."""
    fig, axes = _new_grid()
    epochs = [r.epoch for r in records]
    for ax, (attr, _) in zip(axes, _PANELS):
        ax.plot(epochs, [getattr(r, attr) for r in records], marker="o")
    fig.tight_layout()
    fig.savefig(path)
    return Path(path)


def render_compare_figure(results, path):
    """Overlay the four panels for ``{activation: [EpochRecord]}``."""
    fig, axes = _new_grid()
    for name, records in results.items():
        epochs = [r.epoch for r in records]
        for ax, (attr, _) in zip(axes, _PANELS):
            ax.plot(epochs, [getattr(r, attr) for r in records], marker="o", label=name)
    for ax in axes:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    return Path(path)


def render_trace_figure(traces, path):
    """Alpha/gamma trajectories over the sampled batch indices."""
    fig = Figure(figsize=(7.5, 4.5), dpi=110)
    ax = fig.subplots()
    xs = range(1, len(traces) + 1)
    ax.plot(xs, [t.alpha for t in traces], marker="o", label="alpha")
    ax.plot(xs, [t.gamma for t in traces], marker="s", label="gamma")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([f"{t.epoch}:{t.batch}" for t in traces], rotation=60, fontsize=7)
    ax.set_xlabel("epoch:batch")
    ax.set_ylabel("value")
    ax.set_title("Learnable activation parameters")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    return Path(path)
