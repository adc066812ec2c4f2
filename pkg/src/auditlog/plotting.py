"""Timeline figure of a run: executed actions, log entries and audit failures."""

from __future__ import annotations

from pathlib import Path
from typing import Union

from .runner import RunResult
from .scenario import Scenario
from .syntax import format_action


def render_timeline(sc: Scenario, res: RunResult, path: Union[str, Path]) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    rows = ["trace"] + list(sc.agents)
    ypos = {r: len(rows) - 1 - k for k, r in enumerate(rows)}
    n = max(1, len(res.trace))
    fig, ax = plt.subplots(figsize=(max(6.0, 0.9 * n + 2), 0.6 * len(rows) + 1.5))
    for a in res.trace:
        ax.plot(a.id, ypos["trace"], "s", color="0.3")
        ax.annotate(format_action(a.template)[:20], (a.id, ypos["trace"]), textcoords="offset points",
                    xytext=(0, 8), ha="center", fontsize=7, rotation=20)
    for g in sc.agents:
        for r in res.state.log(g).records:
            guarded = bool(r.lac.conds or r.lac.obligs)
            ax.plot(r.lac.act.id, ypos[g], "o", color="tab:blue" if guarded else "tab:gray")
    for o in res.audits:
        for g, i, _ in o.result.failures:
            ax.plot(i, ypos[g], "x", color="tab:red", markersize=12, mew=2)
    ax.set_yticks([ypos[r] for r in rows])
    ax.set_yticklabels(rows)
    ax.set_xlabel("tick")
    ax.set_xticks(range(n))
    ax.set_xlim(-0.8, n - 0.2)
    ax.set_ylim(-0.7, len(rows) + 0.2)
    ax.grid(axis="x", alpha=0.3)
    ax.set_title("logged actions (blue: with conditions or obligations; red x: audit failure)", fontsize=9)
    fig.tight_layout()
    kwargs = {"metadata": {"Date": None}} if path.suffix.lower() == ".svg" else {}
    fig.savefig(path, **kwargs)
    plt.close(fig)
    return path
