"""Render report figures (PNG) alongside the delimited report output."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .sim import SimReport


def render_simulation_figures(rep: SimReport, outdir) -> list[str]:
    """Write energy / aliveness / reputation figures for one run."""
    os.makedirs(outdir, exist_ok=True)
    written = []

    slots = [r["slot"] for r in rep.slot_records]

    fig, ax = plt.subplots(figsize=(7, 4))
    for idx, node in enumerate(rep.node_order):
        series = [row[idx] if idx < len(row) else float("nan")
                  for row in rep.energy_timeline]
        ax.plot(slots[:len(series)], series, lw=0.8, label=f"node {node}")
    ax.set_xlabel("slot")
    ax.set_ylabel("remaining energy")
    ax.set_title(f"Per-node energy ({rep.policy}, seed {rep.seed})")
    if len(rep.node_order) <= 12:
        ax.legend(fontsize=7, ncol=2)
    path = os.path.join(outdir, "energy_timeline.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax1.plot(slots, [r["fraction_alive"] for r in rep.slot_records])
    ax1.set_ylabel("fraction alive")
    ax2.plot(slots, [r["energy_variance"] for r in rep.slot_records])
    ax2.set_ylabel("energy variance")
    ax2.set_xlabel("slot")
    fig.suptitle(f"Network health ({rep.policy}, seed {rep.seed})")
    path = os.path.join(outdir, "network_health.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    if rep.round_records:
        fig, ax = plt.subplots(figsize=(7, 4))
        rounds = [r["round"] for r in rep.round_records]
        nodes = rep.node_order
        for node in nodes:
            series = [r["reputation"].get(node, 0.0)
                      for r in rep.round_records]
            ax.plot(rounds, series, lw=0.8, label=f"node {node}")
        ax.set_xlabel("election round")
        ax.set_ylabel("reputation")
        ax.set_title("Reputation per node")
        if len(nodes) <= 12:
            ax.legend(fontsize=7, ncol=2)
        path = os.path.join(outdir, "reputation.png")
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def render_comparison_figures(reports: dict[str, SimReport], outdir) -> list[str]:
    """Overlay fraction-alive and variance timelines across policies."""
    os.makedirs(outdir, exist_ok=True)
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for policy in sorted(reports):
        rep = reports[policy]
        slots = [r["slot"] for r in rep.slot_records]
        ax1.plot(slots, [r["fraction_alive"] for r in rep.slot_records],
                 label=policy)
        ax2.plot(slots, [r["energy_variance"] for r in rep.slot_records],
                 label=policy)
    ax1.set_ylabel("fraction alive")
    ax2.set_ylabel("energy variance")
    ax2.set_xlabel("slot")
    ax1.legend()
    fig.suptitle("Election policy comparison")
    path = os.path.join(outdir, "policy_comparison.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]
