"""Figure rendering for CLI reports.

Each renderer takes the already-serialized report dict and a path stem and
writes PNG files next to the delimited output, returning the written paths.
Figures are diagnostic companions to the JSON/CSV payloads, not substitutes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finite(values):
    out = []
    for v in values:
        out.append(np.nan if v == "inf" else float(v))
    return np.array(out)


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def render_classify(report: dict, stem: str) -> list[str]:
    written = []
    tiers = report["tiers"]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name, tier in tiers.items():
        levels = tier.get("levels") or []
        values = tier.get("values") or []
        if not levels or any(isinstance(v, str) and v != "inf" for v in values):
            continue
        ax.plot(levels, _finite(values), marker="o", ms=3, label=name)
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("truncation level N")
    ax.set_ylabel("tier statistic")
    ax.set_title(f"{report.get('model', 'chain')}: sweep evidence")
    ax.legend(fontsize=8)
    written.append(_save(fig, f"{stem}_sweeps.png"))

    scan = report.get("scan") or {}
    if scan.get("lambdas"):
        fig, ax = plt.subplots(figsize=(6, 4))
        colors = {"converged": "tab:green", "diverging": "tab:red",
                  "inconclusive": "tab:orange"}
        lams = scan["lambdas"]
        verdicts = scan["verdicts"]
        ax.scatter(lams, np.arange(len(lams)),
                   c=[colors[v] for v in verdicts])
        for v, c in colors.items():
            ax.scatter([], [], c=c, label=v)
        ax.set_xscale("log")
        ax.set_xlabel("rate")
        ax.set_yticks([])
        ax.set_title("exponential scan verdicts by rate")
        ax.legend(fontsize=8)
        written.append(_save(fig, f"{stem}_scan.png"))
    return written


def render_sbp(report: dict, stem: str) -> list[str]:
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, key, label in [
            (axes[0], "ergodicity", "ratio statistic (running sup)"),
            (axes[1], "strong", "strong functional (running sup)")]:
        block = report.get(key)
        if not block:
            ax.set_visible(False)
            continue
        ax.plot(np.asarray(block["windows"], dtype=float) + 1,
                _finite(block["values"]), marker="o", ms=3)
        ax.set_xscale("log", base=2)
        ax.set_xlabel("rows")
        ax.set_title(f"{label}: {block['verdict']}", fontsize=9)
    written = [_save(fig, f"{stem}_statistics.png")]
    return written


def render_expmoment(report: dict, stem: str) -> list[str]:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for lam, block in zip(report["lambdas"], report["sweeps"]):
        vals = _finite(block["values"])
        ax.plot(block["levels"], vals, marker="o", ms=3,
                label=f"rate {lam:.3g} ({block['verdict']})")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("truncation level N")
    ax.set_ylabel("scaled exponential moment at target")
    ax.legend(fontsize=7)
    return [_save(fig, f"{stem}_curves.png")]


def render_moments(report: dict, stem: str) -> list[str]:
    fig, ax = plt.subplots(figsize=(6, 4))
    orders = [t["order"] for t in report["tables"]]
    for h in report["H"]:
        ax.plot(orders, [t["h_values"][str(h)] for t in report["tables"]],
                marker="o", label=f"target state {h}")
    ax.set_yscale("log")
    ax.set_xlabel("moment order")
    ax.set_ylabel("return-time moment")
    ax.legend(fontsize=8)
    return [_save(fig, f"{stem}_ladder.png")]


def render_simulate(report: dict, stem: str) -> list[str]:
    fig, ax = plt.subplots(figsize=(6, 4))
    samples = np.asarray(report.get("sample_preview", []), dtype=float)
    if len(samples):
        ax.hist(samples, bins=min(60, max(10, len(samples) // 50)))
    ax.set_xlabel("return time")
    ax.set_ylabel("count")
    ax.set_title("return-time samples (preview)")
    return [_save(fig, f"{stem}_histogram.png")]


def render_witness(report: dict, stem: str) -> list[str]:
    fig, ax = plt.subplots(figsize=(6, 4))
    stat = _finite(report.get("statistic", []))
    if len(stat):
        ax.plot(np.arange(1, len(stat) + 1), stat, marker="o", ms=3)
    ax.set_xlabel("term")
    ax.set_ylabel("tracking statistic (running sup)")
    ax.set_title(f"witness statistic: {report.get('verdict', '?')}")
    return [_save(fig, f"{stem}_statistic.png")]


def render_levels(report: dict, stem: str) -> list[str]:
    fig, ax = plt.subplots(figsize=(6, 4))
    stat = _finite(report.get("statistic", []))
    ax.plot(np.arange(1, len(stat) + 1), stat, marker="o", ms=3)
    ax.set_xlabel("family window")
    ax.set_ylabel("divergence statistic")
    ax.set_title(f"{report.get('family')}: max violation "
                 f"{report.get('max_violation'):.2e}")
    return [_save(fig, f"{stem}_statistic.png")]
