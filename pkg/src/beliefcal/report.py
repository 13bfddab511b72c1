"""CSV, markdown and figure output for sweeps and flipsets."""
from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

CELL_COLUMNS = ["sigma", "lambda", "beta", "neg_log_prob", "avg_cost", "fn_cost", "tn_cost",
                "denial_count", "kept"]
FLIPSET_COLUMNS = ["row", "label", "decision", "probability", "cost", "kkt_residual", "actions"]

LABELS = {
    "neg_log_prob": "Log-Prob",
    "fn_cost": "FN Cost",
    "tn_cost": "TN Cost",
}
COST_LABELS = {
    "plain": "Recourse Cost",
    "fn_tn_split": "Recourse Cost",
    "actionable": "Actionable Cost",
    "policy": "Policy Cost",
}


def fmt(x) -> str:
    """Shortest decimal that round-trips at 12 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x == 0:
        return "0"
    short = repr(x)
    if len(short.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 12:
        return short
    return f"{x:.12g}"


def cell_row(cell, kept=True) -> list:
    b = cell.belief
    return [b.sigma, b.lam, b.beta, cell.neg_log_prob, cell.avg_cost, cell.fn_cost,
            cell.tn_cost, cell.denial_count, bool(kept)]


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def read_csv(path) -> tuple[list, list]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def write_cells(path, run):
    kept = {id(c) for c in run.kept}
    write_csv(path, CELL_COLUMNS, [cell_row(c, id(c) in kept) for c in run.cells])


def write_pareto(path, run):
    write_csv(path, CELL_COLUMNS, [cell_row(c) for c in run.pareto.items])


def _sig(x, digits=3):
    return f"{x:.{digits}g}"


def pareto_markdown(run, kind="plain") -> str:
    """Markdown table of the frontier: sigma, lambda, [beta,] objectives."""
    show_beta = any(c.belief.beta != 0 for c in run.cells)
    cols = list(run.objectives)
    if run.filters.get("tn_floor") is not None and "tn_cost" not in cols:
        # show the filtered quantity next to the objectives it constrains
        cols.insert(len(cols) - 1 if cols[-1] == "neg_log_prob" else len(cols), "tn_cost")
    head = ["σ", "λ"] + (["β"] if show_beta else [])
    head += [COST_LABELS.get(kind, "Recourse Cost") if c == "avg_cost" else LABELS[c] for c in cols]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for cell in run.pareto.items:
        b = cell.belief
        vals = [f"{b.sigma:g}", f"{b.lam:g}"] + ([f"{b.beta:g}"] if show_beta else [])
        vals += [_sig(cell.objective(c)) for c in cols]
        lines.append("| " + " | ".join(vals) + " |")
    if run.pareto.warning:
        lines.append("")
        lines.append(f"_warning: {run.pareto.warning}_")
    return "\n".join(lines) + "\n"


def scatter_axes(objectives):
    """Pick the (x, y) objectives for the scatter plot."""
    objectives = list(objectives)
    if "neg_log_prob" in objectives:
        others = [o for o in objectives if o != "neg_log_prob"]
        return (others[0] if others else "avg_cost"), "neg_log_prob"
    if len(objectives) >= 2:
        return objectives[0], objectives[1]
    return objectives[0], "neg_log_prob"


def plot_scatter(path, run, kind="plain"):
    """Cost vs negative log-probability for every cell, frontier highlighted."""
    xname, yname = scatter_axes(run.objectives)
    kept = {id(c) for c in run.kept}
    front = run.pareto.items

    plt.rcParams["svg.hashsalt"] = "beliefcal"
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    xs = np.array([c.objective(xname) for c in run.cells])
    ys = np.array([c.objective(yname) for c in run.cells])
    mask = np.array([id(c) in kept for c in run.cells], dtype=bool)
    ax.scatter(xs[mask], ys[mask], s=18, color="#7f7f7f", label="beliefs", zorder=1)
    if np.any(~mask):
        ax.scatter(xs[~mask], ys[~mask], s=18, facecolors="none", edgecolors="#bbbbbb",
                   label="filtered out", zorder=1)
    if front:
        fx = [c.objective(xname) for c in front]
        fy = [c.objective(yname) for c in front]
        order = np.argsort(fx, kind="stable")
        ax.plot(np.array(fx)[order], np.array(fy)[order], "-o", color="#d62728", ms=5,
                lw=1, label="Pareto frontier", zorder=2)
        for c, x, y in zip(front, fx, fy):
            b = c.belief
            tag = f"σ={b.sigma:g}, λ={b.lam:g}" + (f", β={b.beta:g}" if b.beta else "")
            ax.annotate(tag, (x, y), textcoords="offset points", xytext=(4, 4), fontsize=6)
    label = lambda o: COST_LABELS.get(kind, "Recourse Cost") if o == "avg_cost" else (
        "negative log probability" if o == "neg_log_prob" else LABELS[o])
    ax.set_xlabel(label(xname))
    ax.set_ylabel(label(yname))
    ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_report(out_dir, run, kind="plain") -> dict:
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name)
             for name in ("cells.csv", "pareto.csv", "pareto.md", "scatter.svg")}
    write_cells(paths["cells.csv"], run)
    write_pareto(paths["pareto.csv"], run)
    with open(paths["pareto.md"], "w", encoding="utf-8") as fh:
        fh.write(pareto_markdown(run, kind))
    plot_scatter(paths["scatter.svg"], run, kind)
    return paths


def action_listing(names, action) -> str:
    """``name=+value;...`` for nonzero components, largest magnitude first."""
    order = sorted(range(len(action)), key=lambda i: (-abs(action[i]), i))
    return ";".join(f"{names[i]}={float(action[i]):+.12g}" for i in order if action[i] != 0)


def write_flipset(path, names, rows, selected):
    out = []
    for i in selected:
        out.append([int(rows.index[i]), int(rows.labels[i]), int(rows.decision[i]),
                    float(rows.probability[i]), float(rows.cost[i]),
                    float(rows.kkt_residual[i]), action_listing(names, rows.action[i])])
    write_csv(path, FLIPSET_COLUMNS, out)
