"""Panel specs and deterministic matplotlib rendering."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class MissingInput(Exception):
    """An input CSV named by the spec does not exist."""


class SchemaMismatch(Exception):
    """A referenced column is absent from the CSV header."""


@dataclass(frozen=True)
class Panel:
    name: str
    csv: str
    x: str
    y: tuple[str, ...]
    group: str | None = None
    xscale: str = "linear"
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""


@dataclass(frozen=True)
class FigureSpec:
    panels: tuple[Panel, ...]
    fmt: str = "png"
    combined: str = "combined"
    base_dir: Path = field(default_factory=Path)


def load_spec(path: str | Path) -> FigureSpec:
    path = Path(path)
    if not path.exists():
        raise MissingInput(f"spec file {path} does not exist")
    data = tomllib.loads(path.read_text())
    if int(data.get("version", 0)) != 1:
        raise SchemaMismatch("spec version must be 1")
    fmt = data.get("format", "png")
    if fmt not in ("png", "svg"):
        raise SchemaMismatch(f"unsupported output format {fmt!r}")
    panels = []
    for entry in data.get("panel", []):
        panels.append(Panel(
            name=str(entry["name"]),
            csv=str(entry["csv"]),
            x=str(entry["x"]),
            y=tuple(entry["y"]) if isinstance(entry["y"], list) else (str(entry["y"]),),
            group=entry.get("group"),
            xscale=entry.get("xscale", "linear"),
            title=entry.get("title", ""),
            xlabel=entry.get("xlabel", entry["x"]),
            ylabel=entry.get("ylabel", ""),
        ))
    if not panels:
        raise SchemaMismatch("spec declares no panels")
    return FigureSpec(panels=tuple(panels), fmt=fmt,
                      combined=data.get("combined", "combined"), base_dir=path.parent)


def _read_csv(path: Path) -> tuple[list[str], list[dict]]:
    if not path.exists():
        raise MissingInput(f"input CSV {path} does not exist")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        header = reader.fieldnames or []
    return header, rows


def _series(panel: Panel, base_dir: Path):
    """Yield (label, x array, y array) for every line in the panel."""
    header, rows = _read_csv(base_dir / panel.csv)
    needed = {panel.x, *panel.y} | ({panel.group} if panel.group else set())
    missing = needed - set(header)
    if missing:
        raise SchemaMismatch(f"{panel.csv} lacks columns {sorted(missing)}")
    if panel.group:
        groups = sorted({row[panel.group] for row in rows})
        for group in groups:
            subset = [row for row in rows if row[panel.group] == group]
            xs = np.array([float(row[panel.x]) for row in subset])
            for column in panel.y:
                ys = np.array([float(row[column]) for row in subset])
                label = group if len(panel.y) == 1 else f"{group}:{column}"
                yield label, xs, ys
    else:
        xs = np.array([float(row[panel.x]) for row in rows])
        for column in panel.y:
            ys = np.array([float(row[column]) for row in rows])
            yield column, xs, ys


def _draw(ax, panel: Panel, base_dir: Path) -> None:
    for label, xs, ys in _series(panel, base_dir):
        ax.plot(xs, ys, marker="o", markersize=2.5, linewidth=1.2, label=label)
    if panel.xscale == "log":
        ax.set_xscale("log")
    ax.set_title(panel.title or panel.name, fontsize=10)
    ax.set_xlabel(panel.xlabel, fontsize=9)
    ax.set_ylabel(panel.ylabel, fontsize=9)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)


_SAVE_KW = {"png": {"metadata": {"Software": "figures"}},
            "svg": {"metadata": {"Date": None, "Creator": None}}}


def _save(fig, path: Path, fmt: str) -> None:
    fig.savefig(path, format=fmt, dpi=110, **_SAVE_KW[fmt])
    plt.close(fig)


def render(spec: FigureSpec, out_dir: str | Path) -> list[Path]:
    """Render one image per panel plus the combined figure.

    Returns the written paths.  Deterministic for fixed inputs: the font
    set is matplotlib's bundled default and volatile metadata (dates,
    tool versions) is pinned.
    """
    matplotlib.rcParams["svg.hashsalt"] = "figures"
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for panel in spec.panels:
        fig, ax = plt.subplots(figsize=(4.2, 3.2), constrained_layout=True)
        _draw(ax, panel, spec.base_dir)
        path = out_dir / f"{panel.name}.{spec.fmt}"
        _save(fig, path, spec.fmt)
        written.append(path)

    cols = 2 if len(spec.panels) > 1 else 1
    rows = math.ceil(len(spec.panels) / cols)
    fig, axes = plt.subplots(rows, cols, figsize=(4.2 * cols, 3.2 * rows),
                             constrained_layout=True, squeeze=False)
    for k, panel in enumerate(spec.panels):
        _draw(axes[k // cols][k % cols], panel, spec.base_dir)
    for k in range(len(spec.panels), rows * cols):
        axes[k // cols][k % cols].axis("off")
    combined = out_dir / f"{spec.combined}.{spec.fmt}"
    _save(fig, combined, spec.fmt)
    written.append(combined)
    return written


def default_spec_toml(csv_dir: str | Path = ".", fmt: str = "png") -> str:
    """Spec text covering the three reproduction CSV sets.

    ``csv_dir`` is where the CSVs live relative to the spec file.
    """
    prefix = str(csv_dir).rstrip("/")
    p = (lambda name: f"{prefix}/{name}" if prefix not in (".", "") else name)
    return f"""version = 1
format = "{fmt}"
combined = "combined"

[[panel]]
name = "sparsity_vs_tau"
csv = "{p('tau_sweep.csv')}"
x = "tau"
y = ["sparsity_rate"]
title = "Support fraction vs budget"
ylabel = "nonzero fraction of W+K"

[[panel]]
name = "bounds_vs_tau"
csv = "{p('tau_sweep.csv')}"
x = "tau"
y = ["k_inf_norm", "pi_dev_inf"]
title = "Feedback size and stationary deviation"
ylabel = "value"

[[panel]]
name = "state_deviation"
csv = "{p('method_compare_deviation.csv')}"
x = "t"
y = ["state_dev"]
group = "method"
title = "State deviation from nominal"
ylabel = "||x_t - x*_t||_2"

[[panel]]
name = "er1_by_method"
csv = "{p('method_compare_errors.csv')}"
x = "T"
y = ["er1"]
group = "method"
title = "Inference error Er1"
ylabel = "Er1"

[[panel]]
name = "er2_by_method"
csv = "{p('method_compare_errors.csv')}"
x = "T"
y = ["er2"]
group = "method"
title = "Inference error Er2"
ylabel = "Er2"

[[panel]]
name = "noise_state_dev"
csv = "{p('noise_compare.csv')}"
x = "T"
y = ["mean_state_dev"]
group = "method"
xscale = "log"
title = "Noise baselines: state deviation"
ylabel = "mean deviation at T"

[[panel]]
name = "noise_er1"
csv = "{p('noise_compare.csv')}"
x = "T"
y = ["mean_er1"]
group = "method"
xscale = "log"
title = "Noise baselines: inference error"
ylabel = "mean Er1"
"""
