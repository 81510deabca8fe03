//! Plot scripts for the emitted CSVs. The generated Python reads only the
//! CSV it is pointed at and needs matplotlib.

use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    /// F1 and diversities against list size, one line per alpha.
    Grid,
    /// Original value against the replicate quantile band.
    Study,
    /// Mean individual diversity heat map.
    Mosaic,
}

const PRELUDE: &str = r#"import csv
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

"#;

pub fn script(kind: PlotKind, csv_path: &str, image_path: &str) -> String {
    let body = match kind {
        PlotKind::Grid => GRID,
        PlotKind::Study => STUDY,
        PlotKind::Mosaic => MOSAIC,
    };
    format!(
        "{PRELUDE}CSV = {csv:?}\nOUT = {img:?}\nif len(sys.argv) > 1:\n    OUT = sys.argv[1]\n\nwith open(CSV, newline=\"\") as f:\n    rows = list(csv.DictReader(f))\n\n{body}",
        csv = csv_path,
        img = image_path,
    )
}

const GRID: &str = r#"metrics = [("f1", "F1"), ("mi_diversity", "Mean individual diversity"), ("col_diversity", "Collective diversity")]
series = defaultdict(list)
for r in rows:
    if r["replicate"] != "0":
        continue
    series[float(r["alpha"])].append(r)

fig, axes = plt.subplots(1, len(metrics), figsize=(5 * len(metrics), 4))
for ax, (key, title) in zip(axes, metrics):
    for alpha in sorted(series, reverse=True):
        pts = sorted(series[alpha], key=lambda r: int(r["list_size"]))
        ax.plot([int(r["list_size"]) for r in pts], [float(r[key]) for r in pts], marker="o", label=f"alpha={alpha:g}")
    ax.set_xlabel("list size")
    ax.set_title(title)
axes[0].legend()
fig.tight_layout()
fig.savefig(OUT, dpi=150)
"#;

const STUDY: &str = r#"metrics = ["f1", "mi_diversity", "col_diversity"]
sizes = sorted({int(r["list_size"]) for r in rows})
fig, axes = plt.subplots(len(metrics), len(sizes), figsize=(4 * len(sizes), 3 * len(metrics)), squeeze=False)
for i, m in enumerate(metrics):
    for j, n in enumerate(sizes):
        ax = axes[i][j]
        pts = sorted((r for r in rows if r["metric"] == m and int(r["list_size"]) == n), key=lambda r: float(r["alpha"]))
        xs = [float(r["alpha"]) for r in pts]
        ax.fill_between(xs, [float(r["q10"]) for r in pts], [float(r["q90"]) for r in pts], alpha=0.3, label="q10-q90")
        ax.plot(xs, [float(r["median"]) for r in pts], linestyle="--", label="median")
        ax.plot(xs, [float(r["original"]) for r in pts], marker="o", label="original")
        ax.set_title(f"{m}, N={n}")
        ax.set_xlabel("alpha")
axes[0][0].legend()
fig.tight_layout()
fig.savefig(OUT, dpi=150)
"#;

const MOSAIC: &str = r#"panels = sorted({r["middle_relation"] for r in rows})
fig, axes = plt.subplots(1, len(panels), figsize=(4 * len(panels), 4), squeeze=False)
for ax, middle in zip(axes[0], panels):
    cells = [r for r in rows if r["middle_relation"] == middle]
    srcs = sorted({r["source_group"] for r in cells})
    tgts = sorted({r["target_group"] for r in cells})
    grid = [[float("nan")] * len(tgts) for _ in srcs]
    for r in cells:
        grid[srcs.index(r["source_group"])][tgts.index(r["target_group"])] = float(r["value"])
    im = ax.imshow(grid, norm=matplotlib.colors.LogNorm(), cmap="viridis")
    ax.set_xticks(range(len(tgts)), tgts)
    ax.set_yticks(range(len(srcs)), srcs)
    ax.set_title(middle)
    for i, row in enumerate(grid):
        for j, v in enumerate(row):
            ax.text(j, i, f"{v:.2f}", ha="center", va="center", color="w", fontsize=7)
    fig.colorbar(im, ax=ax)
fig.tight_layout()
fig.savefig(OUT, dpi=150)
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_embeds_paths() {
        let s = script(PlotKind::Grid, "out/grid.csv", "grid.png");
        assert!(s.contains("CSV = \"out/grid.csv\""));
        assert!(s.contains("OUT = \"grid.png\""));
        assert!(s.contains("csv.DictReader"));
    }
}
