"""Shared loading, validation and deterministic figure output."""

from __future__ import annotations

import argparse
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "meanfield-plots"  # stable SVG ids

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


class RenderError(RuntimeError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: input CSVs keyed by role, figure id, output basename
    (``.svg`` and ``.png`` are appended), optional axis ranges."""

    inputs: dict
    figure_id: int
    output: str
    xlim: tuple | None = None
    ylim: tuple | None = None

    def __post_init__(self):
        if self.figure_id not in (1, 2, 3):
            raise RenderError(f"unknown figure id {self.figure_id}")


def load_csv(path: str, expected: tuple) -> dict:
    """Load one CSV produced by the meanfield CLI, checking the header."""
    if not os.path.exists(path):
        raise RenderError(f"input CSV missing: {path}")
    with open(path) as fh:
        header = fh.readline().strip()
        has_rows = bool(fh.readline().strip())
    cols = tuple(header.split(","))
    if cols != tuple(expected):
        raise RenderError(
            f"{path}: header {cols!r} does not match expected {expected!r}")
    if not has_rows:
        raise RenderError(f"{path}: no data rows")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(cols)}


def save_figure(fig, output: str) -> list:
    """Write <output>.svg and <output>.png without any timestamp metadata."""
    base, ext = os.path.splitext(output)
    if ext.lower() in (".svg", ".png"):
        output = base
    outdir = os.path.dirname(os.path.abspath(output))
    os.makedirs(outdir, exist_ok=True)
    svg = output + ".svg"
    png = output + ".png"
    fig.savefig(svg, format="svg", metadata={"Date": None})
    fig.savefig(png, format="png", dpi=110)
    plt.close(fig)
    return [svg, png]


def two_panels(title_left: str, title_right: str):
    fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.2))
    axes[0].set_title(title_left)
    axes[1].set_title(title_right)
    return fig, axes


def standard_parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--input", required=True,
                   help="directory holding the reproduce-figures CSVs")
    p.add_argument("--output", required=True,
                   help="output image basename (.svg and .png are emitted)")
    return p


def render(spec: FigureSpec) -> list:
    """Dispatch a FigureSpec to the matching figure renderer."""
    from . import fig1, fig2, fig3

    impl = {1: fig1.draw, 2: fig2.draw, 3: fig3.draw}[spec.figure_id]
    return impl(spec)
