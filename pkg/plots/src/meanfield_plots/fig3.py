"""Figure 3: the large-noise dichotomy of the closure flow.

Left panel: from a small starting mean, (m, V) settle onto the mixed
equilibrium.  Right panel: from a large starting mean the oscillation
persists.
"""

from __future__ import annotations

import os
import sys

from .common import FigureSpec, load_csv, save_figure, standard_parser, two_panels

COLUMNS = ("t", "m", "nu", "V", "z", "y")


def draw(spec: FigureSpec) -> list:
    conv = load_csv(spec.inputs["converge"], COLUMNS)
    osc = load_csv(spec.inputs["oscillate"], COLUMNS)
    fig, (ax_l, ax_r) = two_panels("small m(0): mixed state",
                                   "large m(0): oscillation")
    for ax, data in ((ax_l, conv), (ax_r, osc)):
        ax.plot(data["t"], data["m"], lw=0.8, color="tab:blue", label="m")
        ax.plot(data["t"], data["V"], lw=0.8, color="tab:green", label="V")
        ax.set_xlabel("t")
        ax.legend(loc="upper right", fontsize=8)
        if spec.xlim:
            ax.set_xlim(*spec.xlim)
        if spec.ylim:
            ax.set_ylim(*spec.ylim)
    fig.tight_layout()
    return save_figure(fig, spec.output)


def main(argv=None) -> int:
    args = standard_parser(__doc__).parse_args(argv)
    spec = FigureSpec(
        inputs={"converge": os.path.join(args.input, "fig3_converge.csv"),
                "oscillate": os.path.join(args.input, "fig3_oscillate.csv")},
        figure_id=3, output=args.output)
    try:
        paths = draw(spec)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print("\n".join(paths))
    return 0


if __name__ == "__main__":
    sys.exit(main())
