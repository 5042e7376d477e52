"""Figure 2: the small-noise closure hugging the deterministic cycle.

Left panel: the (m, nu) projection of the closure path (solid) over the
deterministic limit cycle (dashed black).  Right panel: the oscillation of
m and the order-one variance factor V against time.
"""

from __future__ import annotations

import os
import sys

from .common import FigureSpec, load_csv, save_figure, standard_parser, two_panels

PATH_COLUMNS = ("t", "m", "nu", "V", "z", "y")
CYCLE_COLUMNS = ("t", "x", "mu")


def draw(spec: FigureSpec) -> list:
    path = load_csv(spec.inputs["path"], PATH_COLUMNS)
    cycle = load_csv(spec.inputs["cycle"], CYCLE_COLUMNS)
    fig, (ax_l, ax_r) = two_panels("phase plane", "time series")
    ax_l.plot(path["m"], path["nu"], lw=0.7, color="tab:red",
              label="closure path")
    ax_l.plot(cycle["x"], cycle["mu"], "k--", lw=1.4,
              label="deterministic cycle")
    ax_l.set_xlabel(r"$m$")
    ax_l.set_ylabel(r"$\nu$")
    ax_l.legend(loc="upper right", fontsize=8)
    ax_r.plot(path["t"], path["m"], lw=0.8, color="tab:red", label="m")
    ax_r.plot(path["t"], path["V"], lw=0.8, color="tab:green", label="V")
    ax_r.set_xlabel("t")
    ax_r.legend(loc="upper right", fontsize=8)
    if spec.xlim:
        ax_l.set_xlim(*spec.xlim)
    if spec.ylim:
        ax_l.set_ylim(*spec.ylim)
    fig.tight_layout()
    return save_figure(fig, spec.output)


def main(argv=None) -> int:
    args = standard_parser(__doc__).parse_args(argv)
    spec = FigureSpec(
        inputs={"path": os.path.join(args.input, "fig2_path.csv"),
                "cycle": os.path.join(args.input, "fig2_cycle.csv")},
        figure_id=2, output=args.output)
    try:
        paths = draw(spec)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print("\n".join(paths))
    return 0


if __name__ == "__main__":
    sys.exit(main())
