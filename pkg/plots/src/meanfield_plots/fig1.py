"""Figure 1: excitation by noise in the particle system.

Left panel: the (m_N, mu) trajectory at small sigma stays pinned near the
origin.  Right panel: at large sigma the same initial condition is carried
onto a large periodic orbit.
"""

from __future__ import annotations

import os
import sys

from .common import FigureSpec, load_csv, save_figure, standard_parser, two_panels

COLUMNS = ("t", "m_N", "mu")


def draw(spec: FigureSpec) -> list:
    small = load_csv(spec.inputs["small"], COLUMNS)
    large = load_csv(spec.inputs["large"], COLUMNS)
    fig, (ax_l, ax_r) = two_panels("small noise", "large noise")
    ax_l.plot(small["m_N"], small["mu"], lw=0.7, color="tab:blue")
    ax_r.plot(large["m_N"], large["mu"], lw=0.7, color="tab:red")
    for ax in (ax_l, ax_r):
        ax.set_xlabel(r"$m^{(N)}$")
        ax.set_ylabel(r"$\mu$")
        if spec.xlim:
            ax.set_xlim(*spec.xlim)
        if spec.ylim:
            ax.set_ylim(*spec.ylim)
    fig.tight_layout()
    return save_figure(fig, spec.output)


def main(argv=None) -> int:
    args = standard_parser(__doc__).parse_args(argv)
    spec = FigureSpec(
        inputs={"small": os.path.join(args.input, "fig1_small.csv"),
                "large": os.path.join(args.input, "fig1_large.csv")},
        figure_id=1, output=args.output)
    try:
        paths = draw(spec)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print("\n".join(paths))
    return 0


if __name__ == "__main__":
    sys.exit(main())
