"""Plane and cosine targets at alpha 1.2 and 1.8 with 2% noise, boundary frame observations."""

from __future__ import annotations

from _common import configs, parser, run_all

REFERENCE = {
    "example1-a12": (91, 2.71),
    "example1-a18": (139, 5.77),
    "example1-cos-a12": (113, 3.65),
    "example1-cos-a18": (166, 7.07),
}


def main() -> None:
    args = parser(__doc__).parse_args()
    results = run_all(configs("example1", args.set), args.out)
    print(f"\n{'run':18s} {'K':>5s} {'Res %':>7s}   reference K, Res %")
    for res in results:
        k, r = REFERENCE[res.config.name]
        print(f"{res.config.name:18s} {res.report.iterations:5d} {100 * res.report.res:7.2f}   {k:5d} {r:6.2f}")


if __name__ == "__main__":
    main()
