"""Observation-region study: six regions at alpha 1.5 with 10% noise."""

from __future__ import annotations

from _common import configs, parser, run_all

REFERENCE = {
    "example2-r1": (73, 3.95),
    "example2-r2": (92, 9.09),
    "example2-r3": (72, 13.54),
    "example2-r4": (73, 17.49),
    "example2-r5": (63, 18.42),
    "example2-r6": (40, 22.09),
}


def main() -> None:
    args = parser(__doc__).parse_args()
    results = run_all(configs("example2-sweep", args.set), args.out)
    print(f"\n{'region':12s} {'K':>5s} {'Res %':>7s}   reference K, Res %")
    for res in results:
        k, r = REFERENCE[res.config.name]
        print(f"{res.config.region:12s} {res.report.iterations:5d} {100 * res.report.res:7.2f}   {k:5d} {r:6.2f}")
    order = sorted(results, key=lambda r: r.report.res)
    print("\nranking by Res: " + " < ".join(r.config.region for r in order))


if __name__ == "__main__":
    main()
