"""Orders near one and near two, and the effect of a longer horizon at alpha 1.99."""

from __future__ import annotations

from _common import configs, parser, run_all

REFERENCE = {
    "example3-a099": (162, 4.14),
    "example3-a101": (143, 3.50),
    "example3-a199": (601, 5.93),
    "example3-T4": (73, 0.10),
}


def main() -> None:
    args = parser(__doc__).parse_args()
    results = run_all(configs("example3", args.set), args.out)
    print(f"\n{'run':15s} {'alpha':>5s} {'T':>3s} {'K':>5s} {'Res %':>7s}   reference K, Res %")
    for res in results:
        k, r = REFERENCE[res.config.name]
        c = res.config
        print(f"{c.name:15s} {c.alpha:5.2f} {c.T:3.0f} {res.report.iterations:5d} {100 * res.report.res:7.2f}   {k:5d} {r:6.2f}")


if __name__ == "__main__":
    main()
