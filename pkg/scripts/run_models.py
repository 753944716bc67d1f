"""Run the four kernel models over a small parameter grid and print a summary table.

    python scripts/run_models.py [--out results.json]
"""

import argparse
from pathlib import Path

from discrete_tw.models import almost_mathieu_model, bessel_model, laguerre_model, mathieu_model
from discrete_tw.report import dumps
from discrete_tw.specfun import GOLDEN

GRID = [
    ("bessel", lambda: bessel_model(0.25, 32)),
    ("bessel", lambda: bessel_model(1.0, 32)),
    ("bessel", lambda: bessel_model(4.0, 48)),
    ("laguerre", lambda: laguerre_model(0.5, 48, 10**5, 10**4)),
    ("laguerre", lambda: laguerre_model(1.0, 64, 10**6, 10**5)),
    ("mathieu", lambda: mathieu_model(1.0, 0, 32)),
    ("mathieu", lambda: mathieu_model(5.0, 1, 32)),
    ("mathieu", lambda: mathieu_model(-3.0, 0, 32)),
    ("almost-mathieu", lambda: almost_mathieu_model(10.0, GOLDEN, 0.3, 48)),
    ("almost-mathieu", lambda: almost_mathieu_model(4.0, GOLDEN, 0.1, 32)),
]


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--out")
    args = p.parse_args()
    rows = []
    for name, fn in GRID:
        r = fn()
        worst = max(r.errors, key=lambda k: r.errors[k] / r.tolerances.get(k, float("inf")) if k in r.tolerances else 0)
        rows.append(r.to_dict())
        print(f"{name:15s} {str(r.params):70s} pass={r.passed!s:5s} signs={ {k: v for k, v in r.signs.items() if k != 'convention'} } "
              f"tightest={worst}:{r.errors[worst]:.2e}")
    if args.out:
        Path(args.out).write_text(dumps(rows) + "\n")


if __name__ == "__main__":
    main()
