"""Singular numbers of the Bessel and almost Mathieu kernels as plot-ready CSV.

    python scripts/eigen_decay.py > decay.csv
"""

import sys

from discrete_tw.linalg import sym_eigen
from discrete_tw.models import almost_mathieu_model, bessel_model
from discrete_tw.report import sequence_csv
from discrete_tw.spectra import decay_fit


def main():
    cols = {}
    for theta in (1.0, 4.0):
        r = bessel_model(theta, 48, spectra=False)
        cols[f"bessel_theta{theta:g}"] = sym_eigen(r.kernel.values).singular_numbers
    am = almost_mathieu_model(10.0, N=48)
    cols["almost_mathieu_K"] = sym_eigen(am.kernel.values).singular_numbers
    for name, s in cols.items():
        w = s[s > 1e-14 * s[0]]
        if len(w) >= 8:
            c, d, r2 = decay_fit(w, floor=0.0)
            print(f"# {name}: delta={d:.3f} r2={r2:.3f} on {len(w)} values", file=sys.stderr)
    sys.stdout.write(sequence_csv(cols, {"quantity": "singular numbers", "dim": 48}))


if __name__ == "__main__":
    main()
