"""Example plots for wq CSV output. Documentation only, not a supported interface.

    python scripts/plot.py bridge-cdf cdf.csv
    python scripts/plot.py lambda-curve curve.csv
    python scripts/plot.py heatmap incumbent.csv
"""
import sys

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def table(path):
    return pd.read_csv(path, comment="#")


def main(kind, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    if kind == "bridge-cdf":
        d = table(path)
        ax.plot(d.t, d.F_hat)
        ax.fill_between(d.t, d.ci_lo, d.ci_hi, alpha=0.3)
        ax.set(xlabel="t", ylabel="F(t)")
    elif kind == "lambda-curve":
        d = table(path)
        ax.step(d.alpha, d.lambda_hat, where="mid")
        ax.set(xlabel="alpha", ylabel="argmax lambda")
    elif kind == "heatmap":
        m = np.loadtxt(path, delimiter=",", ndmin=2)
        im = ax.imshow(m, origin="lower", cmap="viridis")
        fig.colorbar(im, ax=ax)
    else:
        sys.exit(f"unknown plot kind {kind!r}")
    out = path.rsplit(".", 1)[0] + ".png"
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main(*sys.argv[1:3])
