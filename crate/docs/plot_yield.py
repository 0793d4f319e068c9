"""Plot yield against measurement rate from one or more sweep CSV files.

    python docs/plot_yield.py out/fig3_dense.csv [out/fig3_mcwf.csv ...] -o fig3.png
"""

import argparse

import matplotlib.pyplot as plt
import pandas as pd


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv", nargs="+")
    ap.add_argument("-o", "--output", default="yield.png")
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for path in args.csv:
        df = pd.read_csv(path).dropna(subset=["yield"])
        zero = df[df.gamma_fs_inv == 0]
        rest = df[df.gamma_fs_inv > 0]
        label = f"{path} ({df.engine.iloc[0]})" if len(df) else path
        line, = ax.semilogx(rest.gamma_fs_inv, rest["yield"], marker="o", ms=3, label=label)
        for y in zero["yield"]:
            ax.axhline(y, color=line.get_color(), ls=":", lw=0.8)
    ax.set_xlabel(r"measurement rate $\gamma$ (fs$^{-1}$)")
    ax.set_ylabel("trans yield")
    ax.set_ylim(0, 1)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
