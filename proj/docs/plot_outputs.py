"""Plot the CSV artifacts written by `ellipticfund ... --out FILE`.

    python docs/plot_outputs.py profile.csv
    python docs/plot_outputs.py field.csv
    python docs/plot_outputs.py ladder.csv
"""
import sys

import matplotlib.pyplot as plt
import numpy as np


def main(path):
    with open(path) as f:
        lines = [l for l in f if not l.startswith("#")]
    header = lines[0].strip()
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    fig, ax = plt.subplots()
    if header == "theta,phi,residual":
        ax.plot(data[:, 0], data[:, 1])
        ax.set_xlabel("theta")
        ax.set_ylabel("phi")
    elif header == "x,y,u":
        sc = ax.scatter(data[:, 0], data[:, 1], c=data[:, 2], s=2)
        ax.set_aspect("equal")
        fig.colorbar(sc)
    elif header == "r,p_hat,stderr":
        ax.errorbar(data[:, 0], data[:, 1], yerr=data[:, 2], fmt="o")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("r")
        ax.set_ylabel("P(exit through |x| = r)")
    else:
        sys.exit(f"unknown CSV header: {header}")
    plt.show()


if __name__ == "__main__":
    main(sys.argv[1])
