"""Shared setup for the demo scripts."""

import argparse

import numpy as np

from epchiral import model

OMEGA_0 = 2 * np.pi * 10
OMEGA = 2 * np.pi * 0.1
PARAMS = model.SystemParams.from_detuning(OMEGA_0, OMEGA)


def parse_args(doc):
    parser = argparse.ArgumentParser(description=doc.strip().splitlines()[0])
    parser.add_argument("--plot", metavar="PNG", help="also save a figure (needs matplotlib)")
    return parser.parse_args()


def pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt
