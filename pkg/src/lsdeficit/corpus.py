"""Reference densities used for regression sweeps and the acceptance suite."""

from __future__ import annotations

import numpy as np

from .density import RelativeDensity, gaussian, make_extremal, mixture, standard_gaussian


def corpus() -> dict[str, RelativeDensity]:
    """Twelve 1-D and 2-D Gaussian mixtures, keyed by a short file-safe name."""
    return {
        "gamma_1d": standard_gaussian(1),
        "normal_var4": gaussian([0.0], [[4.0]]),
        "normal_var0.5": gaussian([0.0], [[0.5]]),
        "extremal_b1": make_extremal([1.0]),
        "sym_pair_1": mixture([0.5, 0.5], [[-1.0], [1.0]], [[[1.0]], [[1.0]]]),
        "asym_three": mixture([0.5, 0.3, 0.2], [[-1.0], [0.5], [2.0]],
                              [[[0.5]], [[1.0]], [[0.3]]]),
        "normal_shift": gaussian([0.5], [[2.0]]),
        "sym_pair_2": mixture([0.5, 0.5], [[-2.0], [2.0]], [[[0.5]], [[0.5]]]),
        "sym_pair_narrow": mixture([0.5, 0.5], [[-0.5], [0.5]], [[[0.5]], [[0.5]]]),
        "normal_2d_aniso": gaussian([0.0, 0.0], np.diag([2.0, 0.5])),
        "normal_2d_iso": gaussian([0.0, 0.0], 0.6 * np.eye(2)),
        "mixture_2d": mixture([0.5, 0.5], [[-1.0, 0.0], [1.0, 0.5]],
                              [0.8 * np.eye(2), [[1.0, 0.3], [0.3, 0.7]]]),
    }


def corpus_specs() -> dict[str, dict]:
    return {name: d.to_spec() for name, d in corpus().items()}
