"""Pure numpy implementation of the moving-average kernel.

The summation order (left to right across the window, then a single
division) matches the compiled kernel so both backends agree bitwise.
"""

import numpy as np


def moving_average_3d(x: np.ndarray, kernel: int) -> np.ndarray:
    """Replicate-padded centered moving average along axis 1 of an (N, T, C) array."""
    half = (kernel - 1) // 2
    t = x.shape[1]
    padded = np.pad(x, ((0, 0), (half, half), (0, 0)), mode="edge")
    acc = padded[:, 0:t, :].copy()
    for j in range(1, kernel):
        acc += padded[:, j : j + t, :]
    acc /= kernel
    return acc
