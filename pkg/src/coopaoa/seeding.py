"""Deterministic seed derivation for independent RNG streams."""

from __future__ import annotations

import numpy as np


def derive_seed(*parts: int) -> int:
    "Mix integer parts into a reproducible 32-bit seed."
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])
