"""Harmonic-analysis toolbox for the harmonic oscillator -Delta + |x|^2.

Bands of the spectrum are selected by smooth windows, sampled at
Gauss-Hermite node sets, and reassembled through a needlet-style frame.
Submodules: core (Hermite evaluation and kernels), tiles (node sets and
cubature), lp (spectral windows), frames (analysis/synthesis), norms,
symbols (pseudo-multipliers), estimates (measurement harness), cli.
"""

from . import core, tiles, lp, frames, norms, symbols, estimates

__all__ = ["core", "tiles", "lp", "frames", "norms", "symbols", "estimates"]
__version__ = "0.1.0"
