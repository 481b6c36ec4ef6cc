"""Motion-augmented demonstration collection benchmark in a 2-D pick-and-place world."""

__version__ = "0.1.0"
