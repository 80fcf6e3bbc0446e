"""Werner states, sequential projective measurements and hidden nonlocality."""

__version__ = "0.1.0"
