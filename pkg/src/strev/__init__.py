"""Speech time-reversal augmentation toolkit."""

__version__ = "0.1.0"
