"""Default predictability lab: information-based default model, Riesz capacities, hitting experiments."""
__version__ = "1.0.0"
