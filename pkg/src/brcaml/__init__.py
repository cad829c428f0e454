"""From-scratch tabular learners and a survival-classification pipeline."""

__version__ = "0.1.0"
