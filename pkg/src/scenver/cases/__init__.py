"""Built-in case models."""
