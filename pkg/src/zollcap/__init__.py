"""Capacities, systolic ratios and Reeb dynamics near the Zoll contact form on S^3."""

__version__ = "0.1.0"
