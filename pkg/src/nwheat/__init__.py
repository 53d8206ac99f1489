"""Certified evaluation of heat-equation solutions that are smooth but nowhere analytic in time."""

__version__ = "0.1.0"
