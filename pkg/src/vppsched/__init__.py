"""Day-ahead virtual power plant scheduling with incentive-based demand
response, point-estimate uncertainty propagation, and distribution power
flow evaluation."""

__version__ = "0.1.0"
