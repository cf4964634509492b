"""Dynamic bidding for truckload brokerage.

Knowledge-gradient pricing over a sampled logistic belief with bootstrap
aggregation, evaluated by an advance-booking fleet simulator (ADP dispatch,
stochastic-lookahead load acceptance) and a benchmark harness of comparison
policies.
"""

from ._core import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
