"""Optimal retirement drawdown, investment and housing under the Australian
Age Pension means tests (pre-2015, post-2015 and the 2017 asset test)."""
__version__ = "0.1.0"
