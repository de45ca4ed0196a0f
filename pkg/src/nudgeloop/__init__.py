"""Batch RL engine for daypart-scheduled motivational messaging.

Learns, from batched traces of user behaviour, which message category to send
at each part of the day. Supports pooled, grouped (cluster-level) and per-user
policies, with a service layer, scheduler, simulation harness and console API.
"""

from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
