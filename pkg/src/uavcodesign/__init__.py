"""Joint NN-policy / systolic-accelerator design exploration for small UAVs,
with mission-level selection on top of the Pareto front."""

__version__ = "0.1.0"

from . import f1model, moo, perfmodel, policy, powerweight, uavspec  # noqa: F401
