"""softgrip: quasi-static simulator and probe-to-grasp pipeline for a
soft-rigid hybrid gripper with pneumatic self-sensing joints."""

__version__ = "0.1.0"
