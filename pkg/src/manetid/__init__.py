"""Cost-efficient, incentive-compatible leader election for intrusion
detection in mobile ad-hoc networks: protocol library plus a deterministic
discrete-event simulator."""

__version__ = "0.1.0"
