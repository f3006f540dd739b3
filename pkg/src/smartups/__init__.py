"""smartups: deterministic simulator of a smart embedded PC UPS.

Electrical plant model, AT89C2051 firmware emulation, host-side shutdown
agent, scripted scenario engine and a live TCP telemetry gateway.
"""

__version__ = "0.1.0"
