"""dtnsim: deterministic simulator for opportunistic (delay-tolerant) networks."""

__version__ = "0.1.0"
