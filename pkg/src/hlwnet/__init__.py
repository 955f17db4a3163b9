"""Load balancing toolkit for hybrid LiFi/WiFi networks."""

__version__ = "0.1.0"
