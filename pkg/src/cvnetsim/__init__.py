"""Packet-level simulation of downlink 5G mmWave and DSRC delivery to
connected vehicles on an urban corridor."""

__version__ = "0.1.0"
