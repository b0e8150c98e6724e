"""TCP-Engset model and packet-level simulator for superposed ON-OFF TCP transfers."""
__version__ = "0.1.0"
