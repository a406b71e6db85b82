"""Data-adaptive energy-distance classifiers for HDLSS data."""
