"""Semiquantum key distribution with two-degree-of-freedom photons."""
