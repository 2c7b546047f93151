"""Fog-assisted, privacy-preserving detection of noisy sensors.

Sensors pack multidimensional readings into one Paillier plaintext, a
first-layer fog device aggregates ``N`` ciphertexts homomorphically, and a
second-layer fog device decrypts once to recover the scatter matrix of the
centred data and decide whether the sensor is faulty.
"""
__version__ = "0.1.0"
