"""Design-Hamiltonian pseudorandomness on coupled spin systems."""

__version__ = "0.1.0"
