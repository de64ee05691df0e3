"""Log-volumes of random simplices and log-determinants of random matrices."""

__version__ = "0.1.0"
