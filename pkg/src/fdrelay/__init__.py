"""Fast-decodable distributed space-time codes for the NAF relay channel."""

__version__ = "0.1.0"
