"""xfermon: wide-area file transfer monitoring and bottleneck diagnosis at desk scale."""

__version__ = "0.1.0"
