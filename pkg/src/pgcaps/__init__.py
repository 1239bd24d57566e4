"""Small complete caps in PG(N, q): finite fields, projective geometry, a
randomized nibble construction with exact verification, and the export of
caps as parity-check matrices of covering codes."""

__version__ = "0.1.0"
