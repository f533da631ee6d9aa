"""Privacy-preserving smart-meter aggregation with reversible watermarking and AES.

Smart meters watermark each reading, hide it under pseudorandom masks and
AES, a data aggregator sums the masked values without learning them, and a
control center unmasks only the aggregate, checks the watermark and removes
it again.
"""

__version__ = "0.1.0"
