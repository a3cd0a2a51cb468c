"""Desk-scale text-line recognition engine.

Builds, audits, trains and compares convolutional, gated-convolutional,
1D-LSTM and 2D-MDLSTM line recognizers with CTC training, n-gram
language-model fusion and input-gradient attention maps, on synthetic data.
"""

__version__ = "0.1.0"
