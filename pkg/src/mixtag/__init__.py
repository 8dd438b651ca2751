"""Word-level language tagging for code-mixed text under low-resource constraints.

Four character-level taggers (stacked LSTM, Conv1D, augmented-data retraining,
siamese support-set scoring) plus a weighted-vote ensemble, built on a small
numpy training engine with gradient-checked backpropagation.
"""

__version__ = "0.1.0"
