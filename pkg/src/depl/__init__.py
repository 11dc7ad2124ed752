"""Cross-subject EEG emotion recognition.

Band decomposition, dynamic differential-entropy features, topographic
9x9 mapping, a small squeeze-excitation CNN trained by explicit
backpropagation, shallow baselines, and a leave-one-subject-out
evaluation harness with paired statistical comparison.
"""

__version__ = "0.1.0"
