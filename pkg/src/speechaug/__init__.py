"""Text and speech data augmentation for low-resource agglutinative ASR."""

__version__ = "0.1.0"
