"""Reference adapter process for the augmentation toolkit's wire protocols."""

from .serve import main, serve_generate, serve_tts, shuffled_template, synth_sweep

__all__ = ["main", "serve_generate", "serve_tts", "shuffled_template", "synth_sweep"]
