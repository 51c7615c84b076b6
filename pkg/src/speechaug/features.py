"""Acoustic front-end: framing, power spectra, mel cepstra, deltas.

Frames are 25 ms with a 10 ms hop, Hamming-windowed, zero-padded to the FFT
size; only full frames are taken. Mel filters are the usual triangles spaced
evenly on the mel scale from 0 to Nyquist. Cepstra come from an orthonormal
DCT-II of the log filterbank energies. No pre-emphasis and no spectrum
scaling: bin k of the output is plainly |X[k]|^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.fft import dct

from .audio import CANONICAL_RATE, AudioBuffer


@dataclass(frozen=True)
class FeatureConfig:
    win_ms: int = 25
    hop_ms: int = 10
    n_mfcc: int = 13
    fft_size: int = 512
    mel_filters: int = 26
    sample_rate: int = CANONICAL_RATE
    deltas: bool = True
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.hop_ms <= 0 or self.win_ms <= 0:
            raise ValueError("window and hop must be positive")
        if self.win_ms < self.hop_ms:
            raise ValueError("window must be at least one hop long")
        if self.fft_size < self.win_samples:
            raise ValueError("FFT size must cover the window")
        if self.n_mfcc < 1 or self.n_mfcc > self.mel_filters:
            raise ValueError("need 1 <= n_mfcc <= mel_filters")
        if self.log_floor <= 0:
            raise ValueError("log floor must be positive")

    @property
    def win_samples(self) -> int:
        return self.win_ms * self.sample_rate // 1000

    @property
    def hop_samples(self) -> int:
        return self.hop_ms * self.sample_rate // 1000

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1


DEFAULT_CONFIG = FeatureConfig()


def frame_count(n_samples: int, cfg: FeatureConfig = DEFAULT_CONFIG) -> int:
    """Number of full windows: 0 if the signal is shorter than one window."""
    if n_samples < cfg.win_samples:
        return 0
    return 1 + (n_samples - cfg.win_samples) // cfg.hop_samples


def _as_samples(signal) -> np.ndarray:
    if isinstance(signal, AudioBuffer):
        return signal.samples.astype(np.float64)
    return np.asarray(signal, dtype=np.float64)


def _frame_matrix(x: np.ndarray, cfg: FeatureConfig) -> np.ndarray:
    n = frame_count(len(x), cfg)
    offsets = np.arange(n)[:, None] * cfg.hop_samples
    return x[offsets + np.arange(cfg.win_samples)[None, :]]


def power_spectrum(signal, cfg: FeatureConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Per-frame squared-magnitude spectrum, shape (frames, fft_size/2 + 1)."""
    if isinstance(signal, AudioBuffer) and signal.sample_rate != cfg.sample_rate:
        raise ValueError(
            f"buffer rate {signal.sample_rate} does not match config {cfg.sample_rate}"
        )
    x = _as_samples(signal)
    if x.ndim != 1:
        raise ValueError("signal must be one-dimensional")
    if frame_count(len(x), cfg) == 0:
        return np.zeros((0, cfg.n_bins))
    frames = _frame_matrix(x, cfg) * np.hamming(cfg.win_samples)
    spectra = np.fft.rfft(frames, cfg.fft_size, axis=1)
    return np.abs(spectra) ** 2


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: FeatureConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Triangular filters, shape (mel_filters, n_bins); edges at 0 and Nyquist."""
    edges = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(cfg.sample_rate / 2.0), cfg.mel_filters + 2))
    bin_freqs = np.arange(cfg.n_bins) * cfg.sample_rate / cfg.fft_size
    bank = np.zeros((cfg.mel_filters, cfg.n_bins))
    for m in range(cfg.mel_filters):
        lo, center, hi = edges[m], edges[m + 1], edges[m + 2]
        rising = (bin_freqs - lo) / (center - lo)
        falling = (hi - bin_freqs) / (hi - center)
        bank[m] = np.maximum(0.0, np.minimum(rising, falling))
    return bank


def mfcc(signal, cfg: FeatureConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Cepstral features per frame; with deltas the width is 3 * n_mfcc."""
    spectra = power_spectrum(signal, cfg)
    if len(spectra) == 0:
        width = 3 * cfg.n_mfcc if cfg.deltas else cfg.n_mfcc
        return np.zeros((0, width))
    energies = spectra @ mel_filterbank(cfg).T
    logs = np.log(np.maximum(energies, cfg.log_floor))
    coeffs = dct(logs, type=2, norm="ortho", axis=1)[:, : cfg.n_mfcc]
    if cfg.deltas:
        coeffs = add_deltas(coeffs)
    return coeffs


def _delta(matrix: np.ndarray, window: int = 2) -> np.ndarray:
    """Regression slope over +-window frames, edges replicated."""
    n = len(matrix)
    padded = np.concatenate(
        [np.repeat(matrix[:1], window, axis=0), matrix, np.repeat(matrix[-1:], window, axis=0)]
    )
    denom = 2.0 * sum(k * k for k in range(1, window + 1))
    out = np.zeros_like(matrix, dtype=np.float64)
    for k in range(1, window + 1):
        out += k * (padded[window + k : window + k + n] - padded[window - k : window - k + n])
    return out / denom


def add_deltas(coeffs: np.ndarray, window: int = 2) -> np.ndarray:
    d = _delta(coeffs, window)
    dd = _delta(d, window)
    return np.hstack([coeffs, d, dd])


def normalize_sequence(matrix) -> np.ndarray:
    """Per-dimension zero-mean, unit population variance over the sequence.

    Dimensions with essentially no variance are centered but left unscaled.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or len(m) == 0:
        raise ValueError("need a non-empty 2-D feature matrix")
    centered = m - m.mean(axis=0)
    std = m.std(axis=0)
    live = std >= 1e-12
    centered[:, live] /= std[live]
    return centered


SILENCE_SYMBOL = "|"


@dataclass(frozen=True)
class GraphemeVocab:
    """Fixed-size output alphabet for an acoustic model."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("duplicate grapheme symbols")
        if SILENCE_SYMBOL not in self.symbols:
            raise ValueError(f"alphabet must include the silence symbol {SILENCE_SYMBOL!r}")

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        return self.symbols.index(symbol)


def load_graphemes(path) -> GraphemeVocab:
    symbols = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            symbols.append(line)
    return GraphemeVocab(symbols=tuple(symbols))


def default_graphemes() -> GraphemeVocab:
    return load_graphemes(Path(__file__).parent / "data" / "graphemes.txt")


_MAGIC = "FEATDUMP1"


def feature_labels(kind: str, width: int) -> list[str]:
    if kind == "mfcc":
        base = width // 3 if width % 3 == 0 else width
        names = [f"c{i:02d}" for i in range(base)]
        if width == 3 * base:
            names += [f"d{i:02d}" for i in range(base)] + [f"a{i:02d}" for i in range(base)]
        return names
    return [f"{kind}{i:03d}" for i in range(width)]


def save_features(matrix: np.ndarray, labels, path) -> None:
    """Binary dump: ASCII header (magic, shape, labels), then float32 rows."""
    m = np.asarray(matrix, dtype=np.float64)
    labels = list(labels)
    if m.ndim != 2 or m.shape[1] != len(labels):
        raise ValueError("labels must match the feature width")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"{_MAGIC}\n{m.shape[0]} {m.shape[1]}\n{' '.join(labels)}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(m.astype("<f4").tobytes())


def load_features(path) -> tuple[np.ndarray, list[str]]:
    with open(path, "rb") as fh:
        blob = fh.read()
    head, _, rest = blob.partition(b"\n")
    if head.decode("utf-8", "replace") != _MAGIC:
        raise ValueError(f"{path}: not a feature dump")
    shape_line, _, rest = rest.partition(b"\n")
    rows, cols = (int(x) for x in shape_line.decode("utf-8").split())
    label_line, _, payload = rest.partition(b"\n")
    labels = label_line.decode("utf-8").split()
    matrix = np.frombuffer(payload, dtype="<f4", count=rows * cols).reshape(rows, cols)
    return matrix.astype(np.float64), labels


def export_csv(matrix: np.ndarray, labels, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    m = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(labels) + "\n")
        for row in m:
            fh.write(",".join(f"{v:.10g}" for v in row) + "\n")
