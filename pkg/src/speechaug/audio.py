"""WAV handling, speed perturbation, and a deterministic tone synthesizer.

The canonical format everywhere downstream is mono 16 kHz 16-bit PCM.
Arbitrary PCM WAVs can be read and normalized to it; the strict reader
accepts only the canonical format and is the gatekeeper for audio coming
back from external synthesis processes.

Speed perturbation is plain resampling: playing the same samples at a
different rate, so pitch shifts together with duration. A factor above 1
speeds up (shorter output), below 1 slows down.
"""

from __future__ import annotations

import json
import math
import random
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .adapters import ExternalProcessClient, ProtocolError
from .morph import TableError, _data_rows
from .seeding import stable_seed

CANONICAL_RATE = 16000
CANONICAL_WIDTH = 2  # bytes per sample

WORD_GAP_MS = 50
UNKNOWN_SIL_MS = 20
PEAK_AMPLITUDE = 0.25  # of int16 full scale, headroom for later mixing

SPEED_FACTOR_MIN = 0.5
SPEED_FACTOR_MAX = 2.0


class NotWav(Exception):
    pass


class UnsupportedEncoding(Exception):
    pass


class FactorOutOfRange(ValueError):
    pass


class NonCanonicalAudio(Exception):
    """External synthesis produced audio outside the canonical format."""


@dataclass
class AudioBuffer:
    """Mono int16 samples plus their rate."""

    samples: np.ndarray
    sample_rate: int = CANONICAL_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int16)
        if self.samples.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def duration_ms(self) -> int:
        return round(len(self.samples) * 1000 / self.sample_rate)

    def is_canonical(self) -> bool:
        return self.sample_rate == CANONICAL_RATE


@dataclass(frozen=True)
class WavFormat:
    channels: int
    sample_rate: int
    bits: int


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def _to_int16(y: np.ndarray) -> np.ndarray:
    rounded = np.trunc(y + np.copysign(0.5, y))
    return np.clip(rounded, -32768, 32767).astype(np.int16)


def _decode_pcm(data: bytes, width: int, channels: int) -> np.ndarray:
    if width == 1:
        x = (np.frombuffer(data, dtype=np.uint8).astype(np.int32) - 128) * 256
    elif width == 2:
        x = np.frombuffer(data, dtype="<i2").astype(np.int32)
    elif width == 3:
        raw = np.frombuffer(data, dtype=np.uint8).reshape(-1, 3)
        x = (
            raw[:, 0].astype(np.int32)
            | (raw[:, 1].astype(np.int32) << 8)
            | (raw[:, 2].astype(np.int32) << 16)
        )
        x = (x << 8) >> 16  # sign-extend, then keep the top 16 bits
    elif width == 4:
        x = np.frombuffer(data, dtype="<i4").astype(np.int64) >> 16
    else:
        raise UnsupportedEncoding(f"{8 * width}-bit PCM is not supported")
    if channels > 1:
        frames = x.reshape(-1, channels).astype(np.float64)
        return _to_int16(frames.mean(axis=1)).astype(np.int32)
    return x


def read_wav_any(path) -> tuple[AudioBuffer, WavFormat]:
    """Read any PCM WAV; multi-channel input is averaged down to mono.

    Returns the buffer at its native rate together with the format the file
    actually had, so callers can decide whether normalization is needed.
    """
    try:
        reader = wave.open(str(path), "rb")
    except (wave.Error, EOFError) as exc:
        raise NotWav(f"{path}: {exc}") from exc
    with reader:
        channels = reader.getnchannels()
        rate = reader.getframerate()
        width = reader.getsampwidth()
        data = reader.readframes(reader.getnframes())
    fmt = WavFormat(channels=channels, sample_rate=rate, bits=8 * width)
    samples = _decode_pcm(data, width, channels)
    return AudioBuffer(samples=np.clip(samples, -32768, 32767), sample_rate=rate), fmt


def read_wav_strict(path) -> AudioBuffer:
    """Accept only the canonical format: mono, 16 kHz, 16-bit PCM."""
    buf, fmt = read_wav_any(path)
    if (fmt.channels, fmt.sample_rate, fmt.bits) != (1, CANONICAL_RATE, 16):
        raise UnsupportedEncoding(
            f"{path}: got {fmt.channels}ch/{fmt.sample_rate}Hz/{fmt.bits}bit, "
            f"need 1ch/{CANONICAL_RATE}Hz/16bit"
        )
    return buf


def write_wav(buffer: AudioBuffer, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(path), "wb") as writer:
        writer.setnchannels(1)
        writer.setsampwidth(CANONICAL_WIDTH)
        writer.setframerate(buffer.sample_rate)
        writer.writeframes(buffer.samples.astype("<i2").tobytes())


def _resample(samples: np.ndarray, step: float, out_len: int) -> np.ndarray:
    if out_len == 0:
        return np.zeros(0, dtype=np.int16)
    positions = np.arange(out_len) * step
    y = np.interp(positions, np.arange(len(samples)), samples.astype(np.float64))
    return _to_int16(y)


def normalize_format(buffer: AudioBuffer) -> AudioBuffer:
    """Linear-resample to the canonical rate. Constant signals stay constant."""
    if buffer.sample_rate == CANONICAL_RATE:
        return AudioBuffer(buffer.samples.copy(), CANONICAL_RATE)
    if len(buffer) == 0:
        return AudioBuffer(np.zeros(0, dtype=np.int16), CANONICAL_RATE)
    out_len = _round_half_away(len(buffer) * CANONICAL_RATE / buffer.sample_rate)
    step = buffer.sample_rate / CANONICAL_RATE
    return AudioBuffer(_resample(buffer.samples, step, out_len), CANONICAL_RATE)


def speed_perturb(buffer: AudioBuffer, factor: float) -> AudioBuffer:
    """Resample by the speed factor; output length is round(len / factor)."""
    if not SPEED_FACTOR_MIN <= factor <= SPEED_FACTOR_MAX:
        raise FactorOutOfRange(
            f"factor {factor} outside [{SPEED_FACTOR_MIN}, {SPEED_FACTOR_MAX}]"
        )
    if factor == 1.0:
        return AudioBuffer(buffer.samples.copy(), buffer.sample_rate)
    if len(buffer) == 0:
        return AudioBuffer(np.zeros(0, dtype=np.int16), buffer.sample_rate)
    out_len = _round_half_away(len(buffer) / factor)
    return AudioBuffer(_resample(buffer.samples, factor, out_len), buffer.sample_rate)


def sample_speed_factor(seed: int, item_id: str, lo: float = 0.85, hi: float = 1.15) -> float:
    """Per-item speed factor, uniform in [lo, hi], reproducible across runs."""
    return random.Random(stable_seed(seed, "speed", item_id)).uniform(lo, hi)


@dataclass(frozen=True)
class Phone:
    phone_id: str
    freq_hz: float
    duration_ms: int
    voiced: bool


@dataclass
class G2PTable:
    """Grapheme-to-phoneme table; row order is the match order.

    A grapheme listed after one of its own proper prefixes would never
    match (the prefix wins first), so that ordering is rejected up front.
    """

    graphemes: list[tuple[str, str]]
    phones: dict[str, Phone]

    def __post_init__(self):
        seen: list[str] = []
        for g, pid in self.graphemes:
            if not g:
                raise TableError("empty grapheme")
            if pid not in self.phones:
                raise TableError(f"grapheme {g!r} maps to unknown phone {pid!r}")
            for prev in seen:
                if g != prev and g.startswith(prev):
                    raise TableError(f"grapheme {g!r} is shadowed by earlier prefix {prev!r}")
            seen.append(g)


def load_g2p(g2p_path, phones_path) -> G2PTable:
    phones: dict[str, Phone] = {}
    for pid, freq, dur, voiced in _data_rows(phones_path, 4):
        if voiced not in ("voiced", "voiceless"):
            raise TableError(f"{phones_path}: bad voicing {voiced!r}")
        phones[pid] = Phone(
            phone_id=pid,
            freq_hz=float(freq),
            duration_ms=int(dur),
            voiced=(voiced == "voiced"),
        )
    graphemes = [(g, pid) for g, pid in _data_rows(g2p_path, 2)]
    return G2PTable(graphemes=graphemes, phones=phones)


def g2p_segment(text: str, table: G2PTable) -> list[list[tuple[str, str | None]]]:
    """Split text into words, each a list of (grapheme, phone id) pairs.

    Matching walks left to right taking the first table entry that matches;
    with the validated table order that is the longest match. A character
    no entry covers yields (char, None).
    """
    words = []
    for word in text.lower().split():
        pairs: list[tuple[str, str | None]] = []
        i = 0
        while i < len(word):
            for g, pid in table.graphemes:
                if word.startswith(g, i):
                    pairs.append((g, pid))
                    i += len(g)
                    break
            else:
                pairs.append((word[i], None))
                i += 1
        words.append(pairs)
    return words


def _ms_samples(ms: int) -> int:
    return ms * CANONICAL_RATE // 1000


def _render_phone(phone: Phone, seed: int) -> np.ndarray:
    n = _ms_samples(phone.duration_ms)
    envelope = np.hanning(n)
    if phone.voiced:
        t = np.arange(n) / CANONICAL_RATE
        signal = np.sin(2.0 * np.pi * phone.freq_hz * t)
    else:
        signal = np.random.default_rng(seed).uniform(-1.0, 1.0, n)
    return signal * envelope


def pseudo_tts(text: str, table: G2PTable, seed: int = 0) -> AudioBuffer:
    """Render text as a canonical-format phone-tone sequence.

    Voiced phones become Hann-windowed sine tones at the table frequency;
    voiceless phones become windowed noise from a per-phone seeded
    generator. Words are separated by fixed silence gaps and unknown
    graphemes by short silence, so the output duration is exactly the sum
    of the table durations and gaps.
    """
    words = g2p_segment(text, table)
    chunks: list[np.ndarray] = []
    phone_index = 0
    for wi, word in enumerate(words):
        if wi > 0:
            chunks.append(np.zeros(_ms_samples(WORD_GAP_MS)))
        for grapheme, pid in word:
            if pid is None:
                chunks.append(np.zeros(_ms_samples(UNKNOWN_SIL_MS)))
            else:
                phone = table.phones[pid]
                chunks.append(_render_phone(phone, stable_seed(seed, "tts", phone_index)))
            phone_index += 1
    if not chunks:
        return AudioBuffer(np.zeros(0, dtype=np.int16), CANONICAL_RATE)
    y = np.concatenate(chunks) * (PEAK_AMPLITUDE * 32767.0)
    return AudioBuffer(_to_int16(y), CANONICAL_RATE)


def tts_duration_ms(text: str, table: G2PTable) -> int:
    """Closed-form duration of pseudo_tts output for the same inputs."""
    words = g2p_segment(text, table)
    total = 0
    for wi, word in enumerate(words):
        if wi > 0:
            total += WORD_GAP_MS
        for _, pid in word:
            total += table.phones[pid].duration_ms if pid is not None else UNKNOWN_SIL_MS
    return total


def default_g2p() -> G2PTable:
    data = Path(__file__).parent / "data"
    return load_g2p(data / "g2p.tsv", data / "phones.tsv")


def external_tts(client: ExternalProcessClient, text: str, out_path) -> AudioBuffer:
    """Ask an external synthesizer for audio; insist on the canonical format."""
    client.send({"cmd": "tts", "text": text, "out": str(out_path)})
    line = client.recv_line()
    if line is None:
        raise ProtocolError("synthesizer stream ended without a response")
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"not JSON: {line!r}") from exc
    if not isinstance(obj, dict) or "ok" not in obj:
        raise ProtocolError(f"unexpected message: {line!r}")
    if obj["ok"] is not True:
        raise ProtocolError(f"synthesizer error: {obj.get('error', 'unspecified')}")
    wav_path = obj.get("out", str(out_path))
    try:
        return read_wav_strict(wav_path)
    except (NotWav, UnsupportedEncoding) as exc:
        raise NonCanonicalAudio(str(exc)) from exc
