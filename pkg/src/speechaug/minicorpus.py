"""Build the bundled demonstration corpus into a working directory.

The repository ships text only; audio is synthesized deterministically on
first use, so the corpus is reproducible anywhere without binary fixtures.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import audio
from .corpus import Manifest, UtteranceRecord, save_manifest
from .morph import _data_rows

_SENTENCES = Path(__file__).parent / "data" / "mini_sentences.tsv"

MINI_SEED = 20260815


@dataclass(frozen=True)
class MiniRow:
    id: str
    speaker: str
    dialect: str
    text: str


def mini_rows() -> list[MiniRow]:
    return [MiniRow(*cols) for cols in _data_rows(_SENTENCES, 4)]


def build_mini_corpus(out_dir, seed: int = MINI_SEED) -> Path:
    """Synthesize the corpus audio and manifest under out_dir.

    Returns the manifest path. Rebuilding with the same seed writes
    byte-identical WAVs and manifest.
    """
    out_dir = Path(out_dir)
    wav_dir = out_dir / "wav"
    wav_dir.mkdir(parents=True, exist_ok=True)
    table = audio.default_g2p()

    records = []
    for row in mini_rows():
        buf = audio.pseudo_tts(row.text, table, seed=seed)
        wav_path = wav_dir / f"{row.id}.wav"
        audio.write_wav(buf, wav_path)
        records.append(
            UtteranceRecord(
                id=row.id,
                audio=str(Path("wav") / f"{row.id}.wav"),
                duration_ms=buf.duration_ms,
                text=row.text,
                speaker=row.speaker,
                dialect=row.dialect,
                split="train",
                origin="natural",
            )
        )

    manifest_path = out_dir / "manifest.jsonl"
    save_manifest(Manifest(records=records), manifest_path)
    return manifest_path
