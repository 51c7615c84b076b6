"""Pipeline configuration (INI file) and run metadata sidecars.

Every produced artifact gets a ``<name>.meta.json`` sidecar recording the
stage, its inputs, the seed, and the hash of the config that drove the run,
so any output can be traced back to what produced it.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import __version__

_DATA = Path(__file__).parent / "data"


@dataclass
class TablePaths:
    suffix_rules: Path = _DATA / "suffix_rules.tsv"
    suffix_inventory: Path = _DATA / "suffix_inventory.tsv"
    lemma_lexicon: Path = _DATA / "lemma_lexicon.tsv"
    frame_lexicon: Path = _DATA / "frame_lexicon.tsv"
    bilingual_map: Path = _DATA / "bilingual_map.tsv"
    pivot_lexicon: Path = _DATA / "pivot_lexicon.tsv"
    role_lexicon: Path = _DATA / "role_lexicon.tsv"
    g2p: Path = _DATA / "g2p.tsv"
    phones: Path = _DATA / "phones.tsv"


@dataclass
class PipelineConfig:
    manifest: Path = Path("manifest.jsonl")
    tables: TablePaths = field(default_factory=TablePaths)

    top_k: int = 3

    gen_count: int = 0  # 0 means: match the natural train-record count
    seed: int = 42
    max_len: int = 30
    diversity_floor: float = 0.1
    markov_order: int = 2
    generator_cmd: tuple[str, ...] = ()  # empty: built-in generator

    lm_order: int = 4
    kappa: float = 0.04

    tts_cmd: tuple[str, ...] = ()  # empty: built-in synthesizer
    speed_lo: float = 0.85
    speed_hi: float = 1.15

    config_path: Path | None = None
    config_hash: str = ""

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if self.gen_count < 0:
            raise ValueError("gen_count must be non-negative")
        if not 0.0 < self.speed_lo <= self.speed_hi:
            raise ValueError("need 0 < speed_lo <= speed_hi")


def _split_cmd(value: str) -> tuple[str, ...]:
    import shlex

    return tuple(shlex.split(value))


def hash_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_config(path) -> PipelineConfig:
    """Read an INI config; unknown keys are rejected to catch typos."""
    path = Path(path)
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)

    cfg = PipelineConfig(config_path=path, config_hash=hash_file(path))
    base = path.parent

    def resolve(value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else base / p

    known = {
        "paths": {"manifest"} | {f.name for f in fields(TablePaths)},
        "delex": {"top_k"},
        "generation": {"count", "seed", "max_len", "diversity_floor", "markov_order", "adapter"},
        "lm": {"order", "kappa"},
        "audio": {"tts", "speed_lo", "speed_hi"},
    }
    for section in parser.sections():
        if section not in known:
            raise ValueError(f"{path}: unknown section [{section}]")
        for key in parser[section]:
            if key not in known[section]:
                raise ValueError(f"{path}: unknown key {key!r} in [{section}]")

    if parser.has_section("paths"):
        sec = parser["paths"]
        if "manifest" in sec:
            cfg.manifest = resolve(sec["manifest"])
        for f in fields(TablePaths):
            if f.name in sec:
                setattr(cfg.tables, f.name, resolve(sec[f.name]))
    if parser.has_section("delex"):
        cfg.top_k = parser.getint("delex", "top_k", fallback=cfg.top_k)
    if parser.has_section("generation"):
        sec = parser["generation"]
        cfg.gen_count = sec.getint("count", cfg.gen_count)
        cfg.seed = sec.getint("seed", cfg.seed)
        cfg.max_len = sec.getint("max_len", cfg.max_len)
        cfg.diversity_floor = sec.getfloat("diversity_floor", cfg.diversity_floor)
        cfg.markov_order = sec.getint("markov_order", cfg.markov_order)
        if sec.get("adapter", "").strip():
            cfg.generator_cmd = _split_cmd(sec["adapter"])
    if parser.has_section("lm"):
        cfg.lm_order = parser.getint("lm", "order", fallback=cfg.lm_order)
        cfg.kappa = parser.getfloat("lm", "kappa", fallback=cfg.kappa)
    if parser.has_section("audio"):
        sec = parser["audio"]
        tts = sec.get("tts", "pseudo").strip()
        if tts and tts != "pseudo":
            cfg.tts_cmd = _split_cmd(tts)
        cfg.speed_lo = sec.getfloat("speed_lo", cfg.speed_lo)
        cfg.speed_hi = sec.getfloat("speed_hi", cfg.speed_hi)

    cfg.__post_init__()
    return cfg


def write_sidecar(out_path, stage: str, inputs: dict, seed: int | None = None, config_hash: str = "") -> Path:
    """Write <out_path>.meta.json describing how out_path was produced."""
    out_path = Path(out_path)
    meta = {
        "stage": stage,
        "tool_version": __version__,
        "inputs": {k: str(v) for k, v in inputs.items()},
        "seed": seed,
        "config_sha256": config_hash,
    }
    side = out_path.with_name(out_path.name + ".meta.json")
    side.parent.mkdir(parents=True, exist_ok=True)
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return side
