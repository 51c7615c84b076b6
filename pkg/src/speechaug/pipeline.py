"""End-to-end augmentation pipeline and the experiment harness.

The pipeline runs: normalize -> delexicalize -> generate templates ->
realize -> synthesize audio -> merge manifests -> train LM -> summarize.
Each stage writes its artifact plus a ``.meta.json`` sidecar and a done
marker keyed on the config hash, so an interrupted run resumes where it
stopped; a changed config invalidates the markers.

Audio paths: natural records keep absolute paths (resolved against their
source manifest), synthetic records point into the run directory, so a run
directory can be moved together with its wav/ subdirectory.
"""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, replace
from pathlib import Path

from . import audio, delex, lm, morph, scoring, textgen
from .adapters import ExternalProcessClient
from .config import PipelineConfig, write_sidecar
from .corpus import Manifest, UtteranceRecord, load_manifest, save_manifest
from .seeding import stable_seed


class GenerationShortfall(RuntimeError):
    """The generator could not produce enough templates past the filter."""


@dataclass
class PipelineResult:
    out_dir: Path
    normalized_manifest: Path
    templates_path: Path
    slot_vocab_path: Path
    frames_path: Path
    synthetic_templates_path: Path
    synthetic_text_path: Path
    synthetic_manifest: Path
    merged_manifest: Path
    lm_path: Path
    summary_path: Path

    def summary(self) -> dict:
        return json.loads(self.summary_path.read_text(encoding="utf-8"))


@dataclass
class Assets:
    segmenter: morph.Segmenter
    chain: delex.FrameChain
    roles: dict[str, str]
    g2p: audio.G2PTable


def load_assets(cfg: PipelineConfig) -> Assets:
    t = cfg.tables
    segmenter = morph.Segmenter(
        rules=morph.load_suffix_rules(t.suffix_rules),
        inventory=morph.load_suffix_inventory(t.suffix_inventory),
        lexicon=morph.load_lemma_lexicon(t.lemma_lexicon),
    )
    chain = delex.FrameChain(
        primary=delex.load_frame_lexicon(t.frame_lexicon),
        bridge=delex.load_bilingual_map(t.bilingual_map),
        pivot=delex.load_frame_lexicon(t.pivot_lexicon),
    )
    return Assets(
        segmenter=segmenter,
        chain=chain,
        roles=delex.load_role_lexicon(t.role_lexicon),
        g2p=audio.load_g2p(t.g2p, t.phones),
    )


def _abs_audio(manifest_path: Path, rec: UtteranceRecord) -> UtteranceRecord:
    p = Path(rec.audio)
    if p.is_absolute():
        return rec
    return replace(rec, audio=str((manifest_path.parent / p).resolve()))


def _marker(out_dir: Path, name: str) -> Path:
    return out_dir / f".{name}.done"


def _is_done(out_dir: Path, name: str, cfg: PipelineConfig, force: bool) -> bool:
    if force:
        return False
    marker = _marker(out_dir, name)
    return marker.exists() and marker.read_text(encoding="utf-8").strip() == cfg.config_hash


def _mark_done(out_dir: Path, name: str, cfg: PipelineConfig) -> None:
    _marker(out_dir, name).write_text(cfg.config_hash + "\n", encoding="utf-8")


def delexicalize_manifest(
    manifest: Manifest, assets: Assets, top_k: int
) -> tuple[list[delex.DelexSentence], delex.SlotVocabulary, list[str]]:
    """Analyze train records, pick the top frames, delexicalize everything."""
    analyzed = []
    tags = []
    for rec in manifest.by_split("train"):
        tokens = assets.segmenter.analyze_text(rec.text)
        analyzed.append((rec, tokens))
        for tok in tokens:
            frame = assets.chain.lookup(tok.lemma)
            if frame is not None:
                tags.append(frame)
    selected = delex.select_frames(tags, top_k)

    sentences = []
    harvests = []
    for rec, tokens in analyzed:
        sent, harvest = delex.delexicalize(
            tokens, selected, assets.chain, roles=assets.roles, origin_id=rec.id
        )
        sentences.append(sent)
        harvests.append(harvest)
    return sentences, delex.build_slot_vocab(harvests), selected


def generate_with_builtin(
    corpus: list[delex.DelexSentence], cfg: PipelineConfig, count: int
) -> list[delex.DelexSentence]:
    """Oversample seeded batches until the diversity filter passes `count`."""
    got: list[delex.DelexSentence] = []
    for batch in range(50):
        if len(got) >= count:
            break
        gen_cfg = textgen.GenerationConfig(
            count=max(2 * count, 8),
            seed=stable_seed(cfg.seed, "batch", batch),
            max_len=cfg.max_len,
            diversity_floor=cfg.diversity_floor,
            markov_order=cfg.markov_order,
        )
        got.extend(textgen.generate_templates(corpus, gen_cfg))
    if len(got) < count:
        raise GenerationShortfall(
            f"{len(got)} templates after 50 batches, needed {count}; "
            "lower diversity_floor or enlarge the corpus"
        )
    return got[:count]


def generate_with_adapter(
    corpus: list[delex.DelexSentence], cfg: PipelineConfig, count: int
) -> list[delex.DelexSentence]:
    """Ask the external generator, then apply the same ranking filter."""
    got: list[delex.DelexSentence] = []
    request = count
    for _ in range(6):
        if len(got) >= count:
            break
        with ExternalProcessClient(cfg.generator_cmd) as client:
            raw = textgen.external_generate(client, corpus, request)
        ranked = textgen.rank_candidates(raw, corpus, cfg.diversity_floor)
        got = [rc.sentence for rc in ranked]
        request *= 2
    if len(got) < count:
        raise GenerationShortfall(
            f"adapter yielded {len(got)} templates past the filter, needed {count}"
        )
    return got[:count]


def run_pipeline(cfg: PipelineConfig, out_dir, force: bool = False) -> PipelineResult:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    assets = load_assets(cfg)

    result = PipelineResult(
        out_dir=out_dir,
        normalized_manifest=out_dir / "normalized.jsonl",
        templates_path=out_dir / "natural.delex",
        slot_vocab_path=out_dir / "slot_vocab.tsv",
        frames_path=out_dir / "frames.txt",
        synthetic_templates_path=out_dir / "synthetic.delex",
        synthetic_text_path=out_dir / "synthetic.txt",
        synthetic_manifest=out_dir / "synthetic.jsonl",
        merged_manifest=out_dir / "merged.jsonl",
        lm_path=out_dir / "lm.arpa",
        summary_path=out_dir / "summary.json",
    )

    # normalize
    if _is_done(out_dir, "normalize", cfg, force):
        normalized = load_manifest(result.normalized_manifest)
    else:
        source = load_manifest(cfg.manifest)
        normalized = Manifest(
            records=[
                replace(
                    _abs_audio(Path(cfg.manifest), rec),
                    text=assets.segmenter.normalize_text(rec.text),
                )
                for rec in source
            ]
        )
        save_manifest(normalized, result.normalized_manifest)
        write_sidecar(
            result.normalized_manifest,
            "normalize",
            {"manifest": cfg.manifest},
            seed=cfg.seed,
            config_hash=cfg.config_hash,
        )
        _mark_done(out_dir, "normalize", cfg)

    # delexicalize
    if _is_done(out_dir, "delex", cfg, force):
        corpus = delex.load_templates(result.templates_path)
        vocab = delex.load_slot_vocab(result.slot_vocab_path)
    else:
        corpus, vocab, selected = delexicalize_manifest(normalized, assets, cfg.top_k)
        delex.save_templates(corpus, result.templates_path)
        delex.save_slot_vocab(vocab, result.slot_vocab_path)
        result.frames_path.write_text("\n".join(selected) + "\n", encoding="utf-8")
        write_sidecar(
            result.templates_path,
            "delex",
            {"manifest": result.normalized_manifest, "top_k": cfg.top_k},
            seed=cfg.seed,
            config_hash=cfg.config_hash,
        )
        _mark_done(out_dir, "delex", cfg)

    count = cfg.gen_count or len(corpus)

    # generate templates
    if _is_done(out_dir, "generate", cfg, force):
        synthetic_templates = delex.load_templates(result.synthetic_templates_path)
    else:
        if cfg.generator_cmd:
            synthetic_templates = generate_with_adapter(corpus, cfg, count)
        else:
            synthetic_templates = generate_with_builtin(corpus, cfg, count)
        delex.save_templates(synthetic_templates, result.synthetic_templates_path)
        write_sidecar(
            result.synthetic_templates_path,
            "generate",
            {"corpus": result.templates_path, "count": count},
            seed=cfg.seed,
            config_hash=cfg.config_hash,
        )
        _mark_done(out_dir, "generate", cfg)

    # realize slots
    if _is_done(out_dir, "realize", cfg, force):
        sentences = [
            line.strip()
            for line in result.synthetic_text_path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    else:
        sentences = [
            textgen.realize(t, vocab, stable_seed(cfg.seed, "realize", i))
            for i, t in enumerate(synthetic_templates)
        ]
        result.synthetic_text_path.write_text(
            "".join(s + "\n" for s in sentences), encoding="utf-8"
        )
        write_sidecar(
            result.synthetic_text_path,
            "realize",
            {"templates": result.synthetic_templates_path},
            seed=cfg.seed,
            config_hash=cfg.config_hash,
        )
        _mark_done(out_dir, "realize", cfg)

    # synthesize audio
    if _is_done(out_dir, "synth", cfg, force):
        synthetic = load_manifest(result.synthetic_manifest)
    else:
        wav_dir = out_dir / "wav"
        wav_dir.mkdir(exist_ok=True)
        records = []
        tts_client = None
        try:
            if cfg.tts_cmd:
                tts_client = ExternalProcessClient(cfg.tts_cmd).spawn()
            for i, text in enumerate(sentences):
                sid = f"syn-{i + 1:04d}"
                wav_path = wav_dir / f"{sid}.wav"
                if tts_client is not None:
                    buf = audio.external_tts(tts_client, text, wav_path)
                else:
                    buf = audio.pseudo_tts(text, assets.g2p, seed=stable_seed(cfg.seed, sid))
                    audio.write_wav(buf, wav_path)
                records.append(
                    UtteranceRecord(
                        id=sid,
                        audio=str(Path("wav") / f"{sid}.wav"),
                        duration_ms=buf.duration_ms,
                        text=text,
                        speaker="synthetic",
                        dialect="",
                        split="train",
                        origin="synthetic",
                    )
                )
        finally:
            if tts_client is not None:
                tts_client.close()
        synthetic = Manifest(records=records)
        save_manifest(synthetic, result.synthetic_manifest)
        write_sidecar(
            result.synthetic_manifest,
            "synth",
            {"text": result.synthetic_text_path, "tts": " ".join(cfg.tts_cmd) or "builtin"},
            seed=cfg.seed,
            config_hash=cfg.config_hash,
        )
        _mark_done(out_dir, "synth", cfg)

    # merge
    if _is_done(out_dir, "merge", cfg, force):
        merged = load_manifest(result.merged_manifest)
    else:
        merged = Manifest(records=list(normalized.records) + list(synthetic.records))
        save_manifest(merged, result.merged_manifest)
        write_sidecar(
            result.merged_manifest,
            "merge",
            {"natural": result.normalized_manifest, "synthetic": result.synthetic_manifest},
            seed=cfg.seed,
            config_hash=cfg.config_hash,
        )
        _mark_done(out_dir, "merge", cfg)

    # language model over natural + synthetic train text
    if not _is_done(out_dir, "lm", cfg, force):
        train_sents = [rec.text.split() for rec in merged.by_split("train")]
        model = lm.train(train_sents, order=cfg.lm_order, kappa=cfg.kappa, seed=cfg.seed)
        lm.save_lm(
            model,
            result.lm_path,
            comments=[
                f"config_sha256={cfg.config_hash}",
                f"seed={cfg.seed}",
                f"order={cfg.lm_order} kappa={cfg.kappa}",
            ],
        )
        write_sidecar(
            result.lm_path,
            "lm",
            {"manifest": result.merged_manifest},
            seed=cfg.seed,
            config_hash=cfg.config_hash,
        )
        _mark_done(out_dir, "lm", cfg)

    # summary
    if not _is_done(out_dir, "report", cfg, force):
        reloaded = lm.load_lm(result.lm_path)
        summary = {
            "natural_train": len(normalized.by_split("train")),
            "synthetic": len(synthetic),
            "merged_train": len(merged.by_split("train")),
            "hours_natural": normalized.hours("train"),
            "hours_merged": merged.hours("train"),
            "selected_frames": result.frames_path.read_text(encoding="utf-8").split(),
            "lm_vocab": len(reloaded.vocab),
            "lm_order": reloaded.order,
            "seed": cfg.seed,
            "config_sha256": cfg.config_hash,
        }
        result.summary_path.write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        _mark_done(out_dir, "report", cfg)

    return result


VARIANTS = ("baseline", "perturbed", "augmented", "doubled", "text-only-lm", "respoken")

_VARIANT_DESCRIPTIONS = {
    "baseline": "natural speech",
    "perturbed": "natural + speed-perturbed copies",
    "augmented": "natural + synthetic text spoken by TTS",
    "doubled": "natural speech duplicated",
    "text-only-lm": "natural speech, LM sees synthetic text",
    "respoken": "natural + TTS respeaking natural text",
}


def _train_variant_lm(manifest: Manifest, cfg: PipelineConfig, path: Path) -> None:
    sents = [rec.text.split() for rec in manifest.by_split("train")]
    model = lm.train(sents, order=cfg.lm_order, kappa=cfg.kappa, seed=cfg.seed)
    lm.save_lm(
        model, path, comments=[f"config_sha256={cfg.config_hash}", f"seed={cfg.seed}"]
    )


def _read_canonical(path: Path) -> audio.AudioBuffer:
    buf, fmt = audio.read_wav_any(path)
    if (fmt.channels, fmt.sample_rate, fmt.bits) == (1, audio.CANONICAL_RATE, 16):
        return buf
    return audio.normalize_format(buf)


def run_experiment(cfg: PipelineConfig, out_dir, hyp_dir=None, force: bool = False) -> scoring.ScoreReport:
    """Build every system variant's training data and summarize the results.

    Each variant gets a directory with a manifest and an LM. Scoring needs
    recognition hypotheses, which come from outside: ``hyp_dir`` may hold
    one ``<variant>.jsonl`` per variant with ``{"id", "text"}`` rows; rows
    are matched by id against the variant manifest and scored pooled.
    Variants without hypotheses report a pending score.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    assets = load_assets(cfg)

    source = load_manifest(cfg.manifest)
    natural = Manifest(
        records=[
            replace(
                _abs_audio(Path(cfg.manifest), rec),
                text=assets.segmenter.normalize_text(rec.text),
            )
            for rec in source
        ]
    )
    natural_train = natural.by_split("train")
    base_ms = sum(r.duration_ms for r in natural_train)

    variants: dict[str, Manifest] = {}

    # baseline: the natural corpus as-is
    variants["baseline"] = natural

    # perturbed: one speed-modified copy per train record
    dist_dir = out_dir / "perturbed" / "wav"
    dist_dir.mkdir(parents=True, exist_ok=True)
    distorted = []
    for rec in natural_train:
        factor = audio.sample_speed_factor(cfg.seed, rec.id, cfg.speed_lo, cfg.speed_hi)
        buf = _read_canonical(Path(rec.audio))
        pbuf = audio.speed_perturb(buf, factor)
        wav_path = dist_dir / f"dist-{rec.id}.wav"
        audio.write_wav(pbuf, wav_path)
        distorted.append(
            replace(
                rec,
                id=f"dist-{rec.id}",
                audio=str(wav_path.resolve()),
                duration_ms=pbuf.duration_ms,
                origin="distorted",
            )
        )
    variants["perturbed"] = Manifest(records=list(natural.records) + distorted)

    # augmented: the full pipeline
    pipe = run_pipeline(cfg, out_dir / "augmented", force=force)
    variants["augmented"] = load_manifest(pipe.merged_manifest)

    # doubled: every natural record twice
    doubled = [replace(rec, id=f"dup-{rec.id}") for rec in natural_train]
    variants["doubled"] = Manifest(records=list(natural.records) + doubled)

    # text-only-lm: natural audio, but the augmented LM
    variants["text-only-lm"] = natural

    # respoken: TTS reads the natural transcripts
    resp_dir = out_dir / "respoken" / "wav"
    resp_dir.mkdir(parents=True, exist_ok=True)
    respoken = []
    for rec in natural_train:
        buf = audio.pseudo_tts(rec.text, assets.g2p, seed=stable_seed(cfg.seed, "respeak", rec.id))
        wav_path = resp_dir / f"respoken-{rec.id}.wav"
        audio.write_wav(buf, wav_path)
        respoken.append(
            replace(
                rec,
                id=f"respoken-{rec.id}",
                audio=str(wav_path.resolve()),
                duration_ms=buf.duration_ms,
                origin="synthetic",
            )
        )
    variants["respoken"] = Manifest(records=list(natural.records) + respoken)

    report = scoring.ScoreReport(title="Training-data variants")
    details: dict[str, dict] = {}
    for name in VARIANTS:
        manifest = variants[name]
        vdir = out_dir / name
        vdir.mkdir(parents=True, exist_ok=True)
        manifest_path = vdir / "manifest.jsonl"
        save_manifest(manifest, manifest_path)
        write_sidecar(
            manifest_path,
            f"experiment:{name}",
            {"manifest": cfg.manifest},
            seed=cfg.seed,
            config_hash=cfg.config_hash,
        )

        lm_path = vdir / "lm.arpa"
        if name in ("augmented", "text-only-lm"):
            if lm_path.resolve() != pipe.lm_path.resolve():
                shutil.copyfile(pipe.lm_path, lm_path)
        else:
            _train_variant_lm(manifest, cfg, lm_path)

        train_ms = manifest.duration_ms("train")
        extra_ms = train_ms - base_ms
        if extra_ms > 0:
            hours = f"{base_ms / 3.6e6:.2f} + {extra_ms / 3.6e6:.2f}"
        else:
            hours = f"{train_ms / 3.6e6:.2f}"

        wer_value = None
        if hyp_dir is not None:
            hyp_path = Path(hyp_dir) / f"{name}.jsonl"
            if hyp_path.exists():
                wer_value = _score_hypotheses(manifest, hyp_path)

        report.rows.append(
            scoring.ReportRow(
                label=name,
                training_data=_VARIANT_DESCRIPTIONS[name],
                hours=hours,
                wer=wer_value,
            )
        )
        details[name] = {
            "train_records": len(manifest.by_split("train")),
            "train_ms": train_ms,
            "manifest": str(manifest_path),
            "lm": str(lm_path),
        }

    (out_dir / "report.tsv").write_text(report.to_tsv(), encoding="utf-8")
    (out_dir / "report.txt").write_text(report.to_text(), encoding="utf-8")
    (out_dir / "experiment.json").write_text(
        json.dumps(
            {"base_ms": base_ms, "seed": cfg.seed, "variants": details},
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return report


def _score_hypotheses(manifest: Manifest, hyp_path: Path) -> float:
    refs = {rec.id: rec.text for rec in manifest}
    pairs = []
    with open(hyp_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            rid = str(obj["id"])
            if rid in refs:
                pairs.append((refs[rid].split(), str(obj["text"]).split()))
    if not pairs:
        return float("nan")
    return scoring.corpus_score(pairs)
