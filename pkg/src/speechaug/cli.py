"""Command-line entry points.

One subcommand per pipeline stage, plus ``pipeline`` and ``experiment``
drivers that read an INI config. Stage commands work on plain files so any
stage can be rerun or swapped out in isolation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import audio, config, delex, features, lm, minicorpus, morph, pipeline, scoring, textgen
from .adapters import ExternalProcessClient
from .corpus import Manifest, load_manifest, save_manifest, split_corpus
from .seeding import stable_seed


def _segmenter_from_args(args) -> morph.Segmenter:
    tables = config.TablePaths()
    return morph.Segmenter(
        rules=morph.load_suffix_rules(args.suffix_rules or tables.suffix_rules),
        inventory=morph.load_suffix_inventory(args.suffix_inventory or tables.suffix_inventory),
        lexicon=morph.load_lemma_lexicon(args.lemma_lexicon or tables.lemma_lexicon),
    )


def _add_table_args(sub) -> None:
    sub.add_argument("--suffix-rules", dest="suffix_rules", default=None)
    sub.add_argument("--suffix-inventory", dest="suffix_inventory", default=None)
    sub.add_argument("--lemma-lexicon", dest="lemma_lexicon", default=None)


def cmd_mini(args) -> int:
    manifest = minicorpus.build_mini_corpus(args.out, seed=args.seed)
    print(f"wrote {manifest}")
    return 0


def cmd_normalize(args) -> int:
    seg = _segmenter_from_args(args)
    if args.manifest:
        manifest = load_manifest(args.manifest)
        from dataclasses import replace

        out = Manifest(records=[replace(r, text=seg.normalize_text(r.text)) for r in manifest])
        save_manifest(out, args.out)
    else:
        lines = Path(args.text).read_text(encoding="utf-8").splitlines()
        normalized = [seg.normalize_text(line) for line in lines if line.strip()]
        Path(args.out).write_text("".join(s + "\n" for s in normalized), encoding="utf-8")
    config.write_sidecar(
        args.out, "normalize", {"input": args.manifest or args.text}, seed=None
    )
    print(f"wrote {args.out}")
    return 0


def cmd_split(args) -> int:
    manifest = load_manifest(args.manifest)
    out = split_corpus(manifest, (args.train, args.valid, args.test), args.seed)
    save_manifest(out, args.out)
    config.write_sidecar(
        args.out,
        "split",
        {"manifest": args.manifest, "ratios": f"{args.train},{args.valid},{args.test}"},
        seed=args.seed,
    )
    for split in ("train", "valid", "test"):
        print(f"{split}: {len(out.by_split(split))} records, {out.hours(split):.3f} h")
    return 0


def cmd_delex(args) -> int:
    cfg = config.load_config(args.config) if args.config else config.PipelineConfig()
    if args.manifest:
        cfg.manifest = Path(args.manifest)
    top_k = args.top_k if args.top_k is not None else cfg.top_k
    assets = pipeline.load_assets(cfg)
    manifest = load_manifest(cfg.manifest)
    sentences, vocab, selected = pipeline.delexicalize_manifest(manifest, assets, top_k)
    out_dir = Path(args.out)
    delex.save_templates(sentences, out_dir / "natural.delex")
    delex.save_slot_vocab(vocab, out_dir / "slot_vocab.tsv")
    (out_dir / "frames.txt").write_text("\n".join(selected) + "\n", encoding="utf-8")
    config.write_sidecar(
        out_dir / "natural.delex",
        "delex",
        {"manifest": cfg.manifest, "top_k": top_k},
        seed=None,
        config_hash=cfg.config_hash,
    )
    print(f"selected frames: {', '.join(selected)}")
    print(f"wrote {out_dir / 'natural.delex'}")
    return 0


def cmd_generate(args) -> int:
    corpus = delex.load_templates(args.templates)
    if args.adapter:
        import shlex

        with ExternalProcessClient(shlex.split(args.adapter)) as client:
            candidates = textgen.external_generate(client, corpus, args.count)
        ranked = textgen.rank_candidates(candidates, corpus, args.diversity_floor)
        out = [rc.sentence for rc in ranked]
    else:
        gen_cfg = textgen.GenerationConfig(
            count=args.count,
            seed=args.seed,
            max_len=args.max_len,
            diversity_floor=args.diversity_floor,
            markov_order=args.markov_order,
        )
        out = textgen.generate_templates(corpus, gen_cfg)
    delex.save_templates(out, args.out)
    config.write_sidecar(
        args.out, "generate", {"templates": args.templates, "count": args.count}, seed=args.seed
    )
    print(f"kept {len(out)} of {args.count} candidates")
    return 0


def cmd_realize(args) -> int:
    templates = delex.load_templates(args.templates)
    vocab = delex.load_slot_vocab(args.slot_vocab)
    sentences = [
        textgen.realize(t, vocab, stable_seed(args.seed, "realize", i))
        for i, t in enumerate(templates)
    ]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text("".join(s + "\n" for s in sentences), encoding="utf-8")
    config.write_sidecar(
        args.out, "realize", {"templates": args.templates, "slot_vocab": args.slot_vocab},
        seed=args.seed,
    )
    print(f"wrote {len(sentences)} sentences")
    return 0


def cmd_train_lm(args) -> int:
    sentences = []
    for path in args.text:
        with open(path, encoding="utf-8") as fh:
            sentences.extend(line.split() for line in fh if line.strip())
    model = lm.train(sentences, order=args.order, kappa=args.kappa, seed=args.seed)
    lm.save_lm(
        model,
        args.out,
        comments=[f"order={args.order} kappa={args.kappa}", f"seed={args.seed}"],
    )
    config.write_sidecar(
        args.out, "train-lm", {"text": ",".join(map(str, args.text))}, seed=args.seed
    )
    degenerate = f", fallback discounts at orders {list(model.degenerate_orders)}" if model.degenerate_orders else ""
    print(f"vocab {len(model.vocab)}, order {model.order}{degenerate}")
    print(f"wrote {args.out}")
    return 0


def cmd_perplexity(args) -> int:
    model = lm.load_lm(args.lm)
    with open(args.text, encoding="utf-8") as fh:
        sentences = [line.split() for line in fh if line.strip()]
    value = lm.perplexity(model, sentences)
    print(f"perplexity {value:.4f}")
    return 0


def cmd_synth(args) -> int:
    if bool(args.g2p) != bool(args.phones):
        print("error: --g2p and --phones must be given together", file=sys.stderr)
        return 2
    table = audio.load_g2p(args.g2p, args.phones) if args.g2p else audio.default_g2p()
    with open(args.text, encoding="utf-8") as fh:
        sentences = [line.strip() for line in fh if line.strip()]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for i, text in enumerate(sentences):
        sid = f"{args.prefix}{i + 1:04d}"
        buf = audio.pseudo_tts(text, table, seed=stable_seed(args.seed, sid))
        audio.write_wav(buf, out_dir / f"{sid}.wav")
        records.append({"id": sid, "audio": f"{sid}.wav", "duration_s": buf.duration_ms / 1000.0, "text": text})
    manifest_path = out_dir / "synth.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    config.write_sidecar(manifest_path, "synth", {"text": args.text}, seed=args.seed)
    print(f"wrote {len(records)} files under {out_dir}")
    return 0


def cmd_perturb(args) -> int:
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out)
    wav_dir = out_dir / "wav"
    wav_dir.mkdir(parents=True, exist_ok=True)
    from dataclasses import replace

    records = []
    for rec in manifest:
        src = Path(rec.audio)
        if not src.is_absolute():
            src = Path(args.manifest).parent / src
        buf, fmt = audio.read_wav_any(src)
        if (fmt.channels, fmt.sample_rate, fmt.bits) != (1, audio.CANONICAL_RATE, 16):
            buf = audio.normalize_format(buf)
        factor = (
            args.factor
            if args.factor is not None
            else audio.sample_speed_factor(args.seed, rec.id, args.lo, args.hi)
        )
        out = audio.speed_perturb(buf, factor)
        wav_path = wav_dir / f"dist-{rec.id}.wav"
        audio.write_wav(out, wav_path)
        records.append(
            replace(
                rec,
                id=f"dist-{rec.id}",
                audio=str(Path("wav") / f"dist-{rec.id}.wav"),
                duration_ms=out.duration_ms,
                origin="distorted",
            )
        )
    out_manifest = out_dir / "distorted.jsonl"
    save_manifest(Manifest(records=records), out_manifest)
    config.write_sidecar(out_manifest, "perturb", {"manifest": args.manifest}, seed=args.seed)
    print(f"wrote {out_manifest}")
    return 0


def cmd_features(args) -> int:
    cfg = features.FeatureConfig(deltas=not args.no_deltas)
    buf = audio.read_wav_strict(args.wav)
    if args.kind == "mfcc":
        matrix = features.mfcc(buf, cfg)
        if args.normalize:
            matrix = features.normalize_sequence(matrix)
        labels = features.feature_labels("mfcc", matrix.shape[1])
    else:
        matrix = features.power_spectrum(buf, cfg)
        labels = features.feature_labels("pow", matrix.shape[1])
    features.save_features(matrix, labels, args.out)
    if args.csv:
        features.export_csv(matrix, labels, args.csv)
    config.write_sidecar(args.out, "features", {"wav": args.wav, "kind": args.kind}, seed=None)
    print(f"{matrix.shape[0]} frames x {matrix.shape[1]} dims -> {args.out}")
    return 0


def cmd_score(args) -> int:
    refs = [line.split() for line in Path(args.ref).read_text(encoding="utf-8").splitlines() if line.strip()]
    hyps = [line.split() for line in Path(args.hyp).read_text(encoding="utf-8").splitlines() if line.strip()]
    if len(refs) != len(hyps):
        print(f"error: {len(refs)} reference lines vs {len(hyps)} hypothesis lines", file=sys.stderr)
        return 2
    value = scoring.corpus_score(list(zip(refs, hyps)))
    print(f"WER {value:.2f}")
    if args.ter:
        seg = _segmenter_from_args(args)
        pairs = [
            (seg.morphemes(" ".join(r)), seg.morphemes(" ".join(h)))
            for r, h in zip(refs, hyps)
        ]
        print(f"TER {scoring.corpus_score(pairs):.2f}")
    return 0


def cmd_pipeline(args) -> int:
    cfg = config.load_config(args.config)
    result = pipeline.run_pipeline(cfg, args.out, force=args.force)
    summary = result.summary()
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def cmd_experiment(args) -> int:
    cfg = config.load_config(args.config)
    report = pipeline.run_experiment(cfg, args.out, hyp_dir=args.hyp_dir, force=args.force)
    print(report.to_text(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="speechaug",
        description="Text and speech data augmentation for low-resource ASR corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mini", help="materialize the bundled demo corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=minicorpus.MINI_SEED)
    p.set_defaults(func=cmd_mini)

    p = sub.add_parser("normalize", help="standardize dialect suffixes")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--manifest")
    group.add_argument("--text")
    p.add_argument("--out", required=True)
    _add_table_args(p)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("split", help="assign train/valid/test splits by duration")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--train", type=float, default=0.8)
    p.add_argument("--valid", type=float, default=0.1)
    p.add_argument("--test", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("delex", help="replace framed words with slots")
    p.add_argument("--manifest")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--top-k", dest="top_k", type=int, default=None)
    p.set_defaults(func=cmd_delex)

    p = sub.add_parser("generate", help="generate synthetic templates")
    p.add_argument("--templates", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--max-len", dest="max_len", type=int, default=30)
    p.add_argument("--diversity-floor", dest="diversity_floor", type=float, default=0.1)
    p.add_argument("--markov-order", dest="markov_order", type=int, default=2)
    p.add_argument("--adapter", help="external generator command line")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("realize", help="fill slots from the slot vocabulary")
    p.add_argument("--templates", required=True)
    p.add_argument("--slot-vocab", dest="slot_vocab", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_realize)

    p = sub.add_parser("train-lm", help="train the n-gram model")
    p.add_argument("--text", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--kappa", type=float, default=0.04)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_train_lm)

    p = sub.add_parser("perplexity", help="evaluate a saved model on text")
    p.add_argument("--lm", required=True)
    p.add_argument("--text", required=True)
    p.set_defaults(func=cmd_perplexity)

    p = sub.add_parser("synth", help="synthesize audio for a text file")
    p.add_argument("--text", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--prefix", default="syn-")
    p.add_argument("--g2p")
    p.add_argument("--phones")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("perturb", help="speed-perturb a manifest's audio")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--factor", type=float, default=None, help="fixed factor; default samples per item")
    p.add_argument("--lo", type=float, default=0.85)
    p.add_argument("--hi", type=float, default=1.15)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("features", help="extract features from a canonical WAV")
    p.add_argument("--wav", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("mfcc", "power"), default="mfcc")
    p.add_argument("--csv", help="also export CSV here")
    p.add_argument("--no-deltas", dest="no_deltas", action="store_true")
    p.add_argument("--normalize", action="store_true")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("score", help="word error rate between two text files")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--ter", action="store_true", help="also score over morphemes")
    _add_table_args(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("pipeline", help="run the full augmentation pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("experiment", help="build all training-data variants")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hyp-dir", dest="hyp_dir", default=None)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
