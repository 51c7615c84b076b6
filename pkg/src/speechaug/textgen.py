"""Synthetic template generation and diversity ranking.

New delexicalized sentences come from a small Markov chain fitted to the
delexicalized corpus (or from an external generator process). Candidates are
ranked by how dissimilar they are to their nearest original sentence, measured
as Jaccard distance between bigram sets; near-duplicates fall below the
diversity floor and are dropped.
"""

from __future__ import annotations

import json
import random
from collections.abc import Sequence
from dataclasses import dataclass

from .adapters import ExternalProcessClient, ProtocolError
from .delex import DelexSentence, Slot, TemplateError, parse_template
from .seeding import stable_seed

_BOS = "\x02"
_EOS = "\x03"


class EmptySentence(ValueError):
    """Diversity scoring needs at least one item on both sides."""


class CorpusEmpty(ValueError):
    pass


class EmptyFrameVocab(KeyError):
    def __init__(self, frame: str):
        super().__init__(frame)
        self.frame = frame

    def __str__(self):
        return f"no slot vocabulary for frame {self.frame!r}"


class UnknownFrame(ValueError):
    def __init__(self, frame: str):
        super().__init__(f"adapter used frame {frame!r} not present in the request corpus")
        self.frame = frame


@dataclass(frozen=True)
class GenerationConfig:
    count: int
    seed: int = 0
    max_len: int = 30
    diversity_floor: float = 0.1
    markov_order: int = 2

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if self.max_len < 1:
            raise ValueError("max_len must be positive")
        if not 0.0 <= self.diversity_floor <= 1.0:
            raise ValueError("diversity_floor must lie in [0, 1]")
        if self.markov_order < 1:
            raise ValueError("markov_order must be at least 1")


@dataclass(frozen=True)
class RankedCandidate:
    sentence: DelexSentence
    origin_id: str
    dissimilarity: float


def _bigrams(items: Sequence[str]) -> set[tuple[str, str]]:
    return {(items[i], items[i + 1]) for i in range(len(items) - 1)}


def diversity_score(candidate: DelexSentence, original: DelexSentence) -> float:
    """Jaccard distance between the bigram sets of two rendered templates.

    Sentences too short to have bigrams compare by item equality: an exact
    copy scores 0, anything else 1.
    """
    ci = candidate.rendered_items()
    oi = original.rendered_items()
    if not ci or not oi:
        raise EmptySentence("cannot score an empty sentence")
    bc, bo = _bigrams(ci), _bigrams(oi)
    union = bc | bo
    if not union:
        return 0.0 if ci == oi else 1.0
    return 1.0 - len(bc & bo) / len(union)


def rank_candidates(
    candidates: Sequence[DelexSentence],
    originals: Sequence[DelexSentence],
    diversity_floor: float = 0.0,
) -> list[RankedCandidate]:
    """Score each candidate against its nearest original, filter, sort.

    Sort is by dissimilarity descending; ties break by rendered template so
    the order is total and reproducible. Candidates scoring below the floor
    are dropped.
    """
    if not originals:
        raise CorpusEmpty("no originals to rank against")
    ranked = []
    for cand in candidates:
        best = None
        best_origin = ""
        for orig in originals:
            score = diversity_score(cand, orig)
            if best is None or score < best:
                best = score
                best_origin = orig.origin_id
        if best >= diversity_floor:
            ranked.append(RankedCandidate(sentence=cand, origin_id=best_origin, dissimilarity=best))
    ranked.sort(key=lambda rc: (-rc.dissimilarity, rc.sentence.render()))
    return ranked


def _fit_transitions(corpus: Sequence[DelexSentence], order: int) -> dict:
    table: dict[tuple, list[str]] = {}
    for sent in corpus:
        seq = [_BOS] * order + sent.rendered_items() + [_EOS]
        for i in range(order, len(seq)):
            table.setdefault(tuple(seq[i - order : i]), []).append(seq[i])
    return table


def generate_templates(corpus: Sequence[DelexSentence], cfg: GenerationConfig) -> list[DelexSentence]:
    """Sample templates from a Markov chain over the corpus, then rank.

    Each sample walks the chain with its own seed derived from (cfg.seed,
    sample index), so output is reproducible and independent of sampling
    order. Returned sentences survived the diversity floor and are sorted
    most-dissimilar first.
    """
    corpus = list(corpus)
    if not corpus:
        raise CorpusEmpty("cannot generate from an empty corpus")
    if cfg.count == 0:
        return []

    table = _fit_transitions(corpus, cfg.markov_order)
    samples = []
    for i in range(cfg.count):
        rng = random.Random(stable_seed(cfg.seed, "gen", i))
        ctx = (_BOS,) * cfg.markov_order
        items: list[str] = []
        while len(items) < cfg.max_len:
            choices = table.get(ctx)
            if not choices:
                break
            nxt = rng.choice(choices)
            if nxt == _EOS:
                break
            items.append(nxt)
            ctx = (ctx + (nxt,))[-cfg.markov_order :]
        if items:
            samples.append(parse_template(" ".join(items)))
    return [rc.sentence for rc in rank_candidates(samples, corpus, cfg.diversity_floor)]


def realize(template: DelexSentence, vocab, seed: int) -> str:
    """Fill each slot with a uniformly chosen word from its frame vocabulary.

    Deterministic in (template, vocab, seed); distinct templates draw
    independent sequences under the same seed.
    """
    rng = random.Random(stable_seed(seed, "realize", template.render()))
    words = []
    for item in template.items:
        if isinstance(item, Slot):
            choices = vocab.words(item.label.frame)
            if not choices:
                raise EmptyFrameVocab(item.label.frame)
            words.append(rng.choice(choices))
        else:
            words.append(item.token)
    return " ".join(words)


def external_generate(
    client: ExternalProcessClient,
    corpus: Sequence[DelexSentence],
    count: int,
) -> list[DelexSentence]:
    """Request templates from an external generator process.

    Sends one request object, then reads exactly ``count`` template lines
    followed by a terminator. Frames the corpus never used are rejected.
    """
    corpus = list(corpus)
    if not corpus:
        raise CorpusEmpty("cannot request generation for an empty corpus")
    known_frames = {f for sent in corpus for f in sent.slot_frames()}
    client.send({"cmd": "generate", "count": count, "corpus": [s.render() for s in corpus]})

    out: list[DelexSentence] = []
    while True:
        line = client.recv_line()
        if line is None:
            raise ProtocolError("generator stream ended before the terminator")
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"not JSON: {line!r}") from exc
        if obj.get("done") is True:
            break
        if not isinstance(obj, dict) or "template" not in obj:
            raise ProtocolError(f"unexpected message: {line!r}")
        try:
            sent = parse_template(str(obj["template"]))
        except TemplateError as exc:
            raise ProtocolError(f"bad template {obj['template']!r}: {exc}") from exc
        for frame in sent.slot_frames():
            if frame not in known_frames:
                raise UnknownFrame(frame)
        out.append(sent)
    if len(out) != count:
        raise ProtocolError(f"expected {count} templates, got {len(out)}")
    return out
