"""Interpolated modified Kneser-Ney n-gram model with singleton pruning.

Training counts raw n-grams at the highest order and left-extension type
counts (continuation counts) at every lower order. Each order gets three
discounts estimated from its own count-of-counts:

    Y    = n1 / (n1 + 2 n2)
    D1   = 1 - 2 Y n2 / n1
    D2   = 2 - 3 Y n3 / n2
    D3+  = 3 - 4 Y n4 / n3

clamped to be non-negative. If any of n1..n4 is zero the formulas degenerate
and that order falls back to a fixed discount of 0.75; such orders are
recorded on the model. Probability mass removed by discounting is
redistributed through the lower-order distribution, bottoming out at the
uniform distribution over the vocabulary.

Before counting, a fraction kappa of the singleton vocabulary (types that
occur exactly once) is replaced by <unk> so the model has real unknown-word
mass.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .seeding import stable_seed

UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"

FALLBACK_DISCOUNT = 0.75


def round_half_up(x) -> int:
    """Round with exact halves going up; exact in rationals, no float drift."""
    return int(math.floor(Fraction(x) + Fraction(1, 2)))


@dataclass(frozen=True)
class PruningReport:
    hapax_total: int
    replaced: tuple[str, ...]
    kappa: float


def apply_singleton_pruning(
    sentences: Sequence[Sequence[str]], kappa: float, seed: int = 0
) -> tuple[list[list[str]], PruningReport]:
    """Replace round_half_up(kappa * hapax_count) singleton types with <unk>.

    The sample is drawn over the sorted singleton list with a seeded RNG, so
    the choice is reproducible and independent of corpus iteration order.
    """
    if not 0.0 <= kappa <= 1.0:
        raise ValueError(f"kappa must lie in [0, 1], got {kappa}")
    sents = [list(s) for s in sentences]
    freq = Counter(tok for sent in sents for tok in sent)
    hapaxes = sorted(t for t, c in freq.items() if c == 1)
    n_replace = round_half_up(Fraction(kappa) * len(hapaxes))
    chosen: set[str] = set()
    if n_replace:
        chosen = set(random.Random(stable_seed(seed, "prune")).sample(hapaxes, n_replace))
    pruned = [[UNK if tok in chosen else tok for tok in sent] for sent in sents]
    return pruned, PruningReport(
        hapax_total=len(hapaxes), replaced=tuple(sorted(chosen)), kappa=kappa
    )


@dataclass
class NGramLM:
    order: int
    vocab: frozenset[str]
    # counts[m-1]: m-gram -> count. Raw window counts at the top order,
    # continuation (left-extension type) counts below.
    counts: tuple[dict, ...]
    context_totals: tuple[dict, ...]
    context_buckets: tuple[dict, ...]  # context -> (N1, N2, N3+) over its continuations
    discounts: tuple[tuple[float, float, float], ...]
    kappa: float
    degenerate_orders: tuple[int, ...] = ()
    pruning: PruningReport | None = None

    def _p(self, gram: tuple[str, ...]) -> float:
        m = len(gram)
        if m == 0:
            return 1.0 / len(self.vocab)
        ctx = gram[:-1]
        total = self.context_totals[m - 1].get(ctx, 0)
        if total == 0:
            # unseen context: nothing to interpolate, back off entirely
            return self._p(gram[1:])
        c = self.counts[m - 1].get(gram, 0)
        d1, d2, d3 = self.discounts[m - 1]
        if c == 0:
            disc = 0.0
        elif c == 1:
            disc = d1
        elif c == 2:
            disc = d2
        else:
            disc = d3
        n1, n2, n3 = self.context_buckets[m - 1].get(ctx, (0, 0, 0))
        gamma = (d1 * n1 + d2 * n2 + d3 * n3) / total
        return max(c - disc, 0.0) / total + gamma * self._p(gram[1:])

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        """P(word | context); unknown words and context words map to <unk>."""
        w = word if word in self.vocab else UNK
        ctx = tuple(t if t in self.vocab else UNK for t in context)
        if self.order > 1:
            ctx = ctx[-(self.order - 1) :]
        else:
            ctx = ()
        return self._p(ctx + (w,))

    def logprob(self, word: str, context: Sequence[str] = ()) -> float:
        return math.log(self.prob(word, context))


def train(
    sentences: Sequence[Sequence[str]],
    order: int = 4,
    kappa: float = 0.04,
    seed: int = 0,
) -> NGramLM:
    """Fit the model. Sentences are token lists without sentence markers."""
    if order < 1:
        raise ValueError("order must be at least 1")
    sents = [list(s) for s in sentences]
    if not sents:
        raise ValueError("training corpus is empty")

    pruned, report = apply_singleton_pruning(sents, kappa, seed)
    vocab = frozenset({UNK, BOS, EOS} | {tok for sent in pruned for tok in sent})

    # raw window counts, every order
    raw: list[dict] = [dict() for _ in range(order)]
    for sent in pruned:
        seq = [BOS] * (order - 1) + sent + [EOS]
        for m in range(1, order + 1):
            table = raw[m - 1]
            for i in range(len(seq) - m + 1):
                gram = tuple(seq[i : i + m])
                table[gram] = table.get(gram, 0) + 1

    # top order keeps raw counts; below, a gram counts once per distinct
    # word that ever precedes it
    counts: list[dict] = [dict() for _ in range(order)]
    counts[order - 1] = raw[order - 1]
    for m in range(order - 1, 0, -1):
        cont: dict = {}
        for gram in raw[m]:  # (m+1)-grams
            suffix = gram[1:]
            cont[suffix] = cont.get(suffix, 0) + 1
        counts[m - 1] = cont

    totals: list[dict] = []
    buckets: list[dict] = []
    for m in range(1, order + 1):
        t: dict = {}
        b: dict = {}
        for gram, c in counts[m - 1].items():
            ctx = gram[:-1]
            t[ctx] = t.get(ctx, 0) + c
            n1, n2, n3 = b.get(ctx, (0, 0, 0))
            if c == 1:
                n1 += 1
            elif c == 2:
                n2 += 1
            else:
                n3 += 1
            b[ctx] = (n1, n2, n3)
        totals.append(t)
        buckets.append(b)

    discounts: list[tuple[float, float, float]] = []
    degenerate: list[int] = []
    for m in range(1, order + 1):
        cc = Counter(counts[m - 1].values())
        n1, n2, n3, n4 = cc[1], cc[2], cc[3], cc[4]
        if 0 in (n1, n2, n3, n4):
            discounts.append((FALLBACK_DISCOUNT,) * 3)
            degenerate.append(m)
        else:
            y = n1 / (n1 + 2.0 * n2)
            d = (
                1.0 - 2.0 * y * n2 / n1,
                2.0 - 3.0 * y * n3 / n2,
                3.0 - 4.0 * y * n4 / n3,
            )
            discounts.append(tuple(max(0.0, x) for x in d))

    return NGramLM(
        order=order,
        vocab=vocab,
        counts=tuple(counts),
        context_totals=tuple(totals),
        context_buckets=tuple(buckets),
        discounts=tuple(discounts),
        kappa=kappa,
        degenerate_orders=tuple(degenerate),
        pruning=report,
    )


def perplexity(model, sentences: Sequence[Sequence[str]]) -> float:
    """exp of the mean negative log-probability per predicted token.

    Every token plus the sentence-end marker is predicted; start markers
    only pad context. Works with anything exposing .order and .prob().
    """
    order = getattr(model, "order", 1)
    total = 0.0
    count = 0
    for sent in sentences:
        seq = [BOS] * (order - 1) + list(sent) + [EOS]
        for i in range(order - 1, len(seq)):
            ctx = tuple(seq[max(0, i - order + 1) : i])
            p = model.prob(seq[i], ctx)
            if p <= 0.0:
                raise ValueError(f"model returned non-positive probability for {seq[i]!r}")
            total += math.log(p)
            count += 1
    if count == 0:
        raise ValueError("evaluation corpus predicts no tokens")
    return math.exp(-total / count)


def _gamma(model: NGramLM, ctx: tuple[str, ...]) -> float | None:
    """Backoff mass of a context at order len(ctx)+1, or None if unseen."""
    m = len(ctx) + 1
    if m > model.order:
        return None
    total = model.context_totals[m - 1].get(ctx, 0)
    if total == 0:
        return None
    d1, d2, d3 = model.discounts[m - 1]
    n1, n2, n3 = model.context_buckets[m - 1].get(ctx, (0, 0, 0))
    return (d1 * n1 + d2 * n2 + d3 * n3) / total


def save_lm(model: NGramLM, path, comments: Sequence[str] = ()) -> None:
    """Write the model as a plain-text backoff table.

    Format follows the usual conventions: a ``\\data\\`` section with entry
    counts, then per-order sections of ``log10(p) TAB ngram [TAB log10(bow)]``.
    Entries are the grams the model has counts for, plus every context of a
    longer counted gram (so lookups always find a backoff weight), plus all
    unigrams. Probabilities are written at full precision so a reloaded
    table reproduces the in-memory model.
    """
    entries: list[set] = [set(model.counts[m - 1]) for m in range(1, model.order + 1)]
    for m in range(1, model.order):
        for gram in model.counts[m]:  # (m+1)-grams
            entries[m - 1].add(gram[:-1])
    entries[0] |= {(w,) for w in model.vocab}

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for comment in comments:
            fh.write(f"# {comment}\n")
        fh.write("\n\\data\\\n")
        for m in range(1, model.order + 1):
            fh.write(f"ngram {m}={len(entries[m - 1])}\n")
        for m in range(1, model.order + 1):
            fh.write(f"\n\\{m}-grams:\n")
            for gram in sorted(entries[m - 1]):
                logp = math.log10(model._p(gram))
                line = f"{logp:.17g}\t{' '.join(gram)}"
                if m < model.order:
                    gamma = _gamma(model, gram)
                    if gamma is not None:
                        # gamma of 0 (all discounts clamped) has no log; -99 is
                        # the conventional effectively-zero floor
                        logbow = math.log10(gamma) if gamma > 0.0 else -99.0
                        line += f"\t{logbow:.17g}"
                fh.write(line + "\n")
        fh.write("\n\\end\\\n")


@dataclass
class BackoffLM:
    """A reloaded backoff table; queries follow longest-match-plus-backoff."""

    order: int
    table: dict[tuple[str, ...], tuple[float, float | None]]
    vocab: frozenset[str] = field(default_factory=frozenset)

    def _logp(self, gram: tuple[str, ...]) -> float:
        hit = self.table.get(gram)
        if hit is not None:
            return hit[0]
        if len(gram) == 1:
            raise KeyError(f"unigram {gram[0]!r} missing from the table")
        ctx_entry = self.table.get(gram[:-1])
        bow = ctx_entry[1] if ctx_entry is not None and ctx_entry[1] is not None else 0.0
        return bow + self._logp(gram[1:])

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        w = word if word in self.vocab else UNK
        ctx = tuple(t if t in self.vocab else UNK for t in context)
        if self.order > 1:
            ctx = ctx[-(self.order - 1) :]
        else:
            ctx = ()
        return 10.0 ** self._logp(ctx + (w,))


def load_lm(path) -> BackoffLM:
    table: dict[tuple[str, ...], tuple[float, float | None]] = {}
    order = 0
    section = 0
    with open(path, encoding="utf-8") as fh:
        for raw_line in fh:
            line = raw_line.strip()
            if not line or line.startswith("#") or line == "\\data\\":
                continue
            if line == "\\end\\":
                break
            if line.startswith("ngram "):
                order = max(order, int(line.split("=", 1)[0].split()[1]))
                continue
            if line.startswith("\\") and line.endswith("-grams:"):
                section = int(line[1:].split("-", 1)[0])
                continue
            if section == 0:
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise ValueError(f"bad entry line: {raw_line!r}")
            logp = float(parts[0])
            gram = tuple(parts[1].split())
            bow = float(parts[2]) if len(parts) == 3 else None
            if len(gram) != section:
                raise ValueError(f"{len(gram)}-gram in the {section}-gram section: {raw_line!r}")
            table[gram] = (logp, bow)
    if order == 0:
        raise ValueError("no ngram declarations found")
    vocab = frozenset(g[0] for g in table if len(g) == 1)
    return BackoffLM(order=order, table=table, vocab=vocab)


def train_from_text(path, order: int = 4, kappa: float = 0.04, seed: int = 0) -> NGramLM:
    """One sentence per line, whitespace-tokenized."""
    with open(path, encoding="utf-8") as fh:
        sentences = [line.split() for line in fh if line.strip()]
    return train(sentences, order=order, kappa=kappa, seed=seed)
