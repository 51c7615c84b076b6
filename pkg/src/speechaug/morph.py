"""Morphology for agglutinative text: tokenizing, dialect suffix
standardization, and right-to-left suffix segmentation.

Suffix variants differ across dialects; standardization rewrites each variant
to a canonical form so the rest of the toolkit sees one spelling. Rules whose
function description says "after a vowel" only fire when the character before
the matched suffix is a vowel. Segmentation peels inventory suffixes off the
right end until the remainder is a known lemma.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

VOWELS = "aeiou"
DEFAULT_POS = "NOUN"
SUFFIX_CLASSES = ("nominalizing", "verbalizing", "nominal", "verbal", "independent")


class TableError(Exception):
    """A bundled or user-supplied morphology table is malformed."""


@dataclass(frozen=True)
class SuffixRule:
    """One standardization rule: any variant rewrites to the standard form."""

    function: str
    variants: tuple[str, ...]
    standard: str

    def __post_init__(self):
        if not self.variants:
            raise TableError(f"rule {self.function!r} has no variants")
        if not self.standard:
            raise TableError(f"rule {self.function!r} has empty standard form")

    @property
    def post_vocalic(self) -> bool:
        return "after a vowel" in self.function.lower()


@dataclass(frozen=True)
class SuffixEntry:
    form: str
    tag: str
    cls: str = "nominal"

    def __post_init__(self):
        if not self.form:
            raise TableError("suffix entry with empty form")
        if self.cls not in SUFFIX_CLASSES:
            raise TableError(f"suffix {self.form!r}: unknown class {self.cls!r}")


@dataclass(frozen=True)
class MorphToken:
    """An analyzed surface token: lemma plus the suffixes stripped from it.

    Invariant: lemma + concatenated suffix forms == surface.
    """

    surface: str
    lemma: str
    pos: str
    suffixes: tuple[SuffixEntry, ...] = ()

    def morphemes(self) -> list[str]:
        return [self.lemma] + [s.form for s in self.suffixes]


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation.

    Apostrophes survive inside a token (ejective consonants) but are
    stripped from the edges like any other non-alphanumeric character.
    """
    out = []
    for raw in text.lower().split():
        start, end = 0, len(raw)
        while start < end and not raw[start].isalnum():
            start += 1
        while end > start and not raw[end - 1].isalnum():
            end -= 1
        tok = raw[start:end]
        if tok:
            out.append(tok)
    return out


def standardize_suffixes(token: str, rules) -> str:
    """Rewrite dialect suffix variants to their standard forms.

    Matching is longest-variant-first from the right end of the token; after
    a rewrite the remaining prefix is processed the same way, so stacked
    suffixes standardize too. A variant never consumes the whole token.
    """
    candidates = sorted(
        ((v, rule) for rule in rules for v in rule.variants),
        key=lambda vr: -len(vr[0]),
    )

    def rewrite(tok: str) -> str:
        for variant, rule in candidates:
            if len(tok) > len(variant) and tok.endswith(variant):
                stem = tok[: -len(variant)]
                if rule.post_vocalic and stem[-1] not in VOWELS:
                    continue
                return rewrite(stem) + rule.standard
        return tok

    return rewrite(token)


def _pos_of(lexicon, lemma: str) -> str:
    if isinstance(lexicon, Mapping):
        return lexicon.get(lemma) or DEFAULT_POS
    return DEFAULT_POS


def segment(token: str, inventory, lexicon) -> MorphToken:
    """Strip inventory suffixes right-to-left until a known lemma remains.

    Longest matching suffix wins each round; on a length tie the entry
    earlier in the inventory wins. Stripping never empties the token. If no
    suffix matches and the remainder is still unknown, whatever was stripped
    so far stands and the remainder becomes the lemma.
    """
    rest = token
    stripped: list[SuffixEntry] = []
    while rest not in lexicon:
        best = None
        for entry in inventory:
            if len(entry.form) < len(rest) and rest.endswith(entry.form):
                if best is None or len(entry.form) > len(best.form):
                    best = entry
        if best is None:
            break
        stripped.append(best)
        rest = rest[: -len(best.form)]
    return MorphToken(
        surface=token,
        lemma=rest,
        pos=_pos_of(lexicon, rest),
        suffixes=tuple(reversed(stripped)),
    )


@dataclass
class Segmenter:
    """Bundles the three morphology tables behind one analyze() call."""

    rules: tuple[SuffixRule, ...] = ()
    inventory: tuple[SuffixEntry, ...] = ()
    lexicon: Mapping[str, str] = field(default_factory=dict)

    def standardize(self, token: str) -> str:
        return standardize_suffixes(token, self.rules) if self.rules else token

    def analyze(self, token: str) -> MorphToken:
        return segment(self.standardize(token), self.inventory, self.lexicon)

    def analyze_text(self, text: str) -> list[MorphToken]:
        return [self.analyze(tok) for tok in tokenize(text)]

    def normalize_text(self, text: str) -> str:
        return " ".join(self.standardize(tok) for tok in tokenize(text))

    def morphemes(self, text: str) -> list[str]:
        out: list[str] = []
        for tok in self.analyze_text(text):
            out.extend(tok.morphemes())
        return out


def _data_rows(path, n_cols: int) -> list[list[str]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != n_cols:
                raise TableError(f"{path}:{line_no}: expected {n_cols} columns, got {len(cols)}")
            rows.append([c.strip() for c in cols])
    return rows


def load_suffix_rules(path) -> tuple[SuffixRule, ...]:
    """TSV columns: function, comma-separated variants, standard form."""
    rules = []
    for function, variants, standard in _data_rows(path, 3):
        forms = tuple(v.strip() for v in variants.split(",") if v.strip())
        rules.append(SuffixRule(function=function, variants=forms, standard=standard))
    return tuple(rules)


def load_suffix_inventory(path) -> tuple[SuffixEntry, ...]:
    """TSV columns: suffix form, tag, class. File order is the tie-break order."""
    return tuple(SuffixEntry(form=f, tag=t, cls=c) for f, t, c in _data_rows(path, 3))


def load_lemma_lexicon(path) -> dict[str, str]:
    """TSV columns: lemma, part of speech."""
    lexicon: dict[str, str] = {}
    for lemma, pos in _data_rows(path, 2):
        lexicon[lemma] = pos
    return lexicon


def default_segmenter() -> Segmenter:
    """Segmenter over the bundled tables."""
    data = Path(__file__).parent / "data"
    return Segmenter(
        rules=load_suffix_rules(data / "suffix_rules.tsv"),
        inventory=load_suffix_inventory(data / "suffix_inventory.tsv"),
        lexicon=load_lemma_lexicon(data / "lemma_lexicon.tsv"),
    )
