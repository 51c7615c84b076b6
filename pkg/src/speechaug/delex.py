"""Semantic-frame delexicalization.

Content words whose lemma maps to one of the selected frames are replaced by
slot labels like ``<B-fromloc city_name>``; the replaced surface forms are
harvested into a per-frame slot vocabulary so templates can be realized
later. Frame lookup can fall back through a bilingual bridge: if the primary
lexicon misses a lemma, the lemma is translated to a pivot-language word and
that word is looked up in a pivot-language frame lexicon.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .morph import MorphToken, TableError, _data_rows


class TemplateError(ValueError):
    """A template line does not parse as literals and <ROLE FRAME> slots."""


@dataclass(frozen=True)
class SlotLabel:
    role: str
    frame: str

    def __post_init__(self):
        if not self.role.startswith("B-"):
            raise ValueError(f"slot role must start with 'B-', got {self.role!r}")
        if not self.frame or any(c.isspace() for c in self.frame):
            raise ValueError(f"bad frame name {self.frame!r}")

    def render(self) -> str:
        return f"<{self.role} {self.frame}>"


@dataclass(frozen=True)
class Literal:
    token: str


@dataclass(frozen=True)
class Slot:
    label: SlotLabel


@dataclass
class DelexSentence:
    """A sentence whose framed words were replaced by slots.

    ``fills`` remembers, per item position, the surface form each slot
    replaced, so the original sentence can be reconstructed exactly.
    """

    items: list[Literal | Slot]
    origin_id: str = "generated"
    fills: dict[int, str] = field(default_factory=dict)

    def rendered_items(self) -> list[str]:
        return [it.label.render() if isinstance(it, Slot) else it.token for it in self.items]

    def render(self) -> str:
        return " ".join(self.rendered_items())

    def slot_positions(self) -> list[int]:
        return [i for i, it in enumerate(self.items) if isinstance(it, Slot)]

    def slot_frames(self) -> list[str]:
        return [it.label.frame for it in self.items if isinstance(it, Slot)]

    def realize_with_fills(self) -> list[str]:
        """Reconstruct the original token sequence from the recorded fills."""
        out = []
        for i, it in enumerate(self.items):
            if isinstance(it, Slot):
                if i not in self.fills:
                    raise KeyError(f"no recorded fill for slot at position {i}")
                out.append(self.fills[i])
            else:
                out.append(it.token)
        return out


@dataclass
class FrameLexicon:
    """Case-insensitive lemma -> frame map."""

    entries: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.entries = {k.lower(): v for k, v in self.entries.items()}

    def lookup(self, lemma: str) -> str | None:
        return self.entries.get(lemma.lower())

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class BilingualMap:
    """Case-insensitive lemma -> pivot-language word map."""

    entries: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.entries = {k.lower(): v.lower() for k, v in self.entries.items()}

    def lookup(self, lemma: str) -> str | None:
        return self.entries.get(lemma.lower())


@dataclass
class FrameChain:
    """Primary frame lexicon with an optional two-hop bilingual fallback."""

    primary: FrameLexicon
    bridge: BilingualMap | None = None
    pivot: FrameLexicon | None = None

    def lookup(self, lemma: str) -> str | None:
        frame = self.primary.lookup(lemma)
        if frame is not None:
            return frame
        if self.bridge is not None and self.pivot is not None:
            pivot_word = self.bridge.lookup(lemma)
            if pivot_word is not None:
                return self.pivot.lookup(pivot_word)
        return None


def select_frames(frame_tags: Iterable[str], k: int) -> list[str]:
    """The k most frequent frames; ties break alphabetically."""
    if k < 1:
        raise ValueError("k must be at least 1")
    counts = Counter(tag for tag in frame_tags if tag)
    ranked = sorted(counts, key=lambda f: (-counts[f], f))
    return ranked[:k]


def delexicalize(
    tokens: Sequence[MorphToken],
    selected: Iterable[str],
    frames,
    roles: Mapping[str, str] | None = None,
    origin_id: str = "generated",
) -> tuple[DelexSentence, dict[str, list[str]]]:
    """Replace selected-frame words with slots; harvest their surfaces.

    ``frames`` is a FrameChain/FrameLexicon or any ``lemma -> frame|None``
    callable. ``roles`` maps lemmas to slot roles; a lemma without an entry
    gets the generic role ``B-<frame>``. Roles key on the lemma rather than
    the frame because one frame can fill different roles (a city can be an
    origin in one sentence and a destination in another).
    """
    lookup = frames.lookup if hasattr(frames, "lookup") else frames
    selected = set(selected)
    roles = roles or {}

    items: list[Literal | Slot] = []
    fills: dict[int, str] = {}
    harvest: dict[str, list[str]] = {}
    for pos, tok in enumerate(tokens):
        frame = lookup(tok.lemma)
        if frame is not None and frame in selected:
            role = roles.get(tok.lemma) or f"B-{frame}"
            items.append(Slot(SlotLabel(role=role, frame=frame)))
            fills[pos] = tok.surface
            bucket = harvest.setdefault(frame, [])
            if tok.surface not in bucket:
                bucket.append(tok.surface)
        else:
            items.append(Literal(tok.surface))
    return DelexSentence(items=items, origin_id=origin_id, fills=fills), harvest


@dataclass
class SlotVocabulary:
    """Per-frame surface-form inventory, first-seen order, no duplicates."""

    by_frame: dict[str, list[str]] = field(default_factory=dict)

    def add(self, frame: str, word: str) -> None:
        bucket = self.by_frame.setdefault(frame, [])
        if word not in bucket:
            bucket.append(word)

    def words(self, frame: str) -> list[str]:
        return list(self.by_frame.get(frame, []))

    def merge(self, harvest: Mapping[str, list[str]]) -> None:
        for frame, words in harvest.items():
            for word in words:
                self.add(frame, word)


def build_slot_vocab(harvests: Iterable[Mapping[str, list[str]]]) -> SlotVocabulary:
    vocab = SlotVocabulary()
    for harvest in harvests:
        vocab.merge(harvest)
    return vocab


def parse_template(line: str, origin_id: str = "generated") -> DelexSentence:
    """Parse one rendered template line back into items.

    A slot is an angle-bracketed span containing exactly a role and a frame.
    """
    items: list[Literal | Slot] = []
    pending: list[str] = []
    for tok in line.split():
        if pending:
            pending.append(tok)
            if tok.endswith(">"):
                inner = " ".join(pending)[1:-1].split()
                if len(inner) != 2:
                    raise TemplateError(f"bad slot in {line!r}")
                try:
                    items.append(Slot(SlotLabel(role=inner[0], frame=inner[1])))
                except ValueError as exc:
                    raise TemplateError(str(exc)) from exc
                pending = []
        elif tok.startswith("<"):
            if tok.endswith(">"):
                raise TemplateError(f"bad slot in {line!r}")
            pending.append(tok)
        else:
            items.append(Literal(tok))
    if pending:
        raise TemplateError(f"unterminated slot in {line!r}")
    if not items:
        raise TemplateError("empty template line")
    return DelexSentence(items=items, origin_id=origin_id)


def save_templates(sentences: Iterable[DelexSentence], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for sent in sentences:
            fh.write(sent.render() + "\n")


def load_templates(path) -> list[DelexSentence]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            out.append(parse_template(line.strip(), origin_id=f"line-{line_no}"))
    return out


def save_slot_vocab(vocab: SlotVocabulary, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for frame in vocab.by_frame:
            for word in vocab.by_frame[frame]:
                fh.write(f"{frame}\t{word}\n")


def load_slot_vocab(path) -> SlotVocabulary:
    vocab = SlotVocabulary()
    for frame, word in _data_rows(path, 2):
        vocab.add(frame, word)
    return vocab


def load_frame_lexicon(path) -> FrameLexicon:
    """TSV columns: lemma, frame."""
    entries: dict[str, str] = {}
    for lemma, frame in _data_rows(path, 2):
        if not frame:
            raise TableError(f"{path}: empty frame for {lemma!r}")
        entries[lemma] = frame
    return FrameLexicon(entries=entries)


def load_bilingual_map(path) -> BilingualMap:
    """TSV columns: lemma, pivot-language word."""
    return BilingualMap(entries={lemma: word for lemma, word in _data_rows(path, 2)})


def load_role_lexicon(path) -> dict[str, str]:
    """TSV columns: lemma, slot role (must start with B-)."""
    roles: dict[str, str] = {}
    for lemma, role in _data_rows(path, 2):
        if not role.startswith("B-"):
            raise TableError(f"{path}: role {role!r} must start with 'B-'")
        roles[lemma.lower()] = role
    return roles
