"""Mine two-slot templates from a corpus using seed word pairs.

A sentence containing both words of a seed pair (whole-token match, both
single tokens, within the gap window) yields one template per pair: the
head occurrence is replaced by [HEAD] and the tail occurrence by [TAIL].
When a word occurs more than once the occurrence pair minimizing the gap
wins, ties broken by leftmost head then leftmost tail.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import DataError
from .text import (
    HEAD_MARKER,
    MASK_MARKER,
    RESERVED_MARKERS,
    TAIL_MARKER,
    join_tokens,
    split_sentences,
    tokenize,
)

logger = logging.getLogger(__name__)

# Hard caps baked into the Template type; mining limits may only tighten them.
MAX_TEMPLATE_TOKENS = 100
MAX_SPAN_GAP = 15


@dataclass(frozen=True, order=True)
class WordPair:
    """A (head, tail) pair of single lowercase tokens."""

    head: str
    tail: str

    def __post_init__(self) -> None:
        for name, word in (("head", self.head), ("tail", self.tail)):
            if not word:
                raise DataError(f"word pair {name} is empty")
            if any(ch.isspace() for ch in word):
                raise DataError(f"word pair {name} contains whitespace: {word!r}")
        if self.head == self.tail:
            raise DataError(f"word pair has identical head and tail: {self.head!r}")

    @classmethod
    def normalized(cls, head: str, tail: str) -> "WordPair":
        return cls(head.strip().lower(), tail.strip().lower())

    def swapped(self) -> "WordPair":
        return WordPair(self.tail, self.head)


@dataclass(frozen=True)
class Template:
    """A sentence with one [HEAD] and one [TAIL] slot plus provenance."""

    tokens: tuple[str, ...]
    source_pair: WordPair
    source_doc_id: str
    span_gap: int

    def __post_init__(self) -> None:
        heads = [i for i, t in enumerate(self.tokens) if t == HEAD_MARKER]
        tails = [i for i, t in enumerate(self.tokens) if t == TAIL_MARKER]
        if len(heads) != 1 or len(tails) != 1:
            raise DataError(
                f"template needs exactly one {HEAD_MARKER} and one {TAIL_MARKER}, "
                f"got {len(heads)}/{len(tails)}"
            )
        if MASK_MARKER in self.tokens:
            raise DataError(f"template tokens contain reserved {MASK_MARKER}")
        if len(self.tokens) > MAX_TEMPLATE_TOKENS:
            raise DataError(f"template exceeds {MAX_TEMPLATE_TOKENS} tokens")
        expected_gap = abs(heads[0] - tails[0]) - 1
        if self.span_gap != expected_gap:
            raise DataError(
                f"span_gap {self.span_gap} inconsistent with slots (expected {expected_gap})"
            )
        if self.span_gap > MAX_SPAN_GAP:
            raise DataError(f"span gap {self.span_gap} exceeds {MAX_SPAN_GAP}")

    @property
    def head_slot(self) -> int:
        return self.tokens.index(HEAD_MARKER)

    @property
    def tail_slot(self) -> int:
        return self.tokens.index(TAIL_MARKER)

    def to_json(self) -> dict:
        return {
            "tokens": list(self.tokens),
            "head_slot": self.head_slot,
            "tail_slot": self.tail_slot,
            "source_pair": [self.source_pair.head, self.source_pair.tail],
            "doc": self.source_doc_id,
            "gap": self.span_gap,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Template":
        try:
            tokens = tuple(str(t) for t in obj["tokens"])
            pair = WordPair(str(obj["source_pair"][0]), str(obj["source_pair"][1]))
            tpl = cls(tokens, pair, str(obj.get("doc", "")), int(obj["gap"]))
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise DataError(f"malformed template record: {exc}") from exc
        for key, have in (("head_slot", tpl.head_slot), ("tail_slot", tpl.tail_slot)):
            if key in obj and int(obj[key]) != have:
                raise DataError(f"template record {key}={obj[key]} disagrees with tokens")
        return tpl


@dataclass(frozen=True)
class RelationSeed:
    """Named relation with its seed pairs (ordered, duplicate-free)."""

    relation_name: str
    pairs: tuple[WordPair, ...]

    def __post_init__(self) -> None:
        if not self.relation_name:
            raise DataError("relation name is empty")
        if not self.pairs:
            raise DataError(f"relation {self.relation_name!r} has no seed pairs")
        if len(set(self.pairs)) != len(self.pairs):
            raise DataError(f"relation {self.relation_name!r} has duplicate seed pairs")

    def heads(self) -> set[str]:
        return {p.head for p in self.pairs}

    def tails(self) -> set[str]:
        return {p.tail for p in self.pairs}


def _closest_occurrence(
    sentence_tokens: Sequence[str], pair: WordPair
) -> tuple[int, int, int] | None:
    """(gap, head_pos, tail_pos) of the minimal-gap occurrence, or None.

    Only whole-token matches count; ties break to the leftmost head, then
    the leftmost tail.
    """
    head_positions = [i for i, t in enumerate(sentence_tokens) if t == pair.head]
    tail_positions = [i for i, t in enumerate(sentence_tokens) if t == pair.tail]
    if not head_positions or not tail_positions:
        return None
    return min(
        (abs(h - t) - 1, h, t) for h in head_positions for t in tail_positions
    )


def _slot_template(
    sentence_tokens: Sequence[str],
    occurrence: tuple[int, int, int],
    pair: WordPair,
    doc_id: str,
) -> Template:
    gap, hi, ti = occurrence
    tokens = list(sentence_tokens)
    tokens[hi] = HEAD_MARKER
    tokens[ti] = TAIL_MARKER
    return Template(tuple(tokens), pair, doc_id, gap)


def sentence_to_template(
    sentence_tokens: Sequence[str],
    pair: WordPair,
    doc_id: str = "",
) -> Template:
    """Slot the minimal-gap occurrence of the pair into a template.

    Raises DataError when either word has no whole-token occurrence
    (substring matches never count).
    """
    occurrence = _closest_occurrence(sentence_tokens, pair)
    if occurrence is None:
        raise DataError(
            f"pair ({pair.head}, {pair.tail}) has no whole-token occurrence in sentence"
        )
    return _slot_template(sentence_tokens, occurrence, pair, doc_id)


def instantiate_tokens(template: Template, pair: WordPair) -> list[str]:
    """Fill both slots with the pair's words, at the token level."""
    tokens = list(template.tokens)
    tokens[template.head_slot] = pair.head
    tokens[template.tail_slot] = pair.tail
    return tokens


def instantiate(template: Template, pair: WordPair) -> str:
    """Fill both slots and detokenize with single spaces."""
    return join_tokens(instantiate_tokens(template, pair))


@dataclass
class MiningStats:
    sentences_seen: int = 0
    sentences_skipped_long: int = 0
    sentences_skipped_marker: int = 0
    templates_emitted: int = 0
    duplicates_dropped: int = 0


def mine_sentences(
    documents: Iterable[tuple[str, str]],
    seeds: RelationSeed,
    *,
    max_len: int = MAX_TEMPLATE_TOKENS,
    max_window: int = MAX_SPAN_GAP,
    presplit: bool = False,
    stats: MiningStats | None = None,
) -> list[Template]:
    """Scan (doc_id, text) documents and mine templates for one relation.

    Output order is deterministic: sorted by (doc_id, sentence index, head
    position), then deduplicated on the full token sequence keeping the
    first occurrence's provenance.
    """
    from .errors import ConfigError

    if max_len > MAX_TEMPLATE_TOKENS:
        raise ConfigError(f"max_len {max_len} exceeds cap {MAX_TEMPLATE_TOKENS}")
    if max_window > MAX_SPAN_GAP:
        raise ConfigError(f"max_window {max_window} exceeds cap {MAX_SPAN_GAP}")
    stats = stats if stats is not None else MiningStats()

    by_head: dict[str, list[WordPair]] = {}
    for p in seeds.pairs:
        by_head.setdefault(p.head, []).append(p)

    # (doc_id, sent_idx, head_pos, tail_pos, pair_key) -> total deterministic order
    raw: list[tuple[str, int, int, int, tuple[str, str], Template]] = []
    for doc_id, body in sorted(documents, key=lambda d: d[0]):
        sentences = body.splitlines() if presplit else split_sentences(body)
        for sent_idx, sentence in enumerate(sentences):
            tokens = tokenize(sentence)
            if not tokens:
                continue
            stats.sentences_seen += 1
            if len(tokens) > max_len:
                stats.sentences_skipped_long += 1
                continue
            present = set(tokens)
            if present & RESERVED_MARKERS:
                stats.sentences_skipped_marker += 1
                logger.warning("skipping sentence with reserved marker in %s", doc_id)
                continue
            for head in present & by_head.keys():
                for pair in by_head[head]:
                    if pair.tail not in present:
                        continue
                    # window-check the occurrence before building a Template;
                    # construction enforces the hard cap and would raise
                    occurrence = _closest_occurrence(tokens, pair)
                    if occurrence is None or occurrence[0] > max_window:
                        continue
                    template = _slot_template(tokens, occurrence, pair, doc_id)
                    raw.append(
                        (
                            doc_id,
                            sent_idx,
                            template.head_slot,
                            template.tail_slot,
                            (pair.head, pair.tail),
                            template,
                        )
                    )

    raw.sort(key=lambda r: r[:5])
    seen: set[tuple[str, ...]] = set()
    out: list[Template] = []
    for *_key, template in raw:
        if template.tokens in seen:
            stats.duplicates_dropped += 1
            continue
        seen.add(template.tokens)
        out.append(template)
    stats.templates_emitted = len(out)
    return out


class CorpusReader:
    """Iterate (doc_id, text) from a .txt file or a directory of .txt files.

    Non-decodable files are skipped with a counted warning instead of
    aborting the scan.
    """

    def __init__(self, path: str | Path, *, presplit: bool = False):
        self.path = Path(path)
        self.presplit = presplit
        self.skipped_docs = 0
        if not self.path.exists():
            raise DataError(f"corpus path does not exist: {self.path}")

    def _files(self) -> list[Path]:
        if self.path.is_file():
            return [self.path]
        return sorted(p for p in self.path.rglob("*.txt") if p.is_file())

    def __iter__(self) -> Iterator[tuple[str, str]]:
        files = self._files()
        if not files:
            raise DataError(f"no .txt documents under {self.path}")
        for f in files:
            doc_id = f.name if self.path.is_file() else f.relative_to(self.path).as_posix()
            try:
                yield doc_id, f.read_text(encoding="utf-8")
            except UnicodeDecodeError:
                self.skipped_docs += 1
                logger.warning("skipping non-decodable document %s", doc_id)


def load_seeds(path: str | Path) -> dict[str, RelationSeed]:
    """Read relation<TAB>head<TAB>tail seed rows; multi-word entries are errors."""
    relations: dict[str, list[WordPair]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 tab-separated fields")
            rel, head, tail = (p.strip().lower() for p in parts)
            if len(head.split()) != 1 or len(tail.split()) != 1:
                raise DataError(f"{path}:{lineno}: seed words must be single tokens")
            pair = WordPair(head, tail)
            bucket = relations.setdefault(rel, [])
            if pair not in bucket:
                bucket.append(pair)
    if not relations:
        raise DataError(f"no seed rows in {path}")
    return {rel: RelationSeed(rel, tuple(pairs)) for rel, pairs in relations.items()}


def write_seeds(path: str | Path, seeds: dict[str, RelationSeed]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rel in seeds.values():
            for p in rel.pairs:
                fh.write(f"{rel.relation_name}\t{p.head}\t{p.tail}\n")


def write_templates(path: str | Path, templates: Iterable[Template]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in templates:
            fh.write(json.dumps(t.to_json(), sort_keys=True) + "\n")


def read_templates(path: str | Path) -> list[Template]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            out.append(Template.from_json(obj))
    return out
