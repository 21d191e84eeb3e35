"""CoNLL-style column corpora: reading, writing, BIO hygiene, subsampling.

Format handled here: UTF-8 text, one token per line, columns separated by
runs of spaces/tabs, blank line = sentence boundary, lines starting with
"#" skipped, CR stripped so CRLF and LF files parse identically.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .errors import EmptyCorpusError, MalformedLineError
from .sampling import Domain

_BIO_LABEL = re.compile(r"^(O|[BI]-\S+)$")


class LabelScheme(enum.Enum):
    BIO = "bio"
    PLAIN = "plain"


@dataclass(frozen=True)
class TaggedSentence:
    """Pre-tokenized sentence with one label per token."""

    tokens: tuple[str, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.labels) or not self.tokens:
            raise ValueError(
                f"need equal, non-zero token/label counts, got {len(self.tokens)}/{len(self.labels)}"
            )

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class LabelSet:
    """Ordered distinct labels plus the scheme they follow."""

    labels: tuple[str, ...]
    scheme: LabelScheme

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be distinct")
        if self.scheme is LabelScheme.BIO:
            bad = [l for l in self.labels if not _BIO_LABEL.match(l)]
            if bad:
                raise ValueError(f"not BIO-shaped labels: {bad}")

    def __contains__(self, label: str) -> bool:
        return label in self.labels


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[TaggedSentence, ...]
    label_set: LabelSet
    domain: Domain
    name: str

    def __post_init__(self):
        if not self.sentences:
            raise EmptyCorpusError(f"corpus {self.name!r} has no sentences")
        for i, sent in enumerate(self.sentences):
            for label in sent.labels:
                if label not in self.label_set:
                    raise ValueError(
                        f"sentence {i}: label {label!r} not in label set of {self.name!r}"
                    )

    @property
    def token_count(self) -> int:
        return sum(len(s) for s in self.sentences)


def infer_scheme(labels: Iterable[str]) -> LabelScheme:
    return (
        LabelScheme.BIO
        if all(_BIO_LABEL.match(l) for l in labels)
        else LabelScheme.PLAIN
    )


def build_corpus(
    sentences: Iterable[TaggedSentence],
    domain: Domain,
    name: str,
    scheme: LabelScheme | None = None,
) -> Corpus:
    """Assemble a corpus, inferring the label set in first-occurrence order."""
    sentences = tuple(sentences)
    seen: dict[str, None] = {}
    for sent in sentences:
        for label in sent.labels:
            seen.setdefault(label)
    labels = tuple(seen)
    if scheme is None:
        scheme = infer_scheme(labels)
    return Corpus(
        sentences=sentences,
        label_set=LabelSet(labels=labels, scheme=scheme),
        domain=domain,
        name=name,
    )


def read_conll(
    stream: IO[str] | Iterable[str],
    token_column: int,
    label_column: int,
    domain: Domain = Domain.TARGET,
    name: str = "corpus",
) -> Corpus:
    """Parse a column-format corpus from a text stream.

    Raises MalformedLineError (with 1-based line number) when a non-blank,
    non-comment line has too few columns, and EmptyCorpusError when the
    stream yields no sentences.
    """
    need = max(token_column, label_column) + 1
    sentences: list[TaggedSentence] = []
    tokens: list[str] = []
    labels: list[str] = []

    def flush():
        if tokens:
            sentences.append(TaggedSentence(tuple(tokens), tuple(labels)))
            tokens.clear()
            labels.clear()

    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if line.startswith("#"):
            continue
        if not line.strip():
            flush()
            continue
        cols = line.split()
        if len(cols) < need:
            raise MalformedLineError(
                lineno, f"expected at least {need} columns, got {len(cols)}: {line!r}"
            )
        tokens.append(cols[token_column])
        labels.append(cols[label_column])
    flush()

    if not sentences:
        raise EmptyCorpusError(f"no sentences in {name!r}")
    return build_corpus(sentences, domain=domain, name=name)


def write_conll(corpus: Corpus, stream: IO[str]) -> None:
    """Write token/label pairs, one sentence block per blank-line-separated group."""
    for i, sent in enumerate(corpus.sentences):
        if i:
            stream.write("\n")
        for token, label in zip(sent.tokens, sent.labels):
            stream.write(f"{token} {label}\n")


def validate_bio(corpus: Corpus) -> list[tuple[int, int, str]]:
    """All (sentence, token, reason) positions where an I- label lacks an opener."""
    violations = []
    for si, sent in enumerate(corpus.sentences):
        prev = "O"
        for ti, label in enumerate(sent.labels):
            if label.startswith("I-"):
                ok = prev.startswith(("B-", "I-")) and prev[2:] == label[2:]
                if not ok:
                    violations.append(
                        (si, ti, f"{label} follows {prev}, expected B-{label[2:]} opener")
                    )
            prev = label
        # prev tracks the raw sequence; violations are data, never raised
    return violations


def repair_bio(corpus: Corpus) -> Corpus:
    """Rewrite each orphan I-X to B-X; the result passes validate_bio cleanly."""
    repaired = []
    for sent in corpus.sentences:
        labels = list(sent.labels)
        prev = "O"
        for ti, label in enumerate(labels):
            if label.startswith("I-"):
                ok = prev.startswith(("B-", "I-")) and prev[2:] == label[2:]
                if not ok:
                    labels[ti] = "B-" + label[2:]
            prev = labels[ti]
        repaired.append(TaggedSentence(sent.tokens, tuple(labels)))

    extra = [
        l
        for s in repaired
        for l in s.labels
        if l not in corpus.label_set.labels
    ]
    labels = corpus.label_set.labels + tuple(dict.fromkeys(extra))
    return Corpus(
        sentences=tuple(repaired),
        label_set=LabelSet(labels=labels, scheme=corpus.label_set.scheme),
        domain=corpus.domain,
        name=corpus.name,
    )


def subsample(corpus: Corpus, fraction: float, seed: int) -> Corpus:
    """Keep round(fraction * N) sentences (at least 1), uniformly w/o replacement.

    Selection order follows the original corpus; identical seeds select
    identical sentences.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    n = len(corpus.sentences)
    keep = max(1, int(math.floor(fraction * n + 0.5)))
    if keep >= n:
        return corpus
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    chosen = np.sort(rng.choice(n, size=keep, replace=False))
    return Corpus(
        sentences=tuple(corpus.sentences[i] for i in chosen),
        label_set=corpus.label_set,
        domain=corpus.domain,
        name=corpus.name,
    )


def stats_csv(entries: Iterable[tuple[str, str, Corpus]]) -> str:
    """Comma-separated statistics block: name, split, sentence count, token count."""
    lines = ["name,split,sentences,tokens"]
    for name, split, corpus in entries:
        lines.append(f"{name},{split},{len(corpus.sentences)},{corpus.token_count}")
    return "\n".join(lines) + "\n"
