"""Benchmark corpus loading and text preprocessing.

Loaders return :class:`Corpus` objects with 0-based labels regardless of the
source file's convention. Preprocessing (normalisation, relevance filtering,
deduplication) is pure: filtered documents are signalled by ``None`` rather
than exceptions.
"""
from __future__ import annotations

import csv
import json
import string
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

_PUNCT_TABLE = str.maketrans({c: " " for c in string.punctuation})


@dataclass(frozen=True)
class Document:
    id: int
    text: str
    label: Optional[int] = None
    class_name: Optional[str] = None


@dataclass
class Corpus:
    documents: list[Document] = field(default_factory=list)
    num_classes: Optional[int] = None
    source_tag: str = ""

    def __post_init__(self):
        ids = [d.id for d in self.documents]
        if any(b <= a for a, b in zip(ids, ids[1:])):
            raise ValueError("document ids must be strictly increasing")
        if self.num_classes is not None:
            for d in self.documents:
                if d.label is not None and not (0 <= d.label < self.num_classes):
                    raise ValueError(
                        f"document {d.id} has label {d.label} outside [0, {self.num_classes})"
                    )

    def __len__(self):
        return len(self.documents)

    def texts(self) -> list[str]:
        return [d.text for d in self.documents]

    def labels(self) -> Optional[list[int]]:
        """All labels, or None if any document is unlabeled."""
        out = [d.label for d in self.documents]
        if any(v is None for v in out):
            return None
        return out  # type: ignore[return-value]


@dataclass(frozen=True)
class PreprocessRules:
    lowercase: bool = True
    strip_punctuation: bool = True
    relevance_keywords: tuple[str, ...] = ()
    min_tokens: int = 0

    def __post_init__(self):
        if self.min_tokens < 0:
            raise ValueError("min_tokens must be >= 0")
        object.__setattr__(self, "relevance_keywords", tuple(self.relevance_keywords))


def preprocess(doc: Document, rules: PreprocessRules) -> Optional[Document]:
    """Normalise one document, or return None when it is filtered out.

    Normalisation lowercases and replaces punctuation with spaces (per the
    rules), then re-joins whitespace tokens with single spaces. A document is
    dropped when no relevance keyword occurs in the normalised text
    (case-insensitive substring match; an empty keyword list keeps everything)
    or when fewer than ``min_tokens`` tokens remain. The function is
    idempotent for any fixed rules.
    """
    if not doc.text:
        raise ValueError(f"document {doc.id} has empty text")
    text = doc.text
    if rules.lowercase:
        text = text.lower()
    if rules.strip_punctuation:
        text = text.translate(_PUNCT_TABLE)
    tokens = text.split()
    text = " ".join(tokens)
    if rules.relevance_keywords:
        hay = text.lower()
        if not any(kw.lower() in hay for kw in rules.relevance_keywords):
            return None
    if len(tokens) < rules.min_tokens or not tokens:
        return None
    return replace(doc, text=text)


def preprocess_corpus(corpus: Corpus, rules: PreprocessRules) -> Corpus:
    """Apply :func:`preprocess` per document, dropping the filtered ones."""
    kept = []
    for d in corpus.documents:
        out = preprocess(d, rules)
        if out is not None:
            kept.append(out)
    return Corpus(kept, num_classes=corpus.num_classes, source_tag=corpus.source_tag)


def dedup(corpus: Corpus) -> Corpus:
    """Drop exact duplicate texts, keeping the first occurrence in order."""
    seen: set[str] = set()
    kept = []
    for d in corpus.documents:
        if d.text in seen:
            continue
        seen.add(d.text)
        kept.append(d)
    return Corpus(kept, num_classes=corpus.num_classes, source_tag=corpus.source_tag)


_AGNEWS_CLASSES = ("World", "Sports", "Business", "Sci/Tech")


def load_agnews(path, limit: Optional[int] = None) -> Corpus:
    """Load the AG News CSV (class index, title, description); text = title.

    Class indices 1..4 in the file become labels 0..3.
    """
    path = Path(path)
    if limit is not None and limit <= 0:
        raise ValueError("limit must be positive")
    docs = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if limit is not None and len(docs) >= limit:
                break
            if len(row) < 2:
                raise ValueError(f"{path}: malformed row at line {lineno}: {row!r}")
            try:
                cls = int(row[0])
            except ValueError:
                raise ValueError(
                    f"{path}: non-integer class index at line {lineno}: {row[0]!r}"
                ) from None
            if not 1 <= cls <= 4:
                raise ValueError(f"{path}: class index {cls} outside 1..4 at line {lineno}")
            docs.append(
                Document(id=len(docs), text=row[1], label=cls - 1, class_name=_AGNEWS_CLASSES[cls - 1])
            )
    return Corpus(docs, num_classes=4, source_tag="agnews")


def load_stackoverflow(path, limit: Optional[int] = None) -> Corpus:
    """Load the StackOverflow question-title benchmark (20 classes).

    Accepts either a two-column TSV ``label<TAB>title`` with 0-based labels,
    or a title file (one title per line) paired with a label file. The label
    file is located by replacing ``title`` with ``label`` in the file name, or
    at ``<path>.labels``; its entries follow the benchmark's 1-based
    convention and are shifted down to 0-based.
    """
    path = Path(path)
    if limit is not None and limit <= 0:
        raise ValueError("limit must be positive")
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if "\t" in first:
        return _load_stackoverflow_tsv(path, limit)
    label_path = None
    for cand in (path.with_name(path.name.replace("title", "label")), Path(str(path) + ".labels")):
        if cand != path and cand.exists():
            label_path = cand
            break
    if label_path is None:
        raise FileNotFoundError(
            f"no label file found for {path} (tried title->label rename and {path}.labels)"
        )
    titles = path.read_text(encoding="utf-8").splitlines()
    raw_labels = [ln.strip() for ln in
                  label_path.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if len(titles) != len(raw_labels):
        raise ValueError(f"count mismatch {len(titles)} vs {len(raw_labels)}")
    docs = []
    for i, (title, lab) in enumerate(zip(titles, raw_labels)):
        if limit is not None and len(docs) >= limit:
            break
        if not title.strip():
            raise ValueError(f"{path}: empty title at line {i + 1}")
        docs.append(Document(id=len(docs), text=title, label=int(lab) - 1))
    return Corpus(docs, num_classes=20, source_tag="stackoverflow")


def _load_stackoverflow_tsv(path: Path, limit: Optional[int]) -> Corpus:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if limit is not None and len(docs) >= limit:
                break
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 1)
            if len(parts) != 2:
                raise ValueError(f"{path}: malformed row at line {lineno}: {line!r}")
            docs.append(Document(id=len(docs), text=parts[1], label=int(parts[0])))
    return Corpus(docs, num_classes=20, source_tag="stackoverflow")


def save_jsonl(corpus: Corpus, path) -> None:
    """Write a corpus as UTF-8 JSON lines (id, text, label, class_name)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"num_classes": corpus.num_classes, "source_tag": corpus.source_tag},
                            sort_keys=True) + "\n")
        for d in corpus.documents:
            rec = {"id": d.id, "text": d.text, "label": d.label, "class_name": d.class_name}
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")


def load_jsonl(path) -> Corpus:
    """Read a corpus written by :func:`save_jsonl`."""
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        docs = []
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            docs.append(Document(id=rec["id"], text=rec["text"],
                                 label=rec.get("label"), class_name=rec.get("class_name")))
    return Corpus(docs, num_classes=header.get("num_classes"),
                  source_tag=header.get("source_tag", ""))
