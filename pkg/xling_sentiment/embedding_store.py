"""
Monolingual word-embedding spaces.

Loads word2vec text files into an immutable :class:`VectorSpace` and answers
exact top-k cosine nearest-neighbor queries over it.
"""

import logging
from collections.abc import Generator, Iterable, Mapping, Sequence
from contextlib import closing
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from xling_sentiment.errors import EmbeddingFormatError, RetrievalError, XlingSentimentError

logger = logging.getLogger(__name__)

VectorFormat = Literal["word2vec_text"]

def format_floats(values: Iterable[float]) -> str:
    """Render numbers space-separated with round-trip precision."""
    return " ".join(format(float(value), ".17g") for value in values)


def iter_text_lines(
    path: Path, error: type[XlingSentimentError]
) -> Generator[tuple[int, str], None, None]:
    """Numbered lines of a UTF-8 file without terminators; undecodable bytes raise ``error``."""
    with path.open("rb") as handle:
        for line_no, raw in enumerate(handle, start=1):
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise error(
                    f"{path}: invalid UTF-8 byte 0x{raw[exc.start]:02x} at column {exc.start + 1}",
                    line=line_no,
                ) from exc
            yield line_no, text.rstrip("\r\n")


@dataclass(frozen=True)
class Neighbor:
    """A retrieved token and its cosine similarity to the query."""

    token: str
    similarity: float


class VectorSpace:
    """
    Vocabulary plus a dense ``|vocab| x dim`` matrix for one language.

    The space is immutable once built: the matrix is stored read-only and
    the unit-normalized copy used for retrieval is computed up front, so a
    single instance can be queried from many threads.
    """

    def __init__(self, language_tag: str, vocab: Sequence[str], matrix: ArrayLike):
        values = np.array(matrix, dtype=np.float64)
        if values.ndim != 2:
            raise EmbeddingFormatError(f"matrix must be 2-dimensional, got {values.ndim}")
        if len(vocab) < 1 or values.shape[0] < 1:
            raise EmbeddingFormatError("empty vocabulary")
        if values.shape[1] < 1:
            raise EmbeddingFormatError("dimension must be positive")
        if values.shape[0] != len(vocab):
            raise EmbeddingFormatError(
                f"{len(vocab)} tokens but {values.shape[0]} matrix rows"
            )
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(values), axis=1))[0])
            raise EmbeddingFormatError(f"non-finite value in vector for token {vocab[bad]!r}")

        index: dict[str, int] = {}
        for row, token in enumerate(vocab):
            if token in index:
                raise EmbeddingFormatError(f"duplicate token {token!r}")
            index[token] = row

        norms = np.linalg.norm(values, axis=1)
        zero_rows = np.flatnonzero(norms == 0.0)
        if zero_rows.size:
            raise EmbeddingFormatError(f"zero-norm vector for token {vocab[int(zero_rows[0])]!r}")

        unit = values / norms[:, None]
        values.setflags(write=False)
        unit.setflags(write=False)

        self._language_tag = language_tag
        self._vocab = tuple(vocab)
        self._index = MappingProxyType(index)
        self._matrix = values
        self._unit = unit

    @property
    def language_tag(self) -> str:
        return self._language_tag

    @property
    def dim(self) -> int:
        return int(self._matrix.shape[1])

    @property
    def vocab(self) -> tuple[str, ...]:
        return self._vocab

    @property
    def index(self) -> Mapping[str, int]:
        return self._index

    @property
    def matrix(self) -> NDArray[np.float64]:
        return self._matrix

    @property
    def unit_matrix(self) -> NDArray[np.float64]:
        """Rows scaled to unit length."""
        return self._unit

    def __len__(self) -> int:
        return len(self._vocab)

    def __contains__(self, token: object) -> bool:
        return token in self._index

    def __repr__(self) -> str:
        return f"VectorSpace(language_tag={self._language_tag!r}, size={len(self)}, dim={self.dim})"


def load_vector_space(
    path: str | Path, format: VectorFormat = "word2vec_text", language_tag: str = ""
) -> VectorSpace:
    """Load a word2vec text file (``"<vocab_size> <dim>"`` header, then one token per line)."""
    if format != "word2vec_text":
        raise EmbeddingFormatError(f"unsupported vector format {format!r}")

    path = Path(path)
    with closing(iter_text_lines(path, EmbeddingFormatError)) as lines:
        header = next(lines, (1, ""))[1].split()
        if len(header) != 2:
            raise EmbeddingFormatError(
                f"{path}: malformed header, expected '<vocab_size> <dim>'", line=1
            )
        try:
            vocab_size, dim = int(header[0]), int(header[1])
        except ValueError as exc:
            raise EmbeddingFormatError(f"{path}: malformed header: {exc}", line=1) from exc
        if vocab_size < 1:
            raise EmbeddingFormatError(f"{path}: empty vocabulary", line=1)
        if dim < 1:
            raise EmbeddingFormatError(f"{path}: dimension must be positive", line=1)

        matrix = np.empty((vocab_size, dim), dtype=np.float64)
        vocab: list[str] = []
        first_seen: dict[str, int] = {}
        for line_no, line in lines:
            fields = line.split()
            if not fields:
                raise EmbeddingFormatError(f"{path}: blank line", line=line_no)
            token, numbers = fields[0], fields[1:]
            if len(numbers) != dim:
                raise EmbeddingFormatError(
                    f"{path}: dimension mismatch for {token!r}: "
                    f"expected {dim} values, found {len(numbers)}",
                    line=line_no,
                )
            if token in first_seen:
                raise EmbeddingFormatError(
                    f"{path}: duplicate token {token!r} (first seen on line {first_seen[token]})",
                    line=line_no,
                )
            if len(vocab) == vocab_size:
                raise EmbeddingFormatError(
                    f"{path}: more rows than the {vocab_size} declared in the header",
                    line=line_no,
                )
            try:
                row = np.array(numbers, dtype=np.float64)
            except ValueError as exc:
                raise EmbeddingFormatError(
                    f"{path}: non-numeric value for {token!r}", line=line_no
                ) from exc
            if not np.all(np.isfinite(row)):
                raise EmbeddingFormatError(
                    f"{path}: non-finite value for {token!r}", line=line_no
                )
            matrix[len(vocab)] = row
            first_seen[token] = line_no
            vocab.append(token)

    if len(vocab) != vocab_size:
        raise EmbeddingFormatError(
            f"{path}: header declares {vocab_size} rows, found {len(vocab)}"
        )

    space = VectorSpace(language_tag, vocab, matrix)
    logger.info("Loaded %d vectors of dimension %d from %s", len(space), space.dim, path)
    return space


def write_vector_space(space: VectorSpace, path: str | Path) -> None:
    """Write ``space`` in word2vec text format, readable by :func:`load_vector_space`."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"{len(space)} {space.dim}\n")
        for token, row in zip(space.vocab, space.matrix, strict=True):
            handle.write(f"{token} {format_floats(row)}\n")


def lookup(space: VectorSpace, token: str) -> NDArray[np.float64] | None:
    """Return the vector for ``token``, or ``None`` when it is out of vocabulary."""
    row = space.index.get(token)
    if row is None:
        return None
    return space.matrix[row]


def _top_k(similarities: NDArray[np.float64], k: int) -> NDArray[np.intp]:
    """Indices of the ``k`` largest values, ties broken by ascending index."""
    n = similarities.shape[0]
    if k < n:
        partition = np.argpartition(-similarities, k - 1)[:k]
        threshold = similarities[partition].min()
        candidates = np.flatnonzero(similarities >= threshold)
    else:
        candidates = np.arange(n)
    order = np.lexsort((candidates, -similarities[candidates]))
    return candidates[order][:k]


def _check_k(space: VectorSpace, k: int) -> None:
    if k < 1:
        raise RetrievalError(f"k must be positive, got {k}")
    if k > len(space):
        raise RetrievalError(f"k={k} exceeds vocabulary size {len(space)}")


def nearest_neighbors_batch(
    space: VectorSpace, queries: ArrayLike, k: int
) -> list[list[Neighbor]]:
    """Top-``k`` cosine neighbors for every row of ``queries``."""
    _check_k(space, k)
    matrix = np.asarray(queries, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != space.dim:
        raise RetrievalError(
            f"queries must have shape (m, {space.dim}), got {matrix.shape}"
        )
    if not np.all(np.isfinite(matrix)):
        raise RetrievalError("non-finite query vector")

    # One matrix-vector product per query, so a row scores the same in any batch.
    results: list[list[Neighbor]] = []
    for row_index, query in enumerate(matrix):
        norm = float(np.linalg.norm(query))
        if norm == 0.0:
            raise RetrievalError(f"zero-norm query at row {row_index}")
        similarities = np.clip(space.unit_matrix @ (query / norm), -1.0, 1.0)
        results.append(
            [Neighbor(space.vocab[i], float(similarities[i])) for i in _top_k(similarities, k)]
        )
    return results


def nearest_neighbors(space: VectorSpace, query: ArrayLike, k: int) -> list[Neighbor]:
    """
    Return the ``k`` vocabulary tokens most cosine-similar to ``query``.

    The scan is exhaustive; results are sorted by descending similarity with
    ties broken by ascending row index, so repeated calls are identical.
    """
    vector = np.asarray(query, dtype=np.float64)
    if vector.shape != (space.dim,):
        raise RetrievalError(f"query must have shape ({space.dim},), got {vector.shape}")
    return nearest_neighbors_batch(space, vector[None, :], k)[0]
