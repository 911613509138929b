"""
Linear translation matrix between two embedding spaces.

W is the minimum-norm least-squares solution of ``min_W sum_i ||W x_i - z_i||^2``
on raw (unnormalized) vectors. Cosine normalization only happens at retrieval.
"""

import logging
from contextlib import closing
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike, NDArray

from xling_sentiment.data_ingest import BilingualLexicon
from xling_sentiment.embedding_store import (
    Neighbor,
    VectorSpace,
    format_floats,
    iter_text_lines,
    lookup,
    nearest_neighbors,
)
from xling_sentiment.errors import AlignmentError

logger = logging.getLogger(__name__)

# Singular values below RCOND * largest are treated as zero.
RCOND = 1e-12


@dataclass(frozen=True)
class AlignedPairs:
    """Row-aligned source (``X``) and target (``Z``) vectors for ``j`` word pairs."""

    X: NDArray[np.float64]
    Z: NDArray[np.float64]
    tokens: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if self.X.ndim != 2 or self.Z.ndim != 2:
            raise AlignmentError("X and Z must be 2-dimensional")
        if self.X.shape[0] != self.Z.shape[0] or self.X.shape[0] != len(self.tokens):
            raise AlignmentError(
                f"row counts differ: X={self.X.shape[0]}, Z={self.Z.shape[0]}, "
                f"tokens={len(self.tokens)}"
            )
        if self.X.shape[0] < 1:
            raise AlignmentError("at least one word pair is required")


@dataclass(frozen=True)
class TranslationMatrix:
    """``D_tgt x D_src`` map from a source space into a target space."""

    weights: NDArray[np.float64]
    source_language: str
    target_language: str
    training_pair_count: int
    residual: float | None = None
    rank: int | None = None

    def __post_init__(self) -> None:
        if self.weights.ndim != 2:
            raise AlignmentError("translation matrix must be 2-dimensional")
        if not np.all(np.isfinite(self.weights)):
            raise AlignmentError("translation matrix has non-finite entries")
        self.weights.setflags(write=False)

    @property
    def source_dim(self) -> int:
        return int(self.weights.shape[1])

    @property
    def target_dim(self) -> int:
        return int(self.weights.shape[0])


def reverse_lexicon(lex: BilingualLexicon) -> BilingualLexicon:
    """Swap the lexicon direction; later duplicates of a new source word are dropped."""
    seen: set[str] = set()
    pairs: list[tuple[str, str]] = []
    for source, target in lex.pairs:
        if target in seen:
            continue
        seen.add(target)
        pairs.append((target, source))
    dropped = len(lex) - len(pairs)
    if dropped:
        logger.warning("Reversing lexicon dropped %d pairs with a repeated target word", dropped)
    return BilingualLexicon(tuple(pairs), lex.target_language, lex.source_language)


def build_aligned_pairs(
    lex: BilingualLexicon, source_space: VectorSpace, target_space: VectorSpace
) -> AlignedPairs:
    """Stack the source and target vectors of every lexicon pair."""
    if len(lex) == 0:
        raise AlignmentError("cannot align with an empty lexicon")
    source_rows: list[int] = []
    target_rows: list[int] = []
    for source, target in lex.pairs:
        if source not in source_space:
            raise AlignmentError(
                f"unresolvable source token {source!r}; filter the lexicon by vocabulary first"
            )
        if target not in target_space:
            raise AlignmentError(
                f"unresolvable target token {target!r}; filter the lexicon by vocabulary first"
            )
        source_rows.append(source_space.index[source])
        target_rows.append(target_space.index[target])
    return AlignedPairs(
        X=source_space.matrix[source_rows],
        Z=target_space.matrix[target_rows],
        tokens=lex.pairs,
    )


def fit_translation_matrix(
    pairs: AlignedPairs, source_language: str = "", target_language: str = ""
) -> TranslationMatrix:
    """Closed-form minimum-norm least-squares fit of W (``Z ~ X W^T``)."""
    if not (np.all(np.isfinite(pairs.X)) and np.all(np.isfinite(pairs.Z))):
        raise AlignmentError("non-finite values in aligned pairs")
    try:
        solution, _, rank, _ = scipy.linalg.lstsq(
            pairs.X, pairs.Z, cond=RCOND, lapack_driver="gelsd"
        )
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise AlignmentError(f"least-squares solve failed: {exc}") from exc

    residual = float(np.sum((pairs.X @ solution - pairs.Z) ** 2))
    logger.debug(
        "Fitted %dx%d translation matrix on %d pairs (rank %d, residual %.6g)",
        solution.shape[1],
        solution.shape[0],
        pairs.X.shape[0],
        rank,
        residual,
    )
    return TranslationMatrix(
        weights=np.ascontiguousarray(solution.T),
        source_language=source_language,
        target_language=target_language,
        training_pair_count=int(pairs.X.shape[0]),
        residual=residual,
        rank=int(rank),
    )


def map_vector(W: TranslationMatrix, x: ArrayLike) -> NDArray[np.float64]:
    """Return ``W x``."""
    vector = np.asarray(x, dtype=np.float64)
    if vector.shape != (W.source_dim,):
        raise AlignmentError(
            f"vector has shape {vector.shape}, translation matrix expects ({W.source_dim},)"
        )
    return W.weights @ vector


def map_vectors(W: TranslationMatrix, X: ArrayLike) -> NDArray[np.float64]:
    """Map every row of ``X``."""
    matrix = np.asarray(X, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != W.source_dim:
        raise AlignmentError(
            f"matrix has shape {matrix.shape}, translation matrix expects (m, {W.source_dim})"
        )
    return matrix @ W.weights.T


def check_spaces(
    W: TranslationMatrix, source_space: VectorSpace, target_space: VectorSpace
) -> None:
    if W.source_dim != source_space.dim:
        raise AlignmentError(
            f"translation matrix expects source dimension {W.source_dim}, "
            f"space {source_space.language_tag!r} has {source_space.dim}"
        )
    if W.target_dim != target_space.dim:
        raise AlignmentError(
            f"translation matrix produces dimension {W.target_dim}, "
            f"space {target_space.language_tag!r} has {target_space.dim}"
        )


def translate_token(
    W: TranslationMatrix,
    token: str,
    source_space: VectorSpace,
    target_space: VectorSpace,
    k: int,
) -> list[Neighbor]:
    """Map a source word and return its ``k`` nearest target-space words."""
    check_spaces(W, source_space, target_space)
    vector = lookup(source_space, token)
    if vector is None:
        raise AlignmentError(f"{token!r} is not in the {source_space.language_tag!r} vocabulary")
    mapped = map_vector(W, vector)
    if not np.any(mapped):
        raise AlignmentError(f"{token!r} maps to the zero vector")
    return nearest_neighbors(target_space, mapped, k)


def save_translation_matrix(W: TranslationMatrix, path: str | Path) -> None:
    """Header ``D_tgt D_src source_tag target_tag pair_count`` then one row per line."""
    for tag in (W.source_language, W.target_language):
        if not tag or any(ch.isspace() for ch in tag):
            raise AlignmentError(f"language tag {tag!r} must be non-empty without whitespace")
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(
            f"{W.target_dim} {W.source_dim} {W.source_language} {W.target_language} "
            f"{W.training_pair_count}\n"
        )
        for row in W.weights:
            handle.write(format_floats(row) + "\n")


def load_translation_matrix(path: str | Path) -> TranslationMatrix:
    path = Path(path)
    with closing(iter_text_lines(path, AlignmentError)) as lines:
        header = next(lines, (1, ""))[1].split()
        if len(header) != 5:
            raise AlignmentError(
                f"{path}: header must be 'D_tgt D_src source_tag target_tag pair_count'", line=1
            )
        try:
            target_dim, source_dim, pair_count = int(header[0]), int(header[1]), int(header[4])
        except ValueError as exc:
            raise AlignmentError(f"{path}: malformed header: {exc}", line=1) from exc
        if target_dim < 1 or source_dim < 1:
            raise AlignmentError(f"{path}: dimensions must be positive", line=1)
        rows: list[NDArray[np.float64]] = []
        for line_no, line in lines:
            try:
                row = np.array(line.split(), dtype=np.float64)
            except ValueError as exc:
                raise AlignmentError(f"{path}: non-numeric value", line=line_no) from exc
            if row.shape != (source_dim,):
                raise AlignmentError(
                    f"{path}: expected {source_dim} values, found {row.size}", line=line_no
                )
            rows.append(row)
    if len(rows) != target_dim:
        raise AlignmentError(f"{path}: header declares {target_dim} rows, found {len(rows)}")

    W = TranslationMatrix(
        weights=np.vstack(rows),
        source_language=header[2],
        target_language=header[3],
        training_pair_count=pair_count,
    )
    logger.info(
        "Loaded %s->%s translation matrix (%dx%d) from %s",
        W.source_language,
        W.target_language,
        W.target_dim,
        W.source_dim,
        path,
    )
    return W
