"""Truncated path signatures of piecewise-linear trajectories.

A trajectory is an (n, d) array of states.  Its depth-k signature is the
flat vector of iterated integrals of the piecewise-linear interpolation,

    [1, level-1 terms, level-2 terms, ..., level-k terms],

where the level-m block holds the d**m terms indexed by (i_1, ..., i_m)
in lexicographic order (row-major tensor layout).  The length-1 trajectory
has the trivial signature [1, 0, ..., 0].

Signatures of concatenated paths combine through the truncated tensor
product (Chen's identity), which is what makes streaming updates cheap:
each new point costs one segment signature plus one product, independent
of how many points came before.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PathSignature",
    "SignatureStream",
    "as_trajectory",
    "batch_signature",
    "concat",
    "prefix_signatures",
    "segment_signature",
    "signature_length",
    "stream_extend",
]


def signature_length(dimension: int, depth: int) -> int:
    """Number of terms in a depth-`depth` signature over R^`dimension`.

    Equals sum(dimension**i for i in 0..depth); the geometric closed form
    (d**(k+1) - 1) / (d - 1) agrees for dimension > 1 but the summation is
    the defining quantity (it also covers dimension == 1).
    """
    if not isinstance(dimension, (int, np.integer)) or dimension < 1:
        raise ValueError(f"dimension must be a positive integer, got {dimension!r}")
    if not isinstance(depth, (int, np.integer)) or depth < 1:
        raise ValueError(f"depth must be a positive integer, got {depth!r}")
    return sum(dimension**i for i in range(depth + 1))


def _level_offsets(dimension: int, depth: int) -> tuple[int, ...]:
    """Start index of each level block; offsets[m]:offsets[m+1] is level m."""
    offsets = [0]
    for m in range(depth + 1):
        offsets.append(offsets[-1] + dimension**m)
    return tuple(offsets)


@dataclass(eq=False)
class PathSignature:
    """A truncated signature: flat float64 terms plus its (dimension, depth).

    terms[0] is always exactly 1.0 (the empty-word coefficient).
    """

    dimension: int
    depth: int
    terms: np.ndarray

    def __post_init__(self):
        expected = signature_length(self.dimension, self.depth)
        self.terms = np.asarray(self.terms, dtype=np.float64)
        if self.terms.ndim != 1 or self.terms.size != expected:
            raise ValueError(
                f"signature for dimension={self.dimension}, depth={self.depth} "
                f"needs {expected} terms, got shape {self.terms.shape}"
            )
        if self.terms[0] != 1.0:
            raise ValueError(f"leading term must be 1.0, got {self.terms[0]!r}")
        if not np.all(np.isfinite(self.terms)):
            raise ValueError("signature terms must be finite")

    @classmethod
    def trivial(cls, dimension: int, depth: int) -> "PathSignature":
        """Signature of a single-point trajectory: [1, 0, ..., 0]."""
        terms = np.zeros(signature_length(dimension, depth))
        terms[0] = 1.0
        return cls(dimension, depth, terms)

    def level(self, m: int) -> np.ndarray:
        """Flat view of the level-m block (d**m entries)."""
        if not 0 <= m <= self.depth:
            raise ValueError(f"level must be in 0..{self.depth}, got {m}")
        offsets = _level_offsets(self.dimension, self.depth)
        return self.terms[offsets[m] : offsets[m + 1]]

    def term(self, *indices: int) -> float:
        """Single term by 1-based coordinate indices, e.g. term(1, 2)."""
        m = len(indices)
        if m > self.depth:
            raise ValueError(f"requested level {m} exceeds depth {self.depth}")
        flat = 0
        for i in indices:
            if not 1 <= i <= self.dimension:
                raise ValueError(f"coordinate index {i} out of range 1..{self.dimension}")
            flat = flat * self.dimension + (i - 1)
        return float(self.level(m)[flat])

    def copy(self) -> "PathSignature":
        return PathSignature(self.dimension, self.depth, self.terms.copy())

    def pack(self) -> np.ndarray:
        """Flat array [dimension, depth, terms...] for storage."""
        return np.concatenate([[float(self.dimension), float(self.depth)], self.terms])

    @classmethod
    def unpack(cls, packed) -> "PathSignature":
        packed = np.asarray(packed, dtype=np.float64)
        if packed.ndim != 1 or packed.size < 3:
            raise ValueError("packed signature must be a flat [d, k, terms...] array")
        d, k = int(packed[0]), int(packed[1])
        return cls(d, k, packed[2:])

    def __repr__(self):
        return (
            f"PathSignature(dimension={self.dimension}, depth={self.depth}, "
            f"terms={np.array2string(self.terms, precision=6, threshold=8)})"
        )


def as_trajectory(points) -> np.ndarray:
    """Validate and coerce a trajectory to an (n, d) float64 array."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"trajectory must be 2-D (n points, d coords), got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"trajectory must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("trajectory contains non-finite values")
    return arr


def _segment_terms(delta: np.ndarray, depth: int, offsets) -> np.ndarray:
    """Signature terms of one linear segment with increment `delta`.

    Level m is the m-fold tensor power of delta divided by m!.
    """
    terms = np.empty(offsets[-1])
    terms[0] = 1.0
    block = np.array([1.0])
    for m in range(1, depth + 1):
        block = np.outer(block, delta).ravel() / m
        terms[offsets[m] : offsets[m + 1]] = block
    return terms


def _concat_terms(a: np.ndarray, b: np.ndarray, depth: int, offsets) -> np.ndarray:
    """Truncated tensor product of two flat signature term vectors.

    Level m of the result is sum_{j=0..m} a_j (x) b_{m-j}; level-0 blocks
    are the scalar 1, so j == 0 and j == m contribute b_m and a_m as-is.
    """
    out = np.empty_like(a)
    out[0] = 1.0
    for m in range(1, depth + 1):
        block = np.zeros(offsets[m + 1] - offsets[m])
        for j in range(m + 1):
            left = a[offsets[j] : offsets[j + 1]]
            right = b[offsets[m - j] : offsets[m - j + 1]]
            block += np.outer(left, right).ravel()
        out[offsets[m] : offsets[m + 1]] = block
    return out


def segment_signature(delta, depth: int) -> PathSignature:
    """Closed-form signature of a single straight segment.

    Parameters
    ----------
    delta : array_like, shape (d,)
        Increment of the segment (end minus start).
    depth : int
        Truncation depth k >= 1.

    Returns
    -------
    PathSignature
        Level-m block equals the m-th tensor power of ``delta`` over m!.
    """
    delta = np.asarray(delta, dtype=np.float64)
    if delta.ndim != 1 or delta.size < 1:
        raise ValueError(f"delta must be a 1-D vector, got shape {delta.shape}")
    if not np.all(np.isfinite(delta)):
        raise ValueError("delta contains non-finite values")
    d = delta.size
    signature_length(d, depth)  # validates depth
    offsets = _level_offsets(d, depth)
    return PathSignature(d, depth, _segment_terms(delta, depth, offsets))


def concat(a: PathSignature, b: PathSignature) -> PathSignature:
    """Signature of the concatenated path from signatures of its halves.

    Both inputs must share dimension and depth.  Concatenation with the
    trivial signature is an exact identity on either side.
    """
    if not isinstance(a, PathSignature) or not isinstance(b, PathSignature):
        raise TypeError("concat expects two PathSignature operands")
    if (a.dimension, a.depth) != (b.dimension, b.depth):
        raise ValueError(
            f"mismatched signatures: ({a.dimension}, {a.depth}) vs ({b.dimension}, {b.depth})"
        )
    offsets = _level_offsets(a.dimension, a.depth)
    return PathSignature(a.dimension, a.depth, _concat_terms(a.terms, b.terms, a.depth, offsets))


def batch_signature(points, depth: int) -> PathSignature:
    """Signature of a whole trajectory, folding segment signatures in order.

    Parameters
    ----------
    points : array_like, shape (n, d)
        Trajectory states in time order, n >= 1.
    depth : int
        Truncation depth k >= 1.
    """
    traj = as_trajectory(points)
    d = traj.shape[1]
    offsets = _level_offsets(d, depth)
    terms = np.zeros(offsets[-1])
    terms[0] = 1.0
    for i in range(1, traj.shape[0]):
        seg = _segment_terms(traj[i] - traj[i - 1], depth, offsets)
        terms = _concat_terms(terms, seg, depth, offsets)
    return PathSignature(d, depth, terms)


@dataclass
class SignatureStream:
    """Running signature of a trajectory consumed one point at a time.

    Single-writer: feed points through extend(); `signature` returns the
    current value.  Before any point arrives (and after exactly one), the
    signature is trivial.
    """

    dimension: int
    depth: int
    count: int = 0
    _terms: np.ndarray = field(init=False, repr=False)
    _last: np.ndarray | None = field(default=None, init=False, repr=False)
    _offsets: tuple = field(init=False, repr=False)

    def __post_init__(self):
        n = signature_length(self.dimension, self.depth)
        self._offsets = _level_offsets(self.dimension, self.depth)
        self._terms = np.zeros(n)
        self._terms[0] = 1.0

    def extend(self, point) -> "SignatureStream":
        """Consume the next trajectory point; returns self for chaining."""
        p = np.asarray(point, dtype=np.float64)
        if p.ndim != 1 or p.size != self.dimension:
            raise ValueError(
                f"point must be a vector of length {self.dimension}, got shape {p.shape}"
            )
        if not np.all(np.isfinite(p)):
            raise ValueError("point contains non-finite values")
        if self._last is not None:
            seg = _segment_terms(p - self._last, self.depth, self._offsets)
            self._terms = _concat_terms(self._terms, seg, self.depth, self._offsets)
        self._last = p.copy()
        self.count += 1
        return self

    @property
    def signature(self) -> PathSignature:
        return PathSignature(self.dimension, self.depth, self._terms.copy())

    @property
    def terms(self) -> np.ndarray:
        """Copy of the current flat term vector."""
        return self._terms.copy()

    @property
    def last_point(self) -> np.ndarray | None:
        return None if self._last is None else self._last.copy()


def stream_extend(stream: SignatureStream, point) -> SignatureStream:
    """Feed one point into a stream; equivalent to ``stream.extend(point)``."""
    return stream.extend(point)


def prefix_signatures(points, depth: int) -> list[PathSignature]:
    """Signatures of every prefix of a trajectory, one per point.

    Returns [sig(points[:1]), sig(points[:2]), ..., sig(points)], where the
    first entry is always the trivial signature.  Entry j matches
    batch_signature(points[: j + 1], depth) to streaming accuracy.
    """
    traj = as_trajectory(points)
    stream = SignatureStream(traj.shape[1], depth)
    out = []
    for p in traj:
        stream.extend(p)
        out.append(stream.signature)
    return out
