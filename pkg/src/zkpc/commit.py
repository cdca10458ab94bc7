"""Hashing and commitment primitives.

Everything here is SHA-256 with a one-byte domain tag:

    0x00 leaf, 0x01 interior node, 0x02 output chain, 0x03 image, 0x04 transcript

Digests are plain 32-byte ``bytes`` objects.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

Digest = bytes

LEAF_TAG = b"\x00"
NODE_TAG = b"\x01"
CHAIN_TAG = b"\x02"
IMAGE_TAG = b"\x03"
TRANSCRIPT_TAG = b"\x04"

MEMORY_DEPTH = 16
WORD_MASK = 0xFFFFFFFF

_sha256 = hashlib.sha256


class CommitError(ValueError):
    """Bad arguments to a commitment routine (empty tree, index out of range)."""


def sha256(data: bytes) -> Digest:
    return _sha256(data).digest()


def hash_leaf(data: bytes) -> Digest:
    return _sha256(LEAF_TAG + data).digest()


def hash_node(left: Digest, right: Digest) -> Digest:
    return _sha256(NODE_TAG + left + right).digest()


EMPTY_LEAF = hash_leaf(b"")


@dataclass(frozen=True)
class MerklePath:
    siblings: tuple[Digest, ...]
    leaf_index: int

    @property
    def depth(self) -> int:
        return len(self.siblings)


def root_from_path(leaf_digest: Digest, index: int, siblings: Sequence[Digest]) -> Digest:
    """Fold a leaf digest up a sibling list (leaf level first)."""
    h = leaf_digest
    for sib in siblings:
        if index & 1:
            h = _sha256(NODE_TAG + sib + h).digest()
        else:
            h = _sha256(NODE_TAG + h + sib).digest()
        index >>= 1
    return h


# ---------------------------------------------------------------------------
# dense trees


class MerkleTree:
    """Dense binary Merkle tree, padded to a power of two with ``EMPTY_LEAF``.

    ``levels[0]`` holds the leaf digests, ``levels[-1]`` is ``[root]``.
    Read-only after construction.
    """

    __slots__ = ("levels", "n_leaves")

    def __init__(self, leaf_digests: Sequence[Digest]):
        if not leaf_digests:
            raise CommitError("cannot build a Merkle tree over zero leaves")
        self.n_leaves = len(leaf_digests)
        width = 1
        while width < self.n_leaves:
            width <<= 1
        level = list(leaf_digests)
        level.extend([EMPTY_LEAF] * (width - len(level)))
        levels = [level]
        sha = _sha256
        while len(level) > 1:
            it = iter(level)
            level = [sha(NODE_TAG + a + b).digest() for a, b in zip(it, it)]
            levels.append(level)
        self.levels = levels

    @classmethod
    def from_leaves(cls, leaves: Iterable[bytes]) -> "MerkleTree":
        sha = _sha256
        return cls([sha(LEAF_TAG + leaf).digest() for leaf in leaves])

    @property
    def root(self) -> Digest:
        return self.levels[-1][0]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def width(self) -> int:
        return len(self.levels[0])

    def open(self, index: int) -> MerklePath:
        if not 0 <= index < self.width:
            raise CommitError(f"leaf index {index} out of range for {self.width} leaves")
        sibs = []
        i = index
        for level in self.levels[:-1]:
            sibs.append(level[i ^ 1])
            i >>= 1
        return MerklePath(tuple(sibs), index)

    def replace_leaf(self, index: int, leaf_digest: Digest) -> "MerkleTree":
        """Copy of the tree with one leaf swapped; only the touched path is rehashed."""
        if not 0 <= index < self.width:
            raise CommitError(f"leaf index {index} out of range for {self.width} leaves")
        new = MerkleTree.__new__(MerkleTree)
        new.n_leaves = self.n_leaves
        levels = [list(level) for level in self.levels]
        levels[0][index] = leaf_digest
        i = index
        for d in range(1, len(levels)):
            i >>= 1
            levels[d][i] = hash_node(levels[d - 1][2 * i], levels[d - 1][2 * i + 1])
        new.levels = levels
        return new


def build_tree(leaves: Sequence[bytes]) -> tuple[Digest, MerkleTree]:
    tree = MerkleTree.from_leaves(leaves)
    return tree.root, tree


def open_path(tree: MerkleTree, index: int) -> MerklePath:
    return tree.open(index)


def verify_path(root: Digest, index: int, leaf_bytes: bytes, path: MerklePath) -> bool:
    if index < 0 or index >= (1 << path.depth) or path.leaf_index != index:
        return False
    return root_from_path(hash_leaf(leaf_bytes), index, path.siblings) == root


# ---------------------------------------------------------------------------
# sparse memory tree


def word_leaf(value: int) -> Digest:
    return _sha256(LEAF_TAG + struct.pack("<I", value & WORD_MASK)).digest()


def _zero_digests(depth: int) -> list[Digest]:
    z = [word_leaf(0)]
    for _ in range(depth):
        z.append(hash_node(z[-1], z[-1]))
    return z


ZERO_DIGESTS = _zero_digests(MEMORY_DEPTH)
ZERO_MEMORY_ROOT = ZERO_DIGESTS[MEMORY_DEPTH]


@dataclass(frozen=True)
class MemWitness:
    """Authenticates ``old_value`` at ``address`` under some memory root."""

    address: int
    old_value: int
    siblings: tuple[Digest, ...]

    def root_with(self, value: int) -> Digest:
        return root_from_path(word_leaf(value), self.address, self.siblings)

    def verify(self, root: Digest) -> bool:
        return self.root_with(self.old_value) == root


class SparseMemory:
    """Fixed-depth sparse Merkle tree over a word-addressed memory.

    Untouched subtrees are never stored; they hash to precomputed defaults,
    so building from ``n`` populated words costs ``O(n * depth)`` hashes.
    """

    def __init__(self, memory: Mapping[int, int] | None = None, depth: int = MEMORY_DEPTH):
        self.depth = depth
        self._zeros = ZERO_DIGESTS if depth == MEMORY_DEPTH else _zero_digests(depth)
        self._words: dict[int, int] = {}
        # _nodes[level][index], level 0 = leaves; absent entries are default
        self._nodes: list[dict[int, Digest]] = [{} for _ in range(depth + 1)]
        if memory:
            for addr in sorted(memory):
                self.update(addr, memory[addr])

    def _check(self, address: int) -> None:
        if not 0 <= address < (1 << self.depth):
            raise CommitError(f"memory address {address:#x} outside 2^{self.depth} words")

    @property
    def root(self) -> Digest:
        return self._nodes[self.depth].get(0, self._zeros[self.depth])

    def get(self, address: int) -> int:
        return self._words.get(address, 0)

    def words(self) -> dict[int, int]:
        return dict(self._words)

    def path(self, address: int) -> tuple[Digest, ...]:
        self._check(address)
        sibs = []
        i = address
        zeros = self._zeros
        for level in range(self.depth):
            sibs.append(self._nodes[level].get(i ^ 1, zeros[level]))
            i >>= 1
        return tuple(sibs)

    def witness(self, address: int) -> MemWitness:
        return MemWitness(address, self.get(address), self.path(address))

    def update(self, address: int, value: int, journal: list | None = None) -> MemWitness:
        """Write ``value`` and return the pre-write witness (valid for both roots).

        If ``journal`` is given, enough is appended to it for :meth:`rewind`
        to undo the write without rehashing.
        """
        self._check(address)
        value &= WORD_MASK
        old = self._words.get(address, 0)
        nodes = self._nodes
        zeros = self._zeros
        sha = _sha256
        sibs = []
        h = word_leaf(value)
        i = address
        undo = [] if journal is not None else None
        for level in range(self.depth):
            lvl = nodes[level]
            if undo is not None:
                undo.append(lvl.get(i))
            if h == zeros[level]:
                lvl.pop(i, None)
            else:
                lvl[i] = h
            sib = lvl.get(i ^ 1, zeros[level])
            sibs.append(sib)
            if i & 1:
                h = sha(NODE_TAG + sib + h).digest()
            else:
                h = sha(NODE_TAG + h + sib).digest()
            i >>= 1
        if undo is not None:
            undo.append(nodes[self.depth].get(0))
            journal.append((address, old, undo))
        if h == zeros[self.depth]:
            nodes[self.depth].pop(0, None)
        else:
            nodes[self.depth][0] = h
        if value:
            self._words[address] = value
        else:
            self._words.pop(address, None)
        return MemWitness(address, old, tuple(sibs))


    def copy(self) -> "SparseMemory":
        other = SparseMemory.__new__(SparseMemory)
        other.depth = self.depth
        other._zeros = self._zeros
        other._words = dict(self._words)
        other._nodes = [dict(lvl) for lvl in self._nodes]
        return other

    def rewind(self, entry: tuple[int, int, list]) -> None:
        """Undo one journaled write (entries must be rewound newest first)."""
        address, old, undo = entry
        i = address
        for level, prev in enumerate(undo):
            lvl = self._nodes[level]
            if prev is None:
                lvl.pop(i, None)
            else:
                lvl[i] = prev
            i >>= 1
        if old:
            self._words[address] = old
        else:
            self._words.pop(address, None)


def sparse_memory_root(memory: Mapping[int, int], depth: int = MEMORY_DEPTH) -> Digest:
    return SparseMemory(memory, depth).root


def sparse_update(mem: SparseMemory, address: int, new_value: int) -> tuple[Digest, MemWitness]:
    w = mem.update(address, new_value)
    return mem.root, w


# ---------------------------------------------------------------------------
# output chain and transcript

CHAIN_INIT = sha256(b"ZKPC.out.init")


def chain_extend(acc: Digest, byte: int) -> Digest:
    return _sha256(CHAIN_TAG + acc + bytes((byte & 0xFF,))).digest()


def chain(data: bytes, acc: Digest = CHAIN_INIT) -> Digest:
    sha = _sha256
    for b in data:
        acc = sha(CHAIN_TAG + acc + bytes((b,))).digest()
    return acc


def transcript_seed(claim, k: int) -> Digest:
    return sha256(
        TRANSCRIPT_TAG
        + claim.image_id
        + claim.input_digest
        + chain(claim.output_bytes)
        + claim.trace_root
        + struct.pack("<QI", claim.trace_len, k)
    )


def derive_samples(claim, k: int) -> list[int]:
    """Fiat-Shamir step indices in ``[0, trace_len - 1)`` for a committed claim.

    ``claim`` needs ``image_id``, ``input_digest``, ``output_bytes``,
    ``trace_root`` and ``trace_len`` (row count).
    """
    if claim.trace_len < 2:
        raise CommitError("trace_len must be at least 2 to sample steps")
    if k < 1:
        raise CommitError("sample count must be positive")
    seed = transcript_seed(claim, k)
    n = claim.trace_len - 1
    out = []
    for j in range(k):
        h = sha256(seed + struct.pack("<I", j))
        out.append(int.from_bytes(h[:8], "little") % n)
    return out
