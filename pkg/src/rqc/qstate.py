"""Dense quantum states over a growable register of named cells.

A *cell* is one qubit, identified by an array name and a tuple of integer
indices, e.g. ``("q", (3,))`` or ``("qa", ())`` for an unindexed variable.
A :class:`Registry` fixes the wire order: cells appear in allocation
order, and the first allocated cell is the most significant bit of a
basis index.  A :class:`QuantumState` pairs a registry with a dense
complex amplitude vector; a state over zero cells is a bare scalar
(a one-entry vector), which is what a program acting on no qubits has.

States are value-like: every operation returns a fresh state and never
mutates its input.  Registers grow on demand, new cells starting in |0>,
and are capped at :data:`MAX_CELLS` wires by default to keep vectors of
sane size.
"""

from __future__ import annotations

import numpy as np

from .kernels import apply_unitary

MAX_CELLS = 14

Cell = tuple  # (name, (i, j, ...))


class QStateError(Exception):
    pass


def cell_str(cell: Cell) -> str:
    name, idx = cell
    if not idx:
        return name
    return f"{name}[{', '.join(str(i) for i in idx)}]"


class Registry:
    """Immutable ordered set of cells; order is wire order."""

    __slots__ = ("cells", "_pos")

    def __init__(self, cells=()):
        self.cells = tuple(cells)
        self._pos = {c: i for i, c in enumerate(self.cells)}
        if len(self._pos) != len(self.cells):
            raise QStateError("registry lists a cell twice")

    def position(self, cell: Cell) -> int:
        try:
            return self._pos[cell]
        except KeyError:
            raise QStateError(f"cell {cell_str(cell)} is not allocated") from None

    def __contains__(self, cell: Cell) -> bool:
        return cell in self._pos

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self):
        return iter(self.cells)

    def __eq__(self, other):
        return isinstance(other, Registry) and self.cells == other.cells

    def __hash__(self):
        return hash(self.cells)

    def __repr__(self):
        return f"Registry({', '.join(cell_str(c) for c in self.cells)})"

    def extended(self, cells) -> "Registry":
        fresh = [c for c in cells if c not in self._pos]
        return Registry(self.cells + tuple(fresh)) if fresh else self

    def without(self, cell: Cell) -> "Registry":
        self.position(cell)
        return Registry(c for c in self.cells if c != cell)

    def inserted(self, pos: int, cell: Cell) -> "Registry":
        if cell in self._pos:
            raise QStateError(f"cell {cell_str(cell)} is already allocated")
        return Registry(self.cells[:pos] + (cell,) + self.cells[pos:])


class QuantumState:
    """A dense state vector over the cells of a registry."""

    __slots__ = ("registry", "vector")

    def __init__(self, registry: Registry, vector: np.ndarray):
        vector = np.asarray(vector, dtype=np.complex128).reshape(-1)
        if vector.shape != (1 << len(registry),):
            raise QStateError(
                f"vector of length {vector.shape[0]} does not fit "
                f"{len(registry)} cell(s)"
            )
        self.registry = registry
        self.vector = vector

    @classmethod
    def zero(cls, registry: Registry) -> "QuantumState":
        v = np.zeros(1 << len(registry), dtype=np.complex128)
        v[0] = 1.0
        return cls(registry, v)

    @classmethod
    def scalar(cls, value: complex = 1.0) -> "QuantumState":
        return cls(Registry(), np.array([value], dtype=np.complex128))

    @classmethod
    def basis(cls, registry: Registry, bits) -> "QuantumState":
        """Computational basis state; ``bits`` maps cells to 0/1 (absent
        cells default to 0)."""
        idx = 0
        n = len(registry)
        for cell, b in dict(bits).items():
            if b not in (0, 1):
                raise QStateError(f"bit for {cell_str(cell)} must be 0 or 1")
            idx |= b << (n - 1 - registry.position(cell))
        v = np.zeros(1 << n, dtype=np.complex128)
        v[idx] = 1.0
        return cls(registry, v)

    @property
    def n_cells(self) -> int:
        return len(self.registry)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def apply(self, u: np.ndarray, cells) -> "QuantumState":
        wires = [self.registry.position(c) for c in cells]
        out = apply_unitary(self.vector, u, wires, self.n_cells)
        return QuantumState(self.registry, out)

    def extend(self, cells, max_cells: int | None = None) -> "QuantumState":
        """Allocate any unallocated cells (in |0>) at the end of the wire
        order."""
        reg = self.registry.extended(cells)
        if reg is self.registry:
            return self
        cap = MAX_CELLS if max_cells is None else max_cells
        if len(reg) > cap:
            raise QStateError(
                f"register would grow to {len(reg)} cells (cap {cap})"
            )
        pad = np.zeros(1 << (len(reg) - self.n_cells), dtype=np.complex128)
        pad[0] = 1.0
        return QuantumState(reg, np.kron(self.vector, pad))

    def permuted(self, registry: Registry) -> "QuantumState":
        """The same state presented in another wire order (same cell set)."""
        if registry == self.registry:
            return self
        if set(registry.cells) != set(self.registry.cells):
            raise QStateError("cannot permute to a registry over different cells")
        axes = [self.registry.position(c) for c in registry.cells]
        t = self.vector.reshape((2,) * self.n_cells).transpose(axes)
        return QuantumState(registry, np.ascontiguousarray(t).reshape(-1))

    def split(self, cell: Cell):
        """Decompose against one cell: returns (a0, s0, a1, s1) with
        ``self = a0 |0>_cell s0 + a1 |1>_cell s1``.

        Each ``s_i`` is a state over the remaining cells, normalized when
        its amplitude ``a_i`` is nonzero and the zero vector otherwise;
        the ``a_i`` are nonnegative reals carrying the whole weight."""
        pos = self.registry.position(cell)
        rest = self.registry.without(cell)
        t = np.moveaxis(self.vector.reshape((2,) * self.n_cells), pos, 0)
        out = []
        for side in (0, 1):
            part = np.ascontiguousarray(t[side]).reshape(-1)
            a = float(np.linalg.norm(part))
            if a != 0.0:
                part = part / a
            out.append((a, QuantumState(rest, part)))
        (a0, s0), (a1, s1) = out
        return a0, s0, a1, s1

    @staticmethod
    def recombine(cell: Cell, pos: int, a0, s0: "QuantumState", a1, s1: "QuantumState") -> "QuantumState":
        """Inverse of :meth:`split`, reinserting the cell at wire ``pos``."""
        if s0.registry != s1.registry:
            raise QStateError("recombine needs both parts over the same registry")
        reg = s0.registry.inserted(pos, cell)
        n = len(reg)
        halves = np.stack(
            [
                (a0 * s0.vector).reshape((2,) * (n - 1)),
                (a1 * s1.vector).reshape((2,) * (n - 1)),
            ],
            axis=pos,
        )
        return QuantumState(reg, np.ascontiguousarray(halves).reshape(-1))

    def equal_to(self, other: "QuantumState", tol: float = 1e-9) -> bool:
        """Elementwise amplitude equality (no global-phase allowance).

        Registries may differ in order and even in cells: both states are
        padded to the union register first, so a cell absent on one side
        counts as that side holding it in |0>."""
        a, b = align(self, other)
        return bool(np.abs(a.vector - b.vector).max() <= tol)

    def __repr__(self):
        return f"QuantumState({self.registry!r}, dim={len(self.vector)})"


def align(a: QuantumState, b: QuantumState, max_cells: int | None = None):
    """Extend and permute two states onto one shared registry."""
    reg = a.registry.extended(b.registry.cells)
    a2 = a.extend(reg.cells, max_cells=max_cells)
    b2 = b.extend(reg.cells, max_cells=max_cells).permuted(reg)
    return a2, b2
