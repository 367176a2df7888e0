"""Dense matrices over backend rings, Smith normal form and field solving."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence, Union

import sympy

from .rings import (
    DomainError,
    RingDescriptor,
    RingKind,
    RingMismatchError,
    Scalar,
    UnsupportedBackendError,
)


logger = logging.getLogger(__name__)


class ShapeMismatchError(DomainError):
    """Raised when matrix dimensions are incompatible."""

    kind = "shape-mismatch"

    def __init__(self, operation: str, left: tuple[int, int], right: tuple[int, int]):
        self.operation = operation
        self.left = left
        self.right = right
        super().__init__(f"Shape mismatch in {operation}: {left[0]}x{left[1]} vs {right[0]}x{right[1]}")


class NoSolutionError(DomainError):
    """Raised when a linear system over a field is inconsistent."""

    kind = "no-solution"

    def __init__(self, rows: int, cols: int):
        super().__init__(f"Linear system with {rows}x{cols} coefficient matrix has no solution")


class SingularMatrixError(DomainError):
    """Raised when a square matrix has no inverse."""

    kind = "singular"

    def __init__(self, size: int):
        self.size = size
        super().__init__(f"Matrix of size {size} is singular")


Entry = Union[Scalar, int, Fraction, str]


@dataclass(frozen=True)
class Matrix:
    """An immutable rows x cols matrix with entries in a single ring."""

    ring: RingDescriptor
    rows: int
    cols: int
    entries: tuple[tuple[Scalar, ...], ...]

    def __post_init__(self):
        if len(self.entries) != self.rows:
            raise ShapeMismatchError("construct", (self.rows, self.cols), (len(self.entries), self.cols))
        for row in self.entries:
            if len(row) != self.cols:
                raise ShapeMismatchError("construct", (self.rows, self.cols), (self.rows, len(row)))
            for entry in row:
                if entry.ring != self.ring:
                    raise RingMismatchError(self.ring, entry.ring)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_rows(cls, ring: RingDescriptor, rows: Sequence[Sequence[Entry]], cols: Optional[int] = None) -> Matrix:
        """Build a matrix from nested lists of scalars, ints, Fractions or element strings."""
        if cols is None:
            cols = len(rows[0]) if rows else 0
        entries = tuple(tuple(ring.scalar(e) for e in row) for row in rows)
        return cls(ring, len(entries), cols, entries)

    @classmethod
    def zeros(cls, ring: RingDescriptor, rows: int, cols: int) -> Matrix:
        zero = ring.zero()
        return cls(ring, rows, cols, tuple(tuple(zero for _ in range(cols)) for _ in range(rows)))

    @classmethod
    def identity(cls, ring: RingDescriptor, n: int) -> Matrix:
        zero, one = ring.zero(), ring.one()
        return cls(ring, n, n, tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n)))

    @classmethod
    def diagonal(cls, ring: RingDescriptor, values: Sequence[Entry]) -> Matrix:
        n = len(values)
        zero = ring.zero()
        return cls(
            ring, n, n,
            tuple(tuple(ring.scalar(values[i]) if i == j else zero for j in range(n)) for i in range(n)),
        )

    @classmethod
    def column(cls, ring: RingDescriptor, values: Sequence[Entry]) -> Matrix:
        return cls.from_rows(ring, [[v] for v in values], cols=1)

    @classmethod
    def row(cls, ring: RingDescriptor, values: Sequence[Entry]) -> Matrix:
        return cls.from_rows(ring, [list(values)], cols=len(values))

    # -- access -------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def __getitem__(self, key: tuple[int, int]) -> Scalar:
        i, j = key
        return self.entries[i][j]

    def __iter__(self) -> Iterator[tuple[Scalar, ...]]:
        return iter(self.entries)

    def column_vector(self, j: int) -> Matrix:
        return self.submatrix(0, self.rows, j, j + 1)

    def submatrix(self, r0: int, r1: int, c0: int, c1: int) -> Matrix:
        return Matrix(self.ring, r1 - r0, c1 - c0, tuple(row[c0:c1] for row in self.entries[r0:r1]))

    def is_zero(self) -> bool:
        return all(e.is_zero() for row in self.entries for e in row)

    def is_upper_triangular(self) -> bool:
        return all(self.entries[i][j].is_zero() for i in range(self.rows) for j in range(min(i, self.cols)))

    # -- arithmetic ---------------------------------------------------------

    def _check_ring(self, other: Matrix) -> None:
        if other.ring != self.ring:
            raise RingMismatchError(self.ring, other.ring)

    def __add__(self, other: Matrix) -> Matrix:
        self._check_ring(other)
        if self.shape != other.shape:
            raise ShapeMismatchError("add", self.shape, other.shape)
        return Matrix(
            self.ring, self.rows, self.cols,
            tuple(tuple(a + b for a, b in zip(r1, r2)) for r1, r2 in zip(self.entries, other.entries)),
        )

    def __neg__(self) -> Matrix:
        return Matrix(self.ring, self.rows, self.cols, tuple(tuple(-a for a in row) for row in self.entries))

    def __sub__(self, other: Matrix) -> Matrix:
        return self + (-other)

    def __matmul__(self, other: Matrix) -> Matrix:
        self._check_ring(other)
        if self.cols != other.rows:
            raise ShapeMismatchError("mul", self.shape, other.shape)
        zero = self.ring.zero()
        out = []
        for row in self.entries:
            out_row = []
            for j in range(other.cols):
                acc = zero
                for k, a in enumerate(row):
                    if a.is_zero():
                        continue
                    b = other.entries[k][j]
                    if not b.is_zero():
                        acc = acc + a * b
                out_row.append(acc)
            out.append(tuple(out_row))
        return Matrix(self.ring, self.rows, other.cols, tuple(out))

    def scale(self, c: Entry) -> Matrix:
        """Left scalar multiple c*A."""
        c = self.ring.scalar(c)
        return self.map(lambda a: c * a)

    def rscale(self, c: Entry) -> Matrix:
        """Right scalar multiple A*c."""
        c = self.ring.scalar(c)
        return self.map(lambda a: a * c)

    def map(self, fn: Callable[[Scalar], Scalar], ring: Optional[RingDescriptor] = None) -> Matrix:
        return Matrix(
            ring or self.ring, self.rows, self.cols,
            tuple(tuple(fn(a) for a in row) for row in self.entries),
        )

    def change_ring(self, ring: RingDescriptor) -> Matrix:
        """Entrywise image under the inclusion of self.ring into ring."""
        return self.map(ring.embed, ring)

    def transpose(self) -> Matrix:
        return Matrix(
            self.ring, self.cols, self.rows,
            tuple(tuple(self.entries[i][j] for i in range(self.rows)) for j in range(self.cols)),
        )

    def star(self) -> Matrix:
        """Involution-conjugate transpose."""
        return self.transpose().map(lambda a: a.involute())

    def hstack(self, other: Matrix) -> Matrix:
        self._check_ring(other)
        if self.rows != other.rows:
            raise ShapeMismatchError("hstack", self.shape, other.shape)
        return Matrix(
            self.ring, self.rows, self.cols + other.cols,
            tuple(r1 + r2 for r1, r2 in zip(self.entries, other.entries)),
        )

    def vstack(self, other: Matrix) -> Matrix:
        self._check_ring(other)
        if self.cols != other.cols:
            raise ShapeMismatchError("vstack", self.shape, other.shape)
        return Matrix(self.ring, self.rows + other.rows, self.cols, self.entries + other.entries)

    def kron(self, other: Matrix) -> Matrix:
        """Kronecker product; entry (i*p+k, j*q+l) is a_ij * b_kl."""
        self._check_ring(other)
        p, q = other.rows, other.cols
        out = []
        for i in range(self.rows):
            for k in range(p):
                out.append(tuple(
                    self.entries[i][j] * other.entries[k][l]
                    for j in range(self.cols) for l in range(q)
                ))
        return Matrix(self.ring, self.rows * p, self.cols * q, tuple(out))

    def determinant(self) -> Scalar:
        """Exact determinant for commutative backends."""
        if not self.is_square:
            raise ShapeMismatchError("determinant", self.shape, (self.cols, self.rows))
        if not self.ring.is_commutative:
            raise UnsupportedBackendError("determinant", self.ring)
        if self.rows == 0:
            return self.ring.one()
        if self.ring.kind is RingKind.PRIME_FIELD:
            det = sympy.Matrix(self.to_ints()).det(method="bareiss")
            return self.ring.scalar(int(det))
        det = sympy.Rational(sympy.Matrix([[_to_sympy(e) for e in row] for row in self.entries]).det(method="bareiss"))
        return self.ring.scalar(Fraction(int(det.p), int(det.q)))

    def to_ints(self) -> list[list[int]]:
        if self.ring.kind not in (RingKind.INTEGERS, RingKind.PRIME_FIELD):
            raise UnsupportedBackendError("to_ints", self.ring)
        return [[e.value for e in row] for row in self.entries]

    def to_strings(self) -> list[list[str]]:
        return [[str(e) for e in row] for row in self.entries]

    def __str__(self) -> str:
        return "[" + "; ".join(" ".join(str(e) for e in row) for row in self.entries) + "]"


def _to_sympy(e: Scalar) -> sympy.Rational:
    value = Fraction(e.value)
    return sympy.Rational(value.numerator, value.denominator)


def block_matrix(ring: RingDescriptor, blocks: Sequence[Sequence[Matrix]]) -> Matrix:
    """Assemble a matrix from a grid of blocks with compatible shapes."""
    result: Optional[Matrix] = None
    for block_row in blocks:
        strip: Optional[Matrix] = None
        for block in block_row:
            strip = block if strip is None else strip.hstack(block)
        if strip is None:
            continue
        result = strip if result is None else result.vstack(strip)
    if result is None:
        return Matrix.zeros(ring, 0, 0)
    return result


def direct_sum(a: Matrix, b: Matrix) -> Matrix:
    """Block diagonal diag(a, b)."""
    return block_matrix(a.ring, [
        [a, Matrix.zeros(a.ring, a.rows, b.cols)],
        [Matrix.zeros(a.ring, b.rows, a.cols), b],
    ])


def mat_op(op: str, a: Matrix, b: Optional[Matrix] = None) -> Matrix:
    """Dispatch one of add, mul, neg, transpose, star."""
    if op == "add":
        return a + b
    if op == "mul":
        return a @ b
    if op == "neg":
        return -a
    if op == "transpose":
        return a.transpose()
    if op == "star":
        return a.star()
    raise ValueError(f"Unknown matrix operation: {op}")


# =============================================================================
# Smith normal form over Z
# =============================================================================


@dataclass(frozen=True)
class SmithForm:
    """U * A * V = S with U, V unimodular and S diagonal, d_1 | d_2 | ..."""

    u: Matrix
    s: Matrix
    v: Matrix

    def __iter__(self) -> Iterator[Matrix]:
        return iter((self.u, self.s, self.v))

    @property
    def diagonal(self) -> list[int]:
        return [self.s.entries[i][i].value for i in range(min(self.s.rows, self.s.cols))]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d != 0)

    @property
    def invariant_factors(self) -> list[int]:
        """Nonzero diagonal entries greater than one."""
        return [d for d in self.diagonal if d > 1]


def _smallest_nonzero(s: list[list[int]], t: int) -> Optional[tuple[int, int]]:
    best = None
    for i in range(t, len(s)):
        for j in range(t, len(s[i])):
            if s[i][j] and (best is None or abs(s[i][j]) < abs(s[best[0]][best[1]])):
                best = (i, j)
    return best


def _swap_rows(s: list[list[int]], u: list[list[int]], a: int, b: int) -> None:
    if a != b:
        s[a], s[b] = s[b], s[a]
        u[a], u[b] = u[b], u[a]


def _swap_cols(s: list[list[int]], v: list[list[int]], a: int, b: int) -> None:
    if a != b:
        for mat in (s, v):
            for row in mat:
                row[a], row[b] = row[b], row[a]


def _add_row(s: list[list[int]], u: list[list[int]], src: int, dst: int, factor: int) -> None:
    for mat in (s, u):
        mat[dst] = [x + factor * y for x, y in zip(mat[dst], mat[src])]


def _add_col(s: list[list[int]], v: list[list[int]], src: int, dst: int, factor: int) -> None:
    for mat in (s, v):
        for row in mat:
            row[dst] += factor * row[src]


def smith_normal_form(a: Matrix) -> SmithForm:
    """
    Smith normal form of an integer matrix.

    Pivots are chosen as the entry of smallest absolute value, ties broken
    by lowest row-major index, so the transforms are deterministic.

    Raises:
        UnsupportedBackendError: If a is not over Z.
    """
    if a.ring.kind is not RingKind.INTEGERS:
        raise UnsupportedBackendError("smith_normal_form", a.ring)
    m, n = a.rows, a.cols
    s = a.to_ints()
    u = [[int(i == j) for j in range(m)] for i in range(m)]
    v = [[int(i == j) for j in range(n)] for i in range(n)]

    for t in range(min(m, n)):
        pivot = _smallest_nonzero(s, t)
        if pivot is None:
            break
        _swap_rows(s, u, t, pivot[0])
        _swap_cols(s, v, t, pivot[1])
        while True:
            p = s[t][t]
            for i in range(t + 1, m):
                if s[i][t]:
                    _add_row(s, u, t, i, -(s[i][t] // p))
            for j in range(t + 1, n):
                if s[t][j]:
                    _add_col(s, v, t, j, -(s[t][j] // p))

            remainder = None
            for i in range(t + 1, m):
                if s[i][t] and (remainder is None or abs(s[i][t]) < abs(remainder[2])):
                    remainder = ("row", i, s[i][t])
            for j in range(t + 1, n):
                if s[t][j] and (remainder is None or abs(s[t][j]) < abs(remainder[2])):
                    remainder = ("col", j, s[t][j])
            if remainder is not None:
                if remainder[0] == "row":
                    _swap_rows(s, u, t, remainder[1])
                else:
                    _swap_cols(s, v, t, remainder[1])
                continue

            offender = next(
                (i for i in range(t + 1, m) for j in range(t + 1, n) if s[i][j] % p),
                None,
            )
            if offender is None:
                break
            _add_row(s, u, offender, t, 1)

        if s[t][t] < 0:
            s[t] = [-x for x in s[t]]
            u[t] = [-x for x in u[t]]

    ring = a.ring
    return SmithForm(
        u=Matrix.from_rows(ring, u, cols=m),
        s=Matrix.from_rows(ring, s, cols=n),
        v=Matrix.from_rows(ring, v, cols=n),
    )


def invariant_factors(a: Matrix) -> list[int]:
    return smith_normal_form(a).invariant_factors


def integer_rank(a: Matrix) -> int:
    return smith_normal_form(a).rank


def integer_span_contains(b: Matrix, w: Matrix) -> bool:
    """True if the column w lies in the Z-span of the columns of b."""
    if b.rows != w.rows or w.cols != 1:
        raise ShapeMismatchError("span", b.shape, w.shape)
    form = smith_normal_form(b)
    y = (form.u @ w).to_ints()
    diag = form.diagonal
    for i, (value,) in enumerate(y):
        d = diag[i] if i < len(diag) else 0
        if d == 0:
            if value != 0:
                return False
        elif value % d:
            return False
    return True


def unimodular_inverse(a: Matrix) -> Matrix:
    """Inverse of an integer matrix with determinant +-1."""
    inverse = inverse_field(a.change_ring(RingDescriptor.rationals()))
    if any(e.value.denominator != 1 for row in inverse for e in row):
        raise SingularMatrixError(a.rows)
    return inverse.map(lambda e: a.ring.scalar(e.value), a.ring)


# =============================================================================
# Linear algebra over fields
# =============================================================================


@dataclass(frozen=True)
class FieldSolution:
    """A particular solution together with a basis of the kernel (as columns)."""

    solution: Matrix
    kernel: Matrix
    rank: int


def _require_field(a: Matrix, operation: str) -> None:
    if not a.ring.is_field:
        raise UnsupportedBackendError(operation, a.ring)


def _rref(rows: list[list[Scalar]], pivot_cols: int) -> list[int]:
    """In-place reduced row echelon form, pivoting only in the first pivot_cols columns."""
    pivots: list[int] = []
    r = 0
    for c in range(pivot_cols):
        if r >= len(rows):
            break
        pivot_row = next((i for i in range(r, len(rows)) if not rows[i][c].is_zero()), None)
        if pivot_row is None:
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        inv = rows[r][c].invert()
        rows[r] = [inv * x for x in rows[r]]
        for i in range(len(rows)):
            if i != r and not rows[i][c].is_zero():
                factor = rows[i][c]
                rows[i] = [x - factor * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    return pivots


def row_reduce(a: Matrix) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and pivot columns."""
    _require_field(a, "row_reduce")
    rows = [list(row) for row in a.entries]
    pivots = _rref(rows, a.cols)
    return Matrix.from_rows(a.ring, rows, cols=a.cols), pivots


def field_rank(a: Matrix) -> int:
    return len(row_reduce(a)[1])


def kernel_basis(a: Matrix) -> Matrix:
    """Columns spanning {x : a x = 0}."""
    reduced, pivots = row_reduce(a)
    ring = a.ring
    free = [c for c in range(a.cols) if c not in pivots]
    columns = []
    for f in free:
        x = [ring.zero()] * a.cols
        x[f] = ring.one()
        for r, pc in enumerate(pivots):
            x[pc] = -reduced.entries[r][f]
        columns.append(x)
    if not columns:
        return Matrix.zeros(ring, a.cols, 0)
    return Matrix.from_rows(ring, columns, cols=a.cols).transpose()


def solve_field(a: Matrix, b: Matrix) -> FieldSolution:
    """
    Solve a x = b over a field.

    Returns:
        FieldSolution with one particular solution (free variables set to zero),
        a kernel basis and the rank of a.

    Raises:
        NoSolutionError: If the system is inconsistent.
    """
    _require_field(a, "solve_field")
    if a.rows != b.rows:
        raise ShapeMismatchError("solve", a.shape, b.shape)
    rows = [list(r1) + list(r2) for r1, r2 in zip(a.entries, b.entries)]
    pivots = _rref(rows, a.cols)
    for row in rows[len(pivots):]:
        if any(not x.is_zero() for x in row[a.cols:]):
            raise NoSolutionError(a.rows, a.cols)
    ring = a.ring
    solution = [[ring.zero()] * b.cols for _ in range(a.cols)]
    for r, pc in enumerate(pivots):
        solution[pc] = list(rows[r][a.cols:])
    return FieldSolution(
        solution=Matrix.from_rows(ring, solution, cols=b.cols),
        kernel=kernel_basis(a),
        rank=len(pivots),
    )


def inverse_field(a: Matrix) -> Matrix:
    """Inverse of a square matrix over a field."""
    _require_field(a, "inverse")
    if not a.is_square:
        raise ShapeMismatchError("inverse", a.shape, (a.cols, a.rows))
    try:
        result = solve_field(a, Matrix.identity(a.ring, a.rows))
    except NoSolutionError:
        raise SingularMatrixError(a.rows)
    if result.rank != a.rows:
        raise SingularMatrixError(a.rows)
    return result.solution
