"""Truncated bosonic operator algebra.

Tensor ordering follows the `ModeLayout` list order with the first mode as the
slowest-varying index, so a basis state (n_1, ..., n_k) sits at the row-major
index of that tuple in the grid of mode dimensions.
"""

from dataclasses import dataclass
import logging
from typing import ClassVar, Iterable, Mapping, Sequence
import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply
from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    MissingMode,
    NonHermitian,
    TruncationTooSmall,
    UnknownMode,
)

logger = logging.getLogger(__name__)

SPARSE_FILL_RATIO = 0.05
HERMITIAN_RTOL = 1e-12
NORM_TOL = 1e-9
EVOLVE_ACCURACY = 1e-10


@dataclass(frozen=True)
class ModeLayout:
    """Ordered labeled truncated modes, e.g. `ModeLayout.of(("a1", 5), ("b1", 40))`."""

    modes: tuple[tuple[str, int], ...]
    max_total_dim: int = 2**20

    MAX_TOTAL_DIM: ClassVar[int] = 2**20

    def __post_init__(self):
        labels = [label for label, _ in self.modes]
        if len(set(labels)) != len(labels):
            raise ValueError(f"mode labels must be unique, got {labels}")
        for label, dim in self.modes:
            if int(dim) != dim or dim < 2:
                raise ValueError(f"mode '{label}' needs an integer dimension >= 2, got {dim}")
        if self.total_dim > self.max_total_dim:
            raise DimensionMismatch(
                f"layout dimension {self.total_dim} exceeds the maximum {self.max_total_dim}"
            )

    @classmethod
    def of(cls, *modes: tuple[str, int], max_total_dim: int = MAX_TOTAL_DIM) -> "ModeLayout":
        return cls(tuple((str(label), int(dim)) for label, dim in modes), max_total_dim)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.modes)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.modes)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownMode(f"mode '{label}' not in layout {self.labels}") from None

    def dim(self, label: str) -> int:
        return self.dims[self.index(label)]

    def require(self, *labels: str) -> None:
        missing = [label for label in labels if label not in self]
        if missing:
            raise MissingMode(f"layout {self.labels} lacks required modes {missing}")

    def padded(self, labels: Iterable[str], extra: int = 2) -> "ModeLayout":
        """Same layout with `extra` more levels on each of `labels`."""
        labels = set(labels)
        modes = tuple(
            (label, dim + extra if label in labels else dim) for label, dim in self.modes
        )
        return ModeLayout(modes, self.max_total_dim)

    def without(self, labels: Iterable[str]) -> "ModeLayout":
        labels = set(labels)
        return ModeLayout(
            tuple(mode for mode in self.modes if mode[0] not in labels), self.max_total_dim
        )


def _as_matrix(matrix):
    if sp.issparse(matrix):
        return sp.csr_matrix(matrix, dtype=complex)
    return np.asarray(matrix, dtype=complex)


def _nnz(matrix) -> int:
    if sp.issparse(matrix):
        matrix = matrix.copy()
        matrix.eliminate_zeros()
        return matrix.nnz
    return int(np.count_nonzero(matrix))


class FockOperator:
    """A complex square matrix acting on a `ModeLayout`.

    Storage is chosen by fill ratio unless forced with `storage="dense"` or
    `storage="sparse"`. With `hermitian=True` the Hermiticity defect is
    checked at construction.
    """

    # numpy scalars defer to __rmul__ instead of broadcasting over the operator
    __array_ufunc__ = None

    def __init__(self, layout: ModeLayout, matrix, storage: str = "auto", hermitian=False):
        matrix = _as_matrix(matrix)
        n = layout.total_dim
        if matrix.shape != (n, n):
            raise DimensionMismatch(
                f"matrix shape {matrix.shape} does not match layout dimension {n}"
            )
        if storage == "auto":
            storage = "sparse" if _nnz(matrix) < SPARSE_FILL_RATIO * n * n else "dense"
        if storage == "sparse":
            matrix = sp.csr_matrix(matrix)
            matrix.eliminate_zeros()
        elif storage == "dense":
            matrix = matrix.toarray() if sp.issparse(matrix) else matrix
        else:
            raise ValueError(f"unknown storage '{storage}'")

        self.layout = layout
        self.matrix = matrix
        self.storage = storage

        if hermitian:
            defect = self.hermiticity_defect()
            if defect > HERMITIAN_RTOL:
                raise NonHermitian(f"operator is not Hermitian: relative defect {defect:.3g}")

    def __repr__(self):
        return f"FockOperator({self.layout.modes}, storage={self.storage})"

    @property
    def is_sparse(self) -> bool:
        return self.storage == "sparse"

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else self.matrix.copy()

    def tocsr(self) -> sp.csr_matrix:
        return self.matrix if self.is_sparse else sp.csr_matrix(self.matrix)

    def _check_layout(self, other: "FockOperator"):
        if self.layout.modes != other.layout.modes:
            raise DimensionMismatch(
                f"operator layouts differ: {self.layout.modes} vs {other.layout.modes}"
            )

    def _binary(self, other: "FockOperator", op) -> "FockOperator":
        self._check_layout(other)
        if self.is_sparse and other.is_sparse:
            return FockOperator(self.layout, op(self.matrix, other.matrix))
        return FockOperator(self.layout, op(self.toarray(), other.toarray()))

    def __add__(self, other):
        if isinstance(other, FockOperator):
            return self._binary(other, lambda a, b: a + b)
        return self + other * identity(self.layout)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, FockOperator):
            return self._binary(other, lambda a, b: a - b)
        return self - other * identity(self.layout)

    def __rsub__(self, other):
        return -self + other

    def __neg__(self):
        return FockOperator(self.layout, -self.matrix)

    def __mul__(self, scalar):
        if isinstance(scalar, FockOperator):
            return NotImplemented
        return FockOperator(self.layout, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return FockOperator(self.layout, self.matrix / complex(scalar))

    def __matmul__(self, other: "FockOperator") -> "FockOperator":
        return self._binary(other, lambda a, b: a @ b)

    def dag(self) -> "FockOperator":
        return FockOperator(self.layout, self.matrix.conj().T)

    def commutator(self, other: "FockOperator") -> "FockOperator":
        return self @ other - other @ self

    def max_abs(self) -> float:
        if self.is_sparse:
            return float(abs(self.matrix).max()) if self.matrix.nnz else 0.0
        return float(np.abs(self.matrix).max()) if self.matrix.size else 0.0

    def hermiticity_defect(self) -> float:
        """max|M − M†| relative to max|M| (0 for the zero operator)."""
        scale = self.max_abs()
        if scale == 0.0:
            return 0.0
        return (self - self.dag()).max_abs() / scale

    def is_diagonal(self) -> bool:
        if self.is_sparse:
            coo = self.matrix.tocoo()
            return bool(np.all(coo.row == coo.col))
        return np.count_nonzero(self.matrix - np.diag(np.diag(self.matrix))) == 0

    def diagonal(self) -> np.ndarray:
        return np.asarray(self.matrix.diagonal())

    def _submatrix(self, indices: np.ndarray, layout: ModeLayout) -> "FockOperator":
        if self.is_sparse:
            return FockOperator(layout, self.matrix[indices][:, indices])
        return FockOperator(layout, self.matrix[np.ix_(indices, indices)])

    def restrict(self, layout: ModeLayout) -> "FockOperator":
        """Project onto a layout with the same labels and smaller or equal dimensions."""
        if layout.labels != self.layout.labels or any(
            new > old for new, old in zip(layout.dims, self.layout.dims)
        ):
            raise DimensionMismatch(
                f"cannot restrict {self.layout.modes} to {layout.modes}"
            )
        grid = np.indices(layout.dims).reshape(len(layout.dims), -1)
        indices = np.ravel_multi_index(grid, self.layout.dims)
        return self._submatrix(indices, layout)

    def sector(self, fixed: Mapping[str, int]) -> "FockOperator":
        """Block at fixed occupation of the given modes, acting on the remaining ones."""
        rest = self.layout.without(fixed)
        grid = list(np.indices(rest.dims).reshape(len(rest.dims), -1))
        full = []
        for label, dim in self.layout.modes:
            if label in fixed:
                n = int(fixed[label])
                if not 0 <= n < dim:
                    raise DimensionMismatch(f"occupation {n} outside mode '{label}' (dim {dim})")
                full.append(np.full(rest.total_dim, n))
            else:
                full.append(grid.pop(0))
        indices = np.ravel_multi_index(full, self.layout.dims)
        return self._submatrix(indices, rest)

    def embed(self, target: ModeLayout) -> "FockOperator":
        """Extend to `target` by tensoring with identities; the own layout must be a prefix."""
        k = len(self.layout.modes)
        if target.modes[:k] != self.layout.modes:
            raise DimensionMismatch(
                f"layout {self.layout.modes} is not a prefix of {target.modes}"
            )
        rest = int(np.prod(target.dims[k:], dtype=np.int64))
        return FockOperator(
            target, sp.kron(self.tocsr(), sp.identity(rest, dtype=complex), format="csr")
        )

    def apply(self, state: "StateVector") -> np.ndarray:
        if state.layout.modes != self.layout.modes:
            raise DimensionMismatch("state and operator layouts differ")
        return np.asarray(self.matrix @ state.amplitudes).ravel()

    def expect(self, state: "StateVector") -> complex:
        return complex(np.vdot(state.amplitudes, self.apply(state)))

    def allclose(self, other: "FockOperator", atol: float = 1e-12) -> bool:
        self._check_layout(other)
        return (self - other).max_abs() <= atol

    def to_triplets(self) -> str:
        """Non-zero entries as `row col re im` lines."""
        coo = self.tocsr().tocoo()
        order = np.lexsort((coo.col, coo.row))
        return "\n".join(
            f"{coo.row[i]} {coo.col[i]} {coo.data[i].real:.17g} {coo.data[i].imag:.17g}"
            for i in order
        )


class StateVector:
    """Normalized state on a `ModeLayout`."""

    def __init__(self, layout: ModeLayout, amplitudes, normalize: bool = False):
        amplitudes = np.asarray(amplitudes, dtype=complex).ravel()
        if amplitudes.shape != (layout.total_dim,):
            raise DimensionMismatch(
                f"state of size {amplitudes.size} does not match layout dimension {layout.total_dim}"
            )
        norm = np.linalg.norm(amplitudes)
        if normalize:
            if norm == 0:
                raise ValueError("cannot normalize the zero vector")
            amplitudes = amplitudes / norm
        elif abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm:.12g} outside 1 ± {NORM_TOL:g}")
        self.layout = layout
        self.amplitudes = amplitudes

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        """⟨self|other⟩."""
        if other.layout.modes != self.layout.modes:
            raise DimensionMismatch("state layouts differ")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return abs(self.overlap(other)) ** 2

    def expect(self, op: FockOperator) -> complex:
        return op.expect(self)

    def reduced_density_matrix(self, labels: Sequence[str]) -> np.ndarray:
        """Partial trace over every mode not in `labels` (kept in the given order)."""
        keep = [self.layout.index(label) for label in labels]
        rest = [i for i in range(len(self.layout.dims)) if i not in keep]
        psi = self.amplitudes.reshape(self.layout.dims).transpose(keep + rest)
        kept_dim = int(np.prod([self.layout.dims[i] for i in keep], dtype=np.int64))
        psi = psi.reshape(kept_dim, -1)
        return psi @ psi.conj().T

    def number_distribution(self, label: str) -> np.ndarray:
        return np.clip(np.real(np.diag(self.reduced_density_matrix([label]))), 0.0, None)

    def tensor(self, other: "StateVector") -> "StateVector":
        layout = ModeLayout(self.layout.modes + other.layout.modes, self.layout.max_total_dim)
        return StateVector(layout, np.kron(self.amplitudes, other.amplitudes), normalize=True)


def _single_mode(layout: ModeLayout, label: str, local) -> FockOperator:
    position = layout.index(label)
    before = int(np.prod(layout.dims[:position], dtype=np.int64))
    after = int(np.prod(layout.dims[position + 1 :], dtype=np.int64))
    matrix = sp.kron(
        sp.kron(sp.identity(before, dtype=complex), local, format="csr"),
        sp.identity(after, dtype=complex),
        format="csr",
    )
    return FockOperator(layout, matrix)


def annihilator(layout: ModeLayout, label: str) -> FockOperator:
    dim = layout.dim(label)
    local = sp.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1, format="csr")
    return _single_mode(layout, label, local)


def creator(layout: ModeLayout, label: str) -> FockOperator:
    return annihilator(layout, label).dag()


def number_op(layout: ModeLayout, label: str) -> FockOperator:
    dim = layout.dim(label)
    return _single_mode(layout, label, sp.diags(np.arange(dim, dtype=float), 0, format="csr"))


def identity(layout: ModeLayout) -> FockOperator:
    return FockOperator(layout, sp.identity(layout.total_dim, dtype=complex, format="csr"))


def position_op(
    layout: ModeLayout, label: str, mass: float = 1.0, omega_m: float = 1.0, hbar: float = 1.0
) -> FockOperator:
    """x = sqrt(ħ/(2mω))(b† + b)."""
    a = annihilator(layout, label)
    return np.sqrt(hbar / (2.0 * mass * omega_m)) * (a.dag() + a)


def momentum_op(
    layout: ModeLayout, label: str, mass: float = 1.0, omega_m: float = 1.0, hbar: float = 1.0
) -> FockOperator:
    """p = i·sqrt(ħmω/2)(b† − b)."""
    a = annihilator(layout, label)
    return 1j * np.sqrt(hbar * mass * omega_m / 2.0) * (a.dag() - a)


def basis_state(layout: ModeLayout, occupations: Mapping[str, int] | None = None) -> StateVector:
    occupations = occupations or {}
    for label in occupations:
        layout.index(label)
    index = tuple(int(occupations.get(label, 0)) for label in layout.labels)
    if any(n >= dim or n < 0 for n, dim in zip(index, layout.dims)):
        raise DimensionMismatch(f"occupation {index} outside layout dims {layout.dims}")
    amplitudes = np.zeros(layout.total_dim, dtype=complex)
    amplitudes[np.ravel_multi_index(index, layout.dims)] = 1.0
    return StateVector(layout, amplitudes)


def product_state(layout: ModeLayout, factors: Mapping[str, np.ndarray]) -> StateVector:
    """Tensor product of single-mode amplitude vectors; unnamed modes are in vacuum."""
    for label in factors:
        layout.index(label)
    amplitudes = np.ones(1, dtype=complex)
    for label, dim in layout.modes:
        if label in factors:
            factor = np.asarray(factors[label], dtype=complex)
            if factor.shape != (dim,):
                raise DimensionMismatch(
                    f"factor for mode '{label}' has size {factor.size}, expected {dim}"
                )
        else:
            factor = np.zeros(dim, dtype=complex)
            factor[0] = 1.0
        amplitudes = np.kron(amplitudes, factor)
    return StateVector(layout, amplitudes, normalize=True)


def required_dim(alpha: complex) -> int:
    """Smallest Fock dimension passing the coherent-state truncation rule."""
    a = abs(alpha)
    return int(np.ceil(a**2 + 6.0 * a + 10.0))


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """c_n = exp(−|α|²/2)·αⁿ/sqrt(n!), renormalized over n < dim.

    Raises:
        TruncationTooSmall: if dim < |α|² + 6|α| + 10.
    """
    if dim < abs(alpha) ** 2 + 6.0 * abs(alpha) + 10.0:
        raise TruncationTooSmall(
            f"coherent amplitude |α| = {abs(alpha):g} needs dim >= {required_dim(alpha)}, got {dim}"
        )
    c = np.empty(dim, dtype=complex)
    c[0] = np.exp(-abs(alpha) ** 2 / 2.0)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / np.sqrt(n)
    return c / np.linalg.norm(c)


def coherent_state(layout: ModeLayout, label: str, alpha: complex) -> StateVector:
    return product_state(layout, {label: coherent_amplitudes(alpha, layout.dim(label))})


def interior_indices(
    layout: ModeLayout, margin: int = 1, labels: Iterable[str] | None = None
) -> np.ndarray:
    """Basis indices whose occupation of each mode (or of `labels`) is below dim − margin."""
    labels = set(layout.labels if labels is None else labels)
    grid = np.indices(layout.dims).reshape(len(layout.dims), -1)
    mask = np.ones(layout.total_dim, dtype=bool)
    for i, (label, dim) in enumerate(layout.modes):
        if label in labels:
            mask &= grid[i] < dim - margin
    return np.flatnonzero(mask)


def evolve(
    H: FockOperator, psi: StateVector, T: float, accuracy: float = EVOLVE_ACCURACY
) -> StateVector:
    """exp(−iHT)·psi with ħ = 1.

    Diagonal operators are applied as exact phases, dense ones through their
    eigendecomposition and sparse ones with `expm_multiply`.

    Raises:
        DimensionMismatch: if the layouts differ.
        NonHermitian: if H is not Hermitian.
        ConvergenceFailure: if the output norm drifts beyond `accuracy`.
    """
    if H.layout.modes != psi.layout.modes:
        raise DimensionMismatch(
            f"Hamiltonian layout {H.layout.modes} does not match state layout {psi.layout.modes}"
        )
    defect = H.hermiticity_defect()
    if defect > HERMITIAN_RTOL:
        raise NonHermitian(f"cannot evolve under a non-Hermitian operator (defect {defect:.3g})")
    if T == 0:
        return StateVector(psi.layout, psi.amplitudes.copy())

    if H.is_diagonal():
        method = "diagonal"
        out = np.exp(-1j * T * H.diagonal().real) * psi.amplitudes
    elif not H.is_sparse:
        method = "eigh"
        w, v = scipy.linalg.eigh(H.matrix)
        out = v @ (np.exp(-1j * T * w) * (v.conj().T @ psi.amplitudes))
    else:
        method = "expm_multiply"
        out = expm_multiply(-1j * T * H.matrix, psi.amplitudes)

    norm_defect = abs(np.linalg.norm(out) - 1.0)
    logger.debug("evolve[%s] dim=%d T=%g norm defect=%.2e", method, H.layout.total_dim, T, norm_defect)
    if norm_defect > accuracy:
        raise ConvergenceFailure(
            f"time evolution ({method}) lost unitarity: norm defect {norm_defect:.3g}"
        )
    return StateVector(psi.layout, out)
