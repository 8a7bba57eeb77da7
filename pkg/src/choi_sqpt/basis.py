"""Operator bases and pure-state expansions.

Provides the matrix-unit basis |a><b|, the four-pure-state expansion of an
off-diagonal matrix unit, expansions of arbitrary operators over
user-supplied state projectors or Hermitian operator sets, the SU(d)
generator basis (identity plus generalized Gell-Mann matrices), and the
unitary change of basis between matrix-unit and Pauli process matrices for
qubit systems.

Expansion objects verify on construction that they reproduce their target,
so a successfully built expansion is already a checked identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.linalg import LinAlgError

__all__ = [
    "HermitianBasis",
    "HermitianExpansion",
    "PureStateExpansion",
    "basis_state",
    "choi_basis",
    "choi_op",
    "chi_choi_to_pauli",
    "chi_pauli_to_choi",
    "expand_choi_four",
    "expand_in_hermitian_basis",
    "expand_operator_in_states",
    "pauli_basis",
    "pauli_choi_unitary",
    "sud_generators",
    "superposition_states",
]

# expansion solves refuse systems worse conditioned than this
COND_CAP = 1e8


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    out.setflags(write=False)
    return out


def basis_state(a: int, dim: int) -> np.ndarray:
    """Computational basis ket |a>."""
    if not 0 <= a < dim:
        raise ValueError(f"level index {a} out of range for dimension {dim}")
    vec = np.zeros(dim, dtype=complex)
    vec[a] = 1.0
    return vec


def choi_op(a: int, b: int, dim: int) -> np.ndarray:
    """Matrix unit |a><b|.

    The set of all D^2 matrix units is orthonormal under the
    Hilbert-Schmidt inner product Tr[A^dagger B].
    """
    if not (0 <= a < dim and 0 <= b < dim):
        raise ValueError(f"indices ({a}, {b}) out of range for dimension {dim}")
    m = np.zeros((dim, dim), dtype=complex)
    m[a, b] = 1.0
    return m


def choi_basis(dim: int) -> list[np.ndarray]:
    """All matrix units in flat order (index a*dim + b)."""
    return [choi_op(a, b, dim) for a in range(dim) for b in range(dim)]


def superposition_states(a: int, b: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """The two superposition kets (|a>+|b>)/sqrt2 and (|a>+i|b>)/sqrt2 for a < b."""
    if not 0 <= a < b < dim:
        raise ValueError(
            f"superposition states need 0 <= a < b < dim, got a={a}, b={b}, dim={dim}"
        )
    plus = (basis_state(a, dim) + basis_state(b, dim)) / np.sqrt(2)
    minus = (basis_state(a, dim) + 1j * basis_state(b, dim)) / np.sqrt(2)
    return plus, minus


@dataclass(frozen=True, eq=False)
class PureStateExpansion:
    """target = sum_i weights[i] * |states[i]><states[i]|, verified on construction."""

    weights: tuple[complex, ...]
    states: tuple[np.ndarray, ...]
    target: np.ndarray
    atol: float = 1e-12

    def __post_init__(self):
        if len(self.weights) != len(self.states):
            raise ValueError("weights and states must pair up")
        states = tuple(_frozen(np.asarray(s, dtype=complex)) for s in self.states)
        for s in states:
            if abs(np.linalg.norm(s) - 1.0) > 1e-12:
                raise ValueError("expansion states must be unit vectors")
        object.__setattr__(self, "weights", tuple(complex(w) for w in self.weights))
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "target", _frozen(self.target))
        residual = np.max(np.abs(self.reconstruct() - self.target))
        if residual > self.atol:
            raise ValueError(
                f"expansion does not reproduce its target (residual {residual:.3e})"
            )

    def reconstruct(self) -> np.ndarray:
        dim = self.states[0].shape[0]
        out = np.zeros((dim, dim), dtype=complex)
        for w, s in zip(self.weights, self.states):
            out += w * np.outer(s, s.conj())
        return out


@dataclass(frozen=True, eq=False)
class HermitianExpansion:
    """target = sum_n weights[n] * operators[n] with Hermitian operators."""

    weights: tuple[complex, ...]
    operators: tuple[np.ndarray, ...]
    target: np.ndarray
    atol: float = 1e-12

    def __post_init__(self):
        if len(self.weights) != len(self.operators):
            raise ValueError("weights and operators must pair up")
        ops = tuple(_frozen(np.asarray(o, dtype=complex)) for o in self.operators)
        for o in ops:
            if np.max(np.abs(o - o.conj().T)) > 1e-12:
                raise ValueError("expansion operators must be Hermitian")
        object.__setattr__(self, "weights", tuple(complex(w) for w in self.weights))
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "target", _frozen(self.target))
        residual = np.max(np.abs(self.reconstruct() - self.target))
        if residual > self.atol:
            raise ValueError(
                f"expansion does not reproduce its target (residual {residual:.3e})"
            )

    def reconstruct(self) -> np.ndarray:
        out = np.zeros_like(self.operators[0])
        for w, o in zip(self.weights, self.operators):
            out = out + w * o
        return out


def expand_choi_four(a: int, b: int, dim: int) -> PureStateExpansion:
    """Expand the matrix unit |a><b| over at most four pure-state projectors.

    For a < b the expansion is
        |ab,+><ab,+| + i |ab,-><ab,-| - (1+i)/2 (|a><a| + |b><b|)
    with |ab,+> = (|a>+|b>)/sqrt2 and |ab,-> = (|a>+i|b>)/sqrt2; for a > b
    the weights are the conjugates of the (b, a) expansion on the same four
    states; a diagonal unit is the single projector |a><a|.
    """
    target = choi_op(a, b, dim)
    if a == b:
        return PureStateExpansion((1.0,), (basis_state(a, dim),), target)
    if a < b:
        plus, minus = superposition_states(a, b, dim)
        weights = (1.0, 1.0j, -(1.0 + 1.0j) / 2, -(1.0 + 1.0j) / 2)
        states = (plus, minus, basis_state(a, dim), basis_state(b, dim))
    else:
        plus, minus = superposition_states(b, a, dim)
        weights = (1.0, -1.0j, -(1.0 - 1.0j) / 2, -(1.0 - 1.0j) / 2)
        states = (plus, minus, basis_state(b, dim), basis_state(a, dim))
    return PureStateExpansion(weights, states, target)


def _solve_expansion(columns: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    cond = np.linalg.cond(columns)
    if not np.isfinite(cond) or cond > COND_CAP:
        raise LinAlgError(
            f"{what} are linearly dependent or too ill-conditioned "
            f"(cond={cond:.3e}, cap={COND_CAP:.0e})"
        )
    return np.linalg.solve(columns, rhs)


def expand_operator_in_states(target: np.ndarray, states) -> PureStateExpansion:
    """Solve target = sum_m r_m |psi_m><psi_m| for the weights r_m.

    Needs exactly D^2 states whose projectors are linearly independent as
    operators (independence of the kets alone is not enough).
    """
    target = np.asarray(target, dtype=complex)
    dim = target.shape[0]
    if target.shape != (dim, dim):
        raise ValueError("target must be a square matrix")
    states = [np.asarray(s, dtype=complex) for s in states]
    if len(states) != dim * dim:
        raise ValueError(f"need exactly {dim * dim} states, got {len(states)}")
    columns = np.stack([np.outer(s, s.conj()).reshape(-1) for s in states], axis=1)
    weights = _solve_expansion(columns, target.reshape(-1), "state projectors")
    return PureStateExpansion(tuple(weights), tuple(states), target, atol=1e-10)


@dataclass(frozen=True, eq=False)
class HermitianBasis:
    """D^2 linearly independent Hermitian operators on a D-level system."""

    dim: int
    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.operators) != self.dim * self.dim:
            raise ValueError(
                f"a Hermitian basis at dimension {self.dim} needs "
                f"{self.dim**2} operators, got {len(self.operators)}"
            )
        ops = []
        for o in self.operators:
            arr = np.asarray(o, dtype=complex)
            if arr.shape != (self.dim, self.dim):
                raise ValueError("basis operators must be D x D")
            if np.max(np.abs(arr - arr.conj().T)) > 1e-12:
                raise ValueError("basis operators must be Hermitian")
            ops.append(_frozen(arr))
        object.__setattr__(self, "operators", tuple(ops))
        gram = self.gram()
        if np.linalg.matrix_rank(gram) < self.dim * self.dim:
            raise LinAlgError("Hermitian basis Gram matrix is singular")

    def gram(self) -> np.ndarray:
        flat = np.stack([o.reshape(-1) for o in self.operators])
        return (flat @ flat.conj().T).real


def expand_in_hermitian_basis(target: np.ndarray, basis: HermitianBasis) -> HermitianExpansion:
    """Solve target = sum_n s_n O_n over a Hermitian operator basis.

    The weights are real exactly when the target is Hermitian.
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (basis.dim, basis.dim):
        raise ValueError(
            f"target has shape {target.shape}, basis dimension is {basis.dim}"
        )
    columns = np.stack([o.reshape(-1) for o in basis.operators], axis=1)
    weights = _solve_expansion(columns, target.reshape(-1), "basis operators")
    return HermitianExpansion(tuple(weights), basis.operators, target, atol=1e-10)


def sud_generators(d: int) -> HermitianBasis:
    """Identity plus the d^2 - 1 generalized Gell-Mann matrices.

    Ordering: identity, symmetric pairs (j < k row-major), antisymmetric
    pairs, then the diagonal family; non-identity generators satisfy
    Tr[G_i G_j] = 2 delta_ij.  At d=2 this is exactly (I, sx, sy, sz).
    """
    if d < 2:
        raise ValueError("SU(d) generators need d >= 2")
    ops = [np.eye(d, dtype=complex)]
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1.0
            ops.append(m)
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1.0j
            m[k, j] = 1.0j
            ops.append(m)
    for l in range(1, d):
        diag = np.zeros(d, dtype=complex)
        diag[:l] = 1.0
        diag[l] = -l
        ops.append(np.sqrt(2.0 / (l * (l + 1))) * np.diag(diag))
    return HermitianBasis(d, tuple(ops))


def pauli_basis(n_qubits: int) -> list[np.ndarray]:
    """Tensor products of (I, sx, sy, sz), first site most significant."""
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    single = sud_generators(2).operators
    ops = list(single)
    for _ in range(n_qubits - 1):
        ops = [np.kron(a, s) for a in ops for s in single]
    return ops


# --- matrix-unit <-> Pauli process-matrix conversion -------------------------

_U_SINGLE = np.array(
    [
        [1, 0, 0, 1],
        [0, 1, 1, 0],
        [0, -1j, 1j, 0],
        [1, 0, 0, -1],
    ],
    dtype=complex,
) / np.sqrt(2)


def pauli_choi_unitary(n_qubits: int) -> np.ndarray:
    """Unitary mapping sqrt(2)-scaled matrix units to the Pauli operators.

    The single-qubit block sends (sqrt2 |a><b|) for ab = 00, 01, 10, 11 to
    (I, sx, sy, sz); N qubits use its N-fold tensor power.
    """
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    u = _U_SINGLE
    for _ in range(n_qubits - 1):
        u = np.kron(u, _U_SINGLE)
    return u


def _site_major_unit_order(n_qubits: int) -> np.ndarray:
    """perm[j] = global flat index a*D+b of the j-th site-major matrix unit.

    Site-major: j runs over per-site index pairs (a_k, b_k) encoded base 4
    with the first site most significant, matching the tensor-product order
    of pauli_choi_unitary; the global order interleaves all a digits before
    all b digits instead.
    """
    big_d = 2**n_qubits
    perm = np.empty(big_d * big_d, dtype=np.intp)
    for j in range(big_d * big_d):
        a = b = 0
        for k in range(n_qubits):
            c = (j >> (2 * (n_qubits - 1 - k))) & 3
            a = (a << 1) | (c >> 1)
            b = (b << 1) | (c & 1)
        perm[j] = a * big_d + b
    return perm


def _check_chi_shape(chi: np.ndarray, n_qubits: int) -> np.ndarray:
    chi = np.asarray(chi, dtype=complex)
    side = 4**n_qubits
    if chi.shape != (side, side):
        raise ValueError(
            f"process matrix for {n_qubits} qubit(s) must be {side} x {side}, "
            f"got {chi.shape}"
        )
    return chi


def chi_choi_to_pauli(chi_c: np.ndarray, n_qubits: int) -> np.ndarray:
    """Re-express a matrix-unit process matrix over tensor-Pauli operators.

    The output, used as coefficients over pauli_basis(n_qubits), reproduces
    the same channel action as the input over the matrix units.  Index
    order of the result is (I, sx, sy, sz) per site, first site most
    significant.
    """
    chi_c = _check_chi_shape(chi_c, n_qubits)
    perm = _site_major_unit_order(n_qubits)
    # rebase onto site-major sqrt(2)-scaled units, then rotate into Paulis
    chi_site = chi_c[np.ix_(perm, perm)] / 2**n_qubits
    u = pauli_choi_unitary(n_qubits)
    return u.conj() @ chi_site @ u.T


def chi_pauli_to_choi(chi_p: np.ndarray, n_qubits: int) -> np.ndarray:
    """Inverse of chi_choi_to_pauli."""
    chi_p = _check_chi_shape(chi_p, n_qubits)
    u = pauli_choi_unitary(n_qubits)
    chi_site = u.T @ chi_p @ u.conj()
    perm = _site_major_unit_order(n_qubits)
    side = 4**n_qubits
    chi_c = np.empty((side, side), dtype=complex)
    chi_c[np.ix_(perm, perm)] = chi_site * 2**n_qubits
    return chi_c
