"""Dense linear algebra and state primitives for small spin registers.

Everything is a plain complex ``numpy`` array. Basis states are ordered
big-endian: qubit 1 is the most significant bit, so for three qubits the
ordering is 000, 001, ..., 111. Qubit indices in the public API are 1-based.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

ATOL = 1e-12
EIG_ATOL = 1e-10
MAX_QUBITS = 4


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


I2 = _frozen(np.eye(2))
SX = _frozen([[0, 1], [1, 0]])
SY = _frozen([[0, -1j], [1j, 0]])
SZ = _frozen([[1, 0], [0, -1]])
HADAMARD = _frozen(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
PAULIS = {"I": I2, "X": SX, "Y": SY, "Z": SZ}

KET0 = _frozen([1, 0])
KET1 = _frozen([0, 1])
PHI_PLUS = _frozen(np.array([1, 0, 0, 1]) / np.sqrt(2))


def kron(*mats) -> np.ndarray:
    """Kronecker product of any number of matrices or vectors, left to right."""
    if not mats:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, (np.asarray(m, dtype=complex) for m in mats))


def n_qubits_of(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if dim < 2 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    if n > MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit cap")
    return n


def embed(op, qubit: int, n: int) -> np.ndarray:
    """Place a single-qubit operator on ``qubit`` (1-based) of an n-qubit register."""
    if not 1 <= qubit <= n:
        raise ValueError(f"qubit {qubit} out of range 1..{n}")
    return kron(*[op if k == qubit else I2 for k in range(1, n + 1)])


def spin_ops(n: int):
    """Return lists (Ix, Iy, Iz) of spin-1/2 operators, index 0 = spin 1."""
    ix = [embed(SX / 2, k, n) for k in range(1, n + 1)]
    iy = [embed(SY / 2, k, n) for k in range(1, n + 1)]
    iz = [embed(SZ / 2, k, n) for k in range(1, n + 1)]
    return ix, iy, iz


def bit(index: int, qubit: int, n: int) -> int:
    """Value of ``qubit`` (1-based, MSB first) in basis index ``index``."""
    return (index >> (n - qubit)) & 1


def basis_labels(n: int) -> list[str]:
    return [format(i, f"0{n}b") for i in range(2**n)]


def ket(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v


def projector(state) -> np.ndarray:
    v = np.asarray(state, dtype=complex)
    return np.outer(v, v.conj())


def is_unitary(u, tol: float = ATOL) -> bool:
    u = np.asarray(u)
    return u.shape[0] == u.shape[1] and np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() < tol


def check_state(psi, tol: float = ATOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("state vector must be one-dimensional")
    n_qubits_of(psi.size)
    norm = np.vdot(psi, psi).real
    if abs(norm - 1) > tol:
        raise ValueError(f"state not normalized (norm^2 = {norm!r})")
    return psi


def check_density(rho, tol: float = ATOL, eig_tol: float = EIG_ATOL) -> np.ndarray:
    """Validate a density matrix: square 2^n, Hermitian, unit trace, PSD."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    n_qubits_of(rho.shape[0])
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"density matrix trace is {np.trace(rho)!r}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -eig_tol:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def partial_trace(rho, keep) -> np.ndarray:
    """Reduced density matrix on the qubits in ``keep`` (1-based).

    Kept qubits stay in their original relative order.
    """
    rho = np.asarray(rho, dtype=complex)
    n = n_qubits_of(rho.shape[0])
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep set is empty")
    if keep[0] < 1 or keep[-1] > n:
        raise ValueError(f"keep set {keep} out of range 1..{n}")
    traced = [q - 1 for q in range(1, n + 1) if q not in keep]
    t = rho.reshape([2] * (2 * n))
    # trace out from the highest axis down so earlier axis numbers stay valid
    for m, ax in enumerate(sorted(traced, reverse=True)):
        cur = n - m
        t = np.trace(t, axis1=ax, axis2=ax + cur)
    d = 2 ** len(keep)
    return t.reshape(d, d)


@dataclass(frozen=True)
class PhaseComparison:
    equal: bool
    phase: float
    residual: float


def equal_up_to_global_phase(a, b, tol: float = ATOL) -> PhaseComparison:
    """Check ``a == exp(i*phase) * b`` within ``tol`` (max-norm).

    The phase is read off the largest-magnitude entry of ``b``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    k = np.argmax(np.abs(b))
    if abs(b.flat[k]) == 0:
        phase = 0.0
    else:
        phase = float(np.angle(a.flat[k] / b.flat[k]))
    residual = float(np.abs(a - np.exp(1j * phase) * b).max())
    return PhaseComparison(residual <= tol, phase, residual)


@dataclass(frozen=True)
class CoherenceOrder:
    """Coherence class of a density-matrix element.

    ``label`` counts flipped spins: ZQ (none, i.e. a population), SQ, DQ, TQ.
    ``total_order`` is the net change in the number of excited spins, which is
    what a z-gradient sees.
    """
    label: str
    flipped_spins: frozenset
    total_order: int


_ORDER_LABELS = {0: "ZQ", 1: "SQ", 2: "DQ", 3: "TQ", 4: "4Q"}


def coherence_order(row: int, col: int, n: int) -> CoherenceOrder:
    if not (0 <= row < 2**n and 0 <= col < 2**n):
        raise ValueError(f"basis index out of range for {n} qubits")
    diff = row ^ col
    flipped = frozenset(q for q in range(1, n + 1) if bit(diff, q, n))
    total = bin(col).count("1") - bin(row).count("1")
    return CoherenceOrder(_ORDER_LABELS[len(flipped)], flipped, abs(total))


def fidelity_pure(target, rho) -> float:
    """<target|rho|target>, clipped to [0, 1]."""
    target = np.asarray(target, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (target.size, target.size):
        raise ValueError(f"dimension mismatch: state {target.size}, rho {rho.shape}")
    f = float(np.vdot(target, rho @ target).real)
    if f < -EIG_ATOL or f > 1 + EIG_ATOL:
        raise ValueError(f"fidelity {f} outside [0, 1]; inputs are not valid states")
    return min(max(f, 0.0), 1.0)


def random_state(n: int, rng) -> np.ndarray:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


def random_density(n: int, rng, rank: int | None = None) -> np.ndarray:
    d = 2**n
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def z_rotation(angles, n: int) -> np.ndarray:
    """Diagonal of prod_k exp(-i angle_k I_kz) for per-spin angles (index 0 = spin 1)."""
    phases = np.zeros(2**n)
    for q, a in enumerate(angles, start=1):
        signs = np.array([0.5 - bit(i, q, n) for i in range(2**n)])
        phases -= a * signs
    return np.exp(1j * phases)


def fit_z_phases(rho, target, qubits=None, sweeps: int = 20):
    """Per-spin z rotations maximizing fidelity of ``rho`` with pure ``target``.

    Exact coordinate ascent: fidelity is a single sinusoid in each angle.
    Returns (angles, fidelity) where ``angles`` has one entry per qubit.
    """
    rho = np.asarray(rho, dtype=complex)
    target = np.asarray(target, dtype=complex)
    n = n_qubits_of(rho.shape[0])
    qubits = list(range(1, n + 1)) if qubits is None else list(qubits)
    angles = np.zeros(n)
    outer = np.outer(target.conj(), target)   # F = sum_rc conj(t_r) rho'_rc t_c
    idx = np.arange(2**n)
    for _ in range(sweeps):
        prev = angles.copy()
        for q in qubits:
            d = z_rotation(angles, n)
            rot = d[:, None] * rho * d.conj()[None, :]
            b = np.array([bit(i, q, n) for i in idx])
            # under an extra angle t on qubit q, element (r,c) gains exp(i t (b_r - b_c))
            k = (outer * rot)[np.ix_(b == 1, b == 0)].sum()
            # F(t) = const + 2 Re(k e^{i t}); maximize
            angles[q - 1] += -np.angle(k) if abs(k) > 1e-15 else 0.0
        if np.abs(angles - prev).max() < 1e-14:
            break
    d = z_rotation(angles, n)
    fid = fidelity_pure(target, d[:, None] * rho * d.conj()[None, :])
    return angles, fid
