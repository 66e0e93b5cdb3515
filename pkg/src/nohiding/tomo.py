"""Pauli-basis state tomography and element-wise deviation metrics."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import product

import numpy as np

from . import qstate as qs


def pauli_labels(n: int) -> list[str]:
    """All non-identity n-qubit Pauli strings, qubit 1 first (e.g. 'XIZ')."""
    return ["".join(p) for p in product("IXYZ", repeat=n) if set(p) != {"I"}]


def pauli_matrix(label: str) -> np.ndarray:
    return qs.kron(*[qs.PAULIS[c] for c in label])


def pauli_expectations(rho, n_qubits: int | None = None) -> dict:
    rho = np.asarray(rho, dtype=complex)
    n = qs.n_qubits_of(rho.shape[0])
    if n_qubits is not None and n_qubits != n:
        raise ValueError(f"expected {n_qubits} qubits, density matrix has {n}")
    return {lab: float(np.trace(rho @ pauli_matrix(lab)).real) for lab in pauli_labels(n)}


def reconstruct(expectations: dict) -> np.ndarray:
    """rho = 2^-n (I + sum_P <P> P) from a complete table of expectations."""
    if not expectations:
        raise ValueError("empty expectation table")
    n = len(next(iter(expectations)))
    need = set(pauli_labels(n))
    missing = need - set(expectations)
    if missing:
        raise ValueError(f"incomplete table: {len(missing)} Pauli expectations missing")
    extra = set(expectations) - need
    if extra:
        raise ValueError(f"unexpected labels {sorted(extra)[:5]}")
    d = 2**n
    rho = np.eye(d, dtype=complex)
    for lab in pauli_labels(n):
        rho += expectations[lab] * pauli_matrix(lab)
    return rho / d


def min_eigenvalue(rho) -> float:
    return float(np.linalg.eigvalsh(np.asarray(rho, dtype=complex)).min())


@dataclass(frozen=True)
class DeviationReport:
    avg_abs_dev: float
    max_abs_dev: float
    n: int
    mode: str = "modulus"

    def as_dict(self) -> dict:
        return asdict(self)


def deviation_report(theory, experiment, mode: str = "modulus") -> DeviationReport:
    """Average and maximum absolute element-wise deviation.

    ``mode="modulus"`` compares complex entries by |x_T - x_E|. ``"split"``
    treats real and imaginary parts as separate entries (2 N^2 of them).
    """
    t = np.asarray(theory, dtype=complex)
    e = np.asarray(experiment, dtype=complex)
    if t.shape != e.shape or t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValueError(f"need two N x N matrices of equal size, got {t.shape} and {e.shape}")
    n = t.shape[0]
    diff = t - e
    if mode == "modulus":
        dev = np.abs(diff)
    elif mode == "split":
        dev = np.concatenate([np.abs(diff.real).ravel(), np.abs(diff.imag).ravel()])
    else:
        raise ValueError(f"unknown deviation mode {mode!r}")
    return DeviationReport(float(dev.mean()), float(dev.max()), n, mode)
