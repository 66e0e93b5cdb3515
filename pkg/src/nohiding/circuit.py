"""Gate-level model of qubit state randomization and its recovery.

Qubit 1 carries the input state; qubits 2 and 3 form the ancilla. The
randomization unitary is fixed to the signed permutation matrix used in the
experiment. Written as a conditional unitary, it applies I, X, iY, Z for
ancilla states 00, 01, 10, 11. The ``i`` on the Y branch is a real phase
difference from the textbook ``sum_k sigma_k (x) |k><k|`` form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qstate as qs
from .qstate import HADAMARD, I2, PHI_PLUS, SX, SY, SZ, kron

# relative phase carried by each branch operator (I, X, iY, Z)
BRANCH_PHASES = (0.0, 0.0, np.pi / 2, 0.0)
DEFAULT_SEED = 20100312
DEFAULT_SAMPLES = 64

_RANDOMIZATION = np.zeros((8, 8), dtype=complex)
for _col, (_row, _sign) in {0: (0, 1), 1: (5, 1), 2: (6, -1), 3: (3, 1),
                            4: (4, 1), 5: (1, 1), 6: (2, 1), 7: (7, -1)}.items():
    _RANDOMIZATION[_row, _col] = _sign
_RANDOMIZATION.setflags(write=False)


def prepare_psi(theta: float, phi: float) -> np.ndarray:
    """State produced by a (theta)_phi pulse on |0>.

    cos(theta/2)|0> + exp(i(phi - pi/2)) sin(theta/2)|1>, so the |0>
    amplitude is always real.
    """
    return np.array([np.cos(theta / 2), np.exp(1j * (phi - np.pi / 2)) * np.sin(theta / 2)])


def ancilla_state() -> np.ndarray:
    return np.full(4, 0.5, dtype=complex)


def randomization_unitary() -> np.ndarray:
    return _RANDOMIZATION.copy()


def conditional_unitary(branches) -> np.ndarray:
    """Build sum_k op_k (x) |k><k| with the control register as the low qubits.

    ``branches`` is a sequence of (2x2 operator, ancilla basis index) pairs
    that must cover every ancilla basis state exactly once.
    """
    branches = list(branches)
    dim_anc = len(branches)
    qs.n_qubits_of(2 * dim_anc)
    indices = [k for _, k in branches]
    if len(set(indices)) != len(indices):
        raise ValueError(f"duplicate ancilla index in {indices}")
    if sorted(indices) != list(range(dim_anc)):
        raise ValueError(f"ancilla indices {indices} do not cover 0..{dim_anc - 1}")
    total = np.zeros((2 * dim_anc, 2 * dim_anc), dtype=complex)
    for op, k in branches:
        op = np.asarray(op, dtype=complex)
        if op.shape != (2, 2) or not qs.is_unitary(op):
            raise ValueError(f"branch operator for ancilla index {k} is not a 2x2 unitary")
        proj = np.zeros((dim_anc, dim_anc))
        proj[k, k] = 1
        total += kron(op, proj)
    return total


def cnot(control: int, target: int, n: int) -> np.ndarray:
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    a = [p0 if q == control else I2 for q in range(1, n + 1)]
    b = [p1 if q == control else SX if q == target else I2 for q in range(1, n + 1)]
    return kron(*a) + kron(*b)


def recovery_unitary() -> np.ndarray:
    """I (x) V on the ancilla, V = CNOT(2->3) . H(2) . CNOT(2->3)."""
    c = cnot(2, 3, 3)
    return c @ qs.embed(HADAMARD, 2, 3) @ c


def kraus_randomize(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return sum(s @ rho @ s for s in (I2, SX, SY, SZ)) / 4


def expected_output(theta: float, phi: float) -> np.ndarray:
    """Density matrix of |Phi+>_12 (x) |psi>_3.

    The printed matrix for this state in the literature has trace 2; this is
    the normalized version (every entry halved).
    """
    return qs.projector(kron(PHI_PLUS, prepare_psi(theta, phi)))


@dataclass(frozen=True)
class ProtocolRecord:
    theta: float
    phi: float
    input_state: np.ndarray = field(repr=False)
    hidden_state: np.ndarray = field(repr=False)
    system_marginal: np.ndarray = field(repr=False)
    output_state: np.ndarray = field(repr=False)
    recovered_qubit: np.ndarray = field(repr=False)
    bell_marginal: np.ndarray = field(repr=False)


def run_protocol(theta: float, phi: float) -> ProtocolRecord:
    psi = prepare_psi(theta, phi)
    inp = kron(psi, ancilla_state())
    hidden = _RANDOMIZATION @ inp
    out = recovery_unitary() @ hidden
    rho_h = qs.projector(hidden)
    rho_o = qs.projector(out)
    return ProtocolRecord(
        theta=theta,
        phi=phi,
        input_state=inp,
        hidden_state=hidden,
        system_marginal=qs.partial_trace(rho_h, {1}),
        output_state=out,
        recovered_qubit=qs.partial_trace(rho_o, {3}),
        bell_marginal=qs.partial_trace(rho_o, {1, 2}),
    )


def grid_angles(theta_steps: int, phi_steps: int):
    if theta_steps < 2 or phi_steps < 2:
        raise ValueError("grid needs at least 2 steps along each axis")
    return np.linspace(0, np.pi, theta_steps), np.linspace(0, 2 * np.pi, phi_steps)


def grid_scan(theta_steps: int = 13, phi_steps: int = 25) -> list[ProtocolRecord]:
    """Run the protocol on a rectangular (theta, phi) grid, theta-major order."""
    thetas, phis = grid_angles(theta_steps, phi_steps)
    return [run_protocol(t, p) for t in thetas for p in phis]


@dataclass(frozen=True)
class HidingIsometry:
    """Linear map V from a system space into system (x) ancilla.

    ``columns[:, i]`` is V|i>; the output space is ordered system-major.
    """
    dim_system: int
    dim_ancilla: int
    columns: np.ndarray

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=complex)
        if cols.shape != (self.dim_system * self.dim_ancilla, self.dim_system):
            raise ValueError(f"columns shape {cols.shape} does not match dims "
                             f"({self.dim_system}, {self.dim_ancilla})")
        if np.abs(cols.conj().T @ cols - np.eye(self.dim_system)).max() > qs.ATOL:
            raise ValueError("map is not an isometry (V^dag V != I)")
        object.__setattr__(self, "columns", cols)

    def apply(self, psi) -> np.ndarray:
        return self.columns @ psi

    @classmethod
    def randomization(cls) -> "HidingIsometry":
        cols = np.stack([_RANDOMIZATION @ kron(e, ancilla_state()) for e in np.eye(2)], axis=1)
        return cls(2, 4, cols)

    @classmethod
    def erasure(cls) -> "HidingIsometry":
        # |psi> -> |0>_system (x) |psi>_ancilla
        return cls(2, 2, np.stack([kron(qs.KET0, e) for e in np.eye(2)], axis=1))

    @classmethod
    def keep_system(cls) -> "HidingIsometry":
        # |psi> -> |psi>_system (x) |0>_ancilla, which hides nothing
        return cls(2, 2, np.stack([kron(e, qs.KET0) for e in np.eye(2)], axis=1))


@dataclass(frozen=True)
class StructureReport:
    sigma_fixed: bool
    ancilla_isometry: bool
    max_residual: float
    sigma_residual: float
    structure_residual: float
    rank: int
    samples: int
    seed: int


def verify_no_hiding_structure(v: HidingIsometry, samples: int = DEFAULT_SAMPLES,
                               seed: int = DEFAULT_SEED, tol: float = qs.ATOL) -> StructureReport:
    """Test whether ``v`` hides its input and where the input went.

    Two checks:

    * the system marginal of V|psi> must be the same sigma for every input;
    * for each eigenvector |k> of sigma with weight p_k > 0, the ancilla
      states A_k(psi) = (<k| (x) I) V|psi> / sqrt(p_k) must satisfy
      <A_j(psi)|A_k(chi)> = delta_jk <psi|chi>. That is, the ancilla holds
      an isometric copy of the input in each branch.
    """
    if not isinstance(v, HidingIsometry):
        raise TypeError("expected a HidingIsometry")
    rng = np.random.default_rng(seed)
    ds, da = v.dim_system, v.dim_ancilla

    def system_marginal(psi):
        out = v.apply(psi).reshape(ds, da)
        return out @ out.conj().T

    states = [qs.random_state(1, rng) if ds == 2 else _random_vec(ds, rng) for _ in range(samples)]
    sigmas = [system_marginal(s) for s in states]
    sigma_res = max(np.abs(s - sigmas[0]).max() for s in sigmas)

    sigma = sum(sigmas) / len(sigmas)
    p, vecs = np.linalg.eigh(sigma)
    keep = p > qs.EIG_ATOL
    p, vecs = p[keep], vecs[:, keep]

    def branches(psi):
        out = v.apply(psi).reshape(ds, da)
        return (vecs.conj().T @ out) / np.sqrt(p)[:, None]

    struct_res = 0.0
    for a, b in zip(states, states[1:] + states[:1]):
        ba, bb = branches(a), branches(b)
        gram = ba.conj() @ bb.T
        expected = np.eye(len(p)) * np.vdot(a, b)
        struct_res = max(struct_res, np.abs(gram - expected).max())

    return StructureReport(
        sigma_fixed=bool(sigma_res < tol),
        ancilla_isometry=bool(struct_res < tol),
        max_residual=float(max(sigma_res, struct_res)),
        sigma_residual=float(sigma_res),
        structure_residual=float(struct_res),
        rank=int(len(p)),
        samples=samples,
        seed=seed,
    )


def _random_vec(d, rng):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)
