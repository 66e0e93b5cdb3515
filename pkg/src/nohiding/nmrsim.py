"""NMR observables: integrated transverse signals, stick spectra, receiver phasing.

A spin's signal is ``Tr(rho (Ix + i Iy))`` on that spin. This sums every
single-quantum element of the spin, so it is the integral of the whole
multiplet. Signals are reported relative to a reference state. Once the
receiver phase is calibrated on that reference, its signal reads as +1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qstate as qs
from .circuit import prepare_psi
from .pulsec import SpinSystem


@dataclass(frozen=True)
class ObservationRecord:
    theta: float
    phi: float
    spin: int
    signal: complex
    stage: str


@dataclass(frozen=True)
class SpectrumLine:
    spin: int
    partner_states: tuple
    frequency: float
    amplitude: complex


def _sq_pairs(spin: int, n: int):
    """(lower, upper) basis-index pairs differing only in ``spin``; lower has the spin in |0>."""
    shift = n - spin
    return [(r, r | (1 << shift)) for r in range(2**n) if not (r >> shift) & 1]


def transverse_signal(rho, spin: int, receiver_phase: float = 0.0) -> complex:
    rho = np.asarray(rho, dtype=complex)
    n = qs.n_qubits_of(rho.shape[0])
    if not 1 <= spin <= n:
        raise ValueError(f"spin {spin} out of range 1..{n}")
    # Tr(rho I+) picks rho[upper, lower] for each single-quantum pair
    total = sum(rho[hi, lo] for lo, hi in _sq_pairs(spin, n))
    return complex(np.exp(1j * receiver_phase) * total)


def reference_state(convention: str = "input", n: int = 3) -> np.ndarray:
    """Receiver reference: spin 1 prepared, all others in |0>.

    ``input``: the theta = phi = pi/2 input state reads as positive absorption.
    ``plus_y``: +y magnetization on spin 1 reads as positive absorption.
    """
    if convention == "input":
        one = prepare_psi(np.pi / 2, np.pi / 2)
    elif convention == "plus_y":
        one = np.array([1, 1j]) / np.sqrt(2)
    else:
        raise ValueError(f"unknown receiver convention {convention!r}")
    return qs.projector(qs.kron(one, *[qs.KET0] * (n - 1)))


def calibrate_receiver(reference=None, spin: int = 1) -> float:
    """Receiver phase that makes the reference signal real and positive."""
    if reference is None:
        reference = reference_state()
    s = transverse_signal(reference, spin)
    if abs(s) < 1e-12:
        raise ValueError(f"reference has no transverse magnetization on spin {spin}")
    return float(-np.angle(s))


@dataclass(frozen=True)
class Receiver:
    """Fixed receiver phase plus the reference magnitude used for normalization."""
    phase: float
    scale: float

    @classmethod
    def calibrated(cls, reference=None, spin: int = 1) -> "Receiver":
        if reference is None:
            reference = reference_state()
        phase = calibrate_receiver(reference, spin)
        return cls(phase, abs(transverse_signal(reference, spin)))

    def signal(self, rho, spin: int) -> complex:
        return transverse_signal(rho, spin, self.phase) / self.scale


def observe(rho, theta: float, phi: float, stage: str, receiver: Receiver | None = None):
    receiver = receiver or Receiver.calibrated()
    n = qs.n_qubits_of(np.shape(rho)[0])
    return [ObservationRecord(theta, phi, s, receiver.signal(rho, s), stage) for s in range(1, n + 1)]


def spectrum_lines(rho, spin: int, sys: SpinSystem, receiver_phase: float = 0.0) -> list[SpectrumLine]:
    """One stick per single-quantum transition of ``spin``.

    Line position is the spin's offset shifted by J/2 per coupled partner,
    with the sign set by that partner's state (|0> is m = +1/2).
    """
    rho = np.asarray(rho, dtype=complex)
    n = qs.n_qubits_of(rho.shape[0])
    if n != sys.n_spins:
        raise ValueError(f"density matrix has {n} spins, spin system has {sys.n_spins}")
    if not 1 <= spin <= n:
        raise ValueError(f"spin {spin} out of range 1..{n}")
    lines = []
    for lo, hi in _sq_pairs(spin, n):
        freq = sys.offsets[spin - 1]
        for other in range(1, n + 1):
            if other != spin:
                m = 0.5 - qs.bit(lo, other, n)
                freq += sys.coupling(spin, other) * m
        amp = complex(np.exp(1j * receiver_phase) * rho[hi, lo])
        lines.append(SpectrumLine(spin, (lo, hi), float(freq), amp))
    return lines


def pseudo_pure(epsilon: float, n: int = 3) -> np.ndarray:
    """(1 - eps) I/2^n + eps |0...0><0...0|."""
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    d = 2**n
    rho = (1 - epsilon) * np.eye(d, dtype=complex) / d
    rho[0, 0] += epsilon
    return rho
