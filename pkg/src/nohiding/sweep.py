"""Experiment drivers: signal grids, compiler verification, tomography runs."""
from __future__ import annotations

import numpy as np

from . import circuit, nmrsim, pulsec, tomo
from . import qstate as qs

STAGES = ("input", "output")


def grid_degrees(theta_steps: int, phi_steps: int):
    if theta_steps < 2 or phi_steps < 2:
        raise ValueError("grid needs at least 2 steps along each axis")
    thetas = [180.0 * i / (theta_steps - 1) for i in range(theta_steps)]
    phis = [360.0 * k / (phi_steps - 1) for k in range(phi_steps)]
    return thetas, phis


def gate_level_states(theta: float, phi: float):
    psi = circuit.prepare_psi(theta, phi)
    rho_in = qs.projector(qs.kron(psi, qs.KET0, qs.KET0))
    rec = circuit.run_protocol(theta, phi)
    return rho_in, qs.projector(rec.output_state)


def pulse_level_states(theta: float, phi: float, sys: pulsec.SpinSystem,
                       noise: pulsec.NoiseModel = pulsec.NOISELESS, epsilon: float = 1.0):
    rho0 = nmrsim.pseudo_pure(epsilon)
    rho_in = pulsec.simulate_physical(pulsec.compile_input(theta, phi), rho0, sys, noise)
    full = pulsec.expand_macros(pulsec.compile_full(theta, phi), sys)
    rho_out = pulsec.simulate_physical(full, rho0, sys, noise)
    return rho_in, rho_out


def signal_rows(theta_steps: int = 13, phi_steps: int = 25, pulse_level: bool = False,
                sys: pulsec.SpinSystem | None = None, noise: pulsec.NoiseModel = pulsec.NOISELESS,
                receiver: nmrsim.Receiver | None = None, epsilon: float = 1.0):
    """Integrated signals on the grid as (theta_deg, phi_deg, stage, spin, signal).

    The order is theta-major, then phi, then stage, then spin.
    """
    receiver = receiver or nmrsim.Receiver.calibrated()
    sys = sys or pulsec.SpinSystem.default()
    thetas, phis = grid_degrees(theta_steps, phi_steps)
    rows = []
    for td in thetas:
        for pd in phis:
            th, ph = np.radians(td), np.radians(pd)
            if pulse_level:
                states = pulse_level_states(th, ph, sys, noise, epsilon)
            else:
                states = gate_level_states(th, ph)
            for stage, rho in zip(STAGES, states):
                for spin in (1, 2, 3):
                    # a pseudo-pure state scales every signal by epsilon
                    sig = receiver.signal(rho, spin)
                    rows.append((td, pd, stage, spin, sig / epsilon if epsilon != 1 else sig))
    return rows


def surfaces(rows):
    """Reshape scan rows into {(stage, spin): (thetas_deg, phis_deg, real-part grid)}."""
    thetas = sorted({r[0] for r in rows})
    phis = sorted({r[1] for r in rows})
    ti = {t: i for i, t in enumerate(thetas)}
    pi = {p: k for k, p in enumerate(phis)}
    out = {}
    for th, ph, stage, spin, sig in rows:
        grid = out.setdefault((stage, spin), np.zeros((len(thetas), len(phis))))
        grid[ti[th], pi[ph]] = sig.real
    return {k: (np.array(thetas), np.array(phis), v) for k, v in out.items()}


def verification_rows(sys: pulsec.SpinSystem, theta: float = np.pi / 2, phi: float = np.pi / 2):
    """Equivalence checks of each compiled program against its gate-level target."""
    cases = [
        ("randomization", pulsec.compile_randomization(), circuit.randomization_unitary()),
        ("cnot23", pulsec.compile_cnot23(), circuit.cnot(2, 3, 3)),
        ("full", pulsec.compile_full(theta, phi), pulsec.full_target(theta, phi)),
    ]
    rows = []
    for name, seq, target in cases:
        for mode in ("ideal", "physical"):
            rep = pulsec.verify_equivalence(seq, target, sys, mode)
            rows.append({"sequence": name, "target": TARGET_NAMES[name], "mode": mode,
                         "class": rep.cls, "residual": rep.residual,
                         "fitted_phases": rep.fitted_phases})
    return rows


TARGET_NAMES = {"randomization": "U (8x8 signed permutation)", "cnot23": "CNOT 2->3",
                "full": "recovery . U . preparation"}


def named_target(name: str, theta: float = np.pi / 2, phi: float = np.pi / 2) -> np.ndarray:
    if name == "randomization":
        return circuit.randomization_unitary()
    if name == "cnot23":
        return circuit.cnot(2, 3, 3)
    if name == "full":
        return pulsec.full_target(theta, phi)
    raise ValueError(f"unknown target {name!r}")


def tomography_run(theta: float, phi: float, sys: pulsec.SpinSystem,
                   noise: pulsec.NoiseModel = pulsec.NOISELESS, mode: str = "modulus") -> dict:
    """Pulse-level output state, its Pauli reconstruction and deviation metrics."""
    _, rho = pulse_level_states(theta, phi, sys, noise)
    expectations = tomo.pauli_expectations(rho, 3)
    rec = tomo.reconstruct(expectations)
    expected = circuit.expected_output(theta, phi)
    m12 = qs.partial_trace(rec, {1, 2})
    m3 = qs.partial_trace(rec, {3})
    return {
        "rho": rec,
        "expected": expected,
        "marginal_12": m12,
        "marginal_3": m3,
        "expectations": expectations,
        "deviation": tomo.deviation_report(expected, rec, mode),
        "bell_deviation": tomo.deviation_report(qs.projector(qs.PHI_PLUS), m12, mode),
        "min_eigenvalue": tomo.min_eigenvalue(rec),
        "recovered_fidelity": qs.fidelity_pure(circuit.prepare_psi(theta, phi), m3),
    }
