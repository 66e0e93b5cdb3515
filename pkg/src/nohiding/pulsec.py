"""Pulse-sequence compiler and spin-dynamics simulator.

Sequences are stored in time order (element 0 is applied first). Pulse
conventions follow the usual NMR form: a ``(flip)_phase`` pulse is the
propagator ``exp(-i flip (Ix cos(phase) + Iy sin(phase)))``, so phase 0 is
``x`` and phase pi/2 is ``y``.

Three macros are lowered by :func:`expand_macros`:

``ZRot(spin, angle)``
    ``exp(-i angle Iz)`` as the composite ``(pi/2)_-x, (|angle|)_(+-y), (pi/2)_x``.
``JBlock(i, j)``
    ``exp(-i pi Iz_i Iz_j)``: total free evolution ``1/(2|J_ij|)`` split into
    four equal delays. Pi pulses flip spins i, j together on one Walsh pattern
    and every other spin on a different one. Offsets and all other couplings
    then average to zero exactly. For ``J_ij < 0`` the block is wrapped in pi
    pulses on spin i so the sign of the net rotation matches ``J_ij > 0``.
``Cnot(control, target)``
    Seven-element sequence: two pulses on the target, ``JBlock``, one pulse
    on the target, then a z-rotating composite on the control.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qstate as qs
from .circuit import ancilla_state, prepare_psi, randomization_unitary, recovery_unitary

X, Y, MX, MY = 0.0, np.pi / 2, np.pi, 3 * np.pi / 2
PI, HALF = np.pi, np.pi / 2

MEASURED_J = {(1, 2): 49.7, (1, 3): 224.5, (2, 3): -310.9}   # Hz: HF, HC, FC
DEFAULT_OFFSETS = (250.0, -180.0, 95.0)                   # Hz, illustrative
DEFAULT_T2 = (1.0, 0.7, 1.0)                              # s; 19F is the shortest


@dataclass(frozen=True, eq=False)
class SpinSystem:
    offsets: tuple
    j: np.ndarray
    t2: tuple

    def __post_init__(self):
        j = np.array(self.j, dtype=float)
        n = len(self.offsets)
        if j.shape != (n, n):
            raise ValueError(f"coupling matrix shape {j.shape} does not match {n} spins")
        if np.abs(j - j.T).max() > 0 or np.any(np.diag(j) != 0):
            raise ValueError("coupling matrix must be symmetric with zero diagonal")
        if len(self.t2) != n or min(self.t2) <= 0:
            raise ValueError("need one positive T2 per spin")
        j.setflags(write=False)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "offsets", tuple(float(o) for o in self.offsets))
        object.__setattr__(self, "t2", tuple(float(t) for t in self.t2))

    @property
    def n_spins(self) -> int:
        return len(self.offsets)

    def coupling(self, i: int, j: int) -> float:
        return float(self.j[i - 1, j - 1])

    @classmethod
    def from_couplings(cls, couplings: dict, offsets=DEFAULT_OFFSETS, t2=DEFAULT_T2):
        n = len(offsets)
        j = np.zeros((n, n))
        for (a, b), v in couplings.items():
            j[a - 1, b - 1] = j[b - 1, a - 1] = v
        return cls(tuple(offsets), j, tuple(t2))

    @classmethod
    def default(cls, offsets=DEFAULT_OFFSETS, t2=DEFAULT_T2) -> "SpinSystem":
        """13CHFBr2: spin 1 = 1H, 2 = 19F, 3 = 13C."""
        return cls.from_couplings(MEASURED_J, offsets, t2)

    def on_resonance(self) -> "SpinSystem":
        return SpinSystem((0.0,) * self.n_spins, self.j, self.t2)


# -- sequence elements ------------------------------------------------------

@dataclass(frozen=True)
class RF:
    spins: tuple
    flip: float
    phase: float

    def __post_init__(self):
        spins = (self.spins,) if isinstance(self.spins, int) else tuple(sorted(set(self.spins)))
        if not spins:
            raise ValueError("RF pulse needs at least one spin")
        if not (np.isfinite(self.flip) and np.isfinite(self.phase)):
            raise ValueError("flip and phase must be finite")
        object.__setattr__(self, "spins", spins)


@dataclass(frozen=True)
class Delay:
    duration: float

    def __post_init__(self):
        if not self.duration >= 0:
            raise ValueError(f"negative or invalid delay {self.duration}")


@dataclass(frozen=True)
class Gradient:
    pass


@dataclass(frozen=True)
class JBlock:
    i: int
    j: int

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("JBlock needs two distinct spins")


@dataclass(frozen=True)
class ZRot:
    spin: int
    angle: float


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise ValueError("control and target must differ")


PRIMITIVES = (RF, Delay, Gradient)
MACROS = (JBlock, ZRot, Cnot)


@dataclass(frozen=True)
class PulseSequence:
    elements: tuple = ()
    name: str = ""
    notes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        for e in self.elements:
            if not isinstance(e, PRIMITIVES + MACROS):
                raise TypeError(f"not a pulse element: {e!r}")

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        return PulseSequence(self.elements + tuple(other), self.name or other.name,
                             self.notes + tuple(getattr(other, "notes", ())))

    @property
    def is_primitive(self) -> bool:
        return all(isinstance(e, PRIMITIVES) for e in self.elements)

    def spins(self) -> set:
        out = set()
        for e in self.elements:
            if isinstance(e, RF):
                out.update(e.spins)
            elif isinstance(e, JBlock):
                out.update((e.i, e.j))
            elif isinstance(e, ZRot):
                out.add(e.spin)
            elif isinstance(e, Cnot):
                out.update((e.control, e.target))
        return out

    def duration(self) -> float:
        """Total delay time in seconds; macros must be expanded first."""
        if not self.is_primitive:
            raise ValueError("expand macros before asking for the duration")
        return sum(e.duration for e in self.elements if isinstance(e, Delay))

    def listing(self) -> str:
        return "\n".join(format_element(e) for e in self.elements) + ("\n" if self.elements else "")


# -- text listing -----------------------------------------------------------

_PHASE_NAMES = {0: "x", 1: "y", 2: "-x", 3: "-y"}
_NAMED_PHASES = {v: k * HALF for k, v in _PHASE_NAMES.items()}


def _fmt_deg(rad: float) -> str:
    deg = np.degrees(rad)
    r = round(deg)
    return f"{r:d}deg" if abs(deg - r) < 1e-9 else f"{deg:.12g}deg"


def _fmt_phase(rad: float) -> str:
    q = rad / HALF
    k = round(q)
    if abs(q - k) < 1e-12:
        return _PHASE_NAMES[k % 4]
    return _fmt_deg(rad)


def format_element(e) -> str:
    if isinstance(e, RF):
        spins = ",".join(str(s) for s in e.spins)
        return f"RF spin={spins} flip={_fmt_deg(e.flip)} phase={_fmt_phase(e.phase)}"
    if isinstance(e, Delay):
        return f"DELAY {e.duration * 1e3:.12g}ms"
    if isinstance(e, Gradient):
        return "GRAD"
    if isinstance(e, JBlock):
        return f"JBLOCK {e.i} {e.j}"
    if isinstance(e, ZRot):
        return f"ZROT spin={e.spin} angle={_fmt_deg(e.angle)}"
    if isinstance(e, Cnot):
        return f"CNOT {e.control} {e.target}"
    raise TypeError(f"unknown element {e!r}")


def _parse_angle(text: str) -> float:
    if text in _NAMED_PHASES:
        return _NAMED_PHASES[text]
    if text.endswith("deg"):
        return float(np.radians(float(text[:-3])))
    raise ValueError(f"cannot parse angle {text!r}")


def parse_listing(text: str, name: str = "") -> PulseSequence:
    """Inverse of :meth:`PulseSequence.listing`. Blank and ``#`` lines are skipped.

    Delays are printed to the microsecond, so a round trip loses precision
    below 1 us.
    """
    elements = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, *rest = line.split()
        try:
            if head == "GRAD":
                elements.append(Gradient())
            elif head == "DELAY":
                if not rest[0].endswith("ms"):
                    raise ValueError("delay must be given in ms")
                elements.append(Delay(float(rest[0][:-2]) * 1e-3))
            elif head in ("RF", "ZROT"):
                kv = dict(tok.split("=", 1) for tok in rest)
                if head == "RF":
                    spins = tuple(int(s) for s in kv["spin"].split(","))
                    elements.append(RF(spins, _parse_angle(kv["flip"]), _parse_angle(kv["phase"])))
                else:
                    elements.append(ZRot(int(kv["spin"]), _parse_angle(kv["angle"])))
            elif head == "JBLOCK":
                elements.append(JBlock(int(rest[0]), int(rest[1])))
            elif head == "CNOT":
                elements.append(Cnot(int(rest[0]), int(rest[1])))
            else:
                raise ValueError(f"unknown instruction {head!r}")
        except (KeyError, IndexError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {raw!r}: {exc}") from exc
    return PulseSequence(elements, name)


# -- unitaries --------------------------------------------------------------

def _rot(flip: float, phase: float) -> np.ndarray:
    c, s = np.cos(flip / 2), np.sin(flip / 2)
    return np.array([[c, -1j * np.exp(-1j * phase) * s],
                     [-1j * np.exp(1j * phase) * s, c]])


def rf_unitary(spins, flip: float, phase: float, n: int, scale=None) -> np.ndarray:
    """Hard pulse on ``spins``; ``scale`` optionally gives a per-spin flip factor."""
    spins = (spins,) if isinstance(spins, int) else tuple(spins)
    for s in spins:
        if not 1 <= s <= n:
            raise ValueError(f"spin {s} out of range 1..{n}")
    ops = []
    for q in range(1, n + 1):
        if q in spins:
            f = flip if scale is None else flip * scale[q - 1]
            ops.append(_rot(f, phase))
        else:
            ops.append(qs.I2)
    return qs.kron(*ops)


def _m(n: int) -> np.ndarray:
    """m[r, q-1] = +1/2 if spin q is |0> in basis state r, else -1/2."""
    return np.array([[0.5 - qs.bit(r, q, n) for q in range(1, n + 1)] for r in range(2**n)])


def free_phases(sys: SpinSystem, offsets: bool = True) -> np.ndarray:
    """Diagonal of the weak-coupling Hamiltonian in rad/s."""
    n = sys.n_spins
    m = _m(n)
    h = np.zeros(2**n)
    if offsets:
        h += 2 * np.pi * m @ np.array(sys.offsets)
    for a in range(n):
        for b in range(a + 1, n):
            h += 2 * np.pi * sys.j[a, b] * m[:, a] * m[:, b]
    return h


def _zz(i: int, j: int, n: int, angle: float = PI) -> np.ndarray:
    m = _m(n)
    return np.diag(np.exp(-1j * angle * m[:, i - 1] * m[:, j - 1]))


def _check_spin(s: int, n: int):
    if not 1 <= s <= n:
        raise ValueError(f"spin {s} out of range 1..{n}")


# -- macro expansion ---------------------------------------------------------

_WALSH = [(1, -1, -1, 1), (1, 1, -1, -1), (1, -1, 1, -1)]


def _jblock_body(i: int, j: int, sys: SpinSystem) -> list:
    n = sys.n_spins
    _check_spin(i, n)
    _check_spin(j, n)
    coupling = sys.coupling(i, j)
    if coupling == 0:
        raise ValueError(f"J_{i}{j} is zero; cannot build a coupling block")
    others = [k for k in range(1, n + 1) if k not in (i, j)]
    if len(others) > len(_WALSH) - 1:
        raise ValueError(f"refocusing scheme supports at most {len(_WALSH) + 1} spins")
    pattern = {i: _WALSH[0], j: _WALSH[0]}
    pattern.update({k: _WALSH[1 + m] for m, k in enumerate(others)})
    quarter = 1 / (8 * abs(coupling))
    body = []
    if coupling < 0:
        body.append(RF((i,), PI, X))
    for seg in range(4):
        body.append(Delay(quarter))
        nxt = seg + 1
        flip = [s for s, p in pattern.items()
                if (nxt < 4 and p[nxt] != p[seg]) or (nxt == 4 and p[seg] == -1)]
        if flip:
            body.append(RF(tuple(flip), PI, X))
    if coupling < 0:
        body.append(RF((i,), PI, X))
    return body


def _zrot_body(spin: int, angle: float) -> list:
    return [RF((spin,), HALF, MX), RF((spin,), abs(angle), MY if angle < 0 else Y), RF((spin,), HALF, X)]


def _cnot_body(control: int, target: int) -> list:
    c, t = control, target
    return [RF((t,), HALF, X), RF((t,), HALF, Y), JBlock(c, t), RF((t,), HALF, MY),
            RF((c,), HALF, Y), RF((c,), HALF, X), RF((c,), HALF, MY)]


def expand_macros(seq: PulseSequence, sys: SpinSystem | None = None, recursive: bool = True) -> PulseSequence:
    """Lower macros to RF / Delay / Gradient elements.

    ``sys`` is needed only when a ``JBlock`` has to be lowered. With
    ``recursive=False`` a single level is expanded.
    """
    out = []
    for e in seq:
        if isinstance(e, PRIMITIVES):
            out.append(e)
        elif isinstance(e, ZRot):
            out.extend(_zrot_body(e.spin, e.angle))
        elif isinstance(e, Cnot):
            out.extend(_cnot_body(e.control, e.target))
        elif isinstance(e, JBlock):
            if sys is None:
                raise ValueError("a SpinSystem is required to expand JBlock")
            out.extend(_jblock_body(e.i, e.j, sys))
        else:
            raise TypeError(f"unknown macro {e!r}")
    result = PulseSequence(out, seq.name, seq.notes)
    if recursive and not result.is_primitive:
        return expand_macros(result, sys, True)
    return result


# -- compiled programs -------------------------------------------------------

def compile_randomization() -> PulseSequence:
    """The three-qubit randomization gate as z-rotations, x pulses and two J blocks."""
    return PulseSequence([
        ZRot(1, -HALF),
        RF((1,), HALF, MX),
        JBlock(1, 3),
        RF((1,), HALF, X),
        JBlock(1, 2),
        RF((1,), HALF, MX),
        ZRot(3, -HALF),
    ], "randomization")


def compile_cnot(control: int = 2, target: int = 3) -> PulseSequence:
    return PulseSequence(_cnot_body(control, target), f"cnot{control}{target}")


def compile_cnot23() -> PulseSequence:
    return compile_cnot(2, 3)


def compile_hadamard(spin: int) -> PulseSequence:
    # H = X . Ry(pi/2) up to a global phase
    return PulseSequence([RF((spin,), HALF, Y), RF((spin,), PI, X)], f"hadamard{spin}")


def pseudo_hadamard_phase() -> float:
    """Pulse phase (+y or -y) of the pi/2 pulse taking |0> to (|0>+|1>)/sqrt(2)."""
    plus = np.array([1, 1]) / np.sqrt(2)
    for phase in (MY, Y):
        if np.abs(_rot(HALF, phase) @ qs.KET0 - plus).max() < qs.ATOL:
            return phase
    raise AssertionError("no y pulse prepares |+>")


def compile_input(theta: float, phi: float) -> PulseSequence:
    """Input stage only: (theta)_phi on spin 1 after the pseudo-pure state."""
    return PulseSequence([Gradient(), RF((1,), theta, phi)], "input")


def compile_full(theta: float, phi: float) -> PulseSequence:
    """Initialization, randomization, and recovery of the hidden qubit onto spin 3."""
    ph = pseudo_hadamard_phase()
    init = PulseSequence([Gradient(), RF((1,), theta, phi), RF((2, 3), HALF, ph)], "init",
                         (f"ancilla preparation uses ({_fmt_deg(HALF)})_{_fmt_phase(ph)} on spins 2,3",))
    recover = compile_cnot23() + compile_hadamard(2) + compile_cnot23()
    return PulseSequence((init + compile_randomization() + recover).elements, "full", init.notes)


def full_target(theta: float, phi: float) -> np.ndarray:
    """Gate-level unitary that compile_full(theta, phi) implements."""
    prep = qs.kron(_rot(theta, phi), _rot(HALF, pseudo_hadamard_phase()),
                   _rot(HALF, pseudo_hadamard_phase()))
    return recovery_unitary() @ randomization_unitary() @ prep


# -- evaluation -------------------------------------------------------------

def sequence_unitary(seq: PulseSequence, sys: SpinSystem | None = None, mode: str = "ideal",
                     n: int | None = None) -> np.ndarray:
    """Propagator of ``seq``, earliest element rightmost.

    ``ideal``: macros map straight to their target rotations; delays evolve
    under the couplings only (zero offsets), or not at all if ``sys`` is None.
    ``physical``: everything is lowered and delays include offsets.
    Gradients act as identity on a propagator.
    """
    if mode not in ("ideal", "physical"):
        raise ValueError(f"unknown mode {mode!r}")
    if n is None:
        n = sys.n_spins if sys is not None else max(seq.spins() | {1})
    if mode == "physical":
        if sys is None:
            raise ValueError("physical mode needs a SpinSystem")
        seq = expand_macros(seq, sys)
    u = np.eye(2**n, dtype=complex)
    for e in seq:
        if isinstance(e, RF):
            step = rf_unitary(e.spins, e.flip, e.phase, n)
        elif isinstance(e, Delay):
            if sys is None:
                continue
            step = np.diag(np.exp(-1j * free_phases(sys, offsets=(mode == "physical")) * e.duration))
        elif isinstance(e, Gradient):
            continue
        elif isinstance(e, JBlock):
            _check_spin(e.i, n)
            _check_spin(e.j, n)
            step = _zz(e.i, e.j, n)
        elif isinstance(e, ZRot):
            _check_spin(e.spin, n)
            step = np.diag(qs.z_rotation([e.angle if q == e.spin else 0 for q in range(1, n + 1)], n))
        elif isinstance(e, Cnot):
            step = sequence_unitary(PulseSequence(_cnot_body(e.control, e.target)), sys, mode, n)
        else:
            raise TypeError(f"unknown element {e!r}")
        u = step @ u
    return u


@dataclass(frozen=True)
class NoiseModel:
    calibration_sigma: float = 0.0
    inhomogeneity_samples: int = 1
    t2_enabled: bool = False
    seed: int = 1234

    def __post_init__(self):
        if self.calibration_sigma < 0:
            raise ValueError("calibration_sigma must be >= 0")
        if self.inhomogeneity_samples < 1:
            raise ValueError("ensemble size must be >= 1")

    def scale_factors(self, n: int) -> np.ndarray:
        """Per-member, per-spin flip-angle scale factors, shape (samples, n)."""
        if self.calibration_sigma == 0:
            return np.ones((self.inhomogeneity_samples, n))
        rng = np.random.default_rng(self.seed)
        return 1 + self.calibration_sigma * rng.standard_normal((self.inhomogeneity_samples, n))


NOISELESS = NoiseModel()


def _relaxation_rates(sys: SpinSystem) -> np.ndarray:
    n = sys.n_spins
    rates = np.zeros((2**n, 2**n))
    inv = [1 / t for t in sys.t2]
    for r in range(2**n):
        for c in range(2**n):
            rates[r, c] = sum(inv[q - 1] for q in qs.coherence_order(r, c, n).flipped_spins)
    return rates


def _gradient_mask(n: int) -> np.ndarray:
    return np.array([[qs.coherence_order(r, c, n).total_order == 0 for c in range(2**n)]
                     for r in range(2**n)], dtype=float)


def _rot_batch(flips: np.ndarray, phase: float) -> np.ndarray:
    c, s = np.cos(flips / 2), np.sin(flips / 2)
    out = np.empty(flips.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -1j * np.exp(-1j * phase) * s
    out[..., 1, 0] = -1j * np.exp(1j * phase) * s
    out[..., 1, 1] = c
    return out


def _rf_batch(e: RF, n: int, factors: np.ndarray) -> np.ndarray:
    """Pulse propagators for every ensemble member, shape (members, 2^n, 2^n)."""
    m = factors.shape[0]
    u = np.ones((m, 1, 1), dtype=complex)
    for q in range(1, n + 1):
        op = _rot_batch(e.flip * factors[:, q - 1], e.phase) if q in e.spins \
            else np.broadcast_to(qs.I2, (m, 2, 2))
        d = u.shape[1]
        u = np.einsum("mab,mcd->macbd", u, op).reshape(m, 2 * d, 2 * d)
    return u


def _evolve(seq, rho0, sys, factors, t2_enabled, h, rates, grad_mask):
    n = sys.n_spins
    rho = np.broadcast_to(rho0, (factors.shape[0],) + rho0.shape).copy()
    for e in seq:
        if isinstance(e, RF):
            u = _rf_batch(e, n, factors)
            rho = u @ rho @ u.conj().transpose(0, 2, 1)
        elif isinstance(e, Delay):
            d = np.exp(-1j * h * e.duration)
            rho = d[:, None] * rho * d.conj()[None, :]
            if t2_enabled:
                rho = rho * np.exp(-rates * e.duration)
        elif isinstance(e, Gradient):
            rho = rho * grad_mask
    return rho


def simulate_physical(seq: PulseSequence, rho0, sys: SpinSystem, noise: NoiseModel = NOISELESS,
                      return_members: bool = False):
    """Evolve ``rho0`` through a primitive sequence under the free Hamiltonian.

    Pulses are instantaneous rotations with flip angles scaled per ensemble
    member; delays apply offsets, couplings and (optionally) T2 decay of
    coherences. A gradient removes every element with nonzero total
    coherence order. The result is the ensemble average.
    """
    if not seq.is_primitive:
        raise ValueError("sequence still contains macros; call expand_macros first")
    n = sys.n_spins
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (2**n, 2**n):
        raise ValueError(f"rho0 shape {rho0.shape} does not match {n} spins")
    for s in seq.spins():
        _check_spin(s, n)
    h = free_phases(sys)
    rates = _relaxation_rates(sys) if noise.t2_enabled else None
    mask = _gradient_mask(n)
    factors = noise.scale_factors(n)
    if noise.calibration_sigma == 0 and not return_members:
        factors = factors[:1]
    members = _evolve(seq, rho0, sys, factors, noise.t2_enabled, h, rates, mask)
    if return_members:
        return members
    return members.sum(axis=0) / len(members)


# -- equivalence checking ---------------------------------------------------

@dataclass(frozen=True)
class EquivalenceReport:
    cls: str
    residual: float
    fitted_phases: dict


def _fit_local_z(a, b, n, rng, restarts=8, sweeps=200):
    """Maximize |tr(B^dag D_L A D_R)| over per-spin z angles on both sides."""
    m = _m(n)
    best = None
    for attempt in range(restarts):
        left = np.zeros(n) if attempt == 0 else rng.uniform(-np.pi, np.pi, n)
        right = np.zeros(n) if attempt == 0 else rng.uniform(-np.pi, np.pi, n)
        for _ in range(sweeps):
            prev = np.concatenate([left, right])
            for side in ("L", "R"):
                for q in range(n):
                    dl = qs.z_rotation(left, n)
                    dr = qs.z_rotation(right, n)
                    w = b.conj() * (dl[:, None] * a * dr[None, :])
                    # an extra angle t on spin q scales its |0> lines by e^{-it/2}, |1> lines by e^{+it/2}
                    axis_sum = w.sum(axis=1) if side == "L" else w.sum(axis=0)
                    t0 = axis_sum[m[:, q] > 0].sum()
                    t1 = axis_sum[m[:, q] < 0].sum()
                    if abs(t0) > 1e-15 and abs(t1) > 1e-15:
                        step = np.angle(t0) - np.angle(t1)
                        (left if side == "L" else right)[q] += step
            cur = np.concatenate([left, right])
            if np.abs(np.angle(np.exp(1j * (cur - prev)))).max() < 1e-13:
                break
        dl, dr = qs.z_rotation(left, n), qs.z_rotation(right, n)
        mat = dl[:, None] * a * dr[None, :]
        gphase = np.angle(np.trace(b.conj().T @ mat))
        res = np.abs(np.exp(-1j * gphase) * mat - b).max()
        if best is None or res < best[0]:
            best = (res, left.copy(), right.copy(), -gphase)
        if res < 1e-12:
            break
    return best


def _wrap(a):
    return float(np.angle(np.exp(1j * a)))


def verify_equivalence(seq, target, sys: SpinSystem | None = None, mode: str = "ideal",
                       tol: float = 1e-6, seed: int = 0) -> EquivalenceReport:
    """Classify how closely a sequence (or unitary) implements ``target``.

    Classes are tried in order: ``exact``, ``global_phase``,
    ``local_z_phase`` (per-spin z rotations before and after, plus a global
    phase), and ``fail`` when no class gets the max-norm residual under ``tol``.
    """
    target = np.asarray(target, dtype=complex)
    n = qs.n_qubits_of(target.shape[0])
    u = seq if isinstance(seq, np.ndarray) else sequence_unitary(seq, sys, mode, n)
    if u.shape != target.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {target.shape}")
    res = float(np.abs(u - target).max())
    if res <= tol:
        return EquivalenceReport("exact", res, {"global": 0.0})
    gp = qs.equal_up_to_global_phase(u, target, tol)
    # the largest-entry phase estimate is not optimal; refine with the trace phase
    phase = np.angle(np.trace(target.conj().T @ u))
    res_g = float(np.abs(u - np.exp(1j * phase) * target).max())
    if min(gp.residual, res_g) <= tol:
        best_phase = gp.phase if gp.residual <= res_g else phase
        return EquivalenceReport("global_phase", min(gp.residual, res_g), {"global": _wrap(best_phase)})
    res_z, left, right, gphase = _fit_local_z(u, target, n, np.random.default_rng(seed))
    phases = {"global": _wrap(gphase),
              "left": [_wrap(a) for a in left],
              "right": [_wrap(a) for a in right]}
    if res_z <= tol:
        return EquivalenceReport("local_z_phase", float(res_z), phases)
    return EquivalenceReport("fail", float(min(res_g, res_z)), phases)


# -- convenience ------------------------------------------------------------

def hidden_input(theta: float, phi: float) -> np.ndarray:
    return qs.projector(qs.kron(prepare_psi(theta, phi), ancilla_state()))

