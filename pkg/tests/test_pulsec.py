import numpy as np
import pytest
from scipy.linalg import expm

from nohiding import circuit as c
from nohiding import pulsec as pc
from nohiding import qstate as qs
from nohiding.pulsec import HALF, MX, MY, PI, RF, X, Y, Cnot, Delay, Gradient, JBlock, PulseSequence, ZRot
from oracles import eq11_product, product_ops

SYSTEM = pc.SpinSystem.default()


# -- single pulses ----------------------------------------------------------

def test_rf_unitary_matches_pulse_matrix():
    for th, ph in [(0.3, 1.1), (np.pi / 2, 0), (2.9, 4.0)]:
        expected = np.array([[np.cos(th / 2), -1j * np.exp(-1j * ph) * np.sin(th / 2)],
                             [-1j * np.exp(1j * ph) * np.sin(th / 2), np.cos(th / 2)]])
        assert np.allclose(pc.rf_unitary((1,), th, ph, 1), expected, atol=1e-15)


def test_rf_pulse_prepares_psi():
    for th, ph in [(0.3, 1.1), (np.pi / 2, np.pi / 2), (2.9, 4.0)]:
        assert np.allclose(pc.rf_unitary(1, th, ph, 1) @ qs.KET0, c.prepare_psi(th, ph), atol=1e-15)


def test_rf_examples():
    assert np.allclose(pc.rf_unitary(1, 0, 0.7, 3), np.eye(8))
    assert np.allclose(pc.rf_unitary(1, np.pi, 0, 1), [[0, -1j], [-1j, 0]], atol=1e-15)


def test_rf_unitary_is_exp_of_product_operator():
    (ix, iy, _) = product_ops()
    th, ph = 1.3, 0.4
    u = pc.rf_unitary((1, 3), th, ph, 3)
    gen = sum(np.cos(ph) * ix[k] + np.sin(ph) * iy[k] for k in (0, 2))
    assert np.allclose(u, expm(-1j * th * gen), atol=1e-14)


def test_rf_out_of_range():
    with pytest.raises(ValueError):
        pc.rf_unitary((4,), 1, 0, 3)


# -- macro expansion ---------------------------------------------------------

def test_zrot_expansion():
    out = pc.expand_macros(PulseSequence([ZRot(1, -HALF)]))
    assert out.elements == (RF(1, HALF, MX), RF(1, HALF, MY), RF(1, HALF, X))
    (_, _, iz) = product_ops()
    r = qs.equal_up_to_global_phase(pc.sequence_unitary(out, n=3), expm(1j * np.pi / 2 * iz[0]))
    assert r.equal and abs(r.phase) < 1e-12


@pytest.mark.parametrize("angle", [-2.0, -HALF, 0.5, PI])
def test_zrot_composite_is_z_rotation(angle):
    out = pc.expand_macros(PulseSequence([ZRot(2, angle)]))
    (_, _, iz) = product_ops()
    assert np.allclose(pc.sequence_unitary(out, n=3), expm(-1j * angle * iz[1]), atol=1e-14)


def test_jblock_expansion_timing():
    out = pc.expand_macros(PulseSequence([JBlock(1, 3)]), SYSTEM)
    assert out.is_primitive
    assert out.duration() == pytest.approx(1 / (2 * 224.5), rel=1e-12)
    pis = [e for e in out if isinstance(e, RF)]
    assert all(e.flip == PI for e in pis)
    # refocusing pulses sit between delays, not only at the edges
    assert isinstance(out.elements[0], Delay) and isinstance(out.elements[1], RF)


def test_jblock_negative_coupling_wrapped():
    out = pc.expand_macros(PulseSequence([JBlock(2, 3)]), SYSTEM)
    assert out.elements[0] == RF(2, PI, X) and out.elements[-1] == RF(2, PI, X)
    assert out.duration() == pytest.approx(1 / (2 * 310.9), rel=1e-12)


def test_jblock_zero_coupling_rejected():
    sys = pc.SpinSystem.from_couplings({(1, 2): 10.0})
    with pytest.raises(ValueError):
        pc.expand_macros(PulseSequence([JBlock(1, 3)]), sys)


def test_jblock_needs_system():
    with pytest.raises(ValueError):
        pc.expand_macros(PulseSequence([JBlock(1, 2)]))


def test_cnot_one_level_expansion():
    out = pc.expand_macros(PulseSequence([Cnot(2, 3)]), SYSTEM, recursive=False)
    assert out.elements == (RF(3, HALF, X), RF(3, HALF, Y), JBlock(2, 3), RF(3, HALF, MY),
                            RF(2, HALF, Y), RF(2, HALF, X), RF(2, HALF, MY))
    assert out.elements == pc.compile_cnot23().elements


def test_expand_idempotent_on_primitives():
    prim = pc.expand_macros(pc.compile_full(0.4, 1.2), SYSTEM)
    assert pc.expand_macros(prim, SYSTEM) == prim


# -- compiled programs vs the gate-level model -------------------------------

def test_eq11_product_equals_randomization_exactly():
    assert np.abs(eq11_product() - c.randomization_unitary()).max() < 1e-12


def test_eq11_exact_class():
    rep = pc.verify_equivalence(eq11_product(), c.randomization_unitary())
    assert rep.cls == "exact" and rep.residual < 1e-10


def test_compile_randomization_listing_order():
    seq = pc.compile_randomization()
    assert seq.elements == (ZRot(1, -HALF), RF(1, HALF, MX), JBlock(1, 3), RF(1, HALF, X),
                            JBlock(1, 2), RF(1, HALF, MX), ZRot(3, -HALF))
    assert len(pc.expand_macros(seq, SYSTEM)) == 25


def test_compile_randomization_equivalence():
    u = pc.sequence_unitary(pc.compile_randomization())
    r = qs.equal_up_to_global_phase(u, c.randomization_unitary(), 1e-10)
    assert r.equal
    # the compiled form omits the exp(-i pi/4) prefactor
    assert r.phase == pytest.approx(np.pi / 4, abs=1e-12)


@pytest.mark.parametrize("mode", ["ideal", "physical"])
def test_compile_cnot23_equivalence(mode):
    rep = pc.verify_equivalence(pc.compile_cnot23(), c.cnot(2, 3, 3), SYSTEM, mode)
    assert rep.cls in ("exact", "global_phase", "local_z_phase")
    assert rep.residual < 1e-10


def test_compile_full_ideal_on_ground_state():
    u = pc.sequence_unitary(pc.compile_full(np.pi / 2, np.pi / 2))
    out = u @ qs.ket("000")
    plus = np.array([1, 1]) / np.sqrt(2)
    assert abs(np.vdot(qs.kron(qs.PHI_PLUS, plus), out)) ** 2 > 1 - 1e-12


def test_pseudo_hadamard_choice():
    assert pc.pseudo_hadamard_phase() == Y
    seq = pc.compile_full(0.1, 0.2)
    assert any("90deg)_y" in n for n in seq.notes)
    anc = pc.rf_unitary((1, 2), HALF, pc.pseudo_hadamard_phase(), 2) @ qs.ket("00")
    assert np.allclose(anc, c.ancilla_state())


def test_empty_sequence_is_identity():
    assert np.array_equal(pc.sequence_unitary(PulseSequence(), n=3), np.eye(8))


def test_sequence_unitaries_are_unitary():
    for seq in (pc.compile_randomization(), pc.compile_cnot23(), pc.compile_full(1.0, 2.0)):
        assert qs.is_unitary(pc.sequence_unitary(seq, SYSTEM, "ideal"))
        assert qs.is_unitary(pc.sequence_unitary(seq, SYSTEM, "physical"))
    for e in pc.expand_macros(pc.compile_full(1.0, 2.0), SYSTEM):
        if isinstance(e, RF):
            assert qs.is_unitary(pc.rf_unitary(e.spins, e.flip, e.phase, 3))


def test_ideal_jblock_commutes_with_iz():
    (_, _, iz) = product_ops()
    for i, j in [(1, 2), (1, 3), (2, 3)]:
        u = pc.sequence_unitary(PulseSequence([JBlock(i, j)]), n=3)
        for k in (i, j):
            assert np.abs(u @ iz[k - 1] - iz[k - 1] @ u).max() < 1e-15


@pytest.mark.parametrize("pair", [(1, 2), (1, 3), (2, 3)])
def test_refocusing_with_offsets(pair):
    rng = np.random.default_rng(sum(pair))
    sys = pc.SpinSystem.default(offsets=tuple(rng.uniform(-2000, 2000, 3)))
    block = pc.expand_macros(PulseSequence([JBlock(*pair)]), sys)
    physical = pc.sequence_unitary(block, sys, "physical")
    ideal = pc.sequence_unitary(PulseSequence([JBlock(*pair)]), n=3)
    rep = pc.verify_equivalence(physical, ideal)
    assert rep.cls in ("exact", "global_phase", "local_z_phase")
    assert rep.residual < 1e-9


def test_unrefocused_delay_fails_equivalence():
    sys = SYSTEM
    bare = PulseSequence([Delay(1 / (2 * 224.5))])
    ideal = pc.sequence_unitary(PulseSequence([JBlock(1, 3)]), n=3)
    assert pc.verify_equivalence(bare, ideal, sys, "physical").cls == "fail"


def test_verify_equivalence_identity_vs_sigma_x():
    rep = pc.verify_equivalence(PulseSequence(), qs.SX)
    assert rep.cls == "fail"


def test_verify_equivalence_finds_local_z_phases():
    rng = np.random.default_rng(11)
    u = c.randomization_unitary()
    dl = np.diag(qs.z_rotation(rng.uniform(-3, 3, 3), 3))
    dr = np.diag(qs.z_rotation(rng.uniform(-3, 3, 3), 3))
    rep = pc.verify_equivalence(dl @ u @ dr * np.exp(0.3j), u)
    assert rep.cls == "local_z_phase"
    assert rep.residual < 1e-10
    assert len(rep.fitted_phases["left"]) == 3


# -- physical simulation -----------------------------------------------------

def test_simulate_randomization_gives_hidden_state():
    sys = SYSTEM.on_resonance()
    seq = pc.expand_macros(pc.compile_randomization(), sys)
    for th, ph in [(0.5, 0.5), (np.pi / 2, np.pi / 2), (2.0, 5.0)]:
        rho = pc.simulate_physical(seq, pc.hidden_input(th, ph), sys)
        target = c.run_protocol(th, ph).hidden_state
        _, fid = qs.fit_z_phases(rho, target)
        assert fid >= 0.999


def test_pi_pulse_inverts():
    rho = pc.simulate_physical(PulseSequence([RF(1, PI, X)]), qs.projector(qs.ket("000")), SYSTEM)
    assert np.allclose(rho, qs.projector(qs.ket("100")), atol=1e-15)


def test_t2_decay_single_delay():
    sys = SYSTEM
    psi = qs.kron(qs.KET0, np.array([1, 1]) / np.sqrt(2), qs.KET0)
    rho = pc.simulate_physical(PulseSequence([Delay(0.7)]), qs.projector(psi), sys,
                               pc.NoiseModel(t2_enabled=True))
    assert abs(rho[0b010, 0b000]) == pytest.approx(0.5 * np.exp(-1), rel=1e-12)
    assert rho[0, 0] == pytest.approx(0.5)


def test_gradient_removes_coherences():
    psi = qs.kron(np.array([1, 1]) / np.sqrt(2), np.array([1, 1]) / np.sqrt(2), qs.KET0)
    rho = pc.simulate_physical(PulseSequence([Gradient()]), qs.projector(psi), SYSTEM)
    assert rho[0b000, 0b100] == 0
    assert rho[0b000, 0b110] == 0
    # zero-quantum element 010 <-> 100 survives the idealized gradient
    assert rho[0b010, 0b100] == pytest.approx(0.25)


def test_simulate_rejects_macros():
    with pytest.raises(ValueError):
        pc.simulate_physical(pc.compile_randomization(), np.eye(8) / 8, SYSTEM)


def test_zero_noise_members_identical():
    seq = pc.expand_macros(pc.compile_full(1.0, 1.0), SYSTEM)
    members = pc.simulate_physical(seq, qs.projector(qs.ket("000")), SYSTEM,
                                   pc.NoiseModel(0.0, 5), return_members=True)
    for m in members[1:]:
        assert np.array_equal(m, members[0])


def test_noise_fidelity_monotone():
    th, ph = np.pi / 2, np.pi / 2
    seq = pc.expand_macros(pc.compile_full(th, ph), SYSTEM)
    target = qs.kron(qs.PHI_PLUS, c.prepare_psi(th, ph))
    fids = []
    for sigma in (0, 0.01, 0.03, 0.05):
        rho = pc.simulate_physical(seq, qs.projector(qs.ket("000")), SYSTEM, pc.NoiseModel(sigma, 200, seed=3))
        fids.append(qs.fidelity_pure(target, rho))
    assert fids[0] > 1 - 1e-12
    assert all(a >= b for a, b in zip(fids, fids[1:]))


def test_noise_model_validation():
    with pytest.raises(ValueError):
        pc.NoiseModel(-0.1)
    with pytest.raises(ValueError):
        pc.NoiseModel(0.1, 0)


def test_spin_system_validation():
    with pytest.raises(ValueError):
        pc.SpinSystem((0, 0), [[0, 1], [2, 0]], (1, 1))
    with pytest.raises(ValueError):
        pc.SpinSystem((0, 0), [[0, 1], [1, 0]], (1, 0))
    s = pc.SpinSystem.default()
    assert s.coupling(1, 3) == 224.5 and s.coupling(3, 2) == -310.9 and s.coupling(1, 2) == 49.7
    assert min(s.t2) == s.t2[1] == 0.7


# -- text listings -------------------------------------------------------------

def test_listing_format():
    seq = PulseSequence([RF(1, HALF, MX), Delay(2.227e-3), Gradient()])
    assert seq.listing() == "RF spin=1 flip=90deg phase=-x\nDELAY 2.227ms\nGRAD\n"
    # delays keep enough digits to survive a round trip
    assert pc.parse_listing(PulseSequence([Delay(1 / 449)]).listing()).elements[0].duration == pytest.approx(1 / 449, rel=1e-11)


def test_listing_round_trip_macros():
    seq = pc.compile_full(1.234, 5.678)
    back = pc.parse_listing(seq.listing())
    assert len(back) == len(seq)
    assert np.allclose(pc.sequence_unitary(back), pc.sequence_unitary(seq), atol=1e-10)


def test_listing_round_trip_expanded():
    seq = pc.expand_macros(pc.compile_full(np.pi / 2, np.pi / 2), SYSTEM)
    back = pc.parse_listing(seq.listing())
    rep = pc.verify_equivalence(back, pc.full_target(np.pi / 2, np.pi / 2), SYSTEM, "physical")
    assert rep.cls != "fail"


def test_parse_listing_errors():
    with pytest.raises(ValueError, match="line 2"):
        pc.parse_listing("GRAD\nRF spin=1 flip=ninety phase=x\n")
    with pytest.raises(ValueError):
        pc.parse_listing("FOO 1 2")


def test_full_sequence_duration():
    seq = pc.expand_macros(pc.compile_full(0.3, 0.3), SYSTEM)
    expected = 1 / (2 * 224.5) + 1 / (2 * 49.7) + 2 / (2 * 310.9)
    assert seq.duration() == pytest.approx(expected, rel=1e-12)
