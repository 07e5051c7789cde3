import itertools
import math

import numpy as np
import pytest

from spacetime_bell import protocol as pr
from spacetime_bell.hilbert import StateVector, apply, inner
from spacetime_bell.protocol import (
    BobRegister,
    GeometryLabel,
    ModeTag,
    ProtocolOrderError,
    SMHypothesis,
    Stage,
    TrialInputs,
)

HYPS = list(SMHypothesis)
R2 = 1 / math.sqrt(2)
C8, S8 = math.cos(math.pi / 8), math.sin(math.pi / 8)
BITS = (0, 1)


@pytest.fixture(scope="module")
def schedule():
    return pr.default_schedule()


@pytest.fixture(scope="module", params=HYPS, ids=lambda h: h.value)
def exact(request):
    return pr.exact_distribution(request.param)


def oracle_table():
    """P(a, b, s | inputs) from a plain-numpy computation with Bob acting first.

    Alice's and Bob's operations commute, so the joint outcome statistics of
    Alice's basis measurement and Bob's worldline measurement are
    |(<phi^a| x <b|) (1 x U) |singlet>|^2. With beta' = 0 the geometry bit
    equals b; with beta' = 1 it takes b's distribution and b is reported 0.
    """
    vec = {
        (0, 0): [[1, 0], [0, 1]],
        (1, 0): [[R2, R2], [R2, -R2]],
        (0, 1): [[C8, S8], [-S8, C8]],
        (1, 1): [[S8, C8], [-C8, S8]],
    }
    umic = {0: np.eye(2), 1: np.array([[R2, R2], [-R2, R2]])}
    singlet = np.array([0, R2, -R2, 0])
    p = np.zeros((2,) * 7)
    for al, alp, be, bep in itertools.product(BITS, repeat=4):
        psi = np.kron(np.eye(2), umic[be]) @ singlet
        for a, x in itertools.product(BITS, repeat=2):
            proj = np.kron(np.array(vec[al, alp][a]), np.eye(2)[x])
            prob = abs(proj.conj() @ psi) ** 2
            if bep == 0:
                p[a, x, x, al, alp, be, bep] += prob
            else:
                p[a, 0, x, al, alp, be, bep] += prob
    return p


def test_singlet_amplitudes():
    psi = pr.make_singlet()
    assert np.allclose(psi.amps, [0, R2, -R2, 0], atol=0)
    assert abs(np.linalg.norm(psi.amps) - 1) <= 1e-15


@pytest.mark.parametrize("alpha,alpha_p", list(itertools.product(BITS, repeat=2)))
def test_singlet_is_antisymmetric_in_every_basis(alpha, alpha_p):
    b = pr.alice_basis(alpha, alpha_p)
    from spacetime_bell.hilbert import tensor
    form = StateVector(pr.make_singlet().labels, R2 * (tensor(b[0], b[1]).amps - tensor(b[1], b[0]).amps))
    # equal up to the determinant of the basis change (+1 or -1)
    assert form.equal_up_to_phase(pr.make_singlet())


def test_basis_vectors_literal():
    assert pr.alice_basis(0, 0)[1].allclose(StateVector((0, 1), [0, 1]))
    assert pr.alice_basis(1, 0)[1].allclose(StateVector((0, 1), [R2, -R2]))
    assert pr.alice_basis(0, 1)[0].allclose(StateVector((0, 1), [C8, S8]))
    assert pr.alice_basis(0, 1)[1].allclose(StateVector((0, 1), [-S8, C8]))
    assert pr.alice_basis(1, 1)[0].allclose(StateVector((0, 1), [S8, C8]))
    assert pr.alice_basis(1, 1)[1].allclose(StateVector((0, 1), [-C8, S8]))


def test_u_mic_identity_for_beta_zero():
    psi = pr.alice_basis(0, 1)[0]
    assert apply(pr.u_mic(0), psi).allclose(psi)


@pytest.mark.parametrize("a", BITS)
def test_u_mic_defining_relations(a):
    U = pr.u_mic(1)
    had, comp = pr.alice_basis(1, 0), pr.alice_basis(0, 0)
    assert apply(U, had[a]).allclose(StateVector(comp[a].labels, (-1) ** a * comp[a].amps))
    assert apply(U, comp[a]).allclose(had[1 - a])


def test_u_mic_unitary_from_relations():
    # matrix built only from the images of the computational basis
    had = pr.alice_basis(1, 0)
    M = np.column_stack([had[1].amps, had[0].amps])
    assert np.max(np.abs(M.conj().T @ M - np.eye(2))) <= 1e-12
    assert np.allclose(M, pr.u_mic(1).matrix, atol=1e-15)


def test_register_transitions(schedule):
    c0, c1 = 0.6, 0.8j
    reg = BobRegister(StateVector((0, 1), [c0, c1]))
    at3 = pr.u_mac(reg, schedule)
    assert at3.mode == ModeTag.path(schedule.t(3))
    at5 = pr.u_pos(at3, schedule.t(5), schedule)
    assert at5.mode == ModeTag.path(schedule.t(5))
    assert at5.logical.allclose(reg.logical)
    fin = pr.u_mac_prime(at5, schedule)
    assert fin.mode.stage is Stage.MIC_FIN
    assert fin.logical.allclose(reg.logical)


def test_u_mac_classical_input(schedule):
    reg = pr.u_mac(BobRegister(StateVector.basis((0, 1), 0)), schedule)
    assert reg.geometry() is GeometryLabel.G0


def test_register_order_errors(schedule):
    reg = BobRegister(StateVector.basis((0, 1), 1))
    with pytest.raises(ProtocolOrderError):
        pr.u_pos(reg, schedule.t(4), schedule)
    with pytest.raises(ProtocolOrderError):
        pr.u_mac_prime(reg, schedule)
    at3 = pr.u_mac(reg, schedule)
    with pytest.raises(ProtocolOrderError):
        pr.u_mac(at3, schedule)
    with pytest.raises(ProtocolOrderError):
        pr.u_pos(at3, schedule.t(6), schedule)
    at4 = pr.u_pos(at3, schedule.t(4), schedule)
    with pytest.raises(ProtocolOrderError):
        pr.u_pos(at4, schedule.t(3), schedule)
    with pytest.raises(ProtocolOrderError):
        pr.u_mac_prime(at4, schedule)
    at5 = pr.u_pos(at4, schedule.t(5), schedule)
    with pytest.raises(ProtocolOrderError):
        pr.sm_branches(at5, SMHypothesis.BORN_REDUCE, schedule)


@pytest.mark.parametrize("hyp", HYPS)
def test_sm_on_classical_register(hyp, schedule):
    reg = pr.u_mac(BobRegister(StateVector.basis((0, 1), 0)), schedule)
    rng = np.random.default_rng(0)
    for _ in range(20):
        s, post = pr.sm_measure(reg, hyp, rng, schedule)
        assert s == 0
        assert post.logical.allclose(reg.logical)


def test_sm_born_reduce_probabilities(schedule):
    c0, c1 = 0.6, 0.8
    reg = pr.u_mac(BobRegister(StateVector((0, 1), [c0, c1])), schedule)
    branches = pr.sm_branches(reg, SMHypothesis.BORN_REDUCE, schedule)
    assert [b.probability for b in branches] == pytest.approx([c0**2, c1**2], abs=1e-15)
    post = branches[1].state
    assert post.logical.equal_up_to_phase(StateVector.basis((0, 1), 1))
    assert post.mode == ModeTag.path(schedule.t(4))


def test_sm_no_change_keeps_state(schedule):
    reg = pr.u_mac(BobRegister(StateVector((0, 1), [0.6, 0.8])), schedule)
    for br in pr.sm_branches(reg, SMHypothesis.NO_CHANGE, schedule):
        assert br.state is reg
    (deferred,) = pr.sm_branches(reg, SMHypothesis.NO_CHANGE, schedule, defer=True)
    assert deferred.value is None and deferred.state is reg


def test_sm_born_reduce_frequency(schedule):
    reg = pr.u_mac(BobRegister(StateVector((0, 1), [R2, R2])), schedule)
    rng = np.random.default_rng(5)
    n = 100_000
    ones = sum(pr.sm_measure(reg, SMHypothesis.BORN_REDUCE, rng, schedule)[0] for _ in range(n))
    assert abs(ones / n - 0.5) <= 0.02


@pytest.mark.parametrize("alpha", BITS)
@pytest.mark.parametrize("alpha_p", BITS)
def test_bob_qubit_after_alice(alpha, alpha_p):
    basis = pr.alice_basis(alpha, alpha_p)
    for br in pr.alice_branches(alpha, alpha_p):
        assert br.probability == pytest.approx(0.5, abs=1e-12)
        assert br.state.equal_up_to_phase(basis[1 - br.value])


@pytest.mark.parametrize("hyp", HYPS)
@pytest.mark.parametrize("alpha", BITS)
def test_matching_settings_anticorrelate(hyp, alpha):
    rng = np.random.default_rng(alpha)
    for _ in range(200):
        rec = pr.run_trial(TrialInputs(alpha, 0, alpha, 0), hyp, rng)
        assert rec.b == 1 - rec.a and rec.s == 1 - rec.a


@pytest.mark.parametrize("hyp", HYPS)
def test_trial_invariants(hyp, schedule):
    rng = np.random.default_rng(17)
    for rec in pr.run_trials(4000, hyp, rng):
        if rec.inputs.beta_p == 1:
            assert rec.b == 0
        else:
            assert rec.s == rec.b
        assert rec.event_times == {"a": schedule.t(2), "s": schedule.t(4), "b": schedule.t(6)}
        assert rec.event_times["a"] <= schedule.t(2)


def test_run_trials_pinning():
    rng = np.random.default_rng(1)
    recs = pr.run_trials(50, SMHypothesis.NO_CHANGE, rng, alpha_p=1, beta_p=1)
    assert all(r.inputs.alpha_p == 1 and r.inputs.beta_p == 1 for r in recs)
    with pytest.raises(TypeError):
        pr.run_trials(1, SMHypothesis.NO_CHANGE, rng, gamma=1)


def test_same_seed_same_trials():
    a = pr.run_trials(500, SMHypothesis.BORN_REDUCE, np.random.default_rng(8))
    b = pr.run_trials(500, SMHypothesis.BORN_REDUCE, np.random.default_rng(8))
    assert a == b


def test_exact_matches_bob_first_oracle(exact):
    assert np.max(np.abs(exact.probs - oracle_table())) <= 1e-12


def test_pas_matches_closed_form(exact):
    pas = exact.probs.sum(axis=1)
    for a, s, al, alp, be, bep in itertools.product(BITS, repeat=6):
        assert pas[a, s, al, alp, be, bep] == pytest.approx(pr.closed_form_pas(a, s, al, alp, be), abs=1e-12)


def test_pab_matches_closed_form_when_measuring(exact):
    pab = exact.probs.sum(axis=2)
    for a, b, al, alp, be in itertools.product(BITS, repeat=5):
        assert pab[a, b, al, alp, be, 0] == pytest.approx(pr.closed_form_pas(a, b, al, alp, be), abs=1e-12)


@pytest.mark.parametrize("a", BITS)
@pytest.mark.parametrize("s", BITS)
def test_closed_form_chsh_slice(a, s):
    minus = 0.5 * 0.5 * (1 - (-1) ** (a ^ s) / math.sqrt(2))
    plus = 0.5 * 0.5 * (1 + (-1) ** (a ^ s) / math.sqrt(2))
    assert pr.closed_form_pas(a, s, 0, 1, 0) == pytest.approx(minus, abs=1e-12)
    assert pr.closed_form_pas(a, s, 0, 1, 1) == pytest.approx(minus, abs=1e-12)
    assert pr.closed_form_pas(a, s, 1, 1, 1) == pytest.approx(minus, abs=1e-12)
    assert pr.closed_form_pas(a, s, 1, 1, 0) == pytest.approx(plus, abs=1e-12)


@pytest.mark.parametrize("al,alp,be", list(itertools.product(BITS, repeat=3)))
def test_closed_form_normalized(al, alp, be):
    total = sum(pr.closed_form_pas(a, s, al, alp, be) for a in BITS for s in BITS)
    assert total == pytest.approx(1.0, abs=1e-12)


def test_bob_never_disagrees_with_geometry(exact):
    for a, b in itertools.product(BITS, repeat=2):
        assert np.all(exact.probs[a, b, 1 - b, :, :, :, 0] == 0.0)


def test_anticorrelated_branch_probability(exact):
    for a, al in itertools.product(BITS, repeat=2):
        assert exact(a, 1 - a, 1 - a, al, 0, al, 0) == pytest.approx(0.5, abs=1e-12)


def test_bs_diagonal_is_half(exact):
    pbs = exact.probs.sum(axis=0)
    for b, al, alp, be in itertools.product(BITS, repeat=4):
        assert pbs[b, b, al, alp, be, 0] == pytest.approx(0.5, abs=1e-12)


def test_hypotheses_agree_exactly():
    p = pr.exact_distribution(SMHypothesis.NO_CHANGE)
    q = pr.exact_distribution(SMHypothesis.BORN_REDUCE)
    assert p.total_variation(q) <= 1e-12


@pytest.mark.parametrize("hyp", HYPS)
def test_monte_carlo_converges_to_exact(hyp):
    from spacetime_bell import stats

    n = 100_000
    est = stats.estimate(pr.run_trials(n, hyp, np.random.default_rng(2718)))
    n_min = int(est.counts.min())
    bound = 4 * math.sqrt(math.log(2 * 128) / (2 * n_min))
    dev = np.max(np.abs(est.distribution.probs - pr.exact_distribution(hyp).probs))
    assert dev <= bound


def test_infeasible_schedule_refused():
    from spacetime_bell.spacetime import BudgetError, build_schedule, reference_budget, C

    with pytest.raises(BudgetError, match="long_range_entanglement"):
        build_schedule(reference_budget(D_ent=1.0 * C))


def test_overlap_sanity():
    # complementary outcome vectors of the same basis are orthogonal
    b = pr.alice_basis(0, 1)
    assert abs(inner(b[0], b[1])) <= 1e-15
