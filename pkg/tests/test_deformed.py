import numpy as np
import pytest

from phasetomo import cstomo, deformed, fock, pntomo
from phasetomo.errors import ScaleOverflowError, SpecError, TruncationError


def q_spec(lam_q, s=0.0):
    return deformed.DeformationSpec(preset="q", lambda_q=lam_q, s=s)


def test_q_profile_value():
    # f(n)^2 = sinh(lam n)/(lam n)
    for n in (1, 2, 5):
        got = deformed.q_deformation_value(n, 0.7)
        want = np.sqrt(np.sinh(0.7 * n) / (0.7 * n))
        assert abs(got - want) < 1e-14
    assert deformed.q_deformation_value(0, 0.7) == 1.0
    # pinned product at lambda_q = 1
    p = deformed.q_deformation_value(1, 1.0) * deformed.q_deformation_value(2, 1.0)
    assert abs(p - 1.4598) < 1e-4


def test_spec_json_roundtrip():
    spec = q_spec(0.25, s=0.3)
    again = deformed.DeformationSpec.from_json(spec.to_json())
    assert again.preset == "q" and again.lambda_q == 0.25 and again.s == 0.3
    tab = deformed.DeformationSpec(preset="table", f_table=[1.0, 1.1, 0.9, 1.3], s=-0.2)
    again = deformed.DeformationSpec.from_json(tab.to_json())
    np.testing.assert_array_equal(again.f_table, tab.f_table)
    assert again.s == -0.2


def test_spec_validation():
    with pytest.raises(SpecError):
        deformed.DeformationSpec(preset="q", lambda_q=0.2, s=1.5)
    with pytest.raises(SpecError):
        deformed.DeformationSpec(preset="q")
    with pytest.raises(SpecError):
        deformed.DeformationSpec(preset="table", f_table=[0.9, 1.0])
    with pytest.raises(SpecError):
        deformed.DeformationSpec(preset="table", f_table=[1.0, -0.5])
    with pytest.raises(SpecError):
        deformed.DeformationSpec(preset="sine")


def test_deformation_operator_and_range_guard():
    spec = q_spec(0.3)
    E = deformed.deformation_operator(spec, 6)
    f = spec.f_values(6)
    np.testing.assert_allclose(np.diag(E.entries).real, np.cumprod(f), rtol=1e-12)
    # [f(n)]! growing like 10^n leaves the admissible window
    big = deformed.DeformationSpec(preset="table",
                                   f_table=[1.0] + [10.0] * 150)
    with pytest.raises(SpecError):
        deformed.deformation_operator(big, 140)


def test_ladder_number_relation():
    # A_f+ A = nhat regardless of the profile
    spec = q_spec(0.4)
    A, A_fd = deformed.deformed_ladder(spec, 10)
    prod = A_fd.entries @ A.entries
    np.testing.assert_allclose(np.diag(prod).real, np.arange(11), rtol=1e-13)
    assert np.abs(prod - np.diag(np.diag(prod))).max() == 0.0


def test_q_commutation_identity():
    # A A+ - q A+ A = (sinh lam / lam) q^{-nhat} with q = e^{lam}, A = a f_q(nhat)
    lam = 0.2
    N = 12
    spec = q_spec(lam)
    A, _ = deformed.deformed_ladder(spec, N)
    Ad = A.entries.conj().T
    q = np.exp(lam)
    lhs = A.entries @ Ad - q * Ad @ A.entries
    rhs = (np.sinh(lam) / lam) * np.diag(q ** -np.arange(N + 1.0))
    # the last diagonal entry carries the truncation artifact, compare interior
    assert np.abs(lhs - rhs)[:-1, :-1].max() < 1e-13


def test_coherent_state_eigenvalue_rows():
    spec = q_spec(0.15, s=0.0)
    z = 0.9 - 0.4j
    st = deformed.deformed_coherent_state(z, spec, 40)
    v = st.vector.amplitudes
    A, _ = deformed.deformed_ladder(spec, 40)
    resid = A.entries @ v - z * v
    assert np.abs(resid[:-1]).max() < 1e-12
    # edge row only sees the amplitude the truncation removed
    assert abs(resid[-1]) <= abs(z) * np.sqrt(st.vector.tail_mass) + 1e-15


def test_full_state_norm_tracks_s():
    # || e^{(1+s)u/2} N E^{-1} |z> ||^2 = e^{s u}
    spec = q_spec(0.1, s=0.4)
    z = 1.2
    st = deformed.deformed_coherent_state(z, spec, 50)
    full = st.full_amplitudes
    got = float(np.vdot(full, full).real)
    assert abs(got - np.exp(0.4 * abs(z) ** 2)) < 1e-10


def test_identity_preset_reduces_to_plain():
    spec = deformed.DeformationSpec(preset="identity")
    z = 0.8 + 0.5j
    st = deformed.deformed_coherent_state(z, spec, 30)
    plain = fock.coherent_state(z, 30)
    assert np.abs(st.full_amplitudes - plain.amplitudes).max() < 1e-14
    rng = np.random.default_rng(4)
    H = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
    B = fock.FockOperator(7, H + H.conj().T)
    got = deformed.deformed_K(B, z, spec)
    want = cstomo.husimi_values(B, [z])[0]
    assert abs(got - want) < 1e-12 * max(1.0, abs(want))


def test_displacement_closed_form():
    spec = q_spec(0.1)
    D0 = deformed.deformed_displacement(0.0, spec, 8)
    np.testing.assert_array_equal(D0.entries, np.eye(9, dtype=complex))
    # first column is the nonlinear coherent vector before normalization
    z = 0.6 + 0.3j
    Df = deformed.deformed_displacement(z, spec, 25)
    st = deformed.deformed_coherent_state(z, spec, 25)
    want = st.vector.amplitudes / st.norm_factor
    assert np.abs(Df.entries[:, 0] - want).max() < 1e-12


def test_grid_scale_guard():
    spec = q_spec(0.1, s=1.0)
    with pytest.raises(ScaleOverflowError):
        deformed.deformed_coherent_state(28.0, spec, 10)
    grid = cstomo.PhaseGrid.polar(20.0, 150, 8)
    B = fock.FockOperator(3, np.eye(3, dtype=complex))
    with pytest.raises(ScaleOverflowError):
        deformed.deformed_k_grid(B, grid, spec)


def test_norm_series_needs_enough_f_values():
    short = deformed.DeformationSpec(preset="table", f_table=np.ones(8))
    with pytest.raises(TruncationError):
        deformed.deformed_norm_log(2.0, short, 7)


def test_roundtrip_both_routes_agree():
    spec = q_spec(0.1)
    rng = np.random.default_rng(11)
    d = 5
    H = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    B = fock.FockOperator(d, H + H.conj().T)
    grid = cstomo.default_frame_grid(d - 1)
    tom = deformed.deformed_k_grid(B, grid, spec)
    rec_c = deformed.deformed_reconstruct(tom, spec, d - 1, route="conjugation")
    rec_f = deformed.deformed_reconstruct(tom, spec, d - 1, route="frame")
    assert np.abs(rec_c.entries - B.entries).max() < 1e-5
    assert np.abs(rec_f.entries - B.entries).max() < 1e-5
    assert np.abs(rec_c.entries - rec_f.entries).max() < 1e-4
    with pytest.raises(ValueError):
        deformed.deformed_reconstruct(tom, spec, d - 1, route="direct")


def test_deformed_pn_gram_identity_limit():
    params = pntomo.PNKernelParams(0.3)
    spec = deformed.DeformationSpec(preset="identity")
    # z = 0: both kernels are the same diagonal
    G0 = deformed.deformed_pn_gram(2, 0.0, spec, params, 8)
    P0 = pntomo.pn_gram(2, 0.0, params, 8)
    assert np.abs(G0.entries - P0.entries).max() < 1e-14
    # displaced node: the contraction runs over extended columns, so its
    # block should match the top-left corner of a much larger square kernel
    z = 0.7 - 0.3j
    G = deformed.deformed_pn_gram(1, z, spec, params, 8)
    P = pntomo.pn_gram(1, z, params, 60).entries[:9, :9]
    scale = np.abs(P).max()
    assert np.abs(G.entries - P).max() < 1e-12 * scale
    # the same-size square form differs exactly by the dropped gamma^k tail
    P_small = pntomo.pn_gram(1, z, params, 8).entries
    gap = np.abs(G.entries - P_small).max()
    assert gap < abs(params.gamma) ** 9 * scale


def test_f_scalar_product_adjointness():
    # (phi, A psi)_f = (A_f+ phi, psi)_f
    spec = q_spec(0.3)
    rng = np.random.default_rng(3)
    d = 9
    phi = fock.FockVector(d, rng.normal(size=d) + 1j * rng.normal(size=d))
    psi = fock.FockVector(d, rng.normal(size=d) + 1j * rng.normal(size=d))
    A, A_fd = deformed.deformed_ladder(spec, d - 1)
    lhs = deformed.f_scalar_product(phi, fock.FockVector(d, A.entries @ psi.amplitudes), spec)
    rhs = deformed.f_scalar_product(fock.FockVector(d, A_fd.entries @ phi.amplitudes), psi, spec)
    assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))
