"""Named verification suites with residual tables.

Each suite returns a list of Check rows (name, residual, tol); the CLI and
the test suite both run these, so a passing `verify all` and a passing
pytest agree on what "healthy" means.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fock, cstomo, pntomo, qubit, deformed


@dataclass
class Check:
    name: str
    residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return bool(np.isfinite(self.residual)) and self.residual <= self.tol


def _rand_hermitian(rng, d: int) -> np.ndarray:
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (m + m.conj().T)


def suite_qubit(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = {"A1": 0.0, "A2": 0.0}
    for _ in range(100):
        A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        for form in ("A1", "A2"):
            rec = qubit.qubit_reconstruct(A, form=form)
            worst[form] = max(worst[form], float(np.linalg.norm(rec - A)))
    return [
        Check("qubit-roundtrip-A1", worst["A1"], 1e-10),
        Check("qubit-roundtrip-A2", worst["A2"], 1e-10),
    ]


def suite_cs_identity(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []

    grid = cstomo.PhaseGrid.polar(5.0, 24, 64)
    got = float((grid.weights * np.exp(-np.abs(grid.nodes) ** 2)).sum())
    checks.append(Check("unit-gaussian-quadrature", abs(got - 1.0), 1e-10))

    vac = fock.build_state("fock", 0, 12)
    tom = cstomo.k_grid(vac, cstomo.PhaseGrid.polar(6.0, 24, 64))
    checks.append(Check("vacuum-k-integral", abs(tom.meta["integral"][0] - 1.0), 1e-10))

    # K of a coherent projector is a Gaussian bump centered on its amplitude
    w = 0.8 - 0.6j
    proj = fock.build_state("coherent", w, 40)
    zs = np.array([1.5, -0.4 + 1.1j, 0.2 - 0.3j, w])
    vals = cstomo.husimi_values(proj, zs)
    ref = np.exp(-np.abs(zs - w) ** 2)
    checks.append(Check("coherent-k-peak", float(np.abs(vals - ref).max()), 1e-10))

    # covariance: the K symbol of the lowering operator is z itself
    a, _, _ = fock.ladder_operators(40)
    vals = cstomo.husimi_values(a, zs)
    checks.append(Check("lowering-symbol", float(np.abs(vals - zs).max()), 1e-9))

    A = fock.FockOperator(7, _rand_hermitian(rng, 7))
    rec = cstomo.reconstruct_from_K(cstomo.k_callable(A), 6)
    checks.append(Check("k-inversion-roundtrip", float(np.abs(rec.entries - A.entries).max()), 1e-6))

    frame = cstomo.dual_frame(cstomo.PhaseGrid.polar(5.0, 24, 32), 4)
    checks.append(Check("frame-basis-residual", frame.basis_residual, 1e-7))
    vac4 = fock.build_state("fock", 0, 4)
    fv = cstomo.frame_reconstruct(frame, cstomo.k_grid(vac4, frame.grid))
    checks.append(Check("frame-vacuum-roundtrip", float(np.abs(fv.entries - vac4.entries).max()), 1e-7))
    # n-hat carries |z|^2 weight, so its K-integral needs the wider default grid
    frame6 = cstomo.dual_frame(cstomo.default_frame_grid(4), 4)
    _, _, num = fock.ladder_operators(4)
    fn = cstomo.frame_reconstruct(frame6, cstomo.k_grid(num, frame6.grid))
    checks.append(Check("frame-number-roundtrip", float(np.abs(fn.entries - num.entries).max()), 1e-6))

    B = fock.FockOperator(13, _rand_hermitian(rng, 13))
    z = 0.9 + 0.4j
    dq = abs(cstomo.quasi_distribution(B, z, 1.0) - cstomo.husimi_K(B, z))
    checks.append(Check("wick-limit-husimi", float(dq), 1e-12))

    th = fock.build_state("thermal", 1.0, 60)
    ptom = cstomo.p_function_grid(th, cstomo.PhaseGrid.cartesian(9.0, 144))
    mask = np.abs(ptom.grid.nodes) <= 3.0
    pref = np.exp(-np.abs(ptom.grid.nodes[mask]) ** 2 / 1.0) / 1.0
    checks.append(Check("p-thermal-profile", float(np.abs(ptom.values[mask] - pref).max()), 1e-4))
    checks.append(Check("p-thermal-mass", abs(ptom.meta["integral"][0] - 1.0), 1e-6))
    return checks


def suite_pn_identity(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []

    par = pntomo.PNKernelParams(1.0 / 3.0)
    g = pntomo.pn_gram(0, 0.0, par, 8)
    ref = 4.5 * np.diag((-0.5) ** np.arange(9)).astype(complex)
    checks.append(Check("gram-diagonal-origin", float(np.abs(g.entries - ref).max()), 1e-12))

    par = pntomo.PNKernelParams(0.3)
    grid = pntomo.default_pn_grid(5.0, 4)
    n_max = pntomo.auto_n_max(4, 5.0, par)
    table = pntomo.pn_duality_table(par, n_max, grid, 4)
    checks.append(Check("duality-table", float(np.abs(table).max()), 1e-5))

    vac = fock.build_state("fock", 0, 4)
    tomv = pntomo.pn_tomogram_grid(vac, n_max, grid)
    rec = pntomo.pn_reconstruct(tomv, par, 4)
    checks.append(Check("vacuum-roundtrip", float(np.abs(rec.entries - vac.entries).max()), 1e-6))

    rho = _rand_hermitian(rng, 5)
    rho = rho @ rho.conj().T
    rho = fock.FockOperator(5, (rho / np.trace(rho)).astype(complex))
    tomr = pntomo.pn_tomogram_grid(rho, n_max, grid)
    recr = pntomo.pn_reconstruct(tomr, par, 4)
    checks.append(Check("random-density-roundtrip", float(np.abs(recr.entries - rho.entries).max()), 1e-5))

    # position representation of the dual kernel: closed form vs Fock sum
    worst = 0.0
    for _ in range(5):
        n = int(rng.integers(0, 4))
        z = complex(*rng.normal(scale=0.7, size=2))
        x, y = rng.uniform(-2, 2, size=2)
        lam = float(rng.uniform(0.15, 0.8))
        p = pntomo.PNKernelParams(lam)
        closed = pntomo.pn_gram_position_element(n, z, p, x, y)
        ks = np.arange(61)
        wx = np.array([fock.displaced_number_wavefunction(k, z, x) for k in ks])
        wy = np.array([fock.displaced_number_wavefunction(k, z, y) for k in ks])
        direct = 4.0 / (1 - lam ** 2) * p.beta ** n * np.sum(p.gamma ** ks * wx * wy.conj())
        worst = max(worst, abs(closed - direct))
    checks.append(Check("position-element", float(worst), 1e-8))

    # displaced level populations of a state sum to its trace
    th = fock.build_state("thermal", 1.0, 60)
    col = pntomo.pn_tomogram_grid(th, 110, cstomo.PhaseGrid.polar(5.0, 24, 4)).values
    checks.append(Check("level-completeness", float(np.abs(col.sum(axis=0) - 1.0).max()), 1e-8))
    return checks


def suite_deformed(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    checks = []

    ident = deformed.DeformationSpec(preset="identity", s=0.0)
    B = fock.FockOperator(21, _rand_hermitian(rng, 21))
    z = 1.1 - 0.5j
    dk = abs(deformed.deformed_K(B, z, ident) - cstomo.husimi_K(B, z))
    checks.append(Check("identity-k-equivalence", float(dk), 1e-12))

    qs = deformed.DeformationSpec(preset="q", lambda_q=0.2)
    A, Afd = deformed.deformed_ladder(qs, 20)
    comm = A.entries @ Afd.entries - Afd.entries @ A.entries
    checks.append(Check("interior-commutator", float(np.abs(comm[:20, :20] - np.eye(20)).max()), 1e-12))

    lam = 0.2
    n_ar = np.arange(21, dtype=float)
    aq, aqd = A.entries, A.entries.conj().T
    lhs = aq @ aqd - np.exp(lam) * aqd @ aq
    corr = (np.sinh(lam) / lam) * np.diag(np.exp(-lam * n_ar))
    checks.append(Check("q-commutation-corrected", float(np.abs((lhs - corr)[:20, :20]).max()), 1e-10))

    sp = deformed.DeformationSpec(preset="q", lambda_q=0.3, s=-0.5)
    st = deformed.deformed_coherent_state(1.1 - 0.6j, sp, 60)
    n2 = st.s_prefactor ** 2 * float(np.sum(np.abs(st.vector.amplitudes) ** 2))
    checks.append(Check("norm-exp-su", abs(n2 - np.exp(-0.5 * abs(1.1 - 0.6j) ** 2)), 1e-10))

    Aop, _ = deformed.deformed_ladder(sp, 60)
    res = Aop.entries @ st.vector.amplitudes - (1.1 - 0.6j) * st.vector.amplitudes
    checks.append(Check("eigenvalue-interior", float(np.abs(res[:-1]).max()), 1e-12))

    sp6 = deformed.DeformationSpec(preset="q", lambda_q=0.1, s=0.0)
    B6 = fock.FockOperator(7, _rand_hermitian(rng, 7))
    grid = cstomo.PhaseGrid.polar(5.0, 24, 32)
    tom = deformed.deformed_k_grid(B6, grid, sp6)
    rec = deformed.deformed_reconstruct(tom, sp6, 6, route="conjugation")
    checks.append(Check("conjugation-roundtrip", float(np.abs(rec.entries - B6.entries).max()), 1e-5))

    B4 = fock.FockOperator(5, _rand_hermitian(rng, 5))
    grid4 = cstomo.PhaseGrid.polar(6.0, 24, 64)
    tom4 = deformed.deformed_k_grid(B4, grid4, sp6)
    r1 = deformed.deformed_reconstruct(tom4, sp6, 4, route="conjugation")
    r2 = deformed.deformed_reconstruct(tom4, sp6, 4, route="frame")
    checks.append(Check("route-agreement", float(np.abs(r1.entries - r2.entries).max()), 1e-4))
    return checks


def suite_mehler(seed: int = 0) -> list[Check]:
    """Gaussian-kernel sum identity.

    Where the closed form sits far enough above the summation's rounding
    floor, the series must match it in relative terms.  At strongly
    anti-correlated (x, y) the closed form underflows the floor (it can be
    70 orders below the individual terms); there the honest statement is
    that the discrepancy never exceeds rounding relative to the term scale.
    """
    checks = []
    xs = np.linspace(-3.0, 3.0, 9)
    zetas = np.linspace(0.1, 0.9, 9)
    H = fock.hermite_functions(500, xs)
    Ha = np.abs(H)
    pref = np.sqrt(np.pi) * np.exp((xs[:, None] ** 2 + xs[None, :] ** 2) / 2.0)
    eps = np.finfo(float).eps
    worst_rel, worst_noise = 0.0, 0.0
    for zeta in zetas:
        zar = zeta ** np.arange(501)
        series = pref * ((H.T * zar) @ H)
        scale = pref * ((Ha.T * zar) @ Ha)
        closed = np.array([[pntomo.mehler(x, y, zeta, mode="closed") for y in xs] for x in xs])
        err = np.abs(series - closed)
        ok = np.abs(closed) > 1e8 * eps * scale
        worst_rel = max(worst_rel, float((err[ok] / np.abs(closed[ok])).max()))
        worst_noise = max(worst_noise, float((err / scale).max()))
    checks.append(Check("lattice-representable-rel", worst_rel, 1e-10))
    checks.append(Check("lattice-noise-floor", worst_noise, 1e-13))

    x = y = 0.7
    z99 = 0.99j
    rel = abs(pntomo.mehler(x, y, z99, mode="series", n_max=2000) -
              pntomo.mehler(x, y, z99, mode="closed")) / abs(pntomo.mehler(x, y, z99, mode="closed"))
    checks.append(Check("near-unit-modulus-series", float(rel), 1e-6))

    gaps = [abs(pntomo.mehler(x, y, rho * 1j, mode="closed") -
                pntomo.mehler(x, y, 1j, mode="closed")) for rho in (0.9, 0.99, 0.999)]
    mono = 0.0 if gaps[0] > gaps[1] > gaps[2] else 1.0
    checks.append(Check("unit-modulus-continuity", max(float(gaps[2]), mono), 5e-2))
    return checks


SUITES = {
    "qubit": suite_qubit,
    "cs-identity": suite_cs_identity,
    "pn-identity": suite_pn_identity,
    "deformed": suite_deformed,
    "mehler": suite_mehler,
}


def run_suites(names, seed: int = 0) -> list[tuple[str, Check]]:
    """Expand 'all', run each named suite, return (suite, check) rows."""
    if isinstance(names, str):
        names = [names]
    todo = []
    for n in names:
        if n == "all":
            todo.extend(SUITES)
        elif n in SUITES:
            todo.append(n)
        else:
            raise ValueError(f"unknown suite {n!r}; choose from {sorted(SUITES)} or 'all'")
    rows = []
    for n in todo:
        for chk in SUITES[n](seed=seed):
            rows.append((n, chk))
    return rows
