"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the collected lines are
repeated in the terminal summary.
"""
import subprocess
import sys

import numpy as np
import pytest

from oldroydb import diagnostics as dg
from oldroydb import linear_modes as lm
from oldroydb import littlewood_paley as lp
from oldroydb import solver as so
from oldroydb import spectral as sp
from oldroydb.spectral import SYM, ConstitutiveParams, Grid


def test_c01_eigenvalue_regimes(record_criterion):
    errs = []
    for r in (0.5, 1.0, 1.5):
        lp_, lm_, regime = lm.eigenvalues(r)
        errs.append(max(abs(lp_.real + r * r / 2), abs(lm_.real + r * r / 2)))
        assert regime == lm.OSCILLATORY
    osc = max(errs)
    lp2, lm2, regime2 = lm.eigenvalues(2.0)
    dbl = max(abs(lp2 + 2), abs(lm2 + 2))
    lp10, lm10, _ = lm.eigenvalues(10.0)
    ok = osc <= 1e-12 and dbl <= 1e-10 and regime2 == lm.DEGENERATE
    ok &= abs(lm10.real + 1.0102) <= 1e-3 and abs(lp10.real + 98.9898) <= 1e-3
    detail = (f"max|Re+r^2/2|={osc:.1e}, |double+2|={dbl:.1e}, "
              f"r=10: {lm10.real:.6f}, {lp10.real:.6f}")
    assert record_criterion(1, "eigenvalue regimes", ok, detail)


def test_c02_asymptotics(record_criterion):
    rows = lm.asymptotic_check([4, 8, 16, 32, 64])
    slow = max(abs(lam + 1) * r * r / 2 for r, _, lam in rows)
    fast = [ratio for r, ratio, _ in rows if r >= 16]
    ok = slow <= 1 and all(0.99 <= x <= 1 for x in fast)
    detail = f"max |l-+1|/(2/r^2)={slow:.4f}, l+/(-r^2) for r>=16 in [{min(fast):.6f}, {max(fast):.6f}]"
    assert record_criterion(2, "asymptotics", ok, detail)


def test_c03_propagator(record_criterion):
    times = np.linspace(0.0, 1.0, 11)
    worst = 0.0
    for r in (0.5, 1.0, 1.9, 2.0, 2.1, 5.0, 10.0):
        ref = lm.rk4_propagator(r, 1.0, dt=1e-4, times=times)
        for t, M in zip(times, ref):
            worst = max(worst, np.max(np.abs(lm.propagator(r, t) - M)))
    assert record_criterion(3, "propagator vs RK4", worst <= 1e-7, f"max entry error {worst:.2e}")


def test_c04_exact_identities(record_criterion):
    g = Grid(2, 64)
    part = lp.build_partition(g, 2)
    worst = {"cancellation": 0.0, "transport": 0.0}
    for i in range(50):
        rng = np.random.default_rng([4, i])
        s = so.State(0.0, sp.random_divfree(g, rng), sp.random_field(g, SYM, rng))
        res = dg.identity_suite(s, part)
        worst["cancellation"] = max(worst["cancellation"], res["cancellation"])
        worst["transport"] = max(worst["transport"], *(res[f"transport_{t}"] for t in ("u", "tau", "gamma", "w")))
    ok = max(worst.values()) <= 1e-10
    detail = f"cancellation {worst['cancellation']:.1e}, transport {worst['transport']:.1e} over 50 pairs"
    assert record_criterion(4, "exact identities", ok, detail)


def test_c05_partition(record_criterion):
    worst = {"unity": 0.0, "recon": 0.0, "ortho": 0.0}
    for g in (Grid(2, 128), Grid(3, 32)):
        part = lp.build_partition(g, 2)
        worst["unity"] = max(worst["unity"], lp.partition_defect(part))
        f = sp.drop_mean(sp.random_field(g, sp.VECTOR, np.random.default_rng(5), kmax=g.N / 2))
        rec = sum(lp.dyadic_block(f, part, j).coeffs for j in part.blocks)
        worst["recon"] = max(worst["recon"], np.max(np.abs(rec - f.coeffs)) / np.max(np.abs(f.coeffs)))
        S = part.symbols
        for a in range(part.nblocks):
            for b in range(a + 2, part.nblocks):
                worst["ortho"] = max(worst["ortho"], float(np.max(S[a] * S[b])))
    ok = worst["unity"] <= 1e-10 and worst["recon"] <= 1e-9 and worst["ortho"] <= 1e-12
    detail = f"|sum phi-1|={worst['unity']:.1e}, reconstruction {worst['recon']:.1e}, overlap {worst['ortho']:.1e}"
    assert record_criterion(5, "partition of unity", ok, detail)


def test_c06_linear_consistency(record_criterion):
    # default random-band data (1 <= |xi| <= 4); the explicit coupling error grows like (r dt)^2
    cfg = so.SimConfig(N=32, dt=2.5e-4, t_end=1.0, output_every=0.125, linear=True, keep_states=True, seed=6)
    tr = so.simulate(cfg)
    g, params = cfg.grid, cfg.params
    s0 = tr.states[0]
    gam0, u0 = so.gamma_of(s0.tau).coeffs, s0.u.coeffs
    scale = max(np.max(np.abs(gam0)), np.max(np.abs(u0)))
    radii = np.unique(np.round(g.kmag[g.kmag > 0], 12))
    worst = 0.0
    for s in tr.states:
        M = np.zeros((2, 2) + g.shape)
        for r in radii:
            sel = np.isclose(g.kmag, r, rtol=0, atol=1e-9)
            M[:, :, sel] = lm.propagator(r, s.t, *lm.symbol_coefficients(params))[:, :, None]
        want_gamma = M[0, 0] * gam0 + M[0, 1] * u0
        want_u = M[1, 0] * gam0 + M[1, 1] * u0
        err = max(np.max(np.abs(so.gamma_of(s.tau).coeffs - want_gamma)), np.max(np.abs(s.u.coeffs - want_u)))
        worst = max(worst, err / scale)
    assert record_criterion(6, "linear solver vs propagator", worst <= 1e-6, f"max relative error {worst:.2e}")


def test_c07_oscillating_scaling(record_criterion):
    fit = dg.scaling_fit(1.0, [1 / 8, 1 / 16, 1 / 32, 1 / 64], 3.0, Grid(2, 256), j0=0, workers=4)
    ok = abs(fit.slope - 1 / 3) <= 0.1
    detail = f"slope {fit.slope:.4f} (expected {fit.expected:.4f}, j0=0, rms {fit.residual:.3f})"
    assert record_criterion(7, "oscillating-data scaling", ok, detail)


@pytest.mark.slow
def test_c08_small_data_boundedness(record_criterion):
    cfg = so.SimConfig(N=128, b=0.5, dt=0.01, t_end=10.0, output_every=0.1, j0=0, seed=0,
                       initial=so.InitialSpec(amplitude=1e-3, tau_amplitude=1e-3))
    try:
        tr = so.simulate(cfg)
        blew = False
    except so.BlowUpError as err:
        tr, blew = err.trajectory, True
    ratios = {j0: dg.hybrid_functional(tr, j0=j0) for j0 in (0, 1, 2)}
    xf = ratios[0]
    div = max(i["div"] for i in tr.invariants)
    sym = max(i["sym"] for i in tr.invariants)
    ok = not blew and xf.total[0] <= 1e-2 and xf.ratio[-1] <= 4 and div <= 1e-9 and sym <= 1e-9
    others = ", ".join(f"j0={j}: {x.ratio[-1]:.2f}" for j, x in ratios.items() if j)
    detail = (f"X(0)={xf.total[0]:.2e}, X(T)/X(0)={xf.ratio[-1]:.3f} at j0=0 ({others}), "
              f"div {div:.1e}, sym {sym:.1e}")
    assert record_criterion(8, "small-data boundedness", ok, detail)


def test_c09_integrator_order(record_criterion):
    g = Grid(2, 32)
    rng = np.random.default_rng(9)
    s0 = so.State(0.0, sp.random_divfree(g, rng, kmax=6), sp.random_field(g, SYM, rng, kmax=6))
    dts = (0.005, 0.0025, 0.00125, 0.000625)
    finals = [so.simulate(so.SimConfig(N=32, b=0.5, dt=dt, t_end=0.5, output_every=0.5), s0).final_state
              for dt in dts]
    diff = [np.sqrt(np.sum(np.abs(a.u.coeffs - b.u.coeffs) ** 2) + np.sum(np.abs(a.tau.coeffs - b.tau.coeffs) ** 2))
            for a, b in zip(finals[:-1], finals[1:])]
    orders = np.log2(np.array(diff[:-1]) / np.array(diff[1:]))
    ok = orders[-1] >= 1.8
    detail = "observed orders " + ", ".join(f"{o:.3f}" for o in orders)
    assert record_criterion(9, "integrator order", ok, detail)


def _lemma_draw(i, grid):
    rng = np.random.default_rng([10, i])
    kmax, slope = rng.uniform(3, 10), rng.uniform(-2, 0)
    lam = 2.0 ** rng.integers(1, 3)
    fields = dict(
        u=sp.random_divfree(grid, rng, kmax=kmax, slope=slope, amplitude=rng.uniform(0.1, 10)),
        v=sp.random_field(grid, sp.VECTOR, rng, kmax=kmax, slope=slope, amplitude=rng.uniform(0.1, 10)),
        a=sp.random_field(grid, sp.SCALAR, rng, kmax=kmax, slope=slope),
        b=sp.random_field(grid, sp.SCALAR, rng, kmax=kmax, slope=slope),
        ann=sp.random_field(grid, sp.SCALAR, rng, kmin=0.75 * lam, kmax=8 / 3 * lam),
    )
    return fields, lam


def _lemma_ratios(f, lam, part):
    return {
        "bernstein_grad": lp.gradient_bernstein_ratio(f["ann"], 3.0, lam),
        "bernstein_2_inf": lp.bernstein_ratio(f["ann"], (1, 0), 2.0, np.inf, lam),
        "product_law_22": lp.inequality_ratio("product_law_22", f["a"], f["b"], part, 3.0),
        "product_law": lp.inequality_ratio("product_law", f["a"], f["b"], part, 2.0, q=2.0, s1=0.5, s2=0.5),
        "commutator_block": lp.inequality_ratio("commutator_block", f["u"], f["v"], part, 3.0, s=0.5),
        "commutator_lowfreq": lp.inequality_ratio("commutator_lowfreq", f["u"], f["v"], part, 3.0),
        "commutator_multiplier": lp.inequality_ratio("commutator_multiplier", f["u"], f["v"], part, 3.0),
    }


@pytest.mark.slow
def test_c10_lemma_constants(record_criterion):
    coarse, fine = Grid(2, 64), Grid(2, 128)
    parts = {g: lp.build_partition(g, 2) for g in (coarse, fine)}
    maxima = {g: {} for g in parts}
    finite = True
    for i in range(200):
        fields, lam = _lemma_draw(i, coarse)
        for g, part in parts.items():
            on_grid = {k: sp.resample(v, g) for k, v in fields.items()}
            for k, r in _lemma_ratios(on_grid, lam, part).items():
                finite &= bool(np.isfinite(r))
                maxima[g][k] = max(maxima[g].get(k, 0.0), r)
    change = {k: maxima[fine][k] / maxima[coarse][k] - 1 for k in maxima[coarse]}
    ok = finite and all(abs(c) <= 0.3 for c in change.values())
    detail = "; ".join(f"{k} {maxima[coarse][k]:.4g} ({change[k]:+.1e})" for k in change)
    assert record_criterion(10, "lemma constants 64->128", ok, detail)


def test_c11_determinism(record_criterion, tmp_path):
    cfg = tmp_path.parent / "small.cfg"
    cfg.write_text("[grid]\nN = 32\n[integrator]\ndt = 0.01\nt_end = 0.5\n[output]\nevery = 0.05\n")
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        subprocess.run([sys.executable, "-m", "oldroydb", "simulate", "--config", str(cfg), "--seed", "7",
                        "--out", str(out)], check=True)
        outs.append(out)
    names = ("norms.csv", "blocks.csv", "invariants.csv")
    same = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names)
    assert record_criterion(11, "determinism", same, f"{', '.join(names)} byte-identical: {same}")
