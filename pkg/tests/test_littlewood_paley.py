import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oldroydb import littlewood_paley as lp
from oldroydb import spectral as sp
from oldroydb.spectral import SCALAR, SYM, VECTOR, Grid

# chi and phi evaluated with mpmath at 30 digits from the smooth-step formula
PROFILE = {
    0.9: (0.92708392970069017, 0.072916070299309828),
    1.0: (0.64183404508873102, 0.35816595491126898),
    1.5: (0.0, 1.0),
    2.0: (0.0, 0.64183404508873102),
    2.5: (0.0, 0.0029197497923921803),
}


def complex_mode(grid, xi):
    phase = sum(k * x for k, x in zip(xi, grid.x))
    return sp.transform(np.exp(1j * phase), grid)


@pytest.fixture
def part2():
    return lp.build_partition(Grid(2, 64), 2)


class TestProfile:
    @pytest.mark.parametrize("r", sorted(PROFILE))
    def test_frozen_values(self, r):
        chi, phi = PROFILE[r]
        assert lp.chi(r) == pytest.approx(chi, abs=1e-15)
        assert lp.phi(r) == pytest.approx(phi, abs=1e-15)

    def test_chi_support(self):
        r = np.linspace(0, 3, 3001)
        c = lp.chi(r)
        assert np.all(c[r <= 0.75] == 1.0)
        assert np.all(c[r >= 4 / 3] == 0.0)
        assert np.all(np.diff(c) <= 0)

    def test_phi_support(self):
        r = np.linspace(0, 4, 4001)
        f = lp.phi(r)
        outside = (r < 0.75) | (r > 8 / 3)
        assert np.max(np.abs(f[outside])) <= 1e-12

    @given(st.floats(1e-3, 1e3))
    def test_partition_of_unity_on_the_line(self, r):
        j = np.arange(-15, 15)
        assert np.sum(lp.phi(r * 2.0**-j)) == pytest.approx(1.0, abs=1e-12)


class TestPartition:
    def test_range_and_split(self):
        part = lp.build_partition(Grid(2, 64), 2)
        assert part.j_min == -2
        assert part.j_max == int(np.ceil(np.log2(64 * np.sqrt(2) / 2))) + 1
        assert part.mask("low").sum() == 2 - part.j_min + 1

    def test_partition_of_unity_on_grid(self, grid):
        assert lp.partition_defect(lp.build_partition(grid, 0)) <= 1e-10

    def test_origin_excluded(self, part2):
        assert np.all(part2.symbols[(slice(None),) + part2.grid.zero_mode] == 0)

    def test_unit_frequency_sum(self, part2):
        s = sum(lp.phi(2.0**-j) for j in part2.blocks)
        assert s == pytest.approx(1.0, abs=1e-10)

    def test_bad_split(self):
        with pytest.raises(ValueError):
            lp.build_partition(Grid(2, 32), -1)
        with pytest.raises(ValueError):
            lp.build_partition(Grid(2, 32), 40)

    def test_block_out_of_range(self, part2):
        with pytest.raises(IndexError):
            part2.symbol(part2.j_max + 1)


class TestFilters:
    def test_single_mode_support(self, part2):
        f = complex_mode(part2.grid, (1, 0))
        for j in part2.blocks:
            blk = lp.dyadic_block(f, part2, j)
            if 2.0**j * 8 / 3 < 1 or 2.0**j * 0.75 > 1:
                assert np.max(np.abs(blk.coeffs)) <= 1e-15

    def test_reconstruction(self, part2, rng):
        f = sp.drop_mean(sp.random_field(part2.grid, VECTOR, rng, kmax=None))
        total = sum(lp.dyadic_block(f, part2, j) for j in part2.blocks)
        assert np.max(np.abs(total.coeffs - f.coeffs)) <= 1e-9 * np.max(np.abs(f.coeffs))

    def test_quasi_orthogonality(self, part2, rng):
        f = sp.random_field(part2.grid, SCALAR, rng)
        for j in part2.blocks:
            for k in part2.blocks:
                if abs(j - k) >= 2:
                    both = lp.dyadic_block(lp.dyadic_block(f, part2, j), part2, k)
                    assert np.max(np.abs(both.coeffs)) <= 1e-12

    def test_low_cutoff_telescopes(self, part2, rng):
        f = sp.random_field(part2.grid, SCALAR, rng)
        for k in range(part2.j_min + 1, part2.j_max):
            partial = sum(lp.dyadic_block(f, part2, j) for j in range(part2.j_min, k))
            # the blocks below j_min carry no grid frequency
            assert np.max(np.abs(lp.low_cutoff(f, part2, k).coeffs - partial.coeffs)) <= 1e-12

    def test_split_examples(self, part2, rng):
        g = part2.grid
        lowf = sp.random_field(g, SCALAR, rng, kmin=1, kmax=2.0**part2.j0 * 0.75)
        lo, hi = lp.low_high_split(lowf, part2)
        assert np.max(np.abs(hi.coeffs)) <= 1e-12
        highf = complex_mode(g, (2 ** (part2.j0 + 3), 0))
        lo, hi = lp.low_high_split(highf, part2)
        assert np.max(np.abs(lo.coeffs)) <= 1e-12
        f = sp.random_field(g, SCALAR, rng)
        lo, hi = lp.low_high_split(f, part2)
        err = sp.physical(lo + hi) - sp.physical(f)
        assert np.max(np.abs(err)) <= 1e-9 * np.max(np.abs(sp.physical(f)))


class TestNorms:
    @pytest.mark.parametrize("p", [2.0, 3.0, np.inf])
    @pytest.mark.parametrize("s", [0.0, -1 / 3, 1.0])
    def test_single_mode_centered(self, part2, p, s):
        f = complex_mode(part2.grid, (6, 0))  # |xi| = 1.5 * 2^2
        expected = 2.0 ** (2 * s) * (2 * np.pi) ** (0 if np.isinf(p) else 2 / p)
        assert lp.besov_norm(f, part2, s, p) == pytest.approx(expected, rel=1e-12)

    def test_single_mode_at_power_of_two(self, part2):
        f = complex_mode(part2.grid, (4, 0))
        s = 0.5
        expected = (4**s * PROFILE[1.0][1] + 2**s * PROFILE[2.0][1]) * (2 * np.pi)
        assert lp.besov_norm(f, part2, s, 2) == pytest.approx(expected, rel=1e-12)

    def test_lp_of_unit_modulus(self, grid2):
        f = sp.transform(np.exp(1j * grid2.x[0]), grid2)
        assert lp.lp_norm(f, 3) == pytest.approx((2 * np.pi) ** (2 / 3), rel=1e-12)
        assert lp.lp_norm(f, np.inf) == pytest.approx(1.0, rel=1e-12)

    def test_lp_two_matches_parseval(self, grid, rng):
        f = sp.random_field(grid, SYM, rng)
        mag = lp._pointwise_magnitude(sp.inverse_transform(f), SYM, grid)
        assert lp.lp_norm(f, 2) == pytest.approx(lp._lp_of_magnitude(mag, 2, grid), rel=1e-12)

    def test_nesting_ratio(self, part2):
        f = complex_mode(part2.grid, (12, 0))  # 1.5 * 2^3
        r = lp.besov_norm(f, part2, -0.5, 2) / lp.besov_norm(f, part2, 1.0, 2)
        assert r == pytest.approx(2.0 ** (3 * (-1.5)), rel=1e-12)

    def test_split_is_exact(self, part2, rng):
        f = sp.random_field(part2.grid, VECTOR, rng)
        for p in (2.0, 3.0):
            whole = lp.besov_norm(f, part2, 0.3, p)
            parts = lp.besov_norm(f, part2, 0.3, p, "low") + lp.besov_norm(f, part2, 0.3, p, "high")
            assert whole == pytest.approx(parts, rel=1e-14)

    def test_mean_warns(self, grid2):
        f = sp.transform(1 + np.cos(grid2.x[0]), grid2)
        part = lp.build_partition(grid2, 1)
        with pytest.warns(UserWarning):
            lp.besov_norm(f, part, 0.0)

    def test_label(self):
        assert lp.BesovSpec(0.0, 2).label("low") == "B_2_1_s-0.0_low"


@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(1e-6, 100) | st.floats(-100, -1e-6), s=st.floats(-2, 2), p=st.sampled_from([2.0, 3.0]))
def test_besov_homogeneity(seed, alpha, s, p):
    rng = np.random.default_rng(seed)
    g = Grid(2, 16)
    part = lp.build_partition(g, 1)
    f = sp.random_field(g, SCALAR, rng)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = lp.besov_norm(f * alpha, part, s, p)
        b = lp.besov_norm(f, part, s, p)
    assert a == pytest.approx(abs(alpha) * b, rel=1e-12, abs=1e-300)


class TestChemmLerner:
    def test_constant_in_time(self, part2, rng):
        f = sp.random_field(part2.grid, SCALAR, rng)
        t = np.linspace(0, 2.5, 6)
        spec = lp.BesovSpec(0.5, 2, 1)
        assert lp.chemin_lerner_norm(t, [f] * 6, part2, spec) == pytest.approx(2.5 * lp.besov_norm(f, part2, 0.5))

    def test_sup_of_decaying_series(self, part2, rng):
        f = sp.random_field(part2.grid, SCALAR, rng)
        t = np.linspace(0, 1, 5)
        series = [f * np.exp(-ti) for ti in t]
        spec = lp.BesovSpec(0.0, 3.0, np.inf)
        assert lp.chemin_lerner_norm(t, series, part2, spec) == pytest.approx(lp.besov_norm(f, part2, 0.0, 3.0))

    def test_empty_series(self, part2):
        with pytest.raises(ValueError):
            lp.chemin_lerner_norm([], [], part2, lp.BesovSpec(0.0))

    @given(seed=st.integers(0, 2**32 - 1))
    def test_minkowski_ordering(self, seed):
        rng = np.random.default_rng(seed)
        g = Grid(2, 16)
        part = lp.build_partition(g, 1)
        t = np.sort(rng.uniform(0, 1, 5))
        series = [sp.random_field(g, SCALAR, rng) for _ in t]
        one = lp.BesovSpec(0.2, 2, 1)
        inf = lp.BesovSpec(0.2, 2, np.inf)
        # Minkowski with summation index 1: L^q(B) <= L~^q(B), equal for q = 1
        assert lp.chemin_lerner_norm(t, series, part, one) == pytest.approx(lp.bochner_norm(t, series, part, one), rel=1e-12)
        assert lp.chemin_lerner_norm(t, series, part, inf) >= lp.bochner_norm(t, series, part, inf) * (1 - 1e-12)


class TestBony:
    def test_reconstruction(self, part2, rng):
        g = part2.grid
        u = sp.random_field(g, SCALAR, rng, kmax=g.N / 6)
        v = sp.random_field(g, SCALAR, rng, kmax=g.N / 6)
        a, b, r = lp.bony_decompose(u, v, part2)
        uv = sp.drop_mean(sp.product(u, v))
        err = sp.drop_mean(a + b + r) - uv
        assert np.max(np.abs(err.coeffs)) <= 1e-8 * np.max(np.abs(uv.coeffs))

    def test_low_times_block(self, part2):
        g = part2.grid
        u = sp.transform(np.cos(g.x[0]), g)
        v = complex_mode(g, (12, 0))
        v = sp.transform(np.cos(12 * g.x[1]), g)
        tuv, tvu, rem = lp.bony_decompose(u, v, part2)
        uv = sp.product(u, v)
        assert np.max(np.abs(tvu.coeffs)) <= 1e-14
        assert np.max(np.abs(rem.coeffs)) <= 1e-14
        assert np.max(np.abs(tuv.coeffs - uv.coeffs)) <= 1e-14

    def test_constant_factor(self, part2, rng):
        g = part2.grid
        u = sp.transform(np.full(g.shape, 2.0), g)
        v = sp.random_field(g, SCALAR, rng, kmax=g.N / 6)
        tuv, tvu, rem = lp.bony_decompose(u, v, part2)
        # homogeneous blocks ignore the constant entirely
        assert np.max(np.abs(tvu.coeffs)) == 0
        assert np.max(np.abs((tuv + rem).coeffs)) == 0


class TestBernstein:
    def test_single_mode(self, grid2):
        f = sp.transform(np.cos(3 * grid2.x[0] + 4 * grid2.x[1]), grid2)
        assert lp.bernstein_ratio(f, (1, 0), 2, 2, 5.0) == pytest.approx(3 / 5, rel=1e-12)

    def test_zero_field(self, grid2):
        with pytest.raises(ValueError):
            lp.bernstein_ratio(sp.zeros(grid2, SCALAR), (1, 0), 2, 2, 1.0)

    def test_reverse_bernstein_on_annulus(self, rng):
        ratios = {}
        for lam, N in ((4, 32), (16, 128)):
            g = Grid(2, N)
            vals = []
            for _ in range(20):
                f = sp.random_field(g, SCALAR, rng, kmin=0.75 * lam, kmax=min(8 / 3 * lam, N / 3))
                vals.append(lp.gradient_bernstein_ratio(f, 3.0, lam))
            ratios[lam] = (min(vals), max(vals))
        for lo, hi in ratios.values():
            assert 0.5 < lo and hi < 8 / 3 + 0.5
        assert ratios[4][0] == pytest.approx(ratios[16][0], rel=0.3)

    def test_embedding_is_scale_stable(self):
        # the coherent sum of all modes in the ball is the extremal L^2 -> L^inf case
        found = []
        for lam, N in ((4, 32), (16, 64), (64, 256)):
            g = Grid(2, N)
            ball = (g.kmag <= lam).astype(complex)[None]
            found.append(lp.bernstein_ratio(sp.SpectralField(g, SCALAR, ball), (0, 0), 2, np.inf, lam))
        assert max(found) / min(found) < 1.2
        assert found[-1] == pytest.approx(1 / (2 * np.sqrt(np.pi)), rel=0.05)


class TestInequalities:
    def test_zero_input(self, part2, rng):
        g = part2.grid
        u = sp.random_divfree(g, rng)
        zero_s = sp.zeros(g, SCALAR)
        assert lp.inequality_ratio("product_law_22", zero_s, sp.random_field(g, SCALAR, rng), part2) == 0.0
        assert lp.inequality_ratio("commutator_block", u, zero_s, part2, s=0.5) == 0.0

    def test_homogeneous_in_v(self, part2, rng):
        g = part2.grid
        u = sp.random_divfree(g, rng, kmax=3)
        v = sp.transform(np.cos(12 * g.x[0]), g)
        r1 = lp.inequality_ratio("commutator_block", u, v, part2, s=0.5)
        r2 = lp.inequality_ratio("commutator_block", u, v * 7.0, part2, s=0.5)
        assert np.isfinite(r1) and r1 == pytest.approx(r2, rel=1e-10)

    def test_inadmissible(self, part2, rng):
        g = part2.grid
        u, v = sp.random_divfree(g, rng), sp.random_field(g, SCALAR, rng)
        with pytest.raises(lp.InadmissibleError):
            lp.inequality_ratio("product_law_22", sp.random_field(g, SCALAR, rng), v, part2, p=4.0)
        with pytest.raises(lp.InadmissibleError):
            lp.inequality_ratio("commutator_block", sp.random_field(g, VECTOR, rng), v, part2, s=0.5)
        with pytest.raises(lp.InadmissibleError):
            lp.inequality_ratio("commutator_block", u, v, part2, s=5.0)
        with pytest.raises(ValueError):
            lp.inequality_ratio("nonsense", u, v, part2)

    def test_ratios_finite(self, part2, rng):
        g = part2.grid
        u = sp.random_divfree(g, rng)
        a, b = sp.random_field(g, SCALAR, rng), sp.random_field(g, SCALAR, rng)
        v = sp.random_field(g, VECTOR, rng)
        vals = [
            lp.inequality_ratio("product_law_22", a, b, part2),
            lp.inequality_ratio("product_law", a, b, part2, p=2.0, q=2.0, s1=0.5, s2=0.5),
            lp.inequality_ratio("commutator_block", u, a, part2, s=0.5),
            lp.inequality_ratio("commutator_lowfreq", u, v, part2),
            lp.inequality_ratio("commutator_multiplier", u, v, part2, inside=False),
        ]
        assert all(np.isfinite(x) and x > 0 for x in vals)
