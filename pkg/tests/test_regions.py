import math

import numpy as np
import pytest

from secmux import info, regions
from secmux.channels import Channel, MarkovSpec, bsc, constant_channel, identity_channel, joint_uvo

from conftest import random_channel, random_pmf


def h(p):
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


GAP = h(0.2) - h(0.1)
DEGRADED = MarkovSpec.trivial_u([0.5, 0.5])


def random_spec(rng, nu=2, nv=3, nx=2):
    return MarkovSpec(random_pmf(rng, nu), Channel(random_channel(rng, nu, nv)), Channel(random_channel(rng, nv, nx)))


class TestMarkovInformation:
    def test_degraded(self):
        q = regions.markov_information(DEGRADED, bsc(0.1), bsc(0.2))
        assert q.i_vy_u == pytest.approx(math.log(2) - h(0.1), abs=1e-14)
        assert q.secrecy == pytest.approx(GAP, abs=1e-14)
        assert q.common == pytest.approx(0, abs=1e-15)

    def test_matches_full_joint(self, rng):
        from secmux.channels import joint_from_spec

        spec = random_spec(rng)
        bob, eve = Channel(random_channel(rng, 2, 3)), Channel(random_channel(rng, 2, 2))
        j = joint_from_spec(spec, bob, eve)  # u v x y z
        p_vyu = j.sum(axis=(2, 4)).transpose(1, 2, 0)
        q = regions.markov_information(spec, bob, eve)
        assert q.i_vy_u == pytest.approx(info.conditional_mutual_information(p_vyu), abs=1e-12)
        assert q.i_uz == pytest.approx(info.mutual_information(j.sum(axis=(1, 2, 3))), abs=1e-12)


class TestBCC:
    def test_zero_rates(self, rng):
        for _ in range(5):
            spec = random_spec(rng)
            assert regions.bcc_membership((0, 0, 0), spec, Channel(random_channel(rng, 2, 2)),
                                          Channel(random_channel(rng, 2, 2))).passed

    def test_degraded_boundary(self):
        assert regions.bcc_membership((GAP, GAP, 0), DEGRADED, bsc(0.1), bsc(0.2)).passed
        assert not regions.bcc_membership((0.3, 0.18, 0), DEGRADED, bsc(0.1), bsc(0.2)).passed

    def test_re_above_r1(self):
        assert not regions.bcc_membership((0.05, 0.1, 0), DEGRADED, bsc(0.1), bsc(0.2)).passed

    def test_negative_rate(self):
        with pytest.raises(ValueError):
            regions.bcc_membership((-0.1, 0, 0), DEGRADED, bsc(0.1), bsc(0.2))


class TestBCD:
    def test_capacity_boundary(self):
        c = math.log(2) - h(0.1)
        assert regions.bcd_membership((0, c), DEGRADED, bsc(0.1), bsc(0.2)).passed
        assert not regions.bcd_membership((0, c + 1e-6), DEGRADED, bsc(0.1), bsc(0.2)).passed

    def test_common_above_min(self, rng):
        spec = MarkovSpec([0.5, 0.5], Channel([[0.9, 0.1], [0.1, 0.9]]), identity_channel(2))
        q = regions.markov_information(spec, bsc(0.1), bsc(0.2))
        assert not regions.bcd_membership((q.common + 1e-3, 0), spec, bsc(0.1), bsc(0.2)).passed

    def test_needs_v_equals_x(self):
        spec = MarkovSpec.trivial_u([0.5, 0.5], bsc(0.1))
        with pytest.raises(ValueError):
            regions.bcd_membership((0, 0), spec, bsc(0.1), bsc(0.2))


class TestSMC:
    def test_t1_equals_bcc(self, rng):
        for _ in range(200):
            spec = random_spec(rng)
            bob, eve = Channel(random_channel(rng, 2, 2)), Channel(random_channel(rng, 2, 2))
            r1, re, r0 = rng.uniform(0, 0.4, 3)
            a = regions.bcc_membership((r1, re, r0), spec, bob, eve)
            b = regions.smc_membership(regions.RateTuple(r0, (r1,), {(1,): re}), spec, bob, eve)
            assert a.passed == b.passed

    def test_t2_joint_secrecy_cap(self):
        rates = regions.RateTuple(0, (0.15, 0.15), {(1,): 0.1, (2,): 0.1, (1, 2): GAP})
        assert regions.smc_membership(rates, DEGRADED, bsc(0.1), bsc(0.2)).passed
        rates.re_by_subset[(1, 2)] = GAP + 1e-3
        assert not regions.smc_membership(rates, DEGRADED, bsc(0.1), bsc(0.2)).passed

    def test_re_above_sum(self):
        rates = regions.RateTuple(0, (0.01, 0.01), {(1,): 0.02, (2,): 0, (1, 2): 0})
        assert not regions.smc_membership(rates, DEGRADED, bsc(0.1), bsc(0.2)).passed

    def test_missing_subset(self):
        with pytest.raises(ValueError):
            regions.smc_membership(regions.RateTuple(0, (0.1, 0.1), {(1,): 0}), DEGRADED, bsc(0.1), bsc(0.2))

    def test_nesting(self, rng):
        for _ in range(50):
            spec = random_spec(rng)
            bob, eve = Channel(random_channel(rng, 2, 2)), Channel(random_channel(rng, 2, 2))
            r = rng.uniform(0, 0.3, 3)
            if regions.bcc_membership(r, spec, bob, eve).passed:
                for i in range(3):
                    smaller = r.copy()
                    smaller[i] *= rng.uniform()
                    if i == 0:
                        smaller[1] = min(smaller[1], smaller[0])
                    assert regions.bcc_membership(smaller, spec, bob, eve).passed

    def test_rates_json(self):
        rt = regions.rates_from_json({"r0": 0.1, "rates": [0.2, 0.3], "re": {"[1]": 0.1, "[1,2]": 0.2}})
        assert rt.re_by_subset == {(1,): 0.1, (1, 2): 0.2}
        with pytest.raises(ValueError):
            regions.rates_from_json({"rates": [0.1], "bogus": 1})


class TestScan:
    def test_lattice(self):
        pts = regions.simplex_lattice(3, 4)
        assert len(pts) == 10
        assert np.allclose(pts.sum(axis=1), 1)

    def test_degraded_max(self, backend):
        res = regions.region_scan(bsc(0.1), bsc(0.2), resolution=101, v_equals_x=True)
        assert abs(res.max_re - GAP) <= 0.002
        assert res.max_re <= GAP + 1e-9

    def test_identical_channels(self, backend):
        res = regions.region_scan(bsc(0.1), bsc(0.1), u_size=1, resolution=11)
        assert res.max_re <= 1e-9

    def test_refinement_monotone(self, backend):
        coarse = regions.region_scan(bsc(0.1), bsc(0.3), resolution=6)
        fine = regions.region_scan(bsc(0.1), bsc(0.3), resolution=11)
        assert fine.max_re >= coarse.max_re - 1e-15

    def test_scan_point_matches_membership(self, backend):
        res = regions.region_scan(bsc(0.1), bsc(0.25), u_size=2, v_size=2, resolution=5)
        for p in res.boundary[:20]:
            q = regions.markov_information(res.grid.spec(p.grid_index), bsc(0.1), bsc(0.25))
            assert p.i_vy_u == pytest.approx(q.i_vy_u, abs=1e-12)
            assert p.i_uz == pytest.approx(q.i_uz, abs=1e-12)

    def test_threads_same_result(self):
        a = regions.region_scan(bsc(0.1), bsc(0.2), resolution=7, chunk=50)
        b = regions.region_scan(bsc(0.1), bsc(0.2), resolution=7, chunk=50, threads=3)
        assert a.boundary == b.boundary and a.best_re == b.best_re

    def test_pareto_front_brute(self, rng):
        pts = [regions.ScanPoint(i, *rng.integers(0, 4, 4).astype(float)) for i in range(60)]
        front = regions.pareto_front(pts)

        def key(p):
            return (p.r0, p.rate_sum, p.re)

        def dominated(p):
            return any(all(a >= b for a, b in zip(key(o), key(p))) and
                       (key(o) != key(p) or o.grid_index < p.grid_index) for o in pts if o is not p)

        assert {p.grid_index for p in front} == {p.grid_index for p in pts if not dominated(p)}


class TestExponent:
    def test_trivial_u_identity(self, rng):
        for _ in range(100):
            p_v = random_pmf(rng, 3)
            w = Channel(random_channel(rng, 3, 4))
            spec = MarkovSpec.trivial_u(p_v)
            rho, r_i, r_p = rng.uniform(0.01, 1), rng.uniform(0, 1), rng.uniform(0, 1)
            got = regions.leakage_exponent(rho, r_i, r_p, joint_uvo(spec, w)).value
            assert abs(got - (rho * (r_i - r_p) + info.psi(rho, w, p_v))) <= 1e-12

    def test_independent_zero(self):
        spec = MarkovSpec.trivial_u([0.3, 0.7])
        rep = regions.leakage_exponent(0.5, 0.2, 0.2, joint_uvo(spec, constant_channel(2, [0.4, 0.6])))
        assert rep.value == pytest.approx(0, abs=1e-15)

    def test_bsc_instance(self):
        spec = MarkovSpec.trivial_u([0.5, 0.5])
        rep = regions.leakage_exponent(0.5, 0.1, 0.3, joint_uvo(spec, bsc(0.2)))
        assert rep.value == pytest.approx(0.5 * -0.2 + info.psi(0.5, bsc(0.2), [0.5, 0.5]), abs=1e-14)

    def test_optimum_dominates_grid(self, rng):
        spec = random_spec(rng, 2, 2, 2)
        j = joint_uvo(spec, bsc(0.2))
        opt = regions.optimize_exponent(0.1, 0.6, j)
        assert opt.value <= min(opt.grid_values) + 1e-15
        assert 0 < opt.rho <= 1

    def test_boundary_optimum(self):
        j = joint_uvo(MarkovSpec.trivial_u([0.5, 0.5]), bsc(0.2))
        opt = regions.optimize_exponent(0.0, 5.0, j)
        assert opt.rho == pytest.approx(1.0, abs=1e-6)

    def test_no_decay_above_leakage(self):
        spec = MarkovSpec.trivial_u([0.5, 0.5])
        j = joint_uvo(spec, bsc(0.05))
        i_vz = info.mutual_information(info.joint_from_channel([0.5, 0.5], bsc(0.05)))
        opt = regions.optimize_exponent(0.3, 0.3 + i_vz - 0.05, j)
        assert opt.value >= -1e-12
