import itertools
from fractions import Fraction

import numpy as np
import pytest

from secmux import families, gf
from secmux.errors import GuardError

L = families.MessageLayout


def brute_collision(tables, codes, x1, x2):
    hits = sum(codes[t[x1]] == codes[t[x2]] for t in tables)
    return Fraction(hits, len(tables))


class TestLayout:
    def test_sizes(self):
        lay = L(3, (1, 2, 0))
        assert (lay.T, lay.K, lay.size) == (2, 3, 27)
        assert lay.factor_size(2) == 9 and lay.factor_size(3) == 1
        assert lay.subset_size((1, 2)) == 27

    def test_secret_dim_must_be_positive(self):
        with pytest.raises(ValueError):
            L(2, (0, 1))

    def test_subset_ranges(self):
        lay = L(2, (1, 1, 1))
        assert lay.subsets() == [(1,), (2,), (1, 2)]
        assert len(lay.subsets(include_randomness=True)) == 7

    def test_bad_subset(self):
        with pytest.raises(ValueError):
            families.normalize_subset(L(2, (1, 1)), [3])


class TestProject:
    lay = L(2, (1, 1, 1))

    def test_single(self):
        assert families.project(self.lay, [1], (1, 0, 1)) == (1,)

    def test_pair(self):
        assert families.project(self.lay, [1, 2], (1, 0, 1)) == (1, 0)

    def test_full_is_identity(self):
        assert families.project(self.lay, [1, 2, 3], (1, 0, 1)) == (1, 0, 1)

    def test_disjoint_union_consistent(self):
        lay = L(3, (1, 2, 1))
        for b in gf.all_vectors(4, 3)[::7]:
            b = tuple(b)
            joined = families.project(lay, [1, 3], b)
            assert joined == families.project(lay, [1], b) + families.project(lay, [3], b)

    def test_codes_match_project(self):
        lay = L(3, (1, 1))
        codes = families.projection_codes(lay, [2])
        for i, b in enumerate(gf.all_vectors(2, 3)):
            assert codes[i] == gf.vector_index(families.project(lay, [2], tuple(b)), 3)


class TestFamilies:
    @pytest.mark.parametrize("dims,count", [((1, 0), 2), ((1, 1), 24), ((1, 1, 1), 40320)])
    def test_permutation_sizes(self, dims, count):
        fam = families.enumerate_permutation_family(L(2, dims))
        assert fam.size() == count
        assert len(fam.tables()) == count

    def test_permutation_guard(self):
        with pytest.raises(GuardError):
            families.enumerate_permutation_family(L(3, (1, 1)))

    @pytest.mark.parametrize("q,dims,count", [(2, (1, 1), 6), (2, (1, 1, 1), 168), (3, (1, 1), 48)])
    def test_linear_sizes(self, q, dims, count, backend):
        fam = families.linear_family(L(q, dims))
        assert fam.size() == count and len(fam.tables()) == count
        assert fam.verify_bijective()

    def test_json_roundtrip(self):
        lay = L(2, (1, 1))
        fam = families.linear_family(lay, [gf.GFMatrix([[1, 1], [0, 1]], 2)])
        back = families.HashFamily.from_json(fam.to_json())
        assert back.matrices() == fam.matrices()

    def test_singular_member_detected(self):
        fam = families.linear_family(L(2, (1, 1)), [[[1, 1], [1, 1]]])
        assert not fam.verify_bijective()


class TestCollision:
    def test_permutation_example(self):
        fam = families.enumerate_permutation_family(L(2, (1, 1)))
        assert families.collision_probability(fam, [1], (0, 0), (1, 1)) == Fraction(1, 3)

    def test_linear_example(self):
        fam = families.linear_family(L(2, (1, 1)))
        for x1, x2 in itertools.permutations([(0, 0), (0, 1), (1, 0), (1, 1)], 2):
            assert families.collision_probability(fam, [1], x1, x2) == Fraction(1, 3)

    def test_full_projection_never_collides(self):
        fam = families.linear_family(L(2, (1, 1, 1)))
        assert families.collision_probability(fam, [1, 2, 3], (0, 0, 1), (1, 0, 1)) == 0

    def test_equal_inputs_rejected(self):
        fam = families.linear_family(L(2, (1, 1)))
        with pytest.raises(ValueError):
            families.collision_probability(fam, [1], (0, 1), (0, 1))

    @pytest.mark.parametrize("dims", [(1, 1), (1, 1, 1), (2, 1)])
    def test_permutation_closed_form_every_pair(self, dims):
        lay = L(2, dims)
        fam = families.enumerate_permutation_family(lay)
        tables = fam.tables()
        for subset in lay.subsets(include_randomness=True):
            codes = families.projection_codes(lay, subset)
            want = families.permutation_collision_closed_form(lay, subset)
            for x1, x2 in itertools.combinations(range(lay.size), 2):
                assert brute_collision(tables, codes, x1, x2) == want


class TestTwoUniversal:
    @pytest.mark.parametrize("q,dims", [(2, (1, 1, 1)), (3, (1, 1)), (2, (2, 1)), (2, (1, 1, 0))])
    def test_linear_passes(self, q, dims, backend):
        lay = L(q, dims)
        fam = families.linear_family(lay)
        for s in lay.subsets(include_randomness=True):
            rep = families.verify_two_universal(fam, s)
            assert rep.passed and rep.max_ratio <= rep.bound

    def test_permutation_passes(self, backend):
        lay = L(2, (1, 1, 1))
        fam = families.enumerate_permutation_family(lay)
        for s in lay.subsets(include_randomness=True):
            rep = families.verify_two_universal(fam, s)
            assert rep.passed
            assert rep.max_ratio == families.permutation_collision_closed_form(lay, s)

    def test_identity_fails(self, backend):
        fam = families.linear_family(L(2, (1, 1)), [gf.GFMatrix.identity(2, 2)])
        rep = families.verify_two_universal(fam, [1])
        assert not rep.passed and rep.max_ratio == 1

    def test_report_matches_brute_force(self, backend):
        lay = L(3, (1, 1))
        rng = np.random.default_rng(3)
        fam = families.linear_family(lay, [gf.sample_gl(2, 3, rng) for _ in range(5)])
        codes = families.projection_codes(lay, [1])
        worst = max(
            brute_collision(fam.tables(), codes, a, b)
            for a, b in itertools.combinations(range(lay.size), 2)
        )
        assert families.verify_two_universal(fam, [1]).max_ratio == worst


class TestOrbit:
    def test_small_example(self):
        fam = families.linear_family(L(2, (1, 1)))
        rep = families.orbit_criterion(fam, [1], (0, 1))
        assert (rep.orbit_size, rep.intersection, rep.lhs_ratio) == (3, 1, Fraction(1, 3))
        assert rep.passed

    @pytest.mark.parametrize("q,dims", [(2, (1, 1, 1)), (3, (1, 1)), (2, (2, 1))])
    def test_full_gl_closed_form(self, q, dims):
        lay = L(q, dims)
        fam = families.linear_family(lay)
        v = gf.index_vector(1, lay.K, q)
        for s in lay.subsets(include_randomness=True):
            rep = families.orbit_criterion(fam, s, v)
            assert rep.orbit_size == lay.size - 1
            assert rep.intersection == lay.size // lay.subset_size(s) - 1

    def test_identity_fails(self):
        fam = families.linear_family(L(2, (1, 1)), [gf.GFMatrix.identity(2, 2)])
        rep = families.orbit_criterion(fam, [1], (0, 1))
        assert rep.lhs_ratio == 1 and not rep.passed

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            families.orbit_criterion(families.linear_family(L(2, (1, 1))), [1], (0, 0))

    def test_subgroup_equivalence(self, backend):
        # cyclic subgroups of GL(3,2) and GL(2,3): orbit criterion <=> two-universality
        for q, dims in [(2, (1, 1, 1)), (3, (1, 1)), (2, (1, 2))]:
            lay = L(q, dims)
            for m in gf.enumerate_gl(lay.K, q)[:: 7]:
                fam = families.linear_family(lay, gf.group_closure([m]))
                for s in lay.subsets(include_randomness=True):
                    assert families.verify_two_universal(fam, s).passed == families.orbit_criterion_all(fam, s)
