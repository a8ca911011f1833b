import numpy as np
import pytest

from secmux import channels as ch
from secmux.errors import GuardError

from conftest import random_channel


class TestBasics:
    def test_rows_validated(self):
        with pytest.raises(ValueError):
            ch.Channel([[0.5, 0.6]])
        with pytest.raises(ValueError):
            ch.Channel([[1.2, -0.2]])

    def test_matrix_read_only(self):
        with pytest.raises(ValueError):
            ch.bsc(0.1).matrix[0, 0] = 0.5

    def test_bec_layout(self):
        assert ch.bec(0.25).matrix.tolist() == [[0.75, 0.0, 0.25], [0.0, 0.75, 0.25]]

    def test_distribution_check(self):
        with pytest.raises(ValueError):
            ch.as_distribution([0.5, 0.4])


class TestCompose:
    def test_identity_left(self):
        c = ch.Channel(random_channel(np.random.default_rng(0), 3, 4))
        assert np.array_equal(ch.compose(ch.identity_channel(3), c).matrix, c.matrix)

    @pytest.mark.parametrize("p,r", [(0.1, 0.15), (0.3, 0.05), (0.0, 0.4)])
    def test_bsc_convolution(self, p, r):
        got = ch.compose(ch.bsc(p), ch.bsc(r)).matrix
        assert np.allclose(got, ch.bsc(p * (1 - r) + r * (1 - p)).matrix, atol=1e-15)

    def test_bsc_022(self):
        assert ch.compose(ch.bsc(0.1), ch.bsc(0.15)).matrix[0, 1] == pytest.approx(0.22, abs=1e-15)

    def test_associative(self, rng):
        a, b, c = (ch.Channel(random_channel(rng, *s)) for s in [(2, 3), (3, 4), (4, 2)])
        left = ch.compose(ch.compose(a, b), c).matrix
        right = ch.compose(a, ch.compose(b, c)).matrix
        assert np.abs(left - right).max() <= 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            ch.compose(ch.bec(0.1), ch.bsc(0.1))


class TestProduct:
    def test_n1(self):
        c = ch.bsc(0.3)
        assert ch.product_extend(c, 1) is c

    def test_two_fold(self):
        assert ch.product_extend(ch.bsc(0.2), 2).matrix[0, 0] == pytest.approx(0.64)

    def test_three_fold(self):
        assert ch.product_extend(ch.bsc(0.1), 3).matrix[0, 7] == pytest.approx(0.001, abs=1e-15)

    def test_marginals(self, rng):
        c = ch.Channel(random_channel(rng, 2, 3))
        w = ch.product_extend(c, 3).matrix.reshape(2, 2, 2, 3, 3, 3)
        # fix input (1, 0, 1); marginalize outputs onto each coordinate
        block = w[1, 0, 1]
        assert np.allclose(block.sum(axis=(1, 2)), c.matrix[1], atol=1e-14)
        assert np.allclose(block.sum(axis=(0, 2)), c.matrix[0], atol=1e-14)
        assert np.allclose(block.sum(axis=(0, 1)), c.matrix[1], atol=1e-14)

    def test_guard(self):
        with pytest.raises(GuardError):
            ch.product_extend(ch.bsc(0.1), 11)


class TestJson:
    def test_forms(self):
        named = {"w": ch.bsc(0.2)}
        assert ch.channel_from_json({"type": "bsc", "p": 0.1}).matrix[0, 1] == 0.1
        assert ch.channel_from_json({"type": "bec", "e": 0.5}).outputs == 3
        assert ch.channel_from_json({"type": "identity", "size": 3}).is_identity()
        assert ch.channel_from_json({"type": "constant", "inputs": 2, "output": [0.3, 0.7]}).matrix[1, 1] == 0.7
        assert ch.channel_from_json("w", named) is named["w"]
        m = ch.channel_from_json({"inputs": 1, "outputs": 2, "rows": [[0.5, 0.5]]})
        assert m.to_json() == {"inputs": 1, "outputs": 2, "rows": [[0.5, 0.5]]}

    @pytest.mark.parametrize("doc", [
        {"type": "bsc", "p": 0.1, "extra": 1},
        {"type": "nope"},
        {"inputs": 2, "outputs": 2, "rows": [[1.0, 0.0]]},
        "missing",
        3,
    ])
    def test_rejects(self, doc):
        with pytest.raises(ValueError):
            ch.channel_from_json(doc)

    def test_markov_unknown_field(self):
        with pytest.raises(ValueError):
            ch.markov_from_json({"p_u": [1.0], "p_v_given_u": {"type": "identity", "size": 1}, "x": 1})


class TestJoint:
    def test_point_mass(self):
        spec = ch.MarkovSpec(np.array([1.0]), ch.Channel([[1.0]]), ch.identity_channel(1))
        j = ch.joint_from_spec(spec, ch.identity_channel(1), ch.identity_channel(1))
        assert j.shape == (1,) * 5 and j.sum() == 1.0

    def test_trivial_u_collapse(self, rng):
        p_v = np.array([0.2, 0.5, 0.3])
        spec = ch.MarkovSpec.trivial_u(p_v)
        eve = ch.Channel(random_channel(rng, 3, 2))
        j = ch.joint_from_spec(spec, ch.identity_channel(3), eve)
        assert np.allclose(j.sum(axis=(0, 2, 3)), p_v[:, None] * eve.matrix, atol=1e-15)

    def test_symmetric_output(self):
        spec = ch.MarkovSpec.trivial_u([0.5, 0.5])
        j = ch.joint_from_spec(spec, ch.bsc(0.1), ch.bsc(0.2))
        assert j.sum(axis=(0, 1, 2, 4))[1] == pytest.approx(0.5, abs=1e-15)

    def test_factorization(self, rng):
        spec = ch.MarkovSpec(
            np.array([0.4, 0.6]), ch.Channel(random_channel(rng, 2, 3)), ch.Channel(random_channel(rng, 3, 2))
        )
        bob, eve = ch.Channel(random_channel(rng, 2, 2)), ch.Channel(random_channel(rng, 2, 3))
        j = ch.joint_from_spec(spec, bob, eve)
        assert abs(j.sum() - 1) <= 1e-10
        # P(y, z | u, v, x) depends on x only
        p_uvx = j.sum(axis=(3, 4))
        cond = j / p_uvx[..., None, None]
        assert np.allclose(cond, np.einsum("xy,xz->xyz", bob.matrix, eve.matrix)[None, None], atol=1e-12)
        # P(x | u, v) depends on v only
        p_uv = p_uvx.sum(axis=2)
        assert np.allclose(p_uvx / p_uv[..., None], spec.p_x_given_v.matrix[None], atol=1e-12)
        uvo = ch.joint_uvo(spec, eve)
        assert np.allclose(uvo, j.sum(axis=(2, 3)), atol=1e-15)
