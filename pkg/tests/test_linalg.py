"""Eigendecomposition, PSD square root, and norm contracts.

numpy.linalg is used here as an independent oracle for the Jacobi solver;
the package itself never calls it for eigenproblems.
"""

import numpy as np
import pytest

from ojaboot import linalg


def random_symmetric(rng, d, scale=1.0):
    a = rng.standard_normal((d, d)) * scale
    return (a + a.T) / 2.0


def power_iteration_abs_max(a, iters=2000, seed=0):
    # max |eigenvalue| via power iteration on a @ a (avoids +/- pair stalls).
    rng = np.random.default_rng(seed)
    a2 = a @ a
    v = rng.standard_normal(a.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        v = a2 @ v
        v /= np.linalg.norm(v)
    return float(np.sqrt(v @ a2 @ v))


class TestSym:
    def test_averages_asymmetry(self):
        a = linalg.sym([[1.0, 2.0], [0.0, 1.0]])
        np.testing.assert_allclose(a, [[1.0, 1.0], [1.0, 1.0]])

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            linalg.sym(np.zeros((2, 3)))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            linalg.sym([[np.nan, 0.0], [0.0, 1.0]])


class TestEigh:
    def test_identity(self):
        dec = linalg.eigh(np.eye(3))
        np.testing.assert_allclose(dec.eigenvalues, [1.0, 1.0, 1.0])
        np.testing.assert_allclose(dec.eigenvectors, np.eye(3))

    def test_diagonal(self):
        dec = linalg.eigh(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(dec.eigenvalues, [3.0, 1.0])
        np.testing.assert_allclose(dec.eigenvectors, np.eye(2))

    def test_2x2_closed_form(self):
        # [[2,1],[1,2]]: eigenvalues 2 +/- 1, eigenvectors (1,1)/sqrt2, (1,-1)/sqrt2.
        dec = linalg.eigh([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(dec.eigenvalues, [3.0, 1.0], atol=1e-12)
        r = 1.0 / np.sqrt(2.0)
        np.testing.assert_allclose(dec.eigenvectors[:, 0], [r, r], atol=1e-12)
        np.testing.assert_allclose(dec.eigenvectors[:, 1], [r, -r], atol=1e-12)

    @pytest.mark.parametrize("d", [2, 5, 20, 50, 113, 200])
    def test_random_reconstruction_and_orthonormality(self, d):
        rng = np.random.default_rng(d)
        a = random_symmetric(rng, d, scale=3.0)
        dec = linalg.eigh(a)
        norm_a = np.linalg.norm(a)
        recon = dec.eigenvectors @ np.diag(dec.eigenvalues) @ dec.eigenvectors.T
        assert np.linalg.norm(recon - a) <= 1e-10 * max(1.0, norm_a)
        gram = dec.eigenvectors.T @ dec.eigenvectors
        assert np.max(np.abs(gram - np.eye(d))) <= 1e-10
        assert np.all(np.diff(dec.eigenvalues) <= 1e-12)

    @pytest.mark.parametrize("d", [3, 17, 60])
    def test_matches_numpy_eigenvalues(self, d):
        rng = np.random.default_rng(100 + d)
        a = random_symmetric(rng, d)
        dec = linalg.eigh(a)
        ref = np.sort(np.linalg.eigvalsh(a))[::-1]
        np.testing.assert_allclose(dec.eigenvalues, ref, atol=1e-9 * max(1.0, np.abs(ref).max()))

    def test_matches_numpy_eigenvectors_up_to_sign(self):
        rng = np.random.default_rng(7)
        a = random_symmetric(rng, 12)
        dec = linalg.eigh(a)
        vals, vecs = np.linalg.eigh(a)
        vecs = vecs[:, ::-1]
        cos = np.abs(np.sum(dec.eigenvectors * vecs, axis=0))
        np.testing.assert_allclose(cos, np.ones(12), atol=1e-8)

    def test_sign_convention(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            a = random_symmetric(rng, 8)
            q = linalg.eigh(a).eigenvectors
            for k in range(8):
                col = q[:, k]
                assert col[np.argmax(np.abs(col))] >= 0

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        a = random_symmetric(rng, 15)
        d1 = linalg.eigh(a)
        d2 = linalg.eigh(a)
        assert np.array_equal(d1.eigenvalues, d2.eigenvalues)
        assert np.array_equal(d1.eigenvectors, d2.eigenvectors)

    def test_near_degenerate_spectrum(self):
        q, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((6, 6)))
        vals = np.array([2.0, 2.0 - 1e-13, 1.0, 1.0, 1.0, 0.5])
        a = (q * vals) @ q.T
        dec = linalg.eigh(a)
        recon = dec.eigenvectors @ np.diag(dec.eigenvalues) @ dec.eigenvectors.T
        assert np.linalg.norm(recon - linalg.sym(a)) <= 1e-10 * max(1.0, np.linalg.norm(a))

    def test_dim_cap(self):
        with pytest.raises(ValueError):
            linalg.eigh(np.eye(linalg.MAX_DIM + 1))

    def test_sweep_exhaustion_reports_residual(self):
        a = [[2.0, 1.0], [1.0, 2.0]]
        with pytest.raises(linalg.EighConvergenceError) as err:
            linalg.eigh(a, sweeps=0)
        assert err.value.residual > 0


class TestSqrtPsd:
    def test_identity(self):
        np.testing.assert_allclose(linalg.sqrt_psd(np.eye(3)), np.eye(3), atol=1e-12)

    def test_diagonal(self):
        np.testing.assert_allclose(linalg.sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-12)

    def test_2x2_by_squaring(self):
        a = np.array([[2.0, 1.0], [1.0, 2.0]])
        s = linalg.sqrt_psd(a)
        np.testing.assert_allclose(s @ s, a, atol=1e-10)
        np.testing.assert_allclose(s, s.T)

    @pytest.mark.parametrize("d", [2, 10, 40])
    def test_random_psd_squares_back(self, d):
        rng = np.random.default_rng(d + 1)
        r = rng.standard_normal((d, d))
        a = r @ r.T
        s = linalg.sqrt_psd(a)
        assert np.linalg.norm(s @ s - a) <= 1e-8 * max(1.0, np.linalg.norm(a))
        assert np.min(np.linalg.eigvalsh(s)) >= -1e-10

    def test_clamps_tiny_negative(self):
        a = np.diag([1.0, -1e-12])
        s = linalg.sqrt_psd(a)
        np.testing.assert_allclose(s, np.diag([1.0, 0.0]), atol=1e-12)

    def test_rejects_indefinite(self):
        with pytest.raises(linalg.NotPsdError):
            linalg.sqrt_psd(np.diag([1.0, -1.0]))


class TestNorms:
    def test_identity_d4(self):
        a = np.eye(4)
        assert linalg.trace(a) == 4.0
        assert linalg.frobenius_norm(a) == 2.0
        assert linalg.operator_norm(a) == pytest.approx(1.0, abs=1e-12)

    def test_zero(self):
        a = np.zeros((3, 3))
        assert linalg.trace(a) == 0.0
        assert linalg.frobenius_norm(a) == 0.0
        assert linalg.operator_norm(a) == 0.0

    def test_diag_with_negative(self):
        a = np.diag([3.0, -1.0])
        assert linalg.operator_norm(a) == pytest.approx(3.0, abs=1e-12)
        assert linalg.trace(a) == 2.0
        assert linalg.frobenius_norm(a) == pytest.approx(np.sqrt(10.0))

    @pytest.mark.parametrize("d", [4, 12, 30])
    def test_operator_norm_vs_power_iteration(self, d):
        rng = np.random.default_rng(d + 17)
        # well-separated spectrum by construction
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        vals = np.linspace(5.0, 0.5, d)
        a = (q * vals) @ q.T
        est = power_iteration_abs_max(a)
        assert abs(linalg.operator_norm(a) - est) <= 1e-6 * est
