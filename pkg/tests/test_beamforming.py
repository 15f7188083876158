import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bfcsim import beamforming as bf
from bfcsim.array_geometry import dft_codebook
from bfcsim.evaluation import se_link_no_si, se_link_with_si

from conftest import crandn

SNR = 10.0
SNR_SI = 1e12


# -- eigen-beamformers -------------------------------------------------------

def test_eigen_precoder_diagonal():
    f = bf.eigen_precoder(np.diag([3.0, 2.0, 1.0]), 2)
    assert np.allclose(f, np.sqrt(3) * np.eye(3)[:, :2])


def test_eigen_precoder_identity_is_maximal():
    f = bf.eigen_precoder(np.eye(4), 1)
    assert np.isclose(np.linalg.norm(f), 2.0)
    assert np.isclose(np.linalg.norm(np.eye(4) @ f), 2.0)


def test_eigen_precoder_beats_random_search(rng):
    h = crandn(rng, 8, 8)
    f = bf.eigen_precoder(h, 1)[:, 0]
    gain = np.linalg.norm(h @ f) / np.linalg.norm(f)
    x = crandn(rng, 8, 10_000)
    best = np.max(np.linalg.norm(h @ x, axis=0) / np.linalg.norm(x, axis=0))
    assert gain >= best
    assert np.isclose(gain, np.linalg.norm(h, 2))


@pytest.mark.parametrize("shape,ns", [((16, 16), 3), ((8, 12), 4), ((5, 3), 3)])
def test_eigen_beamformers_structure(rng, shape, ns):
    h = crandn(rng, *shape)
    f = bf.eigen_precoder(h, ns)
    w = bf.eigen_combiner(h, ns)
    assert f.shape == (shape[1], ns) and w.shape == (shape[0], ns)
    assert np.allclose(np.linalg.norm(f, axis=0), np.sqrt(shape[1]))
    assert np.allclose(f.conj().T @ f, shape[1] * np.eye(ns), atol=1e-10)
    assert np.allclose(w.conj().T @ w, np.eye(ns), atol=1e-12)
    # largest-magnitude entry of each column is real positive
    for col in (f.T, w.T):
        for c in col:
            pivot = c[np.argmax(np.abs(c))]
            assert abs(pivot.imag) < 1e-12 and pivot.real > 0


def test_eigen_combiner_diagonal():
    assert np.allclose(bf.eigen_combiner(np.diag([3.0, 2.0, 1.0]), 1), [[1], [0], [0]])


def test_eigen_combiner_orthogonal_to_discarded(rng):
    h = crandn(rng, 6, 6)
    _, _, vh = np.linalg.svd(h)
    v_perp = vh.conj().T[:, 2:]
    w = bf.eigen_combiner(h, 2)
    assert np.linalg.norm(w.conj().T @ h @ v_perp) <= 1e-12 * np.linalg.norm(h)


def test_eigen_rank_deficient_still_returns_columns():
    h = np.outer([1, 2, 3], [1, 0, 1]).astype(complex)
    f = bf.eigen_precoder(h, 3)
    assert f.shape == (3, 3)
    assert bf.is_rank_deficient(h, 3)
    assert not bf.is_rank_deficient(h, 1)


def test_eigen_rejects_too_many_streams():
    with pytest.raises(ValueError):
        bf.eigen_precoder(np.eye(3)[:, :2], 3)


# -- null space and projection -------------------------------------------

def test_null_space_examples(rng):
    assert np.allclose(np.abs(bf.null_space_basis([[1.0, 0.0]])), [[0], [1]])
    assert bf.null_space_basis(np.eye(3)).shape == (3, 0)
    m = crandn(rng, 3, 8)
    b = bf.null_space_basis(m)
    assert b.shape == (8, 5)
    assert np.linalg.norm(m @ b) <= 1e-10 * np.linalg.norm(m)
    assert np.allclose(b.conj().T @ b, np.eye(5), atol=1e-12)


def test_null_space_rank_deficient(rng):
    m = crandn(rng, 4, 2) @ crandn(rng, 2, 7)
    assert bf.null_space_basis(m).shape == (7, 5)


def test_project_onto_examples(rng):
    b = np.linalg.qr(crandn(rng, 6, 3))[0]
    x = b @ crandn(rng, 3, 2)
    assert np.allclose(bf.project_onto(b, x), x)
    perp = bf.null_space_basis(b.conj().T)
    assert np.allclose(bf.project_onto(b, perp), 0, atol=1e-12)
    y = crandn(rng, 6, 4)
    py = bf.project_onto(b, y)
    total = np.linalg.norm(y) ** 2
    assert abs(np.linalg.norm(y - py) ** 2 + np.linalg.norm(py) ** 2 - total) <= 1e-10 * total
    assert np.allclose(bf.project_onto(b, py), py)
    assert np.array_equal(bf.project_onto(np.zeros((6, 0)), y), np.zeros((6, 4)))


# -- exact hybrid decomposition -------------------------------------------

def test_exact_decomposition_boundary_angles():
    beta = 0.7
    hb = bf.exact_hybrid_decomposition(np.array([[2 * beta], [0.0]]))
    assert hb.analog.shape == (2, 2) and hb.digital.shape == (2, 1)
    assert np.allclose(hb.digital, [[beta], [beta]])
    assert np.allclose(hb.analog[0], [1, 1])
    assert np.allclose(np.angle(hb.analog[1]), [np.pi / 2, -np.pi / 2])
    assert np.allclose(hb.effective, [[2 * beta], [0]], atol=1e-15)


def test_exact_decomposition_all_ones():
    hb = bf.exact_hybrid_decomposition(np.ones((4, 1)))
    assert np.allclose(hb.analog, np.ones((4, 2)))
    assert np.allclose(hb.digital, [[0.5], [0.5]])


def test_exact_decomposition_zero_column():
    f = np.zeros((4, 2), dtype=complex)
    f[:, 0] = [1, 2j, -1, 0.5]
    hb = bf.exact_hybrid_decomposition(f)
    assert np.allclose(np.abs(hb.analog), 1)
    assert np.allclose(hb.effective, f)
    assert np.all(hb.digital[:, 1] == 0)


def test_exact_decomposition_random(rng):
    for _ in range(20):
        f = crandn(rng, 16, 3)
        hb = bf.exact_hybrid_decomposition(f)
        assert hb.num_rf == 6
        assert np.linalg.norm(hb.effective - f) <= 1e-10 * np.linalg.norm(f)
        assert np.max(np.abs(np.abs(hb.analog) - 1)) <= 1e-12


@settings(max_examples=40)
@given(st.integers(1, 32), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_exact_decomposition_property(na, ns, seed):
    f = crandn(np.random.default_rng(seed), na, ns)
    hb = bf.exact_hybrid_decomposition(f)
    assert np.linalg.norm(hb.effective - f) <= 1e-10 * np.linalg.norm(f)
    assert np.max(np.abs(np.abs(hb.analog) - 1)) <= 1e-12


# -- OMP ------------------------------------------------------------------

def test_omp_single_codebook_column():
    cb = dft_codebook(16)
    target = 3.0 * cb.matrix[:, [5]]
    for nrf in (1, 3):
        hb = bf.omp_hybrid_approx(target, cb, nrf)
        assert hb.num_rf == 1
        assert np.allclose(hb.effective, target, atol=1e-12)


def test_omp_two_column_span(rng):
    cb = dft_codebook(16)
    target = cb.matrix[:, [2, 9]] @ crandn(rng, 2, 2)
    hb = bf.omp_hybrid_approx(target, cb, 2)
    assert sorted(np.argmax(np.abs(cb.matrix.conj().T @ hb.analog), axis=0)) == [2, 9]
    assert np.linalg.norm(hb.effective - target) <= 1e-10 * np.linalg.norm(target)


def test_omp_residual_non_increasing(rng):
    cb = dft_codebook(16)
    for _ in range(20):
        target = crandn(rng, 16, 3)
        res = [np.linalg.norm(target - bf.omp_hybrid_approx(target, cb, n).effective) for n in range(3, 7)]
        assert all(b <= a + 1e-12 for a, b in zip(res, res[1:]))


def test_omp_column_norms_and_unit_modulus(rng):
    cb = dft_codebook(16)
    target = crandn(rng, 16, 3)
    hb = bf.omp_hybrid_approx(target, cb, 4)
    assert hb.analog.shape == (16, 4)
    assert np.allclose(np.linalg.norm(hb.effective, axis=0), np.linalg.norm(target, axis=0))
    assert np.allclose(np.abs(hb.analog), 1, atol=1e-12)
    # no codebook column is picked twice
    picks = np.argmax(np.abs(cb.matrix.conj().T @ hb.analog), axis=0)
    assert len(set(picks)) == 4


def test_omp_ties_break_to_lowest_index():
    cb = dft_codebook(4)
    target = (cb.matrix[:, [1]] + cb.matrix[:, [3]])
    hb = bf.omp_hybrid_approx(target, cb, 1)
    assert np.allclose(hb.analog[:, 0], cb.matrix[:, 1])


# -- Case A -----------------------------------------------------------------

def _links(rng, n=16):
    return crandn(rng, n, n), crandn(rng, n, n), crandn(rng, n, n) * 4


def test_case_a_without_si_is_eigen(rng):
    h_ki, h_ij, _ = _links(rng)
    d = bf.design_case_a(h_ki, h_ij, np.zeros((16, 16)), 3)
    assert np.allclose(d.precoder_i.effective, bf.eigen_precoder(h_ij, 3), atol=1e-10)


def test_case_a_already_orthogonal_precoder_unchanged(rng):
    h_ki, h_ij, m = _links(rng)
    v = bf.eigen_precoder(h_ij, 3)
    h_ii = m @ (np.eye(16) - v @ v.conj().T / 16)
    d = bf.design_case_a(h_ki, h_ij, h_ii, 3)
    assert np.allclose(d.precoder_i.effective, v, atol=1e-9)


def test_case_a_nulls_si_and_keeps_ki_rate(rng):
    for _ in range(10):
        h_ki, h_ij, h_ii = _links(rng)
        d = bf.design_case_a(h_ki, h_ij, h_ii, 3)
        assert d.case is bf.DesignCase.CASE_A and not d.degenerate
        assert np.linalg.norm(d.residual_si(h_ii)) <= 1e-8 * 16
        assert d.precoder_i.num_rf == 6 and d.combiner_i.num_rf == 6
        w = bf.eigen_combiner(h_ki, 3)
        free = se_link_no_si(h_ki, d.precoder_k, w, SNR)
        got = se_link_with_si(h_ki, d.precoder_k, d.combiner_i.effective, h_ii,
                              d.precoder_i.effective, SNR, SNR_SI)
        assert abs(got - free) <= 1e-9
        assert np.allclose(np.linalg.norm(d.precoder_i.effective, axis=0), 4.0, atol=1e-9)
        assert np.allclose(np.abs(d.precoder_i.analog), 1, atol=1e-12)
        assert np.allclose(np.abs(d.combiner_i.analog), 1, atol=1e-12)


def test_case_a_projection_idempotent(rng):
    h_ki, h_ij, h_ii = _links(rng)
    d = bf.design_case_a(h_ki, h_ij, h_ii, 3)
    w = bf.eigen_combiner(h_ki, 3)
    b = bf.null_space_basis(w.conj().T @ h_ii)
    f = d.precoder_i.effective
    assert np.linalg.norm(bf.project_onto(b, f) - f) <= 1e-10 * np.linalg.norm(f)


def test_case_a_infeasible():
    h = np.eye(3, dtype=complex)
    with pytest.raises(bf.DesignInfeasibleError):
        bf.design_case_a(h, h, h, 3)


def test_case_a_total_power_mode(rng):
    h_ki, h_ij, h_ii = _links(rng)
    d = bf.design_case_a(h_ki, h_ij, h_ii, 3, power="total")
    assert np.isclose(np.linalg.norm(d.precoder_i.effective), 4.0)


def test_case_a_phase_bits_keeps_unit_modulus(rng):
    h_ki, h_ij, h_ii = _links(rng)
    d = bf.design_case_a(h_ki, h_ij, h_ii, 3, phase_bits=3)
    assert np.allclose(np.abs(d.precoder_i.analog), 1, atol=1e-12)
    levels = np.angle(d.precoder_i.analog) / (2 * np.pi / 8)
    assert np.allclose(levels, np.round(levels), atol=1e-9)
    assert np.allclose(np.linalg.norm(d.precoder_i.effective, axis=0), 4.0)


# -- Case B -----------------------------------------------------------------

def test_case_b_without_si_is_plain_omp(rng):
    h_ki, h_ij, _ = _links(rng)
    cb = dft_codebook(16)
    d = bf.design_case_b(h_ki, h_ij, np.zeros((16, 16)), 3, 4, cb)
    x = bf.omp_hybrid_approx(bf.eigen_precoder(h_ij, 3), cb, 4)
    assert np.allclose(d.precoder_i.analog, x.analog)
    assert np.allclose(d.precoder_i.digital, x.digital, atol=1e-10)


def test_case_b_nrf_equal_ns_is_degenerate(rng):
    h_ki, h_ij, h_ii = _links(rng)
    d = bf.design_case_b(h_ki, h_ij, h_ii, 3, 3, dft_codebook(16))
    assert d.degenerate
    assert np.all(d.precoder_i.effective == 0)
    free = se_link_no_si(h_ki, d.precoder_k, d.combiner_i.effective, SNR)
    got = se_link_with_si(h_ki, d.precoder_k, d.combiner_i.effective, h_ii,
                          d.precoder_i.effective, SNR, SNR_SI)
    assert got == free
    assert se_link_no_si(h_ij, d.precoder_i.effective, d.combiner_j, SNR) == 0.0


@pytest.mark.parametrize("nrf", [4, 5])
def test_case_b_nulls_digital_si(rng, nrf):
    cb = dft_codebook(16)
    for _ in range(10):
        h_ki, h_ij, h_ii = _links(rng)
        d = bf.design_case_b(h_ki, h_ij, h_ii, 3, nrf, cb)
        assert not d.degenerate
        assert np.linalg.norm(d.residual_si(h_ii)) <= 1e-8 * 16
        assert np.allclose(np.linalg.norm(d.precoder_i.effective, axis=0), 4.0, atol=1e-9)
        assert np.allclose(np.abs(d.precoder_i.analog), 1, atol=1e-12)
        assert np.allclose(np.abs(d.combiner_i.analog), 1, atol=1e-12)
        eff_si = d.combiner_i.effective.conj().T @ h_ii @ d.precoder_i.analog
        assert bf.null_space_basis(eff_si).shape[1] == nrf - 3


def test_case_b_warns_outside_range(rng):
    h_ki, h_ij, h_ii = _links(rng)
    with pytest.warns(UserWarning):
        bf.design_case_b(h_ki, h_ij, h_ii, 3, 6, dft_codebook(16))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        bf.design_case_b(h_ki, h_ij, h_ii, 3, 5, dft_codebook(16))


def test_eigen_only_hybrid_variants(rng):
    h_ki, h_ij, _ = _links(rng)
    exact = bf.design_eigen_only(h_ki, h_ij, 3)
    assert np.allclose(exact.precoder_i.effective, bf.eigen_precoder(h_ij, 3), atol=1e-10)
    assert np.allclose(exact.combiner_i.effective, bf.eigen_combiner(h_ki, 3), atol=1e-12)
    omp = bf.design_eigen_only(h_ki, h_ij, 3, codebook=dft_codebook(16), nrf=6)
    assert omp.precoder_i.num_rf == 6
    assert np.allclose(np.linalg.norm(omp.precoder_i.effective, axis=0), 4.0)


def test_hybrid_beamformer_shape_check():
    with pytest.raises(ValueError):
        bf.HybridBeamformer(np.ones((4, 2)), np.ones((3, 1)))
    fd = bf.HybridBeamformer.fully_digital(np.ones((4, 2)))
    assert np.allclose(fd.effective, np.ones((4, 2)))
