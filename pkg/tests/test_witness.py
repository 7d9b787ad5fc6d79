import math

import numpy as np
import pytest

from framelab.core import Field, FrameSpec, onb_frame, random_frame
from framelab.errors import HypothesisFail, NotABasis, PreconditionError, RegimeExceeded, ZeroVector
from framelab.witness import (biorthogonal, cn_basis_witness, default_alphas, perp_constant, real_coeff_witness,
                              trace_witness, verify_quadratic_bound)


def test_perp_constant_examples():
    assert perp_constant([1, 0], [0, math.sqrt(2)]) == pytest.approx(math.sqrt(2))
    assert perp_constant([1, 2], [1, 2]) == pytest.approx(0, abs=1e-15)
    assert perp_constant([1, 0], [1, 1]) == pytest.approx(1)
    with pytest.raises(ZeroVector):
        perp_constant([0, 0], [1, 1])


def test_biorthogonal_system():
    fr = FrameSpec(Field.COMPLEX, [[1, 0, 0], [0, 1, 0], [1, 0, 1]], [1, 1, 1])
    F = biorthogonal(fr)
    # <f_i, e_j> = delta_ij
    G = np.array([[np.vdot(e, f) for e in fr.effective_vectors] for f in F])
    assert np.allclose(G, np.eye(3))
    with pytest.raises(NotABasis):
        biorthogonal(random_frame(2, 3, seed=0, field="complex"))


def test_basis_witness_onb():
    fr = onb_frame(2, "complex")
    y = cn_basis_witness(fr, np.array([1, 1], dtype=complex))
    assert np.allclose(y, [1j, -1j])
    assert abs(np.vdot(y, [1, 1])) == 0
    assert perp_constant([1, 1], y) == pytest.approx(math.sqrt(2))


def test_basis_witness_rejects_single_coefficient():
    with pytest.raises(HypothesisFail):
        cn_basis_witness(onb_frame(2, "complex"), np.array([2, 0], dtype=complex))
    with pytest.raises(HypothesisFail):
        cn_basis_witness(onb_frame(2), np.array([1.0, 1.0]))


def test_basis_witness_skewed_basis():
    fr = FrameSpec(Field.COMPLEX, [[1, 0, 0], [0, 1, 0], [1, 0, 1]], [1, 1, 1])
    x = np.ones(3, dtype=complex)
    y = cn_basis_witness(fr, x)
    tr = trace_witness(fr, x, y)
    assert np.all(tr.denominators >= tr.alphas * tr.c_lemma - 1e-12)
    assert tr.ratio_order == pytest.approx(1.0, abs=0.1)


def test_trace_onb_closed_form():
    fr = onb_frame(2, "complex")
    z = np.array([1, 1], dtype=complex)
    tr = trace_witness(fr, z, np.array([1j, -1j]))
    a = tr.alphas
    assert np.allclose(tr.numerators, math.sqrt(2) * (np.sqrt(1 + a * a) - 1), rtol=1e-9, atol=1e-16)
    num_o, den_o, rat_o = tr.fitted_orders
    assert num_o == pytest.approx(2, abs=0.05)
    assert rat_o == pytest.approx(1, abs=0.05)
    assert np.allclose(tr.ratios, tr.numerators / tr.denominators)
    assert np.all(tr.denominators >= a * tr.c_lemma - 1e-12)


def test_trace_rejects_dependent_direction():
    fr = onb_frame(2, "complex")
    z = np.array([1, 1], dtype=complex)
    with pytest.raises(PreconditionError):
        trace_witness(fr, z, z)


def test_real_trace_has_no_decay():
    tr = trace_witness(onb_frame(2), np.array([3.0, 4.0]), np.array([4.0, -3.0]) / 5)
    assert tr.ratio_order == pytest.approx(0, abs=0.05)


def test_real_coeff_witness_onb():
    fr = onb_frame(2, "complex")
    z, d = real_coeff_witness(fr, np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex))
    assert np.allclose(z, [1, 1]) and np.allclose(d, [0, 1j])


def test_real_coeff_witness_skips_cancelling_scalar():
    fr = onb_frame(2, "complex")
    # a = 1 would cancel the first coefficient of z = a x + y
    z, _ = real_coeff_witness(fr, np.array([1, 1], dtype=complex), np.array([-1, 2], dtype=complex))
    assert np.all(np.abs(z) > 1e-8)
    assert np.allclose(z, [-2, 1])


def test_real_coeff_witness_rejects_complex_coefficients():
    fr = onb_frame(2, "complex")
    with pytest.raises(HypothesisFail):
        real_coeff_witness(fr, np.array([1j, 0]), np.array([0, 1], dtype=complex))
    with pytest.raises(HypothesisFail):
        real_coeff_witness(fr, np.array([1, 1], dtype=complex), np.array([2, 2], dtype=complex))


def test_quadratic_bound_onb():
    fr = onb_frame(2, "complex")
    qb = verify_quadratic_bound(fr, np.array([1, 1], dtype=complex), np.array([1j, -1j]))
    assert qb.k == pytest.approx(math.sqrt(2) / 2)
    assert qb.holds and qb.max_violation <= 0


def test_quadratic_bound_regime():
    fr = onb_frame(2, "complex")
    with pytest.raises(RegimeExceeded) as exc:
        verify_quadratic_bound(fr, np.array([1, 1], dtype=complex), np.array([1j, -1j]), alphas=[2.0, 1.0])
    assert exc.value.alpha_cutoff == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(10))
def test_quadratic_bound_random_real_coefficients(seed):
    r = np.random.default_rng(seed)
    real = random_frame(3, 7, seed=seed)
    fr = FrameSpec(Field.COMPLEX, real.vectors.astype(complex), real.weights)
    x, y = r.standard_normal(3).astype(complex), r.standard_normal(3).astype(complex)
    z, d = real_coeff_witness(fr, x, y)
    qb = verify_quadratic_bound(fr, z, d, alphas=[1e-3])
    assert qb.max_violation <= 0


def test_trace_csv_columns():
    tr = trace_witness(onb_frame(2, "complex"), np.array([1, 1], dtype=complex), np.array([1j, -1j]),
                       default_alphas(3))
    lines = tr.to_csv().splitlines()
    assert lines[0] == "alpha,numerator,denominator,ratio"
    assert lines[1].split(",")[0] == "0.5"
