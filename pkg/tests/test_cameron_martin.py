import numpy as np
import pytest

from feynpath import (
    CMElement,
    MeasureKind,
    PiecewisePoly,
    ProfileMismatch,
    SuppElement,
    SupportViolation,
    apply_D,
    apply_D_inverse,
    cm_inner,
    gram_schmidt,
    identity_element,
    inner_with_a,
    odot,
    phi_t,
    stieltjes_integral,
)

from conftest import pp, random_poly, random_nonvanishing_poly


def test_apply_D_is_representational(standard):
    w = CMElement(pp([1.0]), standard)
    assert apply_D(w) == pp([1.0])
    b = identity_element(standard)
    assert apply_D(b) == pp([1.0])  # Db = b'/b' = 1
    v = CMElement(pp([0.0, 1.0]), standard)
    assert apply_D(v) == pp([0.0, 1.0])


def test_apply_D_inverse_round_trip(standard):
    z = pp([0.5, -1.0, 2.0])
    w = apply_D_inverse(z, standard)
    assert apply_D(w) == z
    assert apply_D_inverse(apply_D(w), standard) == w


def test_primitive_of_unit_density(wiener, standard):
    w = apply_D_inverse(pp([1.0]), wiener)
    ts = np.linspace(0, 1, 9)
    assert np.allclose(w.path_values(ts), ts, atol=1e-15)
    # over b' = 1 + t the primitive is t + t^2/2
    v = apply_D_inverse(pp([1.0]), standard)
    assert np.allclose(v.path_values(ts), ts + 0.5 * ts**2, atol=1e-14)


def test_zero_element_has_zero_norm(standard):
    w = apply_D_inverse(pp([0.0]), standard)
    assert w.norm_sq() == 0.0


def test_odot_identity(standard):
    rng = np.random.default_rng(20)
    b = identity_element(standard)
    for _ in range(20):
        w = CMElement(random_poly(rng), standard)
        assert odot(w, b).density.coeff_error(w.density) == 0.0


def test_odot_by_unit_density(standard):
    w = CMElement(pp([1.0]), standard)
    k = SuppElement(CMElement(pp([0.0, 1.0]), standard))
    assert odot(w, k).density.coeff_error(pp([0.0, 1.0])) == 0.0


def test_odot_commutative_associative(standard):
    rng = np.random.default_rng(21)
    for _ in range(20):
        w = CMElement(random_poly(rng, max_degree=2), standard)
        k1 = SuppElement(CMElement(random_nonvanishing_poly(rng), standard))
        k2 = SuppElement(CMElement(random_nonvanishing_poly(rng), standard))
        wk = odot(w, k1)
        kw = odot(k1.base, SuppElement(CMElement(w.density, standard))) if not w.density.has_zero_piece() else None
        if kw is not None:
            assert wk.density.coeff_error(kw.density) <= 1e-13
        left = odot(odot(w, k1), k2)
        right = odot(w, odot(k1, k2))
        assert left.density.coeff_error(right.density) <= 1e-13


def test_odot_supp_closure(standard):
    k1 = SuppElement(CMElement(pp([1.0]), standard))
    k2 = SuppElement(CMElement(pp([0.0, 1.0]), standard))
    prod = odot(k1, k2)
    assert isinstance(prod, SuppElement)


def test_odot_profile_mismatch(standard, wiener):
    w = CMElement(pp([1.0]), standard)
    k = identity_element(wiener)
    with pytest.raises(ProfileMismatch):
        odot(w, k)


def test_cm_inner_frozen_values(standard):
    one = CMElement(pp([1.0]), standard)
    tee = CMElement(pp([0.0, 1.0]), standard)
    # both against b' = 1 + t on [0, 1]
    assert cm_inner(one, one) == pytest.approx(1.5, rel=1e-14)
    assert cm_inner(one, tee) == pytest.approx(5.0 / 6.0, rel=1e-14)
    zero = CMElement(pp([0.0]), standard)
    assert cm_inner(one, zero) == 0.0


def test_cm_inner_requires_same_profile(standard, wiener):
    with pytest.raises(ProfileMismatch):
        cm_inner(CMElement(pp([1.0]), standard), CMElement(pp([1.0]), wiener))


def test_inner_with_a_values(wiener, standard):
    assert inner_with_a(CMElement(pp([1.0]), wiener)) == 0.0
    assert inner_with_a(CMElement(pp([1.0]), standard)) == pytest.approx(0.5, rel=1e-14)
    assert inner_with_a(CMElement(pp([0.0, 1.0]), standard)) == pytest.approx(
        1.0 / 3.0, rel=1e-14
    )


def test_phi_t_full_and_empty(wiener):
    assert phi_t(1.0, wiener).density == pp([1.0])  # full indicator is b
    assert phi_t(0.0, wiener).density.is_zero()


def test_phi_t_primitive_is_clamped_time(wiener):
    w = phi_t(0.5, wiener)
    ts = np.linspace(0, 1, 21)
    assert np.allclose(w.path_values(ts), np.minimum(ts, 0.5), atol=1e-15)


def test_supp_membership(standard):
    with pytest.raises(SupportViolation):
        SuppElement(CMElement(PiecewisePoly([0.0, 0.5, 1.0], [[0.0], [1.0]]), standard))
    # isolated zero at t=0 is fine
    k = SuppElement(CMElement(pp([0.0, 1.0]), standard))
    assert k.bv_certificate


def test_gram_schmidt_normalizes(wiener):
    w = CMElement(pp([2.0]), wiener)  # norm 2 over b' = 1, T = 1
    assert w.norm() == pytest.approx(2.0, rel=1e-14)
    out = gram_schmidt([w])
    assert len(out) == 1
    assert out[0].norm() == pytest.approx(1.0, rel=1e-12)
    assert out[0].density.coeff_error(pp([1.0])) <= 1e-12


def test_gram_schmidt_drops_duplicates(wiener):
    w = CMElement(pp([1.0, -0.5]), wiener)
    out = gram_schmidt([w, w])
    assert len(out) == 1


def test_gram_schmidt_orthonormal_gram_matrix(wiener):
    ws = [CMElement(pp([1.0]), wiener), CMElement(pp([0.0, 1.0]), wiener)]
    out = gram_schmidt(ws)
    G = np.array([[cm_inner(u, v) for v in out] for u in out])
    assert np.abs(G - np.eye(len(out))).max() < 1e-10


def test_gram_schmidt_random_batch(standard):
    rng = np.random.default_rng(22)
    ws = [CMElement(random_poly(rng, max_degree=2), standard) for _ in range(4)]
    ws.append(ws[0])  # force a dependency
    out = gram_schmidt(ws)
    assert len(out) <= 4
    G = np.array([[cm_inner(u, v) for v in out] for u in out])
    assert np.abs(G - np.eye(len(out))).max() < 1e-10


def test_cauchy_schwarz(standard):
    rng = np.random.default_rng(23)
    for _ in range(25):
        w1 = CMElement(random_poly(rng), standard)
        w2 = CMElement(random_poly(rng), standard)
        lhs = abs(cm_inner(w1, w2))
        rhs = w1.norm() * w2.norm()
        assert lhs <= rhs * (1 + 1e-12)


def test_product_norm_identity(standard):
    rng = np.random.default_rng(24)
    for _ in range(10):
        w = CMElement(random_poly(rng, max_degree=2), standard)
        k = SuppElement(CMElement(random_nonvanishing_poly(rng), standard))
        lhs = odot(w, k).norm_sq()
        dens = w.density * k.density
        rhs = stieltjes_integral(dens * dens, MeasureKind.DB, standard)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_element_serialization(standard):
    w = CMElement(pp([0.5, 1.0]), standard)
    d = w.to_dict()
    assert d["density"]["coeffs"] == [[0.5, 1.0]]


def test_first_variation_audit(std_elements):
    from feynpath import first_variation, Monomial, MonomialSpec

    theta, k1, k2 = std_elements
    audit = []
    first_variation(Monomial(MonomialSpec(theta, (k1,))), k1, k2, None, theta, audit=audit)
    assert audit[0]["op"] == "first_variation"
    assert len(audit[0]["direction_scalars"]) == 1
