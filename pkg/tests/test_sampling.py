import numpy as np
import pytest

from haflab import kernels as kn
from haflab import sampling as sp
from haflab.errors import CapacityError, ModelError, PreconditionError
from haflab.matfun import hafnian_dp

GRID = kn.Grid.regular(0.0, 1.0, 5)
MODELS = {name: kn.builtin_model(name, GRID) for name in kn.BUILTIN_NAMES}


def entrywise_z(draws_product, exact):
    se = draws_product.std(ddof=1) / np.sqrt(draws_product.size)
    if se == 0:
        return 0.0 if np.isclose(abs(draws_product.mean() - exact), 0) else np.inf
    return abs(draws_product.mean() - exact) / se


# ---------------------------------------------------------------------------
# augmented covariance
# ---------------------------------------------------------------------------


def test_augmented_proper_real_k1_is_block_diagonal():
    # circularly symmetric field with a real covariance: both blocks K1/2
    l = np.array([[1.0, 0.5, 0.2, 0.1, 0.3], [0.2, 0.8, 0.5, 0.3, 0.1]])
    zero = np.zeros_like(l)
    model = kn.field_model(GRID, np.vstack([l, zero]), np.vstack([zero, l]))
    cov = sp.augmented_covariance(model)
    m = GRID.n_cells
    assert np.allclose(cov[:m, :m], model.k1.real / 2, atol=1e-14)
    assert np.allclose(cov[m:, m:], model.k1.real / 2, atol=1e-14)
    assert np.abs(cov[:m, m:]).max() <= 1e-14


def test_augmented_real_structured_field_is_purely_real():
    model = MODELS["real-gauss"]
    cov = sp.augmented_covariance(model)
    m = GRID.n_cells
    assert np.allclose(cov[:m, :m], model.k1.real, atol=1e-14)
    assert np.abs(cov[m:, m:]).max() <= 1e-14
    assert np.abs(cov[:m, m:]).max() <= 1e-14


def test_augmented_single_cell_unit_variance():
    grid = kn.Grid.regular(0.0, 1.0, 1)
    model = kn.field_model(grid, [[1.0], [0.0]], [[0.0], [1.0]])
    cov = sp.augmented_covariance(model)
    assert np.allclose(cov, np.diag([0.5, 0.5]), atol=1e-14)


def test_augmented_symmetric_and_psd():
    for model in MODELS.values():
        cov = sp.augmented_covariance(model)
        assert np.abs(cov - cov.T).max() <= 1e-12
        assert np.linalg.eigvalsh(cov).min() >= -1e-8 * max(1, np.abs(cov).max())


def test_augmented_rejects_inconsistent_pair():
    # hand-built kernels that no field can have: k1 = 0 but k2 != 0
    grid = kn.Grid.regular(0.0, 1.0, 2)
    base = kn.builtin_model("real-gauss", grid, {"n_centers": 1})
    broken = kn.GaussianFieldModel(grid, base.l1, base.l2,
                                   np.zeros((2, 2)), base.k2)
    with pytest.raises(ModelError):
        sp.augmented_covariance(broken)


# ---------------------------------------------------------------------------
# field sampling
# ---------------------------------------------------------------------------


def test_zero_model_yields_zero_field():
    z = np.zeros((2, 5))
    model = kn.field_model(GRID, z, z)
    assert np.abs(sp.sample_field(model, 1, size=10)).max() == 0.0


def test_sample_field_seeded_determinism():
    model = MODELS["alpha-beta-demo"]
    a = sp.sample_field(model, 123, size=7)
    b = sp.sample_field(model, 123, size=7)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sp.sample_field(model, 124, size=7))


@pytest.mark.parametrize("name", sorted(MODELS))
def test_empirical_covariance_and_pseudo_covariance(name):
    model = MODELS[name]
    g = sp.sample_field(model, 77, size=100_000)
    for (a, b) in [(0, 0), (0, 3), (2, 4)]:
        prod_cov = g[:, a] * np.conj(g[:, b])
        prod_pse = g[:, a] * g[:, b]
        for part in (np.real, np.imag):
            assert entrywise_z(part(prod_cov), part(model.k1[a, b])) < 4
            assert entrywise_z(part(prod_pse), part(model.k2[a, b])) < 4


def test_sample_field_direct_moments():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    b = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    g = sp.sample_field_direct(a, b, 5, size=100_000)
    k1 = (a.T @ a.conj() + b.T @ b.conj()) / 2
    k2 = (a.T @ a - b.T @ b) / 2
    for (i, j) in [(0, 0), (1, 3)]:
        assert entrywise_z((g[:, i] * np.conj(g[:, j])).real, k1[i, j].real) < 4
        assert entrywise_z((g[:, i] * g[:, j]).real, k2[i, j].real) < 4


def test_sample_field_direct_beta_zero_is_real_scaled():
    a = np.array([[1.0, 2.0], [0.5, 0.25]])
    g = sp.sample_field_direct(a, np.zeros_like(a), 3, size=50)
    assert np.abs(g.imag).max() == 0.0


def test_sample_field_direct_proper_when_equal():
    rng = np.random.default_rng(12)
    l = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    g = sp.sample_field_direct(l, l, 6, size=100_000)
    prod = g[:, 0] * g[:, 1]
    assert entrywise_z(prod.real, 0.0) < 4
    assert entrywise_z(prod.imag, 0.0) < 4


# ---------------------------------------------------------------------------
# point patterns
# ---------------------------------------------------------------------------


def test_poisson_zero_intensity():
    profile = kn.IntensityProfile(GRID, np.zeros(5))
    assert sp.sample_poisson(profile, 1, size=20).max() == 0


def test_poisson_mean_and_equidispersion():
    lam = np.array([1.0, 2.0, 0.5 + 0.5j, 1j, 0.0])
    profile = kn.IntensityProfile(GRID, lam)
    pats = sp.sample_poisson(profile, 8, size=100_000)
    rate = np.abs(lam) ** 2 * GRID.volumes
    totals = pats.sum(axis=1).astype(float)
    assert entrywise_z(totals, rate.sum()) < 4
    # equidispersion of a single box count
    t = sp.box_counts(pats, [0, 1]).astype(float)
    var = t.var(ddof=1)
    mean = t.mean()
    se = np.abs(t - t.mean()).std() / np.sqrt(t.size) * 3  # crude but safe
    assert abs(var - mean) < 4 * max(se, 1e-3)


def test_cox_zero_model_empty():
    z = np.zeros((1, 5))
    model = kn.field_model(GRID, z, z)
    assert sp.sample_cox(model, 2, size=10).max() == 0


def test_cox_mean_count_matches_intensity():
    model = MODELS["proper-fourier"]
    pats = sp.sample_cox(model, 21, size=100_000)
    box = [0, 1, 2]
    expected = float(np.dot(GRID.volumes[box], model.k1.diagonal().real[box]))
    assert entrywise_z(sp.box_counts(pats, box).astype(float), expected) < 4


def test_cox_pattern_determinism():
    model = MODELS["real-gauss"]
    assert np.array_equal(sp.sample_cox(model, 5, size=9),
                          sp.sample_cox(model, 5, size=9))


# ---------------------------------------------------------------------------
# moments: Monte Carlo vs exact quadrature
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(MODELS))
@pytest.mark.parametrize("pts", [[1], [0, 3], [0, 2, 4]])
def test_field_moment_mc_matches_hafnian(name, pts):
    model = MODELS[name]
    rep = sp.field_moment_mc(model, pts, 200_000, seed=31)
    exact = hafnian_dp(kn.block_kernel(model, pts)).real
    assert abs(rep.value - exact) < 4 * rep.std_error
    assert rep.n_samples == 200_000


def test_field_moment_rejects_large_order():
    with pytest.raises(PreconditionError):
        sp.field_moment_mc(MODELS["real-gauss"], [0, 1, 2, 3, 4], 10, seed=0)


def test_quadrature_single_box_is_intensity():
    model = MODELS["alpha-beta-demo"]
    box = [0, 2, 3]
    rep = sp.quadrature_haf_moment(model, [box])
    expected = float(np.dot(GRID.volumes[box], model.k1.diagonal().real[box]))
    assert rep.value == pytest.approx(expected, rel=1e-12)
    assert rep.std_error is None


def test_quadrature_zero_model():
    z = np.zeros((1, 5))
    model = kn.field_model(GRID, z, z)
    assert sp.quadrature_haf_moment(model, [[0], [1]]).value == 0.0


def test_quadrature_orthogonal_columns_factorize():
    # independent cells: off-diagonal kernel entries vanish, so only the
    # self-pairing term survives per point
    feats = np.eye(5) * np.array([1.0, 1.5, 0.5, 2.0, 1.0])
    model = kn.field_model(GRID, feats, feats)
    rep = sp.quadrature_haf_moment(model, [[1], [3]])
    expected = (model.k1[1, 1].real * GRID.volumes[1]
                * model.k1[3, 3].real * GRID.volumes[3])
    assert rep.value == pytest.approx(expected, rel=1e-12)


def test_quadrature_brute_force_oracle():
    # independent oracle: enumerate the tuples by hand
    from itertools import product as iproduct
    model = MODELS["alpha-beta-demo"]
    boxes = [[0, 1], [2, 4]]
    total = 0.0
    for combo in iproduct(*boxes):
        pts = list(combo)
        total += (hafnian_dp(kn.block_kernel(model, pts)).real
                  * np.prod(GRID.volumes[pts]))
    assert sp.quadrature_haf_moment(model, boxes).value == pytest.approx(total)


def test_quadrature_preconditions():
    model = MODELS["real-gauss"]
    with pytest.raises(PreconditionError):
        sp.quadrature_haf_moment(model, [[0, 1], [1, 2]])
    sp.quadrature_haf_moment(model, [[0, 1], [1, 2]], allow_repeats=True)
    with pytest.raises(CapacityError):
        sp.quadrature_haf_moment(model, [[0, 1, 2, 3, 4]] * 4, tuple_limit=100,
                                 allow_repeats=True)
    with pytest.raises(PreconditionError):
        sp.quadrature_haf_moment(model, [[0]] * 5, allow_repeats=True)


def test_empirical_product_moment_cases():
    empty = np.zeros((40, 5), dtype=int)
    rep = sp.empirical_product_moment(empty, [[0], [1]])
    assert rep.value == 0.0 and rep.std_error == 0.0
    with pytest.raises(PreconditionError):
        sp.empirical_product_moment(np.zeros((0, 5)), [[0]])
    with pytest.raises(PreconditionError):
        sp.empirical_product_moment(empty, [[0, 1], [1]])


def test_empirical_poisson_window_mean():
    profile = kn.IntensityProfile(GRID, np.ones(5))
    pats = sp.sample_poisson(profile, 17, size=50_000)
    rep = sp.empirical_product_moment(pats, [list(range(5))])
    assert abs(rep.value - 1.0) < 4 * rep.std_error


def test_cox_product_moment_vs_quadrature():
    for model in MODELS.values():
        pats = sp.sample_cox(model, 19, size=60_000)
        boxes = [[0, 1], [3, 4]]
        emp = sp.empirical_product_moment(pats, boxes)
        quad = sp.quadrature_haf_moment(model, boxes)
        assert abs(emp.value - quad.value) < 4 * emp.std_error


def test_factorial_moment_poisson_closed_form():
    lam = np.full(5, 1.2)
    profile = kn.IntensityProfile(GRID, lam)
    pats = sp.sample_poisson(profile, 23, size=120_000)
    box = [0, 1, 2]
    rep = sp.empirical_factorial_moment(pats, box, 2)
    mass = float(np.sum(np.abs(lam[box]) ** 2 * GRID.volumes[box]))
    assert abs(rep.value - mass ** 2) < 4 * rep.std_error
    rep1 = sp.empirical_factorial_moment(pats, box, 1)
    assert rep1.value == pytest.approx(sp.box_counts(pats, box).mean())


def test_factorial_moment_cox_vs_full_square_quadrature():
    model = MODELS["real-gauss"]
    pats = sp.sample_cox(model, 29, size=60_000)
    box = [0, 1, 2]
    rep = sp.empirical_factorial_moment(pats, box, 2)
    quad = sp.quadrature_haf_moment(model, [box, box], allow_repeats=True)
    assert abs(rep.value - quad.value) < 4 * rep.std_error


def test_growth_bound_all_models():
    box = list(range(GRID.n_cells))
    for model in MODELS.values():
        for n in (1, 2, 3):
            quad = sp.quadrature_haf_moment(model, [box] * n,
                                            allow_repeats=True).value
            bound = (2.0 * kn.intensity_integral(model, box)) ** n
            assert quad <= bound * (1 + 1e-12)


def test_proper_field_permanent_reduction():
    from itertools import product as iproduct
    from haflab.matfun import permanent
    model = MODELS["proper-fourier"]
    boxes = [[0, 1], [2], [3, 4]]
    via_perm = 0.0
    for combo in iproduct(*boxes):
        pts = list(combo)
        via_perm += (permanent(model.k1[np.ix_(pts, pts)]).real
                     * np.prod(GRID.volumes[pts]))
    via_haf = sp.quadrature_haf_moment(model, boxes).value
    assert abs(via_haf - via_perm) <= 1e-10 * abs(via_perm)


def test_real_field_two_permanent_reduction():
    from haflab.matfun import alpha_det
    model = MODELS["real-gauss"]
    for pts in ([0], [0, 2], [1, 3, 4]):
        haf = hafnian_dp(kn.block_kernel(model, pts)).real
        det2 = alpha_det(model.k1[np.ix_(pts, pts)].real, 2.0).real
        assert abs(haf - det2) <= 1e-10 * abs(det2)


def test_replicate_streams_are_stable_and_distinct():
    a0 = sp.replicate_rng(9, 0).standard_normal(4)
    a0_again = sp.replicate_rng(9, 0).standard_normal(4)
    a1 = sp.replicate_rng(9, 1).standard_normal(4)
    assert np.array_equal(a0, a0_again)
    assert not np.array_equal(a0, a1)


def test_moment_report_serialization():
    rep = sp.MomentReport("x", 1.5, 0.1, 100)
    assert rep.to_dict() == {"label": "x", "value": 1.5, "std_error": 0.1,
                             "n_samples": 100}
    exact = sp.MomentReport("y", 2.0 + 1j)
    assert exact.to_dict() == {"label": "y", "value": [2.0, 1.0]}
