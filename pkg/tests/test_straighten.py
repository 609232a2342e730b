import numpy as np
import pytest

from hopfstraight.errors import HingeSearchError, StraighteningError
from hopfstraight.fibration import LinearJ, conjugated, plane_at
from hopfstraight.numkit import standard_j
from hopfstraight.straighten import (
    BaseHomotopy,
    _homotopy,
    base_homotopy,
    build_map,
    certify_hinge,
    find_hinge,
    hyperplane_locus,
    pointwise_map,
    sample_fibers,
    slice_point,
    straight_map_matrix,
    verify_map,
)
from hopfstraight.utils.sampling import normalize, random_unit_vectors
from tests.helpers import unimodular


@pytest.fixture
def hopf_hinge(hopf_s3, J_s3):
    return find_hinge(hopf_s3, J_s3, samples=5)


@pytest.fixture
def hopf_map(hopf_s3, hopf_hinge):
    return build_map(hopf_s3, hopf_hinge)


class TestLinearMap:
    def test_identity_when_structures_agree(self, rng):
        J = standard_j(2)
        J0 = -J
        np.testing.assert_allclose(straight_map_matrix(J, J0, J), np.eye(4), atol=1e-15)
        v = rng.standard_normal(4)
        np.testing.assert_allclose(pointwise_map(J, J0, J, v), v, atol=1e-15)

    def test_intertwines(self, rng):
        J = standard_j(3)
        g = unimodular(rng, 6)
        J1 = g @ J @ np.linalg.inv(g)
        h = unimodular(rng, 6)
        J2 = h @ J @ np.linalg.inv(h)
        M = straight_map_matrix(J1, -J, J2)
        np.testing.assert_allclose(M @ J1, J2 @ M, atol=1e-10)
        v = rng.standard_normal(6)
        np.testing.assert_allclose(pointwise_map(J1, -J, J2, v), M @ v, atol=1e-12)


class TestHinge:
    def test_hopf_hinge_is_the_opposite_structure(self, hopf_hinge, J_s3):
        np.testing.assert_allclose(hopf_hinge.J0.matrix, -J_s3.matrix, atol=1e-12)
        assert hopf_hinge.parallel_margin == pytest.approx(2.0, abs=1e-5)
        assert hopf_hinge.target_margin == pytest.approx(2.0)
        assert hopf_hinge.disjoint_margin == pytest.approx(1.0, abs=1e-5)
        assert hopf_hinge.is_certified()
        assert set(hopf_hinge.to_dict()["margins"]) == {"parallel", "target", "disjoint"}

    def test_target_is_not_a_hinge(self, hopf_s3, J_s3):
        hinge = certify_hinge(hopf_s3, J_s3, J_s3, samples=3)
        assert hinge.target_margin == pytest.approx(0.0, abs=1e-12)
        assert not hinge.is_certified()
        with pytest.raises(StraighteningError):
            build_map(hopf_s3, hinge)

    def test_empty_budget(self, hopf_s3, J_s3):
        with pytest.raises(HingeSearchError):
            find_hinge(hopf_s3, J_s3, budget=0)

    def test_unreachable_margin(self, hopf_s3, J_s3):
        with pytest.raises(HingeSearchError) as excinfo:
            find_hinge(hopf_s3, J_s3, samples=3, budget=2, delta=10.0)
        assert excinfo.value.draws == 2
        assert excinfo.value.best_margins["target"] == pytest.approx(2.0)

    def test_fiber_samples(self, hopf_s3, J_s3):
        fibers = sample_fibers(hopf_s3, 4, seed=9)
        assert len(fibers) == 4
        for fiber in fibers:
            np.testing.assert_allclose(J_s3.matrix @ fiber.sato, 1j * fiber.sato, atol=1e-6)

    def test_conjugated_fibration(self, conjugated_s3, J_s3):
        hinge = find_hinge(conjugated_s3, J_s3, samples=5)
        assert hinge.is_certified()


class TestSphereMap:
    def test_hopf_map_is_identity(self, hopf_map, rng):
        for v in random_unit_vectors(rng, 4, 4):
            np.testing.assert_allclose(hopf_map(v), v, atol=1e-6)
            assert hopf_map.jacobian(v) == pytest.approx(1.0, abs=1e-2)

    def test_inverse(self, hopf_map, rng):
        v = random_unit_vectors(rng, 1, 4)[0]
        np.testing.assert_allclose(hopf_map.inverse(hopf_map(v)), v, atol=1e-9)

    def test_fiber_cache(self, hopf_map, hopf_s3, rng):
        v = random_unit_vectors(rng, 1, 4)[0]
        plane = plane_at(hopf_s3, v)
        hopf_map(plane.point(0.3))
        hopf_map(plane.point(2.1))
        assert len(hopf_map._cache) == 1

    def test_jacobian_leaves_the_cache_alone(self, hopf_map, rng):
        v = random_unit_vectors(rng, 1, 4)[0]
        hopf_map(v)
        cached = len(hopf_map._cache)
        hopf_map.jacobian(v)
        assert len(hopf_map._cache) == cached

    @pytest.mark.parametrize("counts", [{"jacobian_points": 0}, {"points": 0}, {"circles": 0}])
    def test_verify_rejects_empty_counts(self, hopf_map, counts):
        with pytest.raises(ValueError, match="must be at least 1"):
            verify_map(hopf_map, **counts)

    def test_slice_point_is_holomorphic(self, hopf_map, J_s3, rng):
        z = slice_point(hopf_map, random_unit_vectors(rng, 1, 4)[0])
        np.testing.assert_allclose(J_s3.matrix @ z, 1j * z, atol=1e-9)

    def test_verify_hopf(self, hopf_map):
        report = verify_map(hopf_map, circles=3, points=6, seed=1)
        assert report.verdict, report.failures
        assert report.samples == 18
        assert report.fiber_dev_max < 1e-6
        assert "map_samples" not in report.to_dict()
        assert report.to_dict()["verdict"] == "pass"
        assert len(report.map_samples) == 3

    def test_verify_against_wrong_target(self, hopf_map, J_s3, g_s3):
        report = verify_map(hopf_map, J2=J_s3.conjugate(g_s3), circles=2, points=4, jacobian_points=1)
        assert not report.verdict
        assert report.to_dict()["verdict"] == "fail"

    def test_verify_conjugated(self, conjugated_s3, J_s3):
        hinge = find_hinge(conjugated_s3, J_s3, samples=5)
        phi = build_map(conjugated_s3, hinge)
        report = verify_map(phi, circles=3, points=4, jacobian_points=1, seed=2)
        assert report.verdict, report.failures
        assert report.jac_det_min > report.jacobian_floor

    def test_verify_perturbed(self, perturbed_s3, J_s3):
        hinge = find_hinge(perturbed_s3, J_s3, samples=4)
        phi = build_map(perturbed_s3, hinge)
        report = verify_map(phi, circles=2, points=4, jacobian_points=1, workers=1)
        assert report.verdict, report.failures
        assert report.tolerance == pytest.approx(1e-3)
        assert report.jac_det_min > 0.5
        assert report.inv_consistency_max < 1e-3

    def test_verify_conjugated_s5(self, hopf_s5, J_s5):
        F = conjugated(unimodular(np.random.default_rng(11), 6), hopf_s5)
        hinge = find_hinge(F, J_s5, samples=5)
        report = verify_map(build_map(F, hinge), circles=2, points=4, jacobian_points=1, workers=1)
        assert report.verdict, report.failures
        assert report.fiber_dev_max < 1e-6
        assert report.inv_consistency_max < 1e-6
        assert report.jac_det_min > report.jacobian_floor


class TestHomotopy:
    @pytest.fixture
    def homotopy(self, hopf_s3, conjugated_s3, hopf_hinge):
        return BaseHomotopy(hopf_s3, conjugated_s3, hopf_hinge)

    def test_endpoints(self, homotopy, hopf_s3, conjugated_s3, rng):
        y = random_unit_vectors(rng, 1, 4)[0]
        start, end = (phi.inverse(y) for phi in homotopy.maps)
        assert homotopy.plane(y, 0.0).distance(plane_at(hopf_s3, start)) < 1e-6
        assert homotopy.plane(y, 1.0).distance(plane_at(conjugated_s3, end)) < 1e-6
        assert plane_at(hopf_s3, start).distance(plane_at(hopf_s3, y)) < 1e-5

    def test_samples_stay_off_the_real_locus(self, homotopy):
        found = homotopy.sample(0.5, 3, seed=4, workers=1)
        assert len(found) == 3
        assert min(sample.sv_distance for sample in found) > 1e-3

    def test_ellipticity(self, homotopy, rng):
        y = random_unit_vectors(rng, 1, 4)[0]
        assert homotopy.ellipticity(y, 0.0) == pytest.approx(1.0, abs=1e-3)
        assert homotopy.ellipticity(y, 0.5) > 0

    @pytest.mark.parametrize("tau", [0.0, 0.25, 0.5, 0.75, 1.0])
    def test_whole_path_is_elliptic(self, homotopy, tau):
        for sample in homotopy.sample(tau, 2, seed=6, workers=1):
            assert sample.sv_distance > 1e-3
            assert homotopy.ellipticity(sample.base, tau) > 0

    def test_slice_cache_is_bounded(self, homotopy, rng, monkeypatch):
        monkeypatch.setattr(_homotopy, "SLICE_CACHE_SIZE", 2)
        bases = random_unit_vectors(rng, 3, 4)
        for y in bases:
            homotopy.sato(y, 0.5)
        assert len(homotopy._slices) == 2
        assert normalize(bases[0]).tobytes() not in homotopy._slices

    def test_base_homotopy(self, hopf_s3, conjugated_s3, hopf_hinge):
        found = base_homotopy(hopf_s3, conjugated_s3, hopf_hinge, 1.0, 2, seed=1)
        assert [sample.base.shape for sample in found] == [(4,), (4,)]
        with pytest.raises(ValueError):
            base_homotopy(hopf_s3, conjugated_s3, hopf_hinge, 1.5, 2)

    def test_mismatched_dimensions(self, hopf_s3, hopf_s5, hopf_hinge):
        with pytest.raises(ValueError):
            BaseHomotopy(hopf_s3, hopf_s5, hopf_hinge)

    def test_uncertified_hinge(self, hopf_s3, conjugated_s3, J_s3):
        hinge = certify_hinge(hopf_s3, J_s3, J_s3, samples=2)
        with pytest.raises(StraighteningError):
            BaseHomotopy(hopf_s3, conjugated_s3, hinge)


class TestHyperplaneLocus:
    def test_hopf_s3_has_one_fiber(self, hopf_s3):
        found = hyperplane_locus(hopf_s3, np.eye(4)[0], resolution=4)
        assert len(found) == 1
        expected = plane_at(hopf_s3, np.eye(4)[2])
        assert found[0].plane.unoriented_distance(expected) < 1e-6
        assert found[0].residual <= 1e-8
        assert found[0].rank_sigma > 1e-6

    def test_hopf_s5_fibers_lie_in_the_hyperplane(self, hopf_s5):
        xi = np.eye(6)[0]
        found = hyperplane_locus(hopf_s5, 2 * xi, resolution=3)
        assert found
        for point in found:
            assert abs(point.plane.u @ xi) < 1e-8 and abs(point.plane.w @ xi) < 1e-8
            # complex lines inside ker e0 avoid its J-partner e1 as well
            assert np.linalg.norm(point.plane.u[:2]) < 1e-7 and np.linalg.norm(point.plane.w[:2]) < 1e-7
            assert point.plane.distance(plane_at(hopf_s5, point.plane.u)) < 1e-8
            assert point.rank_sigma > 1e-6

    def test_resolution_counts_starts(self, hopf_s3):
        assert len(hyperplane_locus(hopf_s3, np.eye(4)[1], resolution=1)) <= 1
        assert hyperplane_locus(hopf_s3, np.eye(4)[1], resolution=0) == []

    def test_bad_covector(self, hopf_s3):
        with pytest.raises(ValueError):
            hyperplane_locus(hopf_s3, np.zeros(4))
        with pytest.raises(ValueError):
            hyperplane_locus(hopf_s3, np.ones(6))


def test_structures_are_linear_j(hopf_hinge):
    assert isinstance(hopf_hinge.J0, LinearJ) and isinstance(hopf_hinge.target, LinearJ)
