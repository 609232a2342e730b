import math

import numpy as np
import pytest

from hopfstraight import grassmann
from hopfstraight.errors import DegeneratePlaneError, RankDeficiencyError
from hopfstraight.fibration import OrientedPlane, plane_at
from hopfstraight.numkit import standard_j
from hopfstraight.utils.sampling import random_unit_vectors


@pytest.fixture
def hopf_basis(hopf_s5, rng):
    v = random_unit_vectors(rng, 1, 6)[0]
    return grassmann.tangent_basis(hopf_s5, plane_at(hopf_s5, v))


class TestTangentBasis:
    def test_shape(self, hopf_basis):
        assert len(hopf_basis) == 4
        assert hopf_basis.directions.shape == (4, 6, 2)
        assert hopf_basis.complement.shape == (6, 4)
        assert hopf_basis.sigma_min > 1e-3
        assert hopf_basis.consistency < 1e-6

    def test_directions_leave_the_plane(self, hopf_basis):
        projector = hopf_basis.plane.projector
        for k in range(len(hopf_basis)):
            np.testing.assert_allclose(projector @ hopf_basis.directions[k], 0, atol=1e-10)

    def test_constant_family_is_rank_deficient(self):
        plane = OrientedPlane.from_vectors(*np.eye(4)[:2])
        with pytest.raises(RankDeficiencyError):
            grassmann.tangent_basis_from_chart(lambda x: plane, np.zeros(2), np.eye(2))

    def test_hopf_directions_are_complex_linear(self, hopf_basis, J_s5):
        assert grassmann.tangent_directions_commute(hopf_basis, J_s5) < 1e-6


class TestInvariantT:
    def test_hopf_t_is_a_complex_structure(self, hopf_basis):
        t_matrix = grassmann.t_matrix(hopf_basis)
        np.testing.assert_allclose(t_matrix @ t_matrix, -np.eye(4), atol=1e-6)
        assert grassmann.ellipticity_margin(t_matrix) == pytest.approx(1.0, abs=1e-6)

    def test_hopf_characteristic_polynomial(self, hopf_basis):
        xi = grassmann.char_poly(grassmann.t_matrix(hopf_basis))
        assert xi.degree == 4
        for a0, a1 in [(1.0, 0.0), (0.3, -0.7), (-2.0, 1.5)]:
            assert xi(a0, a1) == pytest.approx((a0 ** 2 + a1 ** 2) ** 2, rel=1e-5)
        assert grassmann.real_projective_zeros(xi) == []

    def test_frame_change(self, hopf_basis):
        # rotating the plane frame by theta moves t along the fiber law, which fixes t when t^2 = -I
        basis = hopf_basis.plane.basis
        theta = 0.8
        rotated = basis @ np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        np.testing.assert_allclose(grassmann.t_matrix(hopf_basis, rotated), grassmann.t_matrix(hopf_basis), atol=1e-6)

    def test_real_zeros(self):
        zeros = grassmann.real_projective_zeros(grassmann.char_poly(np.diag([2.0, -3.0])))
        np.testing.assert_allclose(zeros, [math.atan(1 / 3), math.pi - math.atan(1 / 2)], atol=1e-9)

    def test_elliptic_has_no_zeros(self):
        assert grassmann.real_projective_zeros(grassmann.char_poly(standard_j(2))) == []
        assert grassmann.ellipticity_margin(np.diag([1.0, 2.0])) == 0.0


class TestSatoLines:
    def test_line_is_holomorphic(self, J_s5, rng):
        v = random_unit_vectors(rng, 1, 6)[0]
        z = grassmann.sato_line(OrientedPlane.from_vectors(v, J_s5(v)), J_s5)
        assert np.linalg.norm(z) == pytest.approx(1.0)
        np.testing.assert_allclose(J_s5.matrix @ z, 1j * z, atol=1e-12)

    def test_sv_distance(self):
        e0, e1 = np.eye(4)[:2]
        assert grassmann.sv_distance(e0 - 1j * e1) == pytest.approx(1.0)
        assert grassmann.sv_distance(e0 + 0.5 * e1 + 0j) == pytest.approx(0.0)
        assert grassmann.sv_distance(3j * (e0 - 1j * e1)) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            grassmann.sv_distance(np.zeros(4))

    def test_plane_round_trip(self, J_s5, rng):
        g = np.eye(6) + 0.1 * rng.standard_normal((6, 6))
        J = g @ J_s5.matrix @ np.linalg.inv(g)
        v = random_unit_vectors(rng, 1, 6)[0]
        plane = OrientedPlane.from_vectors(v, J @ v)
        recovered, j = grassmann.plane_from_sato(grassmann.sato_line(plane, J))
        assert recovered.distance(plane) < 1e-12
        np.testing.assert_allclose(j @ plane.basis, J @ plane.basis, atol=1e-10)

    def test_non_invariant_plane(self, J_s5):
        plane = OrientedPlane.from_vectors(*np.eye(6)[[0, 2]])
        with pytest.raises(DegeneratePlaneError):
            grassmann.sato_line(plane, J_s5)

    def test_line_distance(self, rng):
        z = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        assert grassmann.line_distance(z, np.exp(0.7j) * 2 * z) == pytest.approx(0.0, abs=1e-7)
        e0, e1 = np.eye(4)[:2].astype(complex)
        assert grassmann.line_distance(e0, e1) == pytest.approx(math.pi / 2)
