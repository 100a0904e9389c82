import math

import numpy as np
import pytest

from eigendesign.errors import MeshConformityError, MeshFormatError
from eigendesign.meshing import (
    Disk,
    Ellipse,
    Interval,
    Rectangle,
    export_mesh,
    generate,
    import_mesh,
)


def max_element_diameter(mesh):
    p = mesh.vertices[mesh.elements]
    if mesh.dim == 1:
        return float(np.abs(p[:, 1, 0] - p[:, 0, 0]).max())
    pairs = ((0, 1), (1, 2), (2, 0))
    return float(max(np.linalg.norm(p[:, i] - p[:, j], axis=1).max() for i, j in pairs))


class TestGenerate:
    def test_interval_basic(self):
        mesh, geo = generate(Interval(1.0), 0.01)
        assert len(mesh.elements) == 100
        assert mesh.domain_measure == pytest.approx(1.0, abs=1e-14)
        assert set(mesh.boundary_vertices) == {0, 100}
        assert geo.max_curvature == 0.0

    @pytest.mark.parametrize("shape,h", [
        (Rectangle(1.0, 1.0), 0.25),
        (Rectangle(2.0, 1.0), 0.1),
        (Disk(1.0), 0.1),
        (Disk(2.0), 0.3),
        (Ellipse(2.0, 1.0), 0.2),
    ])
    def test_diameter_bound(self, shape, h):
        mesh, _ = generate(shape, h)
        assert max_element_diameter(mesh) <= 1.5 * h

    def test_measures_sum(self):
        for shape in (Interval(2.0), Rectangle(1.0, 0.5), Disk(1.0)):
            mesh, _ = generate(shape, 0.1)
            assert abs(mesh.element_measure.sum() - mesh.domain_measure) \
                <= 1e-12 * mesh.domain_measure

    def test_disk_curvature_exact(self):
        for radius in (1.0, 2.5):
            mesh, geo = generate(Disk(radius), radius / 8)
            assert geo.curvature_at_vertex
            for v, kappa in geo.curvature_at_vertex.items():
                assert kappa == pytest.approx(1 / radius, rel=1e-12)
                assert np.linalg.norm(mesh.vertices[v]) == pytest.approx(
                    radius, rel=1e-12)
            assert geo.max_curvature == pytest.approx(1 / radius, rel=1e-12)

    def test_disk_refinement_order(self):
        errors = []
        for h in (0.2, 0.1, 0.05, 0.025):
            mesh, _ = generate(Disk(1.0), h)
            errors.append(math.pi - mesh.domain_measure)
        assert all(e > 0 for e in errors)
        assert all(b < a for a, b in zip(errors, errors[1:]))
        ratios = [a / b for a, b in zip(errors, errors[1:])]
        assert all(3.0 < r < 5.0 for r in ratios)

    def test_ellipse_max_curvature(self):
        mesh, geo = generate(Ellipse(2.0, 1.0), 0.1)
        assert geo.max_curvature == pytest.approx(2.0, rel=1e-10)
        assert abs(geo.max_location[0]) == pytest.approx(2.0, rel=1e-12)
        assert geo.max_location[1] == pytest.approx(0.0, abs=1e-12)

    def test_ellipse_curvature_against_finite_differences(self):
        a, b = 2.0, 1.0
        mesh, geo = generate(Ellipse(a, b), 0.2)
        eps = 1e-5
        for v, kappa in list(geo.curvature_at_vertex.items())[::7]:
            x, y = mesh.vertices[v]
            t = math.atan2(y / b, x / a)

            def gamma(s):
                return np.array([a * math.cos(s), b * math.sin(s)])

            d1 = (gamma(t + eps) - gamma(t - eps)) / (2 * eps)
            d2 = (gamma(t + eps) - 2 * gamma(t) + gamma(t - eps)) / eps ** 2
            kappa_fd = abs(d1[0] * d2[1] - d1[1] * d2[0]) / np.linalg.norm(d1) ** 3
            assert kappa == pytest.approx(kappa_fd, rel=1e-5)

    def test_rectangle_corners(self):
        mesh, geo = generate(Rectangle(1.0, 1.0), 0.25)
        corner_coords = {tuple(mesh.vertices[v]) for v in geo.corners}
        assert corner_coords == {(0, 0), (1, 0), (1, 1), (0, 1)}
        assert all(v == 0.0 for v in geo.curvature_at_vertex.values())
        assert not (set(geo.corners) & set(geo.curvature_at_vertex))

    def test_boundary_edges_single_owner_and_outward(self):
        mesh, _ = generate(Disk(1.0), 0.2)
        edge_count = {}
        for tri in mesh.elements:
            for i in range(3):
                key = tuple(sorted((int(tri[i]), int(tri[(i + 1) % 3]))))
                edge_count[key] = edge_count.get(key, 0) + 1
        for a, b in mesh.boundary_edges:
            assert edge_count[tuple(sorted((int(a), int(b))))] == 1
            mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
            tangent = mesh.vertices[b] - mesh.vertices[a]
            normal = np.array([tangent[1], -tangent[0]])
            assert normal @ mid > 0  # outward on a centered disk

    def test_degenerate_parameters(self):
        with pytest.raises(ValueError):
            generate(Disk(0.0), 0.1)
        with pytest.raises(ValueError):
            generate(Interval(1.0), 0.5)


class TestSerialization:
    def test_round_trip_rectangle(self):
        mesh, _ = generate(Rectangle(1.0, 1.0), 0.25)
        again = import_mesh(export_mesh(mesh))
        assert np.array_equal(mesh.vertices, again.vertices)
        assert np.array_equal(mesh.elements, again.elements)
        assert np.array_equal(mesh.element_measure, again.element_measure)

    def test_round_trip_interval(self):
        mesh, _ = generate(Interval(1.0), 0.125)
        again = import_mesh(export_mesh(mesh))
        assert np.array_equal(mesh.vertices, again.vertices)
        assert np.array_equal(mesh.elements, again.elements)

    def test_single_right_triangle(self):
        mesh = import_mesh("mesh 2 3 1\nv 0 0\nv 1 0\nv 0 1\ne 0 1 2\n")
        assert len(mesh.elements) == 1
        assert mesh.element_measure[0] == pytest.approx(0.5, abs=1e-15)
        assert len(mesh.boundary_edges) == 3

    def test_flipped_element_normalized(self):
        straight = import_mesh("mesh 2 3 1\nv 0 0\nv 1 0\nv 0 1\ne 0 1 2\n")
        flipped = import_mesh("mesh 2 3 1\nv 0 0\nv 1 0\nv 0 1\ne 0 2 1\n")
        assert np.array_equal(straight.element_measure, flipped.element_measure)
        p = flipped.vertices[flipped.elements[0]]
        u, v = p[1] - p[0], p[2] - p[0]
        assert u[0] * v[1] - u[1] * v[0] > 0

    def test_comments_and_blank_lines(self):
        text = "# header comment\n\nmesh 1 3 2\nv 0\nv 0.5 # middle\nv 1\ne 0 1\ne 1 2\n"
        mesh = import_mesh(text)
        assert mesh.domain_measure == pytest.approx(1.0)

    @pytest.mark.parametrize("text,lineno", [
        ("nonsense 2 3 1\n", 1),
        ("mesh 2 3 1\nv 0\nv 1 0\nv 0 1\ne 0 1 2\n", 2),
        ("mesh 2 3 1\nv 0 0\nv 1 0\nv 0 1\ne 0 1\n", 5),
        ("mesh 2 3 1\nv 0 0\nv 1 x\nv 0 1\ne 0 1 2\n", 3),
    ])
    def test_parse_errors_carry_line_numbers(self, text, lineno):
        with pytest.raises(MeshFormatError) as err:
            import_mesh(text)
        assert err.value.line == lineno

    def test_count_mismatch(self):
        with pytest.raises(MeshFormatError):
            import_mesh("mesh 2 4 1\nv 0 0\nv 1 0\nv 0 1\ne 0 1 2\n")

    def test_zero_area_element(self):
        with pytest.raises(MeshConformityError):
            import_mesh("mesh 2 3 1\nv 0 0\nv 1 0\nv 2 0\ne 0 1 2\n")

    def test_nonconforming_edge(self):
        text = ("mesh 2 5 3\nv 0 0\nv 1 0\nv 0 1\nv 1 1\nv -1 1\n"
                "e 0 1 2\ne 0 1 3\ne 0 1 4\n")
        with pytest.raises(MeshConformityError):
            import_mesh(text)

    def test_repeated_vertex_in_element(self):
        with pytest.raises(MeshConformityError):
            import_mesh("mesh 2 3 1\nv 0 0\nv 1 0\nv 0 1\ne 0 1 1\n")
