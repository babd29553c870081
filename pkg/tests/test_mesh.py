import csv

import numpy as np
import pytest

from hermevp import (InvalidSpec, MeshKind, MeshSpec, Region, RegionOverlap,
                     WrongMeshKind, build_exp_mesh, build_mesh,
                     build_shishkin_mesh, build_uniform_mesh,
                     check_mesh_bounds, mesh_to_csv)
from hermevp.mesh import GradingFunction


class TestMeshSpec:
    def test_valid_spec_roundtrip(self):
        spec = MeshSpec(epsilon=1e-3, beta=1.0, p=3, n_elements=16, kind="exp")
        assert spec.kind is MeshKind.EXP
        assert spec.n_elements == 16

    @pytest.mark.parametrize("eps", [0.0, -1e-3, 1.5])
    def test_epsilon_out_of_range(self, eps):
        with pytest.raises(InvalidSpec):
            MeshSpec(epsilon=eps, beta=1.0, p=3, n_elements=16, kind="exp")

    def test_beta_must_be_positive(self):
        with pytest.raises(InvalidSpec):
            MeshSpec(epsilon=1e-3, beta=0.0, p=3, n_elements=16, kind="exp")

    @pytest.mark.parametrize("p", [0, 1, 2])
    def test_degree_too_low(self, p):
        with pytest.raises(InvalidSpec):
            MeshSpec(epsilon=1e-3, beta=1.0, p=p, n_elements=16, kind="exp")

    @pytest.mark.parametrize("kind", ["exp", "shishkin"])
    @pytest.mark.parametrize("n", [4, 6, 13])
    def test_layer_meshes_need_multiple_of_four_above_four(self, kind, n):
        with pytest.raises(InvalidSpec):
            MeshSpec(epsilon=1e-3, beta=1.0, p=3, n_elements=n, kind=kind)

    def test_uniform_allows_any_positive_count(self):
        spec = MeshSpec(epsilon=1e-3, beta=1.0, p=3, n_elements=5,
                        kind="uniform")
        assert build_mesh(spec).n_elements == 5

    def test_unknown_kind(self):
        with pytest.raises((InvalidSpec, ValueError)):
            MeshSpec(epsilon=1e-3, beta=1.0, p=3, n_elements=16,
                     kind="chebyshev")


class TestGradingFunction:
    def test_grading_constant_close_to_one_for_small_epsilon(self):
        g = GradingFunction.from_spec(
            MeshSpec(epsilon=1e-3, beta=1.0, p=3, n_elements=16, kind="exp"))
        assert 0.0 < g.c_pe <= 1.0
        assert g.c_pe == pytest.approx(1.0, abs=1e-100)

    def test_phi_monotone(self):
        g = GradingFunction.from_spec(
            MeshSpec(epsilon=1e-2, beta=1.0, p=3, n_elements=16, kind="exp"))
        t = np.linspace(0.0, 0.24, 50)
        vals = g.phi(t)
        assert np.all(np.diff(vals) > 0.0)
        assert vals[0] == 0.0

    def test_phi_rejects_arguments_outside_domain(self):
        g = GradingFunction.from_spec(
            MeshSpec(epsilon=1e-2, beta=1.0, p=3, n_elements=16, kind="exp"))
        with pytest.raises(InvalidSpec):
            g.phi(np.array([1.0]))


class TestExpMesh:
    """Node positions pinned against values computed by a standalone
    script with independent scalar arithmetic."""

    def test_frozen_nodes(self):
        mesh = build_mesh(MeshSpec(epsilon=1e-3, beta=1.0, p=3,
                                   n_elements=16, kind="exp"))
        assert mesh.nodes[0] == 0.0
        assert mesh.nodes[1] == 0.0011507282898071236
        assert mesh.nodes[2] == 0.0027725887222397813
        assert mesh.nodes[3] == 0.005545177444479563
        assert mesh.nodes[4] == 0.10443614195558365
        assert mesh.nodes[8] == 0.5
        assert mesh.nodes[16] == 1.0

    def test_mirror_symmetry_to_rounding(self):
        for n in (8, 16, 64):
            mesh = build_mesh(MeshSpec(epsilon=1e-4, beta=2.0, p=4,
                                       n_elements=n, kind="exp"))
            assert np.max(np.abs(mesh.nodes + mesh.nodes[::-1] - 1.0)) < 3e-16

    def test_strictly_increasing_and_widths(self):
        mesh = build_mesh(MeshSpec(epsilon=1e-6, beta=1.0, p=3,
                                   n_elements=32, kind="exp"))
        assert np.all(mesh.widths > 0.0)
        assert np.sum(mesh.widths) == pytest.approx(1.0, rel=1e-14)

    def test_region_counts(self):
        n = 32
        mesh = build_mesh(MeshSpec(epsilon=1e-6, beta=1.0, p=3,
                                   n_elements=n, kind="exp"))
        counts = {region: mesh.regions.count(region)
                  for region in Region}
        assert counts[Region.LEFT_LAYER] == n // 4 - 1
        assert counts[Region.INTERIOR] == n // 2 + 2
        assert counts[Region.RIGHT_LAYER] == n // 4 - 1

    def test_first_node_is_positive_zero(self):
        mesh = build_mesh(MeshSpec(epsilon=1e-3, beta=1.0, p=3,
                                   n_elements=16, kind="exp"))
        assert np.copysign(1.0, mesh.nodes[0]) == 1.0

    def test_region_overlap_for_large_epsilon(self):
        with pytest.raises(RegionOverlap):
            build_mesh(MeshSpec(epsilon=0.9, beta=1.0, p=3,
                                n_elements=16, kind="exp"))

    def test_builder_rejects_other_kinds(self):
        spec = MeshSpec(epsilon=1e-3, beta=1.0, p=3, n_elements=16,
                        kind="uniform")
        with pytest.raises(WrongMeshKind):
            build_exp_mesh(spec)

    def test_graded_widths_increase_toward_interior(self):
        mesh = build_mesh(MeshSpec(epsilon=1e-6, beta=1.0, p=3,
                                   n_elements=32, kind="exp"))
        left = mesh.widths[:7]
        assert np.all(np.diff(left) > 0.0)


class TestShishkinMesh:
    def test_frozen_nodes(self):
        mesh = build_mesh(MeshSpec(epsilon=1e-4, beta=1.0, p=3,
                                   n_elements=16, kind="shishkin"))
        assert mesh.transition_left() == 0.0011090354888959124
        assert mesh.nodes[1] == 0.0002772588722239781
        assert mesh.nodes[5] == 0.12583177661667194

    def test_piecewise_uniform(self):
        n = 16
        mesh = build_mesh(MeshSpec(epsilon=1e-4, beta=1.0, p=3,
                                   n_elements=n, kind="shishkin"))
        w = mesh.widths
        for part in (w[: n // 4], w[n // 4: 3 * n // 4], w[3 * n // 4:]):
            assert np.ptp(part) < 1e-15

    def test_transition_capped_at_quarter(self):
        mesh = build_mesh(MeshSpec(epsilon=0.2, beta=1.0, p=3,
                                   n_elements=8, kind="shishkin"))
        assert mesh.transition_left() == 0.25

    def test_mirror_symmetry(self):
        mesh = build_mesh(MeshSpec(epsilon=1e-5, beta=1.5, p=3,
                                   n_elements=32, kind="shishkin"))
        assert np.max(np.abs(mesh.nodes + mesh.nodes[::-1] - 1.0)) < 1e-16

    def test_builder_rejects_other_kinds(self):
        spec = MeshSpec(epsilon=1e-3, beta=1.0, p=3, n_elements=16,
                        kind="exp")
        with pytest.raises(WrongMeshKind):
            build_shishkin_mesh(spec)


class TestUniformMesh:
    def test_nodes_equispaced(self):
        mesh = build_mesh(MeshSpec(epsilon=0.5, beta=1.0, p=3,
                                   n_elements=10, kind="uniform"))
        assert np.array_equal(mesh.nodes, np.linspace(0.0, 1.0, 11))
        assert all(r == Region.INTERIOR for r in mesh.regions)

    def test_transition_undefined(self):
        mesh = build_mesh(MeshSpec(epsilon=0.5, beta=1.0, p=3,
                                   n_elements=10, kind="uniform"))
        with pytest.raises(WrongMeshKind):
            mesh.transition_left()

    def test_builder_rejects_other_kinds(self):
        spec = MeshSpec(epsilon=1e-3, beta=1.0, p=3, n_elements=16,
                        kind="shishkin")
        with pytest.raises(WrongMeshKind):
            build_uniform_mesh(spec)


class TestMeshImmutability:
    def test_node_array_read_only(self):
        mesh = build_mesh(MeshSpec(epsilon=1e-3, beta=1.0, p=3,
                                   n_elements=16, kind="exp"))
        with pytest.raises(ValueError):
            mesh.nodes[0] = 0.5
        with pytest.raises(ValueError):
            mesh.widths[0] = 0.5


class TestMeshBounds:
    def test_width_bounds_satisfied_in_layer_regime(self):
        for eps in (1e-2, 1e-4, 1e-6, 1e-8):
            mesh = build_mesh(MeshSpec(epsilon=eps, beta=1.0, p=3,
                                       n_elements=32, kind="exp"))
            report = check_mesh_bounds(mesh)
            assert report.all_satisfied, f"eps={eps}: ratios {report.ratios}"

    def test_frozen_transition_decay(self):
        mesh = build_mesh(MeshSpec(epsilon=1e-6, beta=1.0, p=3,
                                   n_elements=32, kind="exp"))
        report = check_mesh_bounds(mesh)
        assert report.transition_decay == 0.00024414062500000016
        ratio = report.transition_decay / report.decay_bound
        assert ratio == pytest.approx(256.0, rel=1e-12)

    def test_report_covers_both_layer_sides(self):
        n = 32
        mesh = build_mesh(MeshSpec(epsilon=1e-6, beta=1.0, p=3,
                                   n_elements=n, kind="exp"))
        report = check_mesh_bounds(mesh)
        assert len(report.element_index) == 2 * (n // 4 - 1)
        assert np.all(report.ratios > 0.0)

    def test_rejects_non_graded_meshes(self):
        mesh = build_mesh(MeshSpec(epsilon=1e-4, beta=1.0, p=3,
                                   n_elements=16, kind="shishkin"))
        with pytest.raises(WrongMeshKind):
            check_mesh_bounds(mesh)

    def test_scaled_max_width_bounded_across_epsilon_sweep(self):
        for n in (16, 64):
            scaled = []
            for eps in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8):
                mesh = build_mesh(MeshSpec(epsilon=eps, beta=1.0, p=3,
                                           n_elements=n, kind="exp"))
                scaled.append(n * np.max(mesh.widths))
            assert max(scaled) < 4.0


class TestMeshSerialization:
    def test_csv_roundtrip(self, tmp_path):
        mesh = build_mesh(MeshSpec(epsilon=1e-3, beta=1.0, p=3,
                                   n_elements=16, kind="exp"))
        path = tmp_path / "mesh.csv"
        mesh_to_csv(mesh, path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["index", "x", "region_right"]
        assert len(rows) == len(mesh.nodes) + 1
        xs = np.array([float(r[1]) for r in rows[1:]])
        assert np.array_equal(xs, mesh.nodes)
        assert rows[-1][2] == "-"
        assert rows[1][2] == Region.LEFT_LAYER.value
