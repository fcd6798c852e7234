import os

import numpy as np
import pytest

from surfcr.cli import main
from surfcr.config import dump_config, load_config, parse_config
from surfcr.exceptions import ConfigError
from surfcr.io import load_mesh, save_mesh
from surfcr.mesh import icosphere


BASE = """
[surface]
name = sphere
[problem]
solution = xy
[mesh]
level = 1
[refinement]
mode = uniform
rounds = 2
[output]
figures = false
"""


class TestConfigParsing:
    def test_defaults_fill_in(self):
        cfg = parse_config(BASE)
        assert cfg.get("refinement", "theta") == 0.5
        assert cfg.get("solver", "preconditioner") == "jacobi"
        assert cfg.get("quadrature", "load_degree") == 4

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(BASE + "\n[nonsense]\nkey = 1\n")

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(BASE + "\n[solver]\ntypo_key = 3\n")

    def test_bad_type_rejected(self):
        with pytest.raises(ConfigError):
            parse_config(BASE.replace("rounds = 2", "rounds = two"))

    def test_theta_bounds(self):
        for bad in ("0", "1.5", "-0.2"):
            text = BASE.replace("rounds = 2", f"rounds = 2\ntheta = {bad}")
            with pytest.raises(ConfigError, match="theta"):
                parse_config(text)

    def test_invalid_choice(self):
        with pytest.raises(ConfigError):
            parse_config(BASE.replace("name = sphere", "name = cube"))

    def test_singular_requires_sphere(self):
        text = BASE.replace("name = sphere", "name = dziuk").replace(
            "solution = xy", "solution = spherical_singular")
        with pytest.raises(ConfigError, match="sphere"):
            parse_config(text)

    def test_file_source_needs_path(self):
        text = BASE.replace("level = 1", "source = file")
        with pytest.raises(ConfigError, match="path"):
            parse_config(text)

    def test_dump_round_trip(self):
        cfg = parse_config(BASE)
        again = parse_config(dump_config(cfg))
        assert again.values == cfg.values


def write_config(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestCliConvergence:
    def test_end_to_end_and_determinism(self, tmp_path):
        cfg = write_config(tmp_path, BASE)
        out1 = str(tmp_path / "run1")
        out2 = str(tmp_path / "run2")
        assert main(["convergence", "--config", cfg, "--out", out1,
                     "--quiet"]) == 0
        assert main(["convergence", "--config", cfg, "--out", out2,
                     "--quiet"]) == 0
        csv1 = open(os.path.join(out1, "convergence.csv"), "rb").read()
        csv2 = open(os.path.join(out2, "convergence.csv"), "rb").read()
        assert csv1 == csv2
        header = csv1.decode().splitlines()[0]
        assert header == "dof,e,order_e,De,order_De,Die,order_Die,Dre,order_Dre"
        assert len(csv1.decode().splitlines()) == 4  # header + 3 levels

    def test_effective_config_reproduces_run(self, tmp_path):
        cfg = write_config(tmp_path, BASE)
        out1 = str(tmp_path / "a")
        assert main(["convergence", "--config", cfg, "--out", out1,
                     "--quiet"]) == 0
        eff = os.path.join(out1, "effective_config.ini")
        out2 = str(tmp_path / "b")
        assert main(["convergence", "--config", eff, "--out", out2,
                     "--quiet"]) == 0
        a = open(os.path.join(out1, "convergence.csv"), "rb").read()
        b = open(os.path.join(out2, "convergence.csv"), "rb").read()
        assert a == b

    def test_single_round_has_no_orders(self, tmp_path):
        cfg = write_config(tmp_path, BASE.replace("rounds = 2", "rounds = 0"))
        out = str(tmp_path / "o")
        assert main(["convergence", "--config", cfg, "--out", out,
                     "--quiet"]) == 0
        lines = open(os.path.join(out, "convergence.csv")).read().splitlines()
        assert len(lines) == 2
        row = lines[1].split(",")
        assert row[2] == "" and row[4] == ""

    def test_figures_written_when_enabled(self, tmp_path):
        cfg = write_config(tmp_path, BASE.replace("figures = false",
                                                  "figures = true"))
        out = str(tmp_path / "fig")
        assert main(["convergence", "--config", cfg, "--out", out,
                     "--quiet"]) == 0
        assert os.path.exists(os.path.join(out, "convergence.png"))

    def test_invalid_config_exit_code(self, tmp_path, capsys):
        cfg = write_config(tmp_path, BASE + "\n[bogus]\nx = 1\n")
        assert main(["convergence", "--config", cfg, "--quiet"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_adaptive_mode_rejected_by_convergence(self, tmp_path):
        cfg = write_config(tmp_path,
                           BASE.replace("mode = uniform", "mode = adaptive"))
        assert main(["convergence", "--config", cfg, "--quiet"]) == 1


ADAPTIVE = """
[surface]
name = sphere
[problem]
solution = spherical_singular
lambda = 0.6
[mesh]
level = 1
[refinement]
mode = adaptive
rounds = 3
theta = 0.5
[output]
figures = false
"""


class TestCliAdaptive:
    def test_trace_with_exact_solution(self, tmp_path):
        cfg = write_config(tmp_path, ADAPTIVE)
        out = str(tmp_path / "ad")
        assert main(["adaptive", "--config", cfg, "--out", out,
                     "--quiet"]) == 0
        lines = open(os.path.join(out, "adaptive.csv")).read().splitlines()
        assert lines[0] == "round,dof,eta,e,De,Die,Dre,kappa"
        assert len(lines) == 5  # header + rounds 0..3
        dofs = [int(line.split(",")[1]) for line in lines[1:]]
        assert all(b > a for a, b in zip(dofs, dofs[1:]))

    def test_indicator_only_star_run(self, tmp_path):
        text = ADAPTIVE.replace("name = sphere", "name = star").replace(
            "solution = spherical_singular", "solution = none").replace(
            "figures = false", "figures = true")
        cfg = write_config(tmp_path, text)
        out = str(tmp_path / "star")
        assert main(["adaptive", "--config", cfg, "--out", out,
                     "--quiet"]) == 0
        lines = open(os.path.join(out, "adaptive.csv")).read().splitlines()
        assert lines[0] == "round,dof,eta"
        assert os.path.exists(os.path.join(out, "adaptive.png"))
        assert not os.path.exists(os.path.join(out, "effectivity.png"))

    def test_invalid_theta_rejected(self, tmp_path):
        cfg = write_config(tmp_path,
                           ADAPTIVE.replace("theta = 0.5", "theta = 1.5"))
        assert main(["adaptive", "--config", cfg, "--quiet"]) == 1

    def test_figures_and_fields(self, tmp_path):
        text = ADAPTIVE.replace("figures = false",
                                "figures = true\nfields = true\nmeshes = true")
        cfg = write_config(tmp_path, text)
        out = str(tmp_path / "full")
        assert main(["adaptive", "--config", cfg, "--out", out,
                     "--quiet"]) == 0
        for name in ("adaptive.png", "effectivity.png", "solution.csv",
                     "gradient.csv", "solution.vtk", "gradient.vtk",
                     "mesh_000.off"):
            assert os.path.exists(os.path.join(out, name)), name


class TestCliProjectMesh:
    def test_perturbed_icosphere_projected(self, tmp_path):
        rng = np.random.default_rng(2)
        mesh = icosphere(2)
        noisy = mesh.vertices + 1e-3 * rng.normal(size=mesh.vertices.shape)
        from surfcr.mesh import SurfaceMesh
        save_mesh(SurfaceMesh(noisy, mesh.triangles), tmp_path / "noisy.off")
        text = f"""
[surface]
name = sphere
[mesh]
source = file
path = {tmp_path / 'noisy.off'}
[refinement]
projection = exact
[output]
mesh_path = projected.off
figures = false
"""
        cfg = write_config(tmp_path, text)
        out = str(tmp_path / "proj")
        assert main(["project-mesh", "--config", cfg, "--out", out,
                     "--quiet"]) == 0
        projected = load_mesh(os.path.join(out, "projected.off"))
        from surfcr.geometry import sphere
        assert np.abs(sphere().phi(projected.vertices)).max() <= 1e-12

    def test_already_on_surface_unchanged(self, tmp_path):
        mesh = icosphere(1)
        save_mesh(mesh, tmp_path / "m.off")
        text = f"""
[surface]
name = sphere
[mesh]
source = file
path = {tmp_path / 'm.off'}
[output]
figures = false
"""
        cfg = write_config(tmp_path, text)
        out = str(tmp_path / "p2")
        assert main(["project-mesh", "--config", cfg, "--out", out,
                     "--quiet"]) == 0
        projected = load_mesh(os.path.join(out, "projected.off"))
        assert np.abs(projected.vertices - mesh.vertices).max() <= 1e-12

    def test_open_mesh_rejected(self, tmp_path):
        (tmp_path / "open.off").write_text(
            "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
        text = f"""
[surface]
name = sphere
[mesh]
source = file
path = {tmp_path / 'open.off'}
[output]
figures = false
"""
        cfg = write_config(tmp_path, text)
        assert main(["project-mesh", "--config", cfg, "--quiet"]) == 1


class TestCliMisc:
    def test_info(self, capsys):
        assert main(["info"]) == 0
        out = capsys.readouterr().out
        assert "sphere" in out and "[solver]" in out

    def test_missing_config_file(self, capsys):
        assert main(["convergence", "--config", "/does/not/exist.ini"]) == 1

    def test_bad_threads(self):
        assert main(["convergence", "--config", "x.ini", "--threads", "0"]) == 2
