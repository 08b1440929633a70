import numpy as np
import pytest

from plotkit import (EXPECTED_HEADER, ColumnError, PlotSpec, extract_series,
                     render, render_panels, series_digest)
from plotkit.cli import main

HEADER = ",".join(EXPECTED_HEADER)


def make_csv(path, rows):
    lines = [HEADER]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def sweep_rows(experiment, param, values, methods, seeds, metric_fn):
    rows = []
    for value in values:
        for method in methods:
            for seed in seeds:
                ari = metric_fn(method, value, seed)
                rows.append((experiment, method, param, value, seed,
                             round(ari, 6), round(ari * 0.95, 6),
                             round(90.0 * (1 - ari), 3), round(5.0 * ari, 4),
                             0.5))
    return rows


@pytest.fixture
def delta_csv(tmp_path):
    rows = sweep_rows("delta_sweep", "delta", [0.2, 0.5, 1.0],
                      ["infonce", "pca"], [0, 1],
                      lambda m, v, s: (0.9 * v if m == "infonce" else 0.5)
                      + 0.01 * s)
    return make_csv(tmp_path / "delta.csv", rows)


class TestExtractSeries:
    def test_groups_and_order(self, delta_csv):
        series = extract_series(delta_csv.read_bytes(), PlotSpec(str(delta_csv)))
        assert list(series) == ["infonce", "pca"]
        info = series["infonce"]
        assert info["x"].tolist() == [0.2, 0.5, 1.0]
        assert info["count"].tolist() == [2, 2, 2]

    def test_mean_and_band(self, delta_csv):
        series = extract_series(delta_csv.read_bytes(), PlotSpec(str(delta_csv)))
        info = series["infonce"]
        assert info["mean"][0] == pytest.approx(0.9 * 0.2 + 0.005)
        assert info["std"][0] == pytest.approx(0.005)

    def test_identical_seed_values_zero_band(self, tmp_path):
        rows = sweep_rows("rank_sweep", "r", [1.0, 2.0], ["optimal"], [0, 1],
                          lambda m, v, s: 0.7)
        path = make_csv(tmp_path / "flat.csv", rows)
        series = extract_series(path.read_bytes(), PlotSpec(str(path)))
        assert np.all(series["optimal"]["std"] == 0.0)

    def test_missing_column_is_named(self, delta_csv):
        with pytest.raises(ColumnError) as excinfo:
            extract_series(delta_csv.read_bytes(),
                           PlotSpec(str(delta_csv), y="accuracy"))
        assert excinfo.value.args[0] == "accuracy"

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="unexpected CSV header"):
            extract_series(path.read_bytes(), PlotSpec(str(path)))

    def test_identical_bytes_identical_digest(self, delta_csv):
        spec = PlotSpec(str(delta_csv), y="ami")
        payload = delta_csv.read_bytes()
        d1 = series_digest(extract_series(payload, spec))
        d2 = series_digest(extract_series(bytes(payload), spec))
        assert d1 == d2

    def test_different_metric_different_digest(self, delta_csv):
        payload = delta_csv.read_bytes()
        d1 = series_digest(extract_series(payload, PlotSpec(str(delta_csv), y="ari")))
        d2 = series_digest(extract_series(payload, PlotSpec(str(delta_csv), y="ami")))
        assert d1 != d2


class TestRender:
    def test_png_and_svg_outputs(self, delta_csv, tmp_path):
        for suffix in ("png", "svg"):
            out = tmp_path / f"panel.{suffix}"
            digest = render(PlotSpec(str(delta_csv), out_path=str(out),
                                     title="bias sweep"))
            assert out.exists() and out.stat().st_size > 0
            assert len(digest) == 64

    def test_single_row_smoke(self, tmp_path):
        rows = sweep_rows("scaling_sweep", "kappa", [10.0], ["infonce"], [0],
                          lambda m, v, s: 0.8)
        path = make_csv(tmp_path / "one.csv", rows)
        out = tmp_path / "one.png"
        render(PlotSpec(str(path), out_path=str(out)))
        assert out.exists()

    def test_render_is_deterministic_in_series_and_dimensions(self, delta_csv,
                                                              tmp_path):
        from PIL import Image
        spec1 = PlotSpec(str(delta_csv), out_path=str(tmp_path / "a.png"))
        spec2 = PlotSpec(str(delta_csv), out_path=str(tmp_path / "b.png"))
        d1 = render(spec1)
        d2 = render(spec2)
        assert d1 == d2
        with Image.open(tmp_path / "a.png") as im1, \
                Image.open(tmp_path / "b.png") as im2:
            assert im1.size == im2.size


class TestRenderPanels:
    def test_four_panel_grid(self, tmp_path):
        specs = []
        recipes = [("delta_sweep", "delta", [0.2, 0.6, 1.0]),
                   ("flatness_sweep", "flatness", [0.1, 0.5, 0.9]),
                   ("rank_sweep", "r", [1.0, 5.0, 10.0]),
                   ("scaling_sweep", "kappa", [1.3, 3.0, 10.0])]
        for experiment, param, values in recipes:
            rows = sweep_rows(experiment, param, values,
                              ["infonce", "pca", "ambient"], [0, 1, 2],
                              lambda m, v, s: 0.5 + 0.04 * s
                              + (0.3 if m == "infonce" else 0.0))
            path = make_csv(tmp_path / f"{experiment}.csv", rows)
            specs.append(PlotSpec(str(path), out_path=None, title=experiment))
        out = tmp_path / "grid.png"
        digests = render_panels(specs, str(out))
        assert out.exists() and out.stat().st_size > 0
        assert len(digests) == 4
        assert render_panels(specs, str(tmp_path / "grid2.png")) == digests

    def test_empty_specs_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="at least one"):
            render_panels([], str(tmp_path / "x.png"))


class TestCli:
    def test_plot_subcommand(self, delta_csv, tmp_path):
        out = tmp_path / "cli.png"
        assert main(["plot", "--csv", str(delta_csv), "--x", "value",
                     "--y", "ari", "--out", str(out)]) == 0
        assert out.exists()

    def test_missing_column_exit_code_and_message(self, delta_csv, tmp_path,
                                                  capsys):
        code = main(["plot", "--csv", str(delta_csv), "--x", "value",
                     "--y", "f1_score", "--out", str(tmp_path / "x.png")])
        assert code == 2
        assert "f1_score" in capsys.readouterr().err

    def test_absent_file(self, tmp_path):
        assert main(["plot", "--csv", str(tmp_path / "ghost.csv"),
                     "--out", str(tmp_path / "x.png")]) == 2

    def test_bad_flag(self):
        assert main(["plot", "--nope"]) == 2
