"""Secondary acceptance: render the three reproduction CSV sets."""

import time

import pytest

from figures import default_spec_toml, load_spec, render

topoveil_cli = pytest.importorskip(
    "topoveil.cli", reason="primary package needed to generate the CSVs"
)


@pytest.fixture(scope="module")
def reproduce_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("csvs")
    topoveil_cli.reproduce_tau_sweep(out, seed=9)
    topoveil_cli.reproduce_method_compare(out, seed=9)
    topoveil_cli.reproduce_noise_compare(out, seed=9, runs=3)
    return out


def test_renders_all_panels_pixel_identically(reproduce_dir, tmp_path):
    start = time.perf_counter()
    spec_path = reproduce_dir / "figures.toml"
    spec_path.write_text(default_spec_toml("."))
    spec = load_spec(spec_path)

    first = render(spec, tmp_path / "a")
    assert len(first) == len(spec.panels) + 1
    assert all(p.stat().st_size > 0 for p in first)

    second = render(spec, tmp_path / "b")
    for p1, p2 in zip(first, second):
        assert p1.read_bytes() == p2.read_bytes(), f"{p1.name} not pixel-identical"

    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.2f}s"
    print(f"ACCEPTANCE PASS: figure rendering ({len(spec.panels)} panels, {elapsed:.2f}s)")
