"""End-to-end CLI checks through main(argv), no subprocesses."""

from __future__ import annotations

import csv
import math

import numpy as np
import pytest

from netshape import (estimate_influence, hazard_radius, load_edge_list,
                      probabilities_from_hazard, read_allocation,
                      read_hazard_tsv, select_influencers, sir_hazard)
from netshape.cli import _TAG_CELL, _TAG_SELECTION, _derive_seed, main

# ln(1 + beta/delta) = 1 when beta = e - 1: unit hazards via the sir weighting
_UNIT_SIR = ["--weighting", "sir", "--sir-beta", repr(math.e - 1.0),
             "--sir-delta", "1.0"]


def _kv(out: str) -> dict[str, str]:
    pairs = {}
    for line in out.strip().splitlines():
        key, _, value = line.partition(" ")
        pairs[key] = value
    return pairs


@pytest.fixture
def star_file(tmp_path):
    path = tmp_path / "star.txt"
    path.write_text("0 1\n0 2\n0 3\n1 0\n2 0\n3 0\n")
    return str(path)


@pytest.fixture
def chain_file(tmp_path):
    path = tmp_path / "chain.txt"
    path.write_text("0 1\n1 2\n")
    return str(path)


class TestRadius:
    def test_self_loops_only(self, tmp_path, capsys):
        path = tmp_path / "loops.txt"
        path.write_text("0 0\n1 1\n")
        assert main(["radius", "--graph", str(path)]) == 0
        got = _kv(capsys.readouterr().out)
        assert got["n"] == "2"
        assert got["edges"] == "0"
        assert got["skipped_self_loops"] == "2"
        assert float(got["rho"]) == 0.0
        assert float(got["gamma"]) == 0.0
        assert float(got["bound"]) == 1.0

    def test_unit_hazard_star(self, star_file, capsys):
        assert main(["radius", "--graph", star_file] + _UNIT_SIR) == 0
        got = _kv(capsys.readouterr().out)
        assert float(got["rho"]) == pytest.approx(math.sqrt(3.0), abs=1e-8)
        assert 1.0 <= float(got["bound"]) <= 4.0

    def test_largest_scc_restriction(self, tmp_path, capsys):
        path = tmp_path / "scc.txt"
        path.write_text("0 1\n1 0\n1 2\n")
        assert main(["radius", "--graph", str(path), "--largest-scc"]
                    + _UNIT_SIR) == 0
        got = _kv(capsys.readouterr().out)
        assert got["scc_nodes"] == "2"
        assert got["n"] == "2"
        assert got["edges"] == "2"
        assert float(got["rho"]) == pytest.approx(1.0, abs=1e-8)

    def test_symmetrize_and_n0(self, chain_file, capsys):
        assert main(["radius", "--graph", chain_file, "--symmetrize",
                     "--n0", "2"] + _UNIT_SIR) == 0
        got = _kv(capsys.readouterr().out)
        assert got["edges"] == "4"
        assert float(got["bound"]) >= 2.0


class TestShape:
    def test_artifacts_and_report(self, star_file, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["shape", "--graph", star_file, "--mode", "edge",
                     "--budget", "2", "--eps", "0.05", "--t-cap", "400",
                     "--out", str(out)] + _UNIT_SIR)
        assert code == 0
        got = _kv(capsys.readouterr().out)
        assert int(got["iterations"]) >= 1
        assert float(got["rho_initial"]) == pytest.approx(math.sqrt(3.0), abs=1e-8)
        assert float(got["rho_best"]) <= float(got["rho_averaged"]) + 1e-9
        assert got["out"] == str(out)

        averaged = read_allocation(out / "allocation.tsv")
        assert averaged.mode == "edge"
        assert averaged.total() <= 2.0 + 1e-9
        best = read_allocation(out / "allocation_best.tsv")
        assert best.total() <= 2.0 + 1e-9

        shaped = read_hazard_tsv(out / "shaped.tsv")
        assert shaped.graph.num_edges == 6
        assert hazard_radius(shaped).rho == pytest.approx(
            float(got["rho_averaged"]), abs=1e-8)

        trace = (out / "trace.csv").read_text().splitlines()
        assert trace[0] == "iter,rho,eta"
        assert len(trace) == 1 + int(got["iterations"])
        assert float(trace[1].split(",")[1]) == pytest.approx(
            float(got["rho_initial"]), abs=1e-12)

    def test_node_mode_with_plots(self, star_file, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["shape", "--graph", star_file, "--mode", "node",
                     "--budget", "1", "--eps", "0.1", "--t-cap", "200",
                     "--plots", "--out", str(out)] + _UNIT_SIR)
        assert code == 0
        svg = (out / "trace.svg").read_text()
        assert "<svg" in svg
        alloc = read_allocation(out / "allocation.tsv")
        assert alloc.mode == "node"
        assert alloc.values.size == 4
        # full immunization of the hub is optimal here
        assert alloc.values[0] >= 0.9

    def test_budget_required(self, star_file, capsys):
        assert main(["shape", "--graph", star_file]) == 1
        assert "budget" in capsys.readouterr().err
        assert main(["shape", "--graph", star_file, "--budget", "1",
                     "--budget", "2"]) == 1

    def test_budget_above_edge_count(self, chain_file, capsys):
        code = main(["shape", "--graph", chain_file, "--mode", "edge",
                     "--budget", "5"])
        assert code == 1
        assert "exceed" in capsys.readouterr().err


class TestSimulate:
    def test_explicit_seed_set_on_edgeless_graph(self, tmp_path, capsys):
        path = tmp_path / "loops.txt"
        path.write_text("0 0\n1 1\n2 2\n")
        code = main(["simulate", "--graph", str(path), "--s0", "2,0,2",
                     "--runs", "50"])
        assert code == 0
        got = _kv(capsys.readouterr().out)
        assert got["s0"] == "0,2"
        assert got["runs"] == "50"
        assert float(got["sigma_mean"]) == 2.0
        assert float(got["sigma_stderr"]) == 0.0

    def test_default_selects_influencers(self, chain_file, capsys):
        code = main(["simulate", "--graph", chain_file, "--runs", "200",
                     "--selection-samples", "100"] + _UNIT_SIR)
        assert code == 0
        got = _kv(capsys.readouterr().out)
        # head of the chain is the unique best single influencer
        assert got["s0"] == "0"
        assert 1.0 <= float(got["sigma_mean"]) <= 3.0

    def test_dump_csv(self, chain_file, tmp_path, capsys):
        dump = tmp_path / "runs.csv"
        code = main(["simulate", "--graph", chain_file, "--s0", "0",
                     "--runs", "25", "--dump", str(dump)] + _UNIT_SIR)
        assert code == 0
        rows = list(csv.reader(dump.open()))
        assert rows[0] == ["run", "infected_count"]
        assert len(rows) == 26
        sizes = [int(r[1]) for r in rows[1:]]
        assert all(1 <= s <= 3 for s in sizes)
        got = _kv(capsys.readouterr().out)
        assert float(got["sigma_mean"]) == pytest.approx(np.mean(sizes), abs=1e-12)

    def test_temporal_model_and_horizon(self, chain_file, capsys):
        code = main(["simulate", "--graph", chain_file, "--s0", "0",
                     "--model", "temporal", "--horizon", "0.0",
                     "--runs", "30"] + _UNIT_SIR)
        assert code == 0
        got = _kv(capsys.readouterr().out)
        assert float(got["sigma_mean"]) == 1.0

    def test_deterministic_output(self, chain_file, capsys):
        argv = ["simulate", "--graph", chain_file, "--s0", "0",
                "--runs", "100", "--seed", "7"] + _UNIT_SIR
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert main(argv) == 0
        assert capsys.readouterr().out == first

    def test_bad_seed_list(self, chain_file, capsys):
        assert main(["simulate", "--graph", chain_file, "--s0", "a,b"]) == 1
        assert "--s0" in capsys.readouterr().err

    def test_out_of_range_seed(self, chain_file, capsys):
        assert main(["simulate", "--graph", chain_file, "--s0", "9"]) == 1


class TestBaseline:
    def test_writes_allocation_and_radius(self, star_file, tmp_path, capsys):
        out = tmp_path / "base"
        code = main(["baseline", "--graph", star_file, "--method", "degree",
                     "--budget", "1", "--out", str(out)] + _UNIT_SIR)
        assert code == 0
        got = _kv(capsys.readouterr().out)
        assert got["method"] == "degree"
        alloc = read_allocation(out / "allocation_degree.tsv")
        assert alloc.values.tolist() == [1.0, 0.0, 0.0, 0.0]
        # hub immunized: remaining mass is the three leaf->hub edges
        assert float(got["rho"]) == pytest.approx(math.sqrt(3.0) / 2.0, abs=1e-8)

    def test_budget_above_node_count(self, star_file, capsys):
        assert main(["baseline", "--graph", star_file, "--method", "rand",
                     "--budget", "9"]) == 1

    def test_netshape_not_a_baseline(self, star_file):
        with pytest.raises(SystemExit) as err:
            main(["baseline", "--graph", star_file, "--method", "netshape",
                  "--budget", "1"])
        assert err.value.code == 2


class TestSweep:
    def test_csv_schema_and_determinism(self, star_file, tmp_path, capsys):
        def run(out):
            argv = ["sweep", "--graph", star_file, "--method", "rand",
                    "--method", "degree", "--budget", "1", "--budget", "2",
                    "--seed", "0", "--seed", "1", "--runs", "50",
                    "--selection-samples", "50", "--out", str(out)] + _UNIT_SIR
            assert main(argv) == 0
            return (out / "sweep.csv").read_bytes()

        first = run(tmp_path / "a")
        second = run(tmp_path / "b")
        assert first == second
        capsys.readouterr()

        rows = list(csv.reader((tmp_path / "a" / "sweep.csv").open()))
        assert rows[0] == ["method", "k", "rho", "sigma_mean", "sigma_stderr",
                           "wall_time_ms", "seed", "error"]
        assert len(rows) == 1 + 2 * 2 * 2
        for row in rows[1:]:
            assert row[0] in ("rand", "degree")
            assert float(row[1]) in (1.0, 2.0)
            float(row[2]), float(row[3]), float(row[4])
            assert row[5] == "0"  # timing off by default
            assert row[6] in ("0", "1")
            assert row[7] == ""

    def test_zero_budget_rand_equals_plain_influence(self, chain_file,
                                                     tmp_path, capsys):
        out = tmp_path / "zero"
        argv = ["sweep", "--graph", chain_file, "--method", "rand",
                "--budget", "0", "--seed", "3", "--runs", "400",
                "--selection-samples", "200", "--out", str(out)] + _UNIT_SIR
        assert main(argv) == 0
        capsys.readouterr()
        row = list(csv.DictReader((out / "sweep.csv").open()))[0]

        # a zero budget leaves the graph alone: the cell must reproduce the
        # library estimate for the influencer selected on the base graph
        h = sir_hazard(load_edge_list(chain_file).graph, math.e - 1.0, 1.0)
        p = probabilities_from_hazard(h)
        s0 = select_influencers(p, 1, samples=200,
                                seed=_derive_seed(3, _TAG_SELECTION))
        cell_seed = _derive_seed(3, _TAG_CELL, 1, 0)  # rand is method index 1
        want = estimate_influence(p, s0, runs=400, seed=cell_seed)
        assert float(row["sigma_mean"]) == want.mean
        assert float(row["sigma_stderr"]) == want.std_error
        # path 0-1-2 with symmetrized weight 1/2: rho = sqrt(2)/2
        assert float(row["rho"]) == pytest.approx(math.sqrt(0.5), abs=1e-8)

        meta = (out / "meta.txt").read_text()
        assert "s0=" + ",".join(str(v) for v in s0) in meta

    def test_meta_file_contents(self, star_file, tmp_path, capsys):
        out = tmp_path / "meta"
        argv = ["sweep", "--graph", star_file, "--method", "degree",
                "--budget", "1", "--runs", "20", "--selection-samples", "20",
                "--out", str(out)] + _UNIT_SIR
        assert main(argv) == 0
        printed = capsys.readouterr().out
        assert f"out {out / 'sweep.csv'}" in printed
        assert f"out {out / 'meta.txt'}" in printed
        meta = dict(line.split("=", 1)
                    for line in (out / "meta.txt").read_text().splitlines())
        assert len(meta["config_sha256"]) == 64
        assert meta["n"] == "4"
        assert meta["edges"] == "6"
        assert meta["cells"] == "1"

    def test_default_budget_grid(self, star_file, tmp_path, capsys):
        out = tmp_path / "grid"
        argv = ["sweep", "--graph", star_file, "--method", "rand",
                "--eval", "radius", "--out", str(out)] + _UNIT_SIR
        assert main(argv) == 0
        capsys.readouterr()
        rows = list(csv.DictReader((out / "sweep.csv").open()))
        ks = [float(r["k"]) for r in rows]
        assert len(ks) == 16
        assert ks == sorted(ks)
        assert ks[0] == 1.0
        assert ks[-1] == pytest.approx(2.0)  # max(0.1 * 4, 2)
        assert all(r["sigma_mean"] == "" for r in rows)

    def test_netshape_rho_nonincreasing_in_budget(self, tmp_path, capsys):
        rng = np.random.default_rng(60)
        lines = []
        seen = set()
        while len(seen) < 120:
            a, b = rng.integers(0, 40, size=2)
            if a != b and (a, b) not in seen:
                seen.add((int(a), int(b)))
        lines = [f"{a} {b}" for a, b in sorted(seen)]
        path = tmp_path / "rand.txt"
        path.write_text("\n".join(lines) + "\n")
        out = tmp_path / "mono"
        argv = ["sweep", "--graph", str(path), "--method", "netshape",
                "--eval", "radius", "--mode", "node", "--budget", "1",
                "--budget", "4", "--budget", "8", "--eps", "0.05",
                "--t-cap", "300", "--out", str(out)] + _UNIT_SIR
        assert main(argv) == 0
        capsys.readouterr()
        rows = list(csv.DictReader((out / "sweep.csv").open()))
        rhos = [float(r["rho"]) for r in rows]
        assert all(later <= earlier + 1e-6
                   for earlier, later in zip(rhos, rhos[1:]))

    def test_plots_render_figures(self, star_file, tmp_path, capsys):
        out = tmp_path / "figs"
        argv = ["sweep", "--graph", star_file, "--method", "rand",
                "--method", "degree", "--budget", "1", "--budget", "2",
                "--runs", "30", "--selection-samples", "30", "--plots",
                "--out", str(out)] + _UNIT_SIR
        assert main(argv) == 0
        printed = capsys.readouterr().out
        svgs = [line.split(" ", 1)[1] for line in printed.splitlines()
                if line.endswith(".svg")]
        assert svgs
        for svg in svgs:
            text = open(svg).read()
            assert "<svg" in text

    def test_timing_flag_populates_wall_time(self, star_file, tmp_path, capsys):
        out = tmp_path / "timed"
        argv = ["sweep", "--graph", star_file, "--method", "degree",
                "--budget", "1", "--runs", "20", "--selection-samples", "20",
                "--timing", "--out", str(out)] + _UNIT_SIR
        assert main(argv) == 0
        capsys.readouterr()
        row = list(csv.DictReader((out / "sweep.csv").open()))[0]
        assert int(row["wall_time_ms"]) >= 0


class TestExitCodes:
    def test_missing_graph_file(self, capsys):
        assert main(["radius", "--graph", "/definitely/not/here.txt"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_malformed_graph_line(self, tmp_path, capsys):
        path = tmp_path / "bad.txt"
        path.write_text("0\n")
        assert main(["radius", "--graph", str(path)]) == 2

    def test_malformed_config_line(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("runs 50\n")
        assert main(["radius", "--config", str(cfg)]) == 2

    def test_unknown_config_key(self, tmp_path, chain_file, capsys):
        cfg = tmp_path / "odd.cfg"
        cfg.write_text("wibble = 3\n")
        assert main(["radius", "--config", str(cfg),
                     "--graph", chain_file]) == 1

    def test_no_graph_given(self, capsys):
        assert main(["radius"]) == 1
        assert "graph" in capsys.readouterr().err

    def test_config_file_drives_run(self, tmp_path, chain_file, capsys):
        cfg = tmp_path / "ok.cfg"
        cfg.write_text(f"""graph = {chain_file}
weighting = sir
sir_beta = {math.e - 1.0!r}
sir_delta = 1.0
""")
        assert main(["radius", "--config", str(cfg)]) == 0
        got = _kv(capsys.readouterr().out)
        assert got["n"] == "3"
        assert float(got["rho"]) == pytest.approx(math.sqrt(0.5), abs=1e-8)
