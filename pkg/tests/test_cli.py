import json
import re

import pytest

from sedq.cli import RunConfig, main


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestSolveCommand:
    def test_probabilities_sum_to_one(self, tmp_path, capsys):
        out = tmp_path / "sol.csv"
        code, _, err = run_cli(
            ["solve", "--s", "3", "--rho", "0.75", "--q", "0.4", "--out", str(out)],
            capsys,
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        data = [ln for ln in lines if not ln.startswith("#")]
        assert data[0] == "m,n,r,q1,q2,probability"
        total = sum(float(ln.split(",")[-1]) for ln in data[1:])
        assert total == pytest.approx(1.0, abs=1e-12)
        assert "N=" in err and "wall=" in err

    def test_unstable_input_exits_two(self, capsys):
        code, _, err = run_cli(
            ["solve", "--s", "2", "--rho", "1.0", "--q", "0.5"], capsys
        )
        assert code == 2
        assert "unstable" in err

    def test_symmetric_output(self, tmp_path, capsys):
        out = tmp_path / "sym.csv"
        code, _, _ = run_cli(
            ["solve", "--s", "1", "--rho", "0.5", "--q", "0.5", "--out", str(out)],
            capsys,
        )
        assert code == 0
        probs = {}
        for ln in out.read_text().strip().split("\n")[7:]:
            m, n, r, q1, q2, val = ln.split(",")
            probs[(int(m), int(n))] = float(val)
        for n in range(1, 10):
            assert probs[(2, n)] == pytest.approx(probs[(2, -n)], rel=1e-8)

    def test_seventeen_digit_payload(self, tmp_path, capsys):
        out = tmp_path / "sol.csv"
        run_cli(
            ["solve", "--s", "2", "--rho", "0.5", "--q", "0.4", "--out", str(out)],
            capsys,
        )
        body = out.read_text()
        assert re.search(r",0\.\d{15,17}$", body, re.MULTILINE)

    def test_byte_stable(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run_cli(
                ["solve", "--s", "2", "--rho", "0.6", "--q", "0.4",
                 "--out", str(path)],
                capsys,
            )
        assert a.read_bytes() == b.read_bytes()

    def test_json_format(self, tmp_path, capsys):
        out = tmp_path / "sol.json"
        code, _, _ = run_cli(
            ["solve", "--s", "2", "--rho", "0.5", "--q", "0.4",
             "--format", "json", "--out", str(out)],
            capsys,
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["meta"]["N"] == 1
        assert {"m", "n", "r", "q1", "q2", "probability"} <= set(doc["records"][0])

    def test_tree_dump(self, tmp_path, capsys):
        out = tmp_path / "sol.csv"
        dump = tmp_path / "tree.csv"
        code, _, _ = run_cli(
            ["solve", "--s", "2", "--rho", "0.5", "--q", "0.4",
             "--out", str(out), "--dump-tree", str(dump)],
            capsys,
        )
        assert code == 0
        assert dump.read_text().startswith("kind,level,index,")

    def test_missing_parameter_exits_two(self, capsys):
        code, _, err = run_cli(["solve", "--s", "2", "--rho", "0.5"], capsys)
        assert code == 2
        assert "--q" in err


class TestHeatmapCommand:
    def test_header_carries_line_definitions(self, tmp_path, capsys):
        out = tmp_path / "grid.csv"
        code, _, _ = run_cli(
            ["heatmap", "--s", "3", "--rho", "0.9", "--q", "0.4",
             "--q1max", "10", "--q2max", "30", "--out", str(out)],
            capsys,
        )
        assert code == 0
        text = out.read_text()
        assert "q1 + 1 = (q2 + 1)/s" in text
        assert "q1 = q2/s" in text
        assert "q1,q2,probability" in text

    def test_mode_between_reference_lines(self, tmp_path, capsys):
        out = tmp_path / "grid.csv"
        run_cli(
            ["heatmap", "--s", "3", "--rho", "0.9", "--q", "0.4",
             "--q1max", "15", "--q2max", "45", "--out", str(out)],
            capsys,
        )
        best, best_cell = -1.0, None
        for ln in out.read_text().strip().split("\n"):
            if ln.startswith("#") or ln.startswith("q1"):
                continue
            q1, q2, val = ln.split(",")
            if float(val) > best:
                best, best_cell = float(val), (int(q1), int(q2))
        q1, q2 = best_cell
        assert 3 * q1 <= q2 <= 3 * q1 + 2  # inside the equal-delay band

    def test_empty_grid_rejected(self, capsys):
        code, _, _ = run_cli(
            ["heatmap", "--s", "2", "--rho", "0.5", "--q", "0.4",
             "--q1max", "-1", "--q2max", "0"],
            capsys,
        )
        assert code == 2


class TestNindexCommand:
    def test_reference_table(self, capsys):
        code, out, _ = run_cli(["nindex", "--q", "0.4"], capsys)
        assert code == 0
        lines = out.strip().split("\n")
        assert lines[0] == "s,rho,N"
        assert len(lines) == 11
        assert all(ln.endswith(",1") for ln in lines[1:])

    def test_single_cell(self, capsys):
        code, out, _ = run_cli(
            ["nindex", "--q", "0.4", "--s-list", "2", "--rho-list", "0.5"], capsys
        )
        assert code == 0
        assert out.strip().split("\n")[1].endswith(",1")

    def test_invalid_rho_exits_two(self, capsys):
        code, _, _ = run_cli(
            ["nindex", "--q", "0.4", "--s-list", "2", "--rho-list", "0.5,1.2"],
            capsys,
        )
        assert code == 2


class TestValidateCommand:
    def test_pass(self, capsys):
        code, _, err = run_cli(
            ["validate", "--s", "2", "--rho", "0.5", "--q", "0.4",
             "--box", "40x80"],
            capsys,
        )
        assert code == 0
        assert "PASS" in err

    def test_tiny_box_surfaces_error(self, capsys):
        code, _, err = run_cli(
            ["validate", "--s", "1", "--rho", "0.8", "--q", "0.5",
             "--box", "6x6"],
            capsys,
        )
        assert code == 1
        assert "numerical failure" in err

    def test_simulation_report_deterministic(self, capsys):
        argv = ["validate", "--s", "1", "--rho", "0.5", "--q", "0.5",
                "--box", "30x30", "--simulate", "--events", "100000",
                "--seed", "7"]
        _, _, err1 = run_cli(argv, capsys)
        _, _, err2 = run_cli(argv, capsys)
        sim1 = [ln for ln in err1.splitlines() if "simulation" in ln]
        sim2 = [ln for ln in err2.splitlines() if "simulation" in ln]
        assert sim1 == sim2 and sim1


class TestLmapCommand:
    def test_region_structure(self, tmp_path, capsys):
        out = tmp_path / "lmap.csv"
        code, _, _ = run_cli(
            ["lmap", "--s", "2", "--rho", "0.5", "--q", "0.4",
             "--span", "8", "--lmax", "7", "--out", str(out)],
            capsys,
        )
        assert code == 0
        grid = {}
        for ln in out.read_text().strip().split("\n"):
            if ln.startswith("#") or ln.startswith("m,"):
                continue
            m, n, L = (int(x) for x in ln.split(","))
            grid[(m, n)] = L
        # pass counts shrink away from the origin and peak near it
        far = max(L for (m, n), L in grid.items() if m + abs(n) >= 6)
        near = max(L for (m, n), L in grid.items() if m + abs(n) <= 1)
        assert far <= 2
        assert near == max(grid.values())

    def test_coarser_eps_is_pointwise_smaller(self, tmp_path, capsys):
        grids = {}
        for eps in ("1e-2", "1e-4"):
            out = tmp_path / f"lmap{eps}.csv"
            run_cli(
                ["lmap", "--s", "2", "--rho", "0.5", "--q", "0.4",
                 "--span", "6", "--eps", eps, "--lmax", "8", "--out", str(out)],
                capsys,
            )
            grid = {}
            for ln in out.read_text().strip().split("\n"):
                if ln.startswith("#") or ln.startswith("m,"):
                    continue
                m, n, L = (int(x) for x in ln.split(","))
                grid[(m, n)] = L
            grids[eps] = grid
        assert all(
            grids["1e-2"][st] <= grids["1e-4"][st] for st in grids["1e-4"]
        )


class TestConfig:
    def test_round_trip(self):
        cfg = RunConfig(s=3, rho=0.75, q=0.4, eps=1e-6, lmax=12, m=4, k=50,
                        format="json", out="x.json")
        assert RunConfig.from_json(cfg.to_json()) == cfg

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps({"s": 2, "rho": 0.5, "q": 0.4}))
        out = tmp_path / "sol.csv"
        code, _, _ = run_cli(
            ["solve", "--config", str(cfg_path), "--rho", "0.6",
             "--out", str(out)],
            capsys,
        )
        assert code == 0
        assert "# rho: 0.59999999999999998" in out.read_text()
