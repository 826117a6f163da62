import json

import pytest

from gaitkit.cli import main


def test_unknown_gait_exits_one(tmp_path):
    assert main(["simulate", "--gait", "gallop", "--velocity", "1.0",
                 "--out", str(tmp_path / "o")]) == 1


def test_out_of_range_velocity_exits_one(tmp_path):
    assert main(["simulate", "--gait", "trot", "--velocity", "9.9",
                 "--out", str(tmp_path / "o")]) == 1


def test_bad_subcommand_exits_one(tmp_path):
    assert main(["frobnicate"]) == 1


def test_simulate_writes_outputs(tmp_path):
    out = tmp_path / "run"
    code = main([
        "simulate", "--gait", "trot", "--velocity", "1.2", "--terrain", "flat",
        "--duration", "3", "--out", str(out), "--seed", "4",
    ])
    assert code == 0
    assert (out / "stride_log.csv").exists()
    assert (out / "manifest.json").exists()
    data = json.loads((out / "metrics.json").read_text())
    assert data["gait"] == "trot"
    assert not data["failed"]
    assert len(data["strides"]) >= 6
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["timestamp"]
    assert "timestamp" not in data["manifest"]


def test_simulate_rerun_is_byte_identical(tmp_path):
    out = tmp_path / "run"
    flags = ["simulate", "--gait", "trot", "--velocity", "0.8", "--duration", "2.0",
             "--out", str(out), "--seed", "11"]
    assert main(flags) == 0
    first_csv = (out / "stride_log.csv").read_bytes()
    first_json = (out / "metrics.json").read_bytes()
    assert main(flags) == 0
    assert (out / "stride_log.csv").read_bytes() == first_csv
    assert (out / "metrics.json").read_bytes() == first_json


def test_transition_demo_outputs_and_chain(tmp_path):
    out = tmp_path / "demo"
    code = main([
        "transition-demo", "--from", "trot", "--to", "walk", "--velocity", "1.0",
        "--out", str(out), "--seed", "2",
    ])
    assert code == 0
    events = json.loads((out / "events.json").read_text())
    assert events["events"][0]["chain"] == ["a10"]
    windows = events["action_windows"]
    assert len(windows) == 1
    assert windows[0]["end"] - windows[0]["start"] == pytest.approx(0.5, abs=0.01)
    head = (out / "sim_series.csv").read_text().splitlines()[0]
    assert head.split(",") == [
        "time_s", "roll", "pitch", "foot_rf_z", "foot_rh_z", "foot_lf_z",
        "foot_lh_z", "action",
    ]
    trace_head = (out / "transition_trace.csv").read_text().splitlines()[0]
    assert trace_head == "time_s,beta,phi_rf,phi_rh,phi_lf,phi_lh,state,action"


def test_transition_demo_trot_to_run_chain(tmp_path):
    # run is not sustainable in this simulator (exit 2), but the dispatched
    # chain must still follow the table and all files must be written
    out = tmp_path / "demo"
    code = main([
        "transition-demo", "--from", "trot", "--to", "run", "--velocity", "1.2",
        "--out", str(out), "--seed", "2",
    ])
    assert code == 2
    events = json.loads((out / "events.json").read_text())
    assert events["events"][0]["chain"] == ["a12", "a23"]
    assert (out / "sim_series.csv").exists()


def test_transition_demo_self_is_noop(tmp_path):
    out = tmp_path / "demo"
    assert main([
        "transition-demo", "--from", "trot", "--to", "trot", "--velocity", "1.0",
        "--out", str(out), "--seed", "2",
    ]) == 0
    events = json.loads((out / "events.json").read_text())
    assert events["events"][0]["chain"] == ["a11"]
    assert events["action_windows"] == []


def test_build_map_select_and_compare(tmp_path):
    import time

    map_path = tmp_path / "map.json"
    t0 = time.perf_counter()
    code = main([
        "build-map", "--terrain", "flat", "--v-min", "0.5", "--v-max", "1.0",
        "--v-step", "0.5", "--c", "0.1", "--trials", "1", "--strides", "3",
        "--out", str(map_path), "--csv", str(tmp_path / "map.csv"), "--seed", "5",
    ])
    assert code == 0
    assert time.perf_counter() - t0 < 60.0
    data = json.loads(map_path.read_text())
    block = data["terrains"][0]
    assert block["terrain"] == "flat"
    assert block["c"] == [0.1]
    assert len(block["cells"]) == 2
    assert (tmp_path / "map.csv").read_text().startswith("terrain,c,v,gait")

    code = main(["select", "--map", str(map_path), "--velocity", "0.5", "--c", "0.1"])
    assert code == 0
    # unknown c -> usage error
    assert main(["select", "--map", str(map_path), "--velocity", "0.5", "--c", "0.7"]) == 1


def test_select_prints_gait_and_cell_values(tmp_path, capsys):
    map_path = tmp_path / "map.json"
    assert main([
        "build-map", "--terrain", "flat", "--v-min", "0.5", "--v-max", "0.5",
        "--v-step", "0.5", "--c", "0.1", "--trials", "1", "--strides", "3",
        "--out", str(map_path), "--seed", "5",
    ]) == 0
    assert main(["select", "--map", str(map_path), "--velocity", "0.5",
                 "--c", "0.1"]) == 0
    printed = capsys.readouterr().out
    assert printed.startswith("trot ")
    assert "J_e=" in printed and "CoT=" in printed and "STB=" in printed

    cmp_path = tmp_path / "cmp.csv"
    code = main([
        "compare", "--terrain", "flat", "--map", str(map_path),
        "--strategy", "fixed:trot", "--strategy", "per-velocity:0.1",
        "--trials", "2", "--v-min", "0.5", "--v-max", "1.0",
        "--seed", "3", "--out", str(cmp_path),
    ])
    assert code == 0
    lines = cmp_path.read_text().strip().splitlines()
    assert lines[0] == "strategy,cot,stb,success,trials"
    assert len(lines) == 3


def test_shipped_demo_map_selects_trot_at_low_speed():
    from pathlib import Path

    from gaitkit.mapping import VelocityGaitMap, select_gait
    from gaitkit.gaits import GaitName

    demo = Path(__file__).resolve().parent.parent / "maps" / "demo-map.json"
    m = VelocityGaitMap.load(demo)
    for c in m.c_values:
        assert select_gait(m, "flat", 0.5, c) is GaitName.TROT


def test_compare_requires_map_for_multi(tmp_path):
    assert main([
        "compare", "--terrain", "flat", "--strategy", "multi:0.1",
        "--trials", "1", "--out", str(tmp_path / "c.csv"),
    ]) == 1


def test_config_file_overrides(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"sim": {"dt": 0.001}, "gait": {"period": 0.5}}))
    out = tmp_path / "run"
    assert main([
        "simulate", "--gait", "trot", "--velocity", "1.0", "--duration", "2",
        "--out", str(out), "--seed", "1", "--config", str(cfg_path),
    ]) == 0
    data = json.loads((out / "metrics.json").read_text())
    assert data["strides"][0]["t_f"] == pytest.approx(0.5, abs=1e-6)


def test_config_defined_terrain(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "terrains": {
            "bump": {
                "segments": [
                    {"start_x": -20.0, "incline_deg": 0.0, "kind": "flat"},
                    {"start_x": 2.0, "incline_deg": 5.0, "kind": "slope5"},
                ],
                "end_x": 50.0,
            }
        }
    }))
    out = tmp_path / "run"
    assert main([
        "simulate", "--gait", "trot", "--velocity", "1.0", "--terrain", "bump",
        "--duration", "2", "--out", str(out), "--seed", "1",
        "--config", str(cfg_path),
    ]) == 0
    data = json.loads((out / "metrics.json").read_text())
    assert data["terrain"] == "bump"


def test_config_rejects_unknown_keys(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"sim": {"dtt": 0.001}}))
    assert main([
        "simulate", "--gait", "trot", "--velocity", "1.0",
        "--out", str(tmp_path / "o"), "--config", str(cfg_path),
    ]) == 1
