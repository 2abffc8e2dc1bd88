from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uwotfs.harness import cli
from uwotfs.harness.config import ConfigError, SimConfig, dump_config, load_config, read_config_text
from uwotfs.harness.link import (
    CSV_FIELDS,
    FerRecord,
    emit_csv,
    parse_csv,
    run_campaign,
    run_point,
    worker_count,
    write_csv,
)
from uwotfs.harness.stats import empirical_errors

ROOT = Path(__file__).resolve().parents[1]
SISO = SimConfig(n_tx=1, n_rx=1, waveform="ofdm", mcs="1/2-qpsk", doppler_hz=1920)


# --- configuration ------------------------------------------------------------------

def test_defaults_are_paper_scenario():
    cfg = SimConfig()
    assert cfg.geometry.frame_length == 448
    assert cfg.doppler == pytest.approx(1912.5, abs=1)
    assert cfg.profile.L == 12
    assert cfg.n_info == 858  # 288 symbols * 4 bits * 3/4 minus the tail


def test_read_config_text():
    text = """
    # comment
    M = 2   # trailing comment
    waveform = OFDM
    static_channel = yes
    candidate_ms = 1, 2 4
    doppler_hz = auto
    max_frames = 2e5
    """
    values = read_config_text(text)
    assert values == {
        "M": 2,
        "waveform": "ofdm",
        "static_channel": True,
        "candidate_ms": (1, 2, 4),
        "doppler_hz": None,
        "max_frames": 200000,
    }


@pytest.mark.parametrize(
    "text",
    ["bogus = 1", "M = two", "static_channel = maybe", "no equals sign", "max_frames = 2.5"],
)
def test_bad_config_text(text):
    with pytest.raises(ConfigError):
        read_config_text(text)


@pytest.mark.parametrize(
    "changes",
    [
        {"mcs": "5/6-qpsk"},
        {"waveform": "gfdm"},
        {"M": 5},
        {"n_tx": 3},  # floor(32 / 12) = 2
        {"n_cp": 8},  # shorter than the channel memory
        {"min_errors": 0},
        {"snr_step_db": 0},
        {"stop_fer": 1.0},
        {"candidate_ms": (5,)},
    ],
)
def test_invalid_configs(changes):
    with pytest.raises(ConfigError):
        SimConfig(**changes)


def test_four_by_four_needs_long_uw():
    with pytest.raises(ConfigError):
        SimConfig(n_tx=4, n_rx=4)
    assert SimConfig(n_tx=4, n_rx=4, n_uw=64).geometry.n_tx == 4


def test_load_config_file_and_overrides(tmp_path):
    path = tmp_path / "s.cfg"
    path.write_text("M = 2\nseed = 5\n")
    cfg = load_config(path, seed=9)
    assert cfg.M == 2 and cfg.seed == 9
    with pytest.raises(ConfigError, match="missing.cfg"):
        load_config(tmp_path / "missing.cfg")


def test_dump_config_round_trips():
    cfg = SimConfig(M=2, mcs="1/2-16qam", candidate_ms=(1, 2))
    assert SimConfig(**read_config_text(dump_config(cfg))) == cfg
    assert SimConfig(**read_config_text(dump_config(SimConfig()))) == SimConfig()


def test_snr_convention():
    cfg = SimConfig(mcs="3/4-16qam")
    eb = 1 / (0.75 * 4)
    assert cfg.noise_variance(10.0) == pytest.approx(eb / 10)
    charged = cfg.replace(charge_overhead=True)
    assert charged.noise_variance(10.0) == pytest.approx(eb * 448 / 288 / 10)


def test_snr_grid():
    assert SimConfig(snr_start_db=0, snr_stop_db=1, snr_step_db=0.5).snr_grid.tolist() == [0, 0.5, 1]
    assert SimConfig(snr_start_db=3, snr_stop_db=3).snr_grid.tolist() == [3]


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("SIM_THREADS", "1")
    assert worker_count() == 1
    monkeypatch.setenv("SIM_THREADS", "junk")
    assert worker_count() == 1
    monkeypatch.setenv("SIM_THREADS", "100000")
    assert 1 <= worker_count() <= 100000


# --- simulation -----------------------------------------------------------------------

def test_high_snr_static_is_error_free():
    cfg = SimConfig(static_channel=True, max_frames=100, min_errors=1)
    rec = run_point(cfg, 60.0)
    assert rec.frames_run == 100 and rec.frame_errors == 0 and rec.fer == 0


def test_determinism():
    cfg = SISO.replace(min_errors=5, max_frames=60)
    a, b = run_point(cfg, 3.0), run_point(cfg, 3.0)
    assert a == b
    assert run_point(cfg, 3.0, seed=2) != a or a.frame_errors == 0


def test_worker_count_does_not_change_result():
    cfg = SISO.replace(min_errors=10, max_frames=120)
    assert run_point(cfg, 2.0, workers=1) == run_point(cfg, 2.0, workers=2)


def test_siso_moderate_snr_statistics():
    rec = run_point(SISO.replace(min_errors=100, max_frames=5000), 4.0)
    assert rec.frame_errors >= 100
    assert 0 < rec.fer < 1
    assert rec.fer == rec.frame_errors / rec.frames_run
    assert rec.ber <= rec.fer


@given(st.integers(1, 30), st.integers(1, 60))
@settings(max_examples=8, deadline=None)
def test_work_conservation(min_errors, max_frames):
    rec = run_point(SISO.replace(min_errors=min_errors, max_frames=max_frames), 1.0)
    assert rec.frames_run <= max_frames
    assert rec.frame_errors >= min_errors or rec.frames_run == max_frames
    assert len(rec.iteration_frame_errors) == 1


def test_fer_monotone_in_snr():
    cfg = SISO.replace(min_errors=300, max_frames=20000, snr_start_db=0, snr_stop_db=2, snr_step_db=2)
    low, high = run_campaign(cfg)
    assert high.fer <= 1.2 * low.fer


def test_campaign_writes_csv(tmp_path):
    cfg = SimConfig(static_channel=True, snr_start_db=50, snr_stop_db=50, max_frames=5)
    out = tmp_path / "sub" / "fer.csv"
    records = run_campaign(cfg, out)
    assert len(records) == 1 and records[0].fer == 0
    assert out.read_text().splitlines()[0] == ",".join(CSV_FIELDS)
    assert parse_csv(out.read_text()) == records


def test_campaign_stops_below_stop_fer():
    cfg = SimConfig(static_channel=True, snr_start_db=40, snr_stop_db=60, snr_step_db=10, max_frames=3, stop_fer=1e-4)
    assert len(run_campaign(cfg)) == 1


_record = st.builds(
    FerRecord,
    snr_db=st.floats(-20, 60, allow_nan=False),
    frames_run=st.integers(1, 10**6),
    frame_errors=st.integers(0, 10**6),
    bit_errors=st.integers(0, 10**9),
    fer=st.floats(0, 1),
    ber=st.floats(0, 1),
    seed=st.integers(0, 2**63 - 1),
)


@given(st.lists(_record, max_size=6))
def test_csv_round_trip(records):
    assert parse_csv(emit_csv(records)) == records


def test_csv_header_and_errors(tmp_path):
    assert emit_csv([]).strip() == "snr_db,frames,frame_errors,bit_errors,fer,ber,seed"
    with pytest.raises(ValueError):
        parse_csv("a,b\n1,2\n")
    blocker = tmp_path / "file.txt"
    blocker.write_text("")
    with pytest.raises(OSError, match="cannot write"):
        write_csv([], blocker / "nested.csv")


def test_empirical_errors_match_analytic_table():
    from uwotfs.estimation import optimize_frame

    cfg = SimConfig(doppler_hz=1920, stats_frames=150)
    table = optimize_frame(288, (2,), cfg.geometry, cfg.profile, cfg.noise_variance(cfg.operating_snr_db)).table
    _, ce, d, _ = empirical_errors(cfg, 2)
    assert ce == pytest.approx(table[0][1], rel=0.15)
    assert d == pytest.approx(table[0][2], rel=0.1)


# --- command line ---------------------------------------------------------------------

def test_cli_help(capsys):
    assert cli.main(["simulate", "--help"]) == 0
    assert "--config" in capsys.readouterr().out


def test_cli_unknown_flag(capsys):
    assert cli.main(["simulate", "--bogus"]) == 1
    assert "usage" in capsys.readouterr().err


def test_cli_missing_config(tmp_path, capsys):
    missing = tmp_path / "nothere.cfg"
    assert cli.main(["simulate", "--config", str(missing)]) == 1
    assert str(missing) in capsys.readouterr().err


def test_cli_bad_value(capsys):
    assert cli.main(["optimize-frame", "--M", "5"]) == 1
    assert cli.main(["optimize-frame", "--n-tx", "x"]) == 1


def test_cli_optimize_frame_paper(capsys, tmp_path):
    out = tmp_path / "table.csv"
    assert cli.main(["optimize-frame", "--config", str(ROOT / "paper.cfg"), "--out", str(out)]) == 0
    err = capsys.readouterr().err
    assert "M*=4" in err
    rows = out.read_text().splitlines()
    assert rows[0] == "M,sigma2_ce,sigma2_d,sigma2_total"
    assert [int(r.split(",")[0]) for r in rows[1:]] == [1, 2, 4, 6, 8]


def test_cli_simulate_csv(capsys, tmp_path):
    out = tmp_path / "fer.csv"
    argv = ["simulate", "--static-channel", "true", "--snr-start-db", "40", "--snr-stop-db", "40",
            "--max-frames", "3", "--charge-overhead", "--out", str(out)]
    assert cli.main(argv) == 0
    (rec,) = parse_csv(out.read_text())
    assert rec.frames_run == 3 and rec.fer == 0


def test_cli_simulate_stdout_and_full_preset(capsys, monkeypatch):
    seen = {}

    def fake(cfg, out=None, workers=None):
        seen["cfg"] = cfg
        return []

    monkeypatch.setattr(cli, "run_campaign", fake)
    assert cli.main(["simulate", "--full", "--max-frames", "10"]) == 0
    assert capsys.readouterr().out.startswith("snr_db,frames")
    assert seen["cfg"].stop_fer == 1e-4 and seen["cfg"].max_frames == 10 and seen["cfg"].snr_stop_db == 30


def test_cli_error_stats(tmp_path):
    out = tmp_path / "stats.csv"
    assert cli.main(["error-stats", "--candidate-ms", "4", "--stats-frames", "5", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "M,sigma2_ce,sigma2_d,sigma2_total" and rows[1].startswith("4,")


def test_cli_runtime_error(tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert cli.main(["optimize-frame", "--out", str(blocker / "x.csv")]) == 2


def test_cli_selftest(capsys):
    assert cli.main(["selftest"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
