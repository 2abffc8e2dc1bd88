"""Monte-Carlo link simulation: frames, FER points and campaigns."""
from __future__ import annotations

import csv
import io
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import bicm
from ..channel import generate_realization, propagate
from ..estimation import UWChannelEstimator
from ..receiver import DetectorConfig, detect_frame, fd_demux
from ..waveform import WaveformKind, build_frame
from .config import SimConfig

log = logging.getLogger(__name__)

CSV_FIELDS = ("snr_db", "frames", "frame_errors", "bit_errors", "fer", "ber", "seed")
CHUNK = 50


@dataclass
class FerRecord:
    snr_db: float
    frames_run: int
    frame_errors: int
    bit_errors: int
    fer: float
    ber: float
    seed: int
    wallclock_s: float = field(default=float("nan"), compare=False)
    iteration_frame_errors: tuple = field(default=(), compare=False)

    def row(self) -> dict:
        return {
            "snr_db": repr(float(self.snr_db)),
            "frames": self.frames_run,
            "frame_errors": self.frame_errors,
            "bit_errors": self.bit_errors,
            "fer": repr(float(self.fer)),
            "ber": repr(float(self.ber)),
            "seed": self.seed,
        }


class Link:
    """Transmitter, channel and receiver of one scenario at one noise level."""

    def __init__(self, cfg: SimConfig, noise_var: float):
        self.cfg = cfg
        self.noise_var = noise_var
        self.geometry = cfg.geometry
        self.profile = cfg.profile
        self.code = cfg.code
        self.constellation = cfg.constellation
        self.kind = WaveformKind(cfg.waveform)
        self.n_info = cfg.n_info
        self.estimator = UWChannelEstimator(self.geometry, self.profile, noise_var).fit()
        self.detector = DetectorConfig(
            kind=self.kind,
            code=self.code,
            constellation=self.constellation,
            n_iter=cfg.n_iter,
            interleaver_seed=cfg.interleaver_seed,
        )
        self.n_channel = self.geometry.frame_length + self.profile.L - 1

    def transmit(self, bits):
        coded = bicm.encode(bits, self.code)
        d = bicm.map_symbols(bicm.interleave(coded, self.cfg.interleaver_seed), self.constellation)
        return build_frame(d, self.kind, self.geometry)

    def trial(self, seed) -> tuple[int, list[int]]:
        """Run one frame; returns bit errors per detector iteration."""
        rng = np.random.default_rng(seed)
        bits = rng.integers(0, 2, self.n_info)
        frame = self.transmit(bits)
        chan = generate_realization(self.profile, self.n_channel, self.cfg.n_tx, self.cfg.n_rx, rng)
        rx = propagate(frame, chan, self.noise_var, rng)
        Y, Y_uw = fd_demux(rx, self.geometry)
        estimate = self.estimator.predict(Y_uw)
        det = detect_frame(Y, estimate, self.noise_var, self.detector)
        return [int(np.count_nonzero(b != bits)) for b in det.iteration_bits]


def _trial_seed(seed: int, index: int):
    return np.random.SeedSequence([seed, index])


def _run_chunk(args):
    cfg, noise_var, seed, start, stop = args
    link = Link(cfg, noise_var)
    return [link.trial(_trial_seed(seed, i)) for i in range(start, stop)]


def worker_count() -> int:
    try:
        cap = int(os.environ.get("SIM_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, min(cap, os.cpu_count() or 1))


def run_point(cfg: SimConfig, snr_db: float, seed: int | None = None, workers: int | None = None) -> FerRecord:
    """Simulate frames at one SNR until ``min_errors`` frame errors or ``max_frames``.

    Trial ``i`` is seeded by ``(seed, i)`` and the stopping index is decided
    in trial order, so the record does not depend on the worker count.
    """
    seed = cfg.seed if seed is None else int(seed)
    noise_var = cfg.noise_variance(snr_db)
    workers = worker_count() if workers is None else max(1, workers)
    t0 = time.perf_counter()
    results: list[list[int]] = []
    frame_errors = 0
    next_start = 0
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    link = Link(cfg, noise_var) if pool is None else None
    try:
        while frame_errors < cfg.min_errors and next_start < cfg.max_frames:
            # later chunks grow so that long low-FER points need few round trips
            size = min(max(CHUNK, len(results) // 4), cfg.max_frames - next_start)
            if pool is None:
                batch = (link.trial(_trial_seed(seed, i)) for i in range(next_start, next_start + size))
            else:
                step = math.ceil(size / workers)
                jobs = [
                    (cfg, noise_var, seed, s, min(s + step, next_start + size))
                    for s in range(next_start, next_start + size, step)
                ]
                batch = [r for chunk in pool.map(_run_chunk, jobs) for r in chunk]
            next_start += size
            for errs in batch:
                results.append(errs)
                frame_errors += errs[-1] > 0
                if frame_errors >= cfg.min_errors:
                    break
    finally:
        if pool is not None:
            pool.shutdown()
    frames = len(results)
    errs = np.array(results)
    bit_errors = int(errs[:, -1].sum())
    iter_fe = tuple(int(v) for v in (errs > 0).sum(axis=0))
    record = FerRecord(
        snr_db=float(snr_db),
        frames_run=frames,
        frame_errors=int(frame_errors),
        bit_errors=bit_errors,
        fer=frame_errors / frames,
        ber=bit_errors / (frames * cfg.n_info),
        seed=seed,
        wallclock_s=time.perf_counter() - t0,
        iteration_frame_errors=iter_fe,
    )
    log.info(
        "%s %s %dx%d snr=%.2f dB frames=%d errors=%d fer=%.3e (%.1fs)",
        cfg.waveform, cfg.mcs, cfg.n_tx, cfg.n_rx, snr_db, frames, frame_errors, record.fer, record.wallclock_s,
    )
    return record


def run_campaign(cfg: SimConfig, out: str | os.PathLike | None = None, workers: int | None = None) -> list[FerRecord]:
    """Run the SNR points of ``cfg`` (common seed across points) and optionally write CSV.

    With ``cfg.stop_fer > 0`` the sweep ends after the first point whose FER
    falls below it.
    """
    grid = cfg.snr_grid
    if grid.size == 0:
        raise ValueError("empty SNR grid")
    records = []
    for snr in grid:
        records.append(run_point(cfg, float(snr), cfg.seed, workers))
        if records[-1].fer < cfg.stop_fer:
            break
    if out is not None:
        write_csv(records, out)
    return records


def emit_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for rec in records:
        writer.writerow(rec.row())
    return buf.getvalue()


def parse_csv(text: str) -> list[FerRecord]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_FIELDS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [
        FerRecord(
            snr_db=float(row["snr_db"]),
            frames_run=int(row["frames"]),
            frame_errors=int(row["frame_errors"]),
            bit_errors=int(row["bit_errors"]),
            fer=float(row["fer"]),
            ber=float(row["ber"]),
            seed=int(row["seed"]),
        )
        for row in reader
    ]


def write_text_atomic(text: str, path) -> Path:
    """Write via a temporary file in the target directory and rename."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def write_csv(records, path) -> Path:
    return write_text_atomic(emit_csv(records), path)


def error_table_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["M", "sigma2_ce", "sigma2_d", "sigma2_total"])
    for M, ce, d, tot in rows:
        writer.writerow([M, repr(float(ce)), repr(float(d)), repr(float(tot))])
    return buf.getvalue()
