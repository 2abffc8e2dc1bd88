"""Scenario configuration: flat ``key = value`` text files.

Keys are documented in ``docs/config.md``. Blank lines and ``#`` comments are
ignored. Command-line flags override file values.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from ..bicm import CodeConfig, ConstellationConfig
from ..channel import ChannelProfile, build_eva_profile, doppler_frequency
from ..waveform import FrameGeometry, WaveformKind

MCS_TABLE = {
    "1/2-qpsk": (Fraction(1, 2), 4),
    "1/2-16qam": (Fraction(1, 2), 16),
    "3/4-16qam": (Fraction(3, 4), 16),
    "3/4-64qam": (Fraction(3, 4), 64),
}


class ConfigError(ValueError):
    """Invalid or unreadable scenario configuration."""


@dataclass(frozen=True)
class SimConfig:
    N: int = 288
    M: int = 4
    n_cp: int = 16
    n_uw: int = 32
    n_tx: int = 2
    n_rx: int = 2
    waveform: str = "otfs"
    mcs: str = "3/4-16qam"
    bandwidth_hz: float = 4.32e6
    carrier_hz: float = 5.9e9
    speed_kmh: float = 350.0
    doppler_hz: float | None = None
    static_channel: bool = False
    snr_start_db: float = 10.0
    snr_stop_db: float = 20.0
    snr_step_db: float = 2.0
    min_errors: int = 200
    max_frames: int = 200_000
    stop_fer: float = 0.0
    seed: int = 1
    n_iter: int = 3
    interleaver_seed: int = 0
    charge_overhead: bool = False
    operating_snr_db: float = 12.0
    candidate_ms: tuple[int, ...] = (1, 2, 4, 6, 8)
    stats_frames: int = 500

    def __post_init__(self):
        try:
            self.validate()
        except ConfigError:
            raise
        except (ValueError, IndexError) as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self) -> None:
        if self.mcs not in MCS_TABLE:
            raise ConfigError(f"unknown MCS {self.mcs!r}; choose from {sorted(MCS_TABLE)}")
        WaveformKind(self.waveform)
        if self.N % self.M:
            raise ConfigError(f"M={self.M} does not divide N={self.N}")
        if self.n_tx < 1 or self.n_rx < 1:
            raise ConfigError(f"antenna counts must be positive, got {self.n_tx}x{self.n_rx}")
        geom = self.geometry
        profile = self.profile
        geom.check_channel_length(profile.L)
        if self.n_tx > self.n_uw // profile.L:
            raise ConfigError(f"n_tx={self.n_tx} exceeds floor(n_uw / L) = {self.n_uw // profile.L}")
        if self.min_errors <= 0 or self.max_frames <= 0:
            raise ConfigError("min_errors and max_frames must be positive")
        if not 0.0 <= self.stop_fer < 1.0:
            raise ConfigError("stop_fer must lie in [0, 1)")
        if self.stats_frames <= 0:
            raise ConfigError("stats_frames must be positive")
        if not self.candidate_ms or any(self.N % m for m in self.candidate_ms):
            raise ConfigError(f"every candidate M must divide N={self.N}")
        if self.snr_step_db <= 0 or self.snr_stop_db < self.snr_start_db:
            raise ConfigError("SNR sweep needs step > 0 and stop >= start")
        self.code.info_length(self.N * self.constellation.bits_per_symbol)

    @property
    def geometry(self) -> FrameGeometry:
        return FrameGeometry(M=self.M, K=self.N // self.M, n_cp=self.n_cp, n_uw=self.n_uw, n_tx=self.n_tx)

    @property
    def doppler(self) -> float:
        if self.static_channel:
            return 0.0
        if self.doppler_hz is not None:
            return float(self.doppler_hz)
        return doppler_frequency(self.carrier_hz, self.speed_kmh / 3.6)

    @property
    def profile(self) -> ChannelProfile:
        return build_eva_profile(self.bandwidth_hz, self.doppler)

    @property
    def code(self) -> CodeConfig:
        return CodeConfig(rate=MCS_TABLE[self.mcs][0])

    @property
    def constellation(self) -> ConstellationConfig:
        return ConstellationConfig(order=MCS_TABLE[self.mcs][1])

    @property
    def n_info(self) -> int:
        return self.code.info_length(self.N * self.constellation.bits_per_symbol)

    @property
    def snr_grid(self) -> np.ndarray:
        n = int(np.floor((self.snr_stop_db - self.snr_start_db) / self.snr_step_db + 1e-9)) + 1
        return np.round(self.snr_start_db + self.snr_step_db * np.arange(n), 10)

    def noise_variance(self, snr_db: float) -> float:
        """Noise per receive antenna for ``10 log10(E_b / sigma^2) = snr_db``."""
        code, const = self.code, self.constellation
        eb = const.symbol_energy / (float(code.rate) * const.bits_per_symbol)
        if self.charge_overhead:
            eb *= self.geometry.frame_length / self.N
        return eb / 10 ** (snr_db / 10)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(SimConfig)}
_BY_LOWER = {name.lower(): name for name in _FIELDS}


def _coerce(name: str, raw: str):
    default = _FIELDS[name].default
    raw = raw.strip()
    if name == "doppler_hz":
        return None if raw.lower() in ("", "none", "auto") else float(raw)
    if name == "candidate_ms":
        return tuple(int(v) for v in raw.replace(",", " ").split())
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError:
            value = float(raw)  # allows 2e5
            if not value.is_integer():
                raise
            return int(value)
    if isinstance(default, float):
        return float(raw)
    return raw.lower() if name in ("waveform", "mcs") else raw


def parse_overrides(pairs: dict) -> dict:
    out = {}
    for key, raw in pairs.items():
        name = _BY_LOWER.get(key.strip().replace("-", "_").lower())
        if name is None:
            raise ConfigError(f"unknown configuration key {key!r}")
        try:
            out[name] = _coerce(name, str(raw))
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    return out


def read_config_text(text: str, source: str = "<text>") -> dict:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return parse_overrides(pairs)


def load_config(path=None, **overrides) -> SimConfig:
    values = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
        values.update(read_config_text(text, str(path)))
    values.update(overrides)
    return SimConfig(**values)


def dump_config(cfg: SimConfig) -> str:
    lines = []
    for name in _FIELDS:
        value = getattr(cfg, name)
        if isinstance(value, tuple):
            value = " ".join(str(v) for v in value)
        elif value is None:
            value = "auto"
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"
