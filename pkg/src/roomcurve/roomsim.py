"""Rectangular-room image-source simulation and synthetic dataset generation.

Walls are indexed ``(x=0, x=Lx, y=0, y=Ly, z=0, z=Lz)`` throughout.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from .errors import InvalidInput
from .spectra import (
    ImpulseResponse,
    LogPowerSpectrum,
    check_nfft,
    power_db,
    rfft,
)

DEFAULT_SAMPLE_RATE = 16000
DEFAULT_NFFT = 2048
MIC_OFFSET = 0.05
N_LISTENERS = 24
LISTENER_GRID = (4, 3, 2)
WALL_MARGIN = 0.5
#: Bulk delay (samples) applied to dataset RIRs so no kernel tap falls before t=0.
KERNEL_PRE_DELAY = 8


@dataclass(frozen=True)
class RoomSpec:
    """Shoebox room: dimensions in m, six pressure reflection coefficients."""

    dims: tuple
    wall_reflectances: tuple
    max_order: int
    sample_rate: int = DEFAULT_SAMPLE_RATE
    speed_of_sound: float = 343.0

    def __post_init__(self):
        dims = tuple(float(v) for v in self.dims)
        beta = tuple(float(v) for v in self.wall_reflectances)
        if len(dims) != 3 or not all(np.isfinite(dims)) or min(dims) <= 0:
            raise InvalidInput(f"dims must be three positive lengths, got {self.dims!r}")
        if len(beta) != 6 or not all(0.0 <= b < 1.0 for b in beta):
            raise InvalidInput(f"wall_reflectances must be six values in [0, 1), got {self.wall_reflectances!r}")
        if int(self.max_order) != self.max_order or self.max_order < 0:
            raise InvalidInput(f"max_order must be a non-negative integer, got {self.max_order!r}")
        if self.sample_rate <= 0 or self.speed_of_sound <= 0:
            raise InvalidInput("sample_rate and speed_of_sound must be positive")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "wall_reflectances", beta)
        object.__setattr__(self, "max_order", int(self.max_order))

    def contains(self, pos) -> bool:
        p = np.asarray(pos, dtype=float)
        return p.shape == (3,) and bool(np.all(p > 0) and np.all(p < np.asarray(self.dims)))


def _check_position(room: RoomSpec, pos, what: str) -> np.ndarray:
    p = np.asarray(pos, dtype=float)
    if not room.contains(p):
        raise InvalidInput(f"{what} position {np.asarray(pos).tolist()} is not strictly inside room {room.dims}")
    return p


def simulate_rir(room: RoomSpec, src, mic, *, pre_delay: int = 0) -> ImpulseResponse:
    """Impulse response from ``src`` to ``mic`` by the image-source method.

    Each image of total reflection order ``<= room.max_order`` contributes a
    16-tap Hann-windowed sinc pulse of amplitude ``prod(beta) / distance`` at
    its fractional propagation delay. ``pre_delay`` adds a bulk delay in
    samples.
    """
    s = _check_position(room, src, "source")
    m = _check_position(room, mic, "receiver")
    if np.allclose(s, m, rtol=0.0, atol=1e-9):
        raise InvalidInput("source and receiver coincide")
    h = _backend.image_source_rir(
        np.ascontiguousarray(s),
        np.ascontiguousarray(m),
        np.asarray(room.dims, dtype=float),
        np.asarray(room.wall_reflectances, dtype=float),
        room.max_order,
        float(room.sample_rate),
        float(room.speed_of_sound),
        int(pre_delay),
    )
    return ImpulseResponse(h, room.sample_rate)


def average_power_response(
    room: RoomSpec,
    speaker,
    listeners: Sequence,
    nfft: int = DEFAULT_NFFT,
    *,
    pre_delay: int = 0,
) -> LogPowerSpectrum:
    """Spatially averaged power response over ``listeners`` in dB.

    Responses longer than ``nfft`` are truncated silently; their tail is far
    below the power floor.
    """
    listeners = list(listeners)
    if not listeners:
        raise InvalidInput("at least one listener position is required")
    nfft = check_nfft(nfft)
    acc = np.zeros(nfft // 2 + 1)
    for pos in listeners:
        h = simulate_rir(room, speaker, pos, pre_delay=pre_delay)
        acc += np.abs(rfft(h.samples, nfft)) ** 2
    return LogPowerSpectrum(power_db(acc / len(listeners)), room.sample_rate, nfft)


@dataclass(frozen=True, eq=False)
class DatasetRecord:
    """Echo-path response paired with the room average power response."""

    echo_ir: ImpulseResponse
    echo_spectrum: LogPowerSpectrum
    room_avg_spectrum: LogPowerSpectrum
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        a, b = self.echo_spectrum, self.room_avg_spectrum
        if a.nfft != b.nfft or a.sample_rate != b.sample_rate:
            raise InvalidInput("echo and room spectra must share nfft and sample_rate")
        if self.echo_ir.sample_rate != a.sample_rate:
            raise InvalidInput("echo_ir sample_rate differs from its spectrum")

    @property
    def record_id(self):
        return self.meta.get("record_id", self.meta.get("room_id"))

    @property
    def nfft(self) -> int:
        return self.echo_spectrum.nfft

    @property
    def sample_rate(self) -> int:
        return self.echo_spectrum.sample_rate


@dataclass(frozen=True)
class GenerationConfig:
    """Sampling ranges for :func:`generate_dataset`."""

    dims_range: tuple = (2.5, 8.0)
    beta_range: tuple = (0.5, 0.95)
    max_order: int = 6
    sample_rate: int = DEFAULT_SAMPLE_RATE
    nfft: int = DEFAULT_NFFT
    speed_of_sound: float = 343.0

    def validate(self):
        lo, hi = self.dims_range
        if not (lo <= hi) or lo <= 2 * WALL_MARGIN:
            raise InvalidInput(
                f"dims_range {self.dims_range!r} infeasible: need {2 * WALL_MARGIN} < low <= high"
            )
        lo, hi = self.beta_range
        if not (0.0 <= lo <= hi < 1.0):
            raise InvalidInput(f"beta_range {self.beta_range!r} infeasible: need 0 <= low <= high < 1")
        if int(self.max_order) != self.max_order or self.max_order < 0:
            raise InvalidInput(f"max_order {self.max_order!r} infeasible: need a non-negative integer")
        if self.sample_rate <= 0 or self.speed_of_sound <= 0:
            raise InvalidInput("sample_rate and speed_of_sound must be positive")
        check_nfft(self.nfft)
        return self

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self).items()}

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidInput(f"unknown generation config field(s): {sorted(unknown)}")
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**kwargs)


PLACEMENTS = ("corner", "wall", "center")


def _place_speaker(rng: np.random.Generator, dims: np.ndarray):
    placement = PLACEMENTS[int(rng.integers(len(PLACEMENTS)))]
    lx, ly, lz = dims
    z = rng.uniform(0.3, min(1.2, lz - 0.3))

    def near(length):
        off = rng.uniform(0.1, WALL_MARGIN)
        return off if rng.random() < 0.5 else length - off

    if placement == "corner":
        x, y = near(lx), near(ly)
    elif placement == "wall":
        if rng.random() < 0.5:
            x, y = near(lx), rng.uniform(WALL_MARGIN, ly - WALL_MARGIN)
        else:
            x, y = rng.uniform(WALL_MARGIN, lx - WALL_MARGIN), near(ly)
    else:
        x, y = rng.uniform(WALL_MARGIN, lx - WALL_MARGIN), rng.uniform(WALL_MARGIN, ly - WALL_MARGIN)
    return placement, np.array([x, y, z])


def _listener_grid(rng: np.random.Generator, dims: np.ndarray, speaker: np.ndarray, min_dist=0.3):
    """Jittered 4x3x2 grid inside the box kept WALL_MARGIN from every wall."""
    width = (dims - 2 * WALL_MARGIN) / np.asarray(LISTENER_GRID)
    positions = []
    for i in range(LISTENER_GRID[0]):
        for j in range(LISTENER_GRID[1]):
            for k in range(LISTENER_GRID[2]):
                cell = np.array([i, j, k], dtype=float)
                best = None
                for _ in range(20):
                    p = WALL_MARGIN + (cell + rng.uniform(0.1, 0.9, 3)) * width
                    dist = np.linalg.norm(p - speaker)
                    if best is None or dist > best[0]:
                        best = (dist, p)
                    if dist >= min_dist:
                        break
                positions.append(best[1])
    return np.array(positions)


def generate_record(config: GenerationConfig, seed: int, index: int) -> DatasetRecord:
    """Simulate room ``index`` of the dataset seeded by ``seed``.

    The PRNG stream depends only on ``(seed, index)``.
    """
    rng = np.random.default_rng([int(seed), int(index)])
    dims = rng.uniform(*config.dims_range, size=3)
    beta = rng.uniform(*config.beta_range, size=6)
    room = RoomSpec(tuple(dims), tuple(beta), config.max_order, config.sample_rate, config.speed_of_sound)
    placement, speaker = _place_speaker(rng, dims)
    mic = speaker + np.array([0.0, 0.0, MIC_OFFSET])
    listeners = _listener_grid(rng, dims, speaker)

    echo_ir = simulate_rir(room, speaker, mic, pre_delay=KERNEL_PRE_DELAY)
    echo_spectrum = LogPowerSpectrum(
        power_db(np.abs(rfft(echo_ir.samples, config.nfft)) ** 2), config.sample_rate, config.nfft
    )
    room_avg = average_power_response(room, speaker, listeners, config.nfft, pre_delay=KERNEL_PRE_DELAY)
    meta = {
        "record_id": int(index),
        "room_id": int(index),
        "seed": int(seed),
        "dims": dims.tolist(),
        "beta": beta.tolist(),
        "max_order": int(config.max_order),
        "placement": placement,
        "speaker": speaker.tolist(),
        "mic": mic.tolist(),
        "listeners": listeners.tolist(),
    }
    return DatasetRecord(echo_ir, echo_spectrum, room_avg, meta)


def generate_dataset(config: GenerationConfig | None = None, rooms: int = 1, seed: int = 0) -> list:
    """Deterministic synthetic dataset of ``rooms`` echo-path / room-curve pairs."""
    config = (config or GenerationConfig()).validate()
    if int(rooms) != rooms or rooms < 1:
        raise InvalidInput(f"rooms must be a positive integer, got {rooms!r}")
    return [generate_record(config, seed, i) for i in range(int(rooms))]

