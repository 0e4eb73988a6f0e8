"""Monte Carlo simulation of dX = h(X) dt + sqrt(2) dB with explosion and reset.

A particle that crosses ``x_blow`` is taken out of the ensemble and put in
flight for the remaining deterministic travel time int_X^inf dy/h; when that
time has passed it fires (one spike) and re-enters at 0.

Particles are split into fixed-size chunks, each driven by its own generator
spawned from one ``SeedSequence``. Between resets particles never interact,
so results do not depend on how chunks are scheduled across threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .drift import DriftSpec, blowup_time
from .grid import DensityField, Grid

__all__ = [
    "SdeConfig",
    "SpikeRecord",
    "ParticleEnsemble",
    "EmpiricalDensity",
    "SimulationResult",
    "sample_initial",
    "em_step",
    "simulate",
    "empirical_density",
]

CHUNK_SIZE = 4096
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SdeConfig:
    m_particles: int = 100_000
    dt: float = 1e-3
    x_blow: float = 50.0
    t_end: float = 20.0
    seed: int = 0
    burn_in: float | None = None
    sample_every: float = 0.05
    snapshot_every: float = 1.0
    rate_window: float = 1.0

    def validate(self, spec: DriftSpec):
        if self.m_particles < 1:
            raise ValueError("m_particles must be positive")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.x_blow > spec.x1:
            raise ValueError(f"x_blow must exceed x1 = {spec.x1}")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")

    @property
    def averaging_start(self):
        return self.t_end / 4.0 if self.burn_in is None else self.burn_in


@dataclass(frozen=True)
class SpikeRecord:
    spike_times: np.ndarray
    m_particles: int

    def count(self, t0, t1):
        s = self.spike_times
        return int(np.searchsorted(s, t1, side="right") - np.searchsorted(s, t0, side="left"))

    def mean_rate(self, t0, t1):
        """Spikes per particle per unit time on [t0, t1]."""
        return self.count(t0, t1) / (self.m_particles * (t1 - t0))

    def rate_series(self, t_end, width):
        """Rates on consecutive windows of ``width``; returns (centres, rates)."""
        edges = np.arange(0.0, t_end + 0.5 * width, width)
        counts = np.histogram(self.spike_times, bins=edges)[0]
        return 0.5 * (edges[:-1] + edges[1:]), counts / (self.m_particles * width)


@dataclass
class ParticleEnsemble:
    """Positions of all M particles; those with ``in_flight`` set are past the
    blow-up threshold and wait for ``reset_time``."""

    positions: np.ndarray
    in_flight: np.ndarray
    reset_time: np.ndarray
    time: float
    generators: list = field(repr=False)
    chunk_size: int = CHUNK_SIZE
    spikes: list = field(default_factory=list, repr=False)

    @property
    def m(self):
        return self.positions.size

    @property
    def n_in_flight(self):
        return int(np.count_nonzero(self.in_flight))

    @property
    def n_active(self):
        return self.m - self.n_in_flight

    @property
    def flight_queue(self):
        """Pending reset times, earliest first."""
        return np.sort(self.reset_time[self.in_flight])

    def chunks(self):
        for c, gen in enumerate(self.generators):
            sl = slice(c * self.chunk_size, min((c + 1) * self.chunk_size, self.m))
            yield sl, gen

    def spike_record(self):
        times = np.sort(np.concatenate(self.spikes)) if self.spikes else np.empty(0)
        return SpikeRecord(times, self.m)


def _generators(seed, m, chunk_size):
    n = max(1, -(-m // chunk_size))
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n)]


def sample_initial(density: DensityField, m, seed=0, chunk_size=CHUNK_SIZE) -> ParticleEnsemble:
    """Inverse-CDF draws from the piecewise-constant ``density``."""
    cells = density.cells
    if np.any(cells < 0.0) or not np.all(np.isfinite(cells)) or abs(density.mass - 1.0) > 1e-8:
        raise ValueError("initial density must be a probability density")
    grid = density.grid
    mass = cells * grid.dx
    cdf = np.concatenate([[0.0], np.cumsum(mass)])
    gens = _generators(seed, m, chunk_size)
    pos = np.empty(m)
    for c, gen in enumerate(gens):
        sl = slice(c * chunk_size, min((c + 1) * chunk_size, m))
        target = gen.random(sl.stop - sl.start) * cdf[-1]
        i = np.clip(np.searchsorted(cdf, target, side="right") - 1, 0, grid.n_cells - 1)
        frac = np.clip((target - cdf[i]) / np.where(mass[i] > 0.0, mass[i], 1.0), 0.0, 1.0)
        pos[sl] = grid.faces[i] + frac * grid.dx
    return ParticleEnsemble(pos, np.zeros(m, dtype=bool), np.full(m, np.nan), 0.0, gens, chunk_size)


# -- built-in drifts: compiled inner loop ----------------------------------

_KIND_CODE = {"quadratic": 0, "exponential": 1}


def _fast_params(spec):
    code = _KIND_CODE.get(getattr(spec.right_branch, "label", ""))
    if code is None:
        return None
    a, b, c, d = spec.blend
    return (spec.x0, spec.h0, spec.x1, a, b, c, d, code)


@numba.njit(cache=True, nogil=True)
def _h_fast(x, x0, h0, x1, a, b, c, d, code):
    if x <= x0:
        return -x + h0
    if x >= x1:
        return x * x if code == 0 else math.exp(x)
    t = x - x0
    return a + t * (b + t * (c + t * d))


@numba.njit(cache=True, nogil=True)
def _tail_fast(x, code):
    return 1.0 / x if code == 0 else math.exp(-x)


@numba.njit(cache=True, nogil=True)
def _advance_fast(x, flight, reset, gen, t, dt, n_steps, x_blow, sigma, x0, h0, x1, a, b, c, d, code):
    buf = np.empty(64)
    n_spk = 0
    noise = sigma * math.sqrt(dt)
    m = x.size
    for _ in range(n_steps):
        t_new = t + dt
        for i in range(m):
            z = gen.standard_normal()
            if not flight[i]:
                if x[i] >= x_blow:
                    flight[i] = True
                    reset[i] = t + _tail_fast(x[i], code)
                else:
                    xi = x[i] + _h_fast(x[i], x0, h0, x1, a, b, c, d, code) * dt + noise * z
                    x[i] = xi
                    if xi >= x_blow:
                        flight[i] = True
                        reset[i] = t_new + _tail_fast(xi, code)
            if flight[i] and reset[i] <= t_new:
                if n_spk == buf.size:
                    grown = np.empty(2 * buf.size)
                    grown[:n_spk] = buf[:n_spk]
                    buf = grown
                buf[n_spk] = reset[i]
                n_spk += 1
                x[i] = 0.0
                flight[i] = False
                reset[i] = np.nan
        t = t_new
    return buf[:n_spk].copy()


# -- generic drifts: vectorised numpy loop (same random stream) ---------------


def _advance_numpy(spec, x, flight, reset, gen, t, dt, n_steps, x_blow, sigma):
    spikes = []
    noise = sigma * math.sqrt(dt)
    for _ in range(n_steps):
        t_new = t + dt
        z = gen.standard_normal(x.size)
        act = ~flight
        pre = act & (x >= x_blow)
        if np.any(pre):
            flight[pre] = True
            reset[pre] = t + blowup_time(spec, x[pre])
            act &= ~pre
        xa = x[act]
        xa = xa + spec.h(xa) * dt + noise * z[act]
        x[act] = xa
        cross = np.zeros_like(act)
        cross[act] = xa >= x_blow
        if np.any(cross):
            flight[cross] = True
            reset[cross] = t_new + blowup_time(spec, x[cross])
        fire = flight & (reset <= t_new)
        if np.any(fire):
            spikes.append(reset[fire].copy())
            x[fire] = 0.0
            flight[fire] = False
            reset[fire] = np.nan
        t = t_new
    return np.concatenate(spikes) if spikes else np.empty(0)


def _advance_chunk(spec, fast, ens, sl, gen, n_steps, dt, x_blow, sigma):
    x, fl, rs = ens.positions[sl], ens.in_flight[sl], ens.reset_time[sl]
    if fast is not None:
        return _advance_fast(x, fl, rs, gen, ens.time, dt, n_steps, x_blow, float(sigma), *fast)
    return _advance_numpy(spec, x, fl, rs, gen, ens.time, dt, n_steps, x_blow, sigma)


def _advance(ensemble, spec, dt, n_steps, x_blow, sigma=SQRT2, pool=None, compiled=True):
    fast = _fast_params(spec) if compiled else None

    def work(item):
        sl, gen = item
        return _advance_chunk(spec, fast, ensemble, sl, gen, n_steps, dt, x_blow, sigma)

    items = list(ensemble.chunks())
    results = list(pool.map(work, items)) if pool is not None else [work(it) for it in items]
    spikes = [r for r in results if r.size]
    if spikes:
        ensemble.spikes.append(np.concatenate(spikes))
    # Times are accumulated the same way as inside the kernels.
    t = ensemble.time
    for _ in range(n_steps):
        t = t + dt
    ensemble.time = t
    return ensemble


def em_step(ensemble: ParticleEnsemble, spec: DriftSpec, dt, x_blow=50.0, sigma=SQRT2, compiled=True):
    """One Euler-Maruyama step, in place; ``sigma`` is the noise amplitude
    (sqrt(2) for the model, 0 to follow characteristics)."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    return _advance(ensemble, spec, dt, 1, x_blow, sigma, compiled=compiled)


@dataclass(frozen=True)
class EmpiricalDensity:
    field: DensityField
    in_flight_mass: float
    clipped_left: float
    clipped_right: float


def _bin(positions, grid):
    idx = np.floor((positions - grid.x_min) / grid.dx).astype(np.int64)
    left = int(np.count_nonzero(idx < 0))
    right = int(np.count_nonzero(idx >= grid.n_cells))
    inside = idx[(idx >= 0) & (idx < grid.n_cells)]
    return np.bincount(inside, minlength=grid.n_cells), left, right


def empirical_density(ensemble: ParticleEnsemble, grid: Grid) -> EmpiricalDensity:
    """Histogram of the particles not in flight, with total mass
    (M - in_flight) / M. Particles outside the grid are counted in the end
    cells and their share is reported."""
    m = ensemble.m
    counts, left, right = _bin(ensemble.positions[~ensemble.in_flight], grid)
    counts = counts.astype(float)
    counts[0] += left
    counts[-1] += right
    dens = DensityField(grid, counts / (m * grid.dx), ensemble.time)
    return EmpiricalDensity(dens, ensemble.n_in_flight / m, left / m, right / m)


@dataclass
class SimulationResult:
    spikes: SpikeRecord
    snapshots: dict
    time_average: DensityField
    outside_left: float
    outside_right: float
    in_flight_fraction: float
    averaging_window: tuple
    config: SdeConfig

    def mean_rate(self, t0=None, t1=None):
        t0 = self.averaging_window[0] if t0 is None else t0
        t1 = self.averaging_window[1] if t1 is None else t1
        return self.spikes.mean_rate(t0, t1)

    def rate_series(self):
        return self.spikes.rate_series(self.config.t_end, self.config.rate_window)


def simulate(u0: DensityField, spec: DriftSpec, config: SdeConfig, grid: Grid | None = None, threads=1,
             compiled=True) -> SimulationResult:
    """Run the particle system to ``config.t_end``.

    Every ``sample_every`` after the averaging start the ensemble is binned on
    ``grid`` (default: the grid of ``u0``) to build a time-averaged histogram;
    mass left of the grid, right of it, and in flight is averaged separately.
    """
    config.validate(spec)
    grid = u0.grid if grid is None else grid
    ens = sample_initial(u0, config.m_particles, config.seed)
    n_total = int(round(config.t_end / config.dt))
    block = max(1, int(round(config.sample_every / config.dt)))
    snap_every = max(1, int(round(config.snapshot_every / config.dt)))
    start = config.averaging_start
    acc = np.zeros(grid.n_cells)
    out_l = out_r = flight = 0.0
    n_samples = 0
    snaps = {0.0: empirical_density(ens, grid)}
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        done = 0
        while done < n_total:
            k = min(block, n_total - done)
            _advance(ens, spec, config.dt, k, config.x_blow, pool=pool, compiled=compiled)
            done += k
            t = done * config.dt
            if t >= start - 0.5 * config.dt:
                counts, left, right = _bin(ens.positions[~ens.in_flight], grid)
                acc += counts
                out_l += left
                out_r += right
                flight += ens.n_in_flight
                n_samples += 1
            if done % snap_every == 0 or done == n_total:
                snaps[round(t, 12)] = empirical_density(ens, grid)
    finally:
        if pool is not None:
            pool.shutdown()
    norm = max(n_samples, 1) * config.m_particles
    avg = DensityField(grid, acc / (norm * grid.dx), config.t_end)
    return SimulationResult(ens.spike_record(), snaps, avg, out_l / norm, out_r / norm, flight / norm,
                            (start, config.t_end), config)
