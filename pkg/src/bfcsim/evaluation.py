"""Spectral-efficiency evaluation and the Monte Carlo sweep.

Symbols and noise are unit-covariance complex Gaussian, so rates are
computed in closed form as log-determinants rather than by simulating
transmissions.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import beamforming as bf
from .array_geometry import AnalogCodebook, dft_codebook, quantize_phases
from .channels import ChannelScenario, ClusteredChannelParams, SiGeometry
from .config import parse_strategy

log = logging.getLogger(__name__)


def db2lin(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class LinkBudget:
    """``snr_desired_db`` is shared by both desired links; ``snr_si_db`` is the SI SNR."""

    snr_desired_db: float
    snr_si_db: float = 120.0

    @property
    def snr_desired(self):
        return float(db2lin(self.snr_desired_db))

    @property
    def snr_si(self):
        return float(db2lin(self.snr_si_db))


@dataclass(frozen=True)
class RateRecord:
    strategy: str
    snr_db: float
    trial: int
    se_ki: float
    se_ij: float
    se_sum: float
    degenerate: bool = False


def _log2det_whitened(signal, cov, snr):
    # log2 det(I + snr * cov^-1 S S^H), via a Cholesky whitening of cov
    cov = 0.5 * (cov + cov.conj().T)
    chol = np.linalg.cholesky(cov)
    g = np.linalg.solve(chol, signal)
    # singular values of g rather than eigenvalues of g g^H: a null stream then
    # carries an eps * sigma_max error instead of eps * sigma_max^2
    sv = np.linalg.svd(g, compute_uv=False)
    return max(float(np.sum(np.log2(1.0 + snr * sv**2))), 0.0)


def se_link_with_si(h_des, f_des, w, h_ii, f_self, snr_des, snr_si):
    """Rate of a link whose receiver also collects SI.

    ``log2 det(I + snr_des T^-1 A A^H)`` with ``A = W^H H_des F_des`` and
    ``T = W^H W + snr_si (W^H H_ii F_self)(W^H H_ii F_self)^H``.
    """
    w = np.asarray(w, dtype=complex)
    wh = w.conj().T
    signal = wh @ bf._as_array(h_des) @ f_des
    si = wh @ bf._as_array(h_ii) @ f_self
    cov = wh @ w + snr_si * (si @ si.conj().T)
    try:
        return _log2det_whitened(signal, cov, snr_des)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("interference-plus-noise covariance is singular") from exc


def se_link_no_si(h_des, f_des, w, snr):
    """Rate of an SI-free link, noise colored by the combiner (``T = W^H W``)."""
    w = np.asarray(w, dtype=complex)
    wh = w.conj().T
    signal = wh @ bf._as_array(h_des) @ f_des
    try:
        return _log2det_whitened(signal, wh @ w, snr)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("combiner is not full column rank") from exc


@dataclass
class LinkBeams:
    """Effective beamformers of one strategy, independent of the SNR."""

    strategy: str
    f_k: np.ndarray = None
    w_i: np.ndarray = None
    f_i: np.ndarray = None
    w_j: np.ndarray = None
    si_active: bool = True
    degenerate: bool = False


def _codebooks(nt, nr, phase_bits):
    cbs = []
    for n in (nt, nr):
        cb = dft_codebook(n)
        if phase_bits is not None:
            cb = AnalogCodebook(quantize_phases(cb.matrix, phase_bits))
        cbs.append(cb)
    return cbs


def build_beams(strategy, channels, ns, nrf=None, codebook=None, power="stream",
                phase_bits=None, rx_codebook=None):
    """Design the beamformers used by ``strategy`` for one channel draw.

    ``strategy`` may carry an RF-chain suffix (``"case_b:4"``) which takes
    precedence over ``nrf``.
    """
    name, override = parse_strategy(strategy)
    nrf = override if override is not None else nrf
    h_ki, h_ij, h_ii = channels.h_ki.h, channels.h_ij.h, channels.h_ii.h
    nt = h_ij.shape[1]
    if codebook is None and name in ("case_b", "eigen_omp"):
        codebook, rx_codebook = _codebooks(nt, h_ki.shape[0], phase_bits)
    rank_poor = bf.is_rank_deficient(h_ki, ns) or bf.is_rank_deficient(h_ij, ns)

    if name in ("ideal_fd", "hd_baseline"):
        return LinkBeams(strategy, bf.eigen_precoder(h_ki, ns, power), bf.eigen_combiner(h_ki, ns),
                         bf.eigen_precoder(h_ij, ns, power), bf.eigen_combiner(h_ij, ns),
                         si_active=False, degenerate=rank_poor)
    if name == "eigen_only":
        design = bf.design_eigen_only(h_ki, h_ij, ns, power)
    elif name == "eigen_omp":
        design = bf.design_eigen_only(h_ki, h_ij, ns, power, codebook, nrf, rx_codebook)
    elif name == "case_a":
        try:
            design = bf.design_case_a(h_ki, h_ij, h_ii, ns, power, phase_bits)
        except bf.DesignInfeasibleError:
            log.warning("case_a infeasible for this draw; link i->j left silent")
            w = bf.eigen_combiner(h_ki, ns)
            return LinkBeams(strategy, bf.eigen_precoder(h_ki, ns, power), w,
                             np.zeros((nt, ns), dtype=complex), bf.eigen_combiner(h_ij, ns),
                             degenerate=True)
    elif name == "case_b":
        design = bf.design_case_b(h_ki, h_ij, h_ii, ns, nrf, codebook, power, rx_codebook)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return LinkBeams(strategy, design.precoder_k, design.combiner_i.effective,
                     design.precoder_i.effective, design.combiner_j,
                     degenerate=design.degenerate or rank_poor)


def rates(beams, channels, budget, trial=0):
    """Evaluate a designed strategy at one link budget."""
    snr = budget.snr_desired
    h_ki, h_ij, h_ii = channels.h_ki.h, channels.h_ij.h, channels.h_ii.h
    se_ij = se_link_no_si(h_ij, beams.f_i, beams.w_j, snr)
    if beams.si_active:
        se_ki = se_link_with_si(h_ki, beams.f_k, beams.w_i, h_ii, beams.f_i, snr, budget.snr_si)
    else:
        se_ki = se_link_no_si(h_ki, beams.f_k, beams.w_i, snr)
    name, _ = parse_strategy(beams.strategy)
    if name == "hd_baseline":
        # one node transmits at a time: keep whichever link is better
        if se_ki >= se_ij:
            se_ij = 0.0
        else:
            se_ki = 0.0
    return RateRecord(beams.strategy, float(budget.snr_desired_db), int(trial),
                      se_ki, se_ij, se_ki + se_ij, bool(beams.degenerate))


def evaluate_strategy(strategy, channels, ns, nrf, codebook, budget, power="stream", trial=0):
    """Design and evaluate one strategy on one channel draw."""
    beams = build_beams(strategy, channels, ns, nrf, codebook, power)
    return rates(beams, channels, budget, trial)


def scenario_from_config(config):
    geom = SiGeometry(config.nt, config.nr, config.si_separation_wavelengths, config.si_angle,
                      config.si_rx_axis_angle, config.element_spacing)
    desired = ClusteredChannelParams(config.desired_clusters, config.desired_rays,
                                     angular_std=config.angular_std)
    nlos = ClusteredChannelParams(config.si_nlos_clusters, config.si_nlos_rays,
                                  angular_std=config.angular_std)
    return ChannelScenario(config.nt, config.nr, config.kappa_db, desired, nlos, geom)


def trial_rng(seed, trial):
    """Independent per-trial stream derived from ``(seed, trial)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial)]))


def draw_trial_channels(config, trial, scenario=None):
    scenario = scenario or scenario_from_config(config)
    return scenario.draw(trial_rng(config.seed, trial))


def run_trial(config, trial):
    """All records of one trial (every strategy at every SNR point)."""
    channels = draw_trial_channels(config, trial)
    codebook, rx_codebook = _codebooks(config.nt, config.nr, config.phase_bits)
    out = []
    for strategy in config.strategies:
        beams = build_beams(strategy, channels, config.ns, config.nrf, codebook, config.power,
                            config.phase_bits, rx_codebook)
        for snr_db in config.snr_db_grid:
            out.append(rates(beams, channels, LinkBudget(snr_db, config.snr_si_db), trial))
    return out


@dataclass(frozen=True)
class MeanRecord:
    strategy: str
    snr_db: float
    trials: int
    se_ki: float
    se_ij: float
    se_sum: float
    degenerate: int


@dataclass
class SweepResult:
    records: list
    means: list

    def mean(self, strategy, snr_db, field="se_sum"):
        for m in self.means:
            if m.strategy == strategy and m.snr_db == snr_db:
                return getattr(m, field)
        raise KeyError((strategy, snr_db))

    def select(self, strategy, snr_db=None):
        return [r for r in self.records
                if r.strategy == strategy and (snr_db is None or r.snr_db == snr_db)]


def sort_records(records, config):
    order = {s: k for k, s in enumerate(config.strategies)}
    snr_order = {s: k for k, s in enumerate(config.snr_db_grid)}
    return sorted(records, key=lambda r: (order[r.strategy], snr_order[r.snr_db], r.trial))


def aggregate(records, config):
    groups = {}
    for r in records:
        groups.setdefault((r.strategy, r.snr_db), []).append(r)
    means = []
    for strategy in config.strategies:
        for snr_db in config.snr_db_grid:
            rs = groups.get((strategy, snr_db), [])
            if not rs:
                continue
            means.append(MeanRecord(
                strategy, snr_db, len(rs),
                float(np.mean([r.se_ki for r in rs])),
                float(np.mean([r.se_ij for r in rs])),
                float(np.mean([r.se_sum for r in rs])),
                sum(r.degenerate for r in rs),
            ))
    return means


def _run_trial_star(args):
    return run_trial(*args)


def monte_carlo_sweep(config, workers=None):
    """Run every trial of ``config``; output is independent of ``workers``."""
    workers = config.workers if workers is None else workers
    jobs = [(config, t) for t in range(config.trials)]
    if workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_trial_star, jobs, chunksize=max(1, config.trials // (4 * workers))))
    else:
        chunks = [run_trial(*job) for job in jobs]
    records = sort_records([r for chunk in chunks for r in chunk], config)
    return SweepResult(records, aggregate(records, config))
