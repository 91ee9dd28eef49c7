"""Spectral-in-x evolution of eps^gamma df/dt + eps v.grad f = L f and the per-wavenumber generator spectrum.

Every spatial mode is advanced independently with the same arithmetic, so any mode partition
(and any worker count) yields identical coefficients.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigs

from src.common.decorators import log_elapsed
from src.constants import WELL_PREPARED_TOL
from src.domain.collision import CollisionData, apply_K, moments, moments_nu
from src.domain.lattice import SpectralLattice
from src.schemas.params import Conservation
from src.schemas.solver import Scheme, SolverConfig
from src.services.exceptions import EigSolveFailure, IllPrepared, InvalidSpec, ReducedSystemSingular
from src.settings import get_settings

logger = logging.getLogger(__name__)

MODE_BLOCK = 64


@dataclass(frozen=True, eq=False)
class InitialData:
    """Moment coefficients U_in(k) = (rho, m, theta) per lattice mode, shape (n_total, p)"""

    lattice: SpectralLattice
    u_hat: np.ndarray
    well_prepared: bool = True

    @classmethod
    def from_functions(
        cls,
        lattice: SpectralLattice,
        conservation: Conservation,
        rho: Optional[Callable] = None,
        momentum: Optional[Callable] = None,
        theta: Optional[Callable] = None,
        well_prepared: bool = True,
    ) -> 'InitialData':
        points = lattice.points
        n_points = points.shape[0]
        columns = [rho(points) if rho else np.zeros(n_points)]
        m_values = momentum(points) if momentum else np.zeros((n_points, lattice.d))
        columns.extend(np.asarray(m_values).reshape(n_points, lattice.d).T)
        if conservation == Conservation.ENERGY:
            columns.append(theta(points) if theta else np.zeros(n_points))
        values = np.stack(columns, axis=-1).astype(float)
        return cls(lattice=lattice, u_hat=lattice.to_modes(values), well_prepared=well_prepared)

    def divergence_residual(self) -> float:
        k = self.lattice.wavevectors
        m_hat = self.u_hat[:, 1 : 1 + self.lattice.d]
        scale = np.sqrt(np.sum(np.abs(m_hat) ** 2 * self.lattice.k_norm[:, None] ** 2))
        if scale == 0.0:
            return 0.0
        return float(np.sqrt(np.sum(np.abs(np.sum(k * m_hat, axis=-1)) ** 2)) / scale)

    def boussinesq_residual(self) -> float:
        rho, theta = self.u_hat[:, 0], self.u_hat[:, -1]
        scale = np.linalg.norm(rho) + np.linalg.norm(theta)
        if scale == 0.0:
            return 0.0
        return float(np.linalg.norm(rho + theta) / scale)


@dataclass(frozen=True, eq=False)
class PhaseField:
    """f^(k, v) as coefficients of shape (n_total, N)"""

    lattice: SpectralLattice
    coeffs: np.ndarray


def lift_initial(initial: InitialData, cd: CollisionData) -> PhaseField:
    """f^(k, v) = M(v) phi(v) . U_in(k), checking the well-prepared constraints spectrally

    :raises IllPrepared
    """
    if initial.u_hat.shape[1] != cd.p:
        raise InvalidSpec(detail=f'Initial moments have {initial.u_hat.shape[1]} components, expected {cd.p}')
    if initial.well_prepared:
        residual = initial.divergence_residual()
        if residual > WELL_PREPARED_TOL:
            raise IllPrepared(residual, 'divergence')
        if cd.params.conservation == Conservation.ENERGY:
            residual = initial.boussinesq_residual()
            if residual > WELL_PREPARED_TOL:
                raise IllPrepared(residual, 'boussinesq')
    coeffs = np.einsum('bp,np->bn', initial.u_hat.astype(complex), cd.macro_basis)
    return PhaseField(lattice=initial.lattice, coeffs=coeffs)


class _BlockStepper:
    """Implicit step for a block of modes; the p x p reduced systems are inverted once per block"""

    def __init__(self, wavevectors: np.ndarray, cfg: SolverConfig, cd: CollisionData):
        self.cd = cd
        tau = cfg.dt / cfg.epsilon**cd.params.gamma
        advection = cfg.epsilon * np.einsum('bd,nd->bn', wavevectors, cd.grid.nodes)
        nu = cd.nu_tab
        if cfg.scheme == Scheme.IMPLICIT_EULER:
            self.pre = None
            denominator = 1.0 + tau * (nu + 1j * advection)
        else:
            self.pre = 1.0 - 0.5j * tau * advection
            denominator = 1.0 + tau * nu + 0.5j * tau * advection
        self.inv_d = 1.0 / denominator
        self.nu_phi = nu[:, None] * cd.phi_tab
        self.gain = tau * nu[:, None] * cd.macro_basis

        weight = tau * nu**2 * cd.m_tab * self.inv_d
        outer = cd.phi_tab[:, :, None] * cd.phi_tab[:, None, :]
        coupling = cd.grid.integrate(weight[:, None, None, :] * np.moveaxis(outer, 0, -1)[None], axis=-1)
        reduced = np.eye(cd.p)[None] - np.einsum('ij,bjk->bik', cd.a_inv, coupling)
        try:
            self.reduced_inv = np.linalg.inv(reduced)
        except np.linalg.LinAlgError as exc:
            raise ReducedSystemSingular(stacktrace=repr(exc)) from exc
        if not np.all(np.isfinite(self.reduced_inv)):
            raise ReducedSystemSingular()

    def step(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """returns (f^{n+1}, U_nu^{n+1})"""
        source = f if self.pre is None else self.pre * f
        transported = self.inv_d * source
        rhs = self.cd.grid.integrate(transported[:, None, :] * self.nu_phi.T, axis=-1)
        rhs = np.einsum('ij,bj->bi', self.cd.a_inv, rhs)
        u_nu = np.einsum('bij,bj->bi', self.reduced_inv, rhs)
        return transported + self.inv_d * np.einsum('bp,np->bn', u_nu, self.gain), u_nu


def step_mode(fhat: np.ndarray, k: np.ndarray, cfg: SolverConfig, cd: CollisionData) -> np.ndarray:
    """One implicit step of eps^gamma df/dt = -(i eps v.k + nu) f + nu M phi.U_nu for a single mode"""
    stepper = _BlockStepper(np.atleast_2d(np.asarray(k, dtype=float)), cfg, cd)
    f_next, _ = stepper.step(np.asarray(fhat, dtype=complex)[None, :])
    return f_next[0]


def mode_norms(f: np.ndarray, u_nu: np.ndarray, cd: CollisionData) -> tuple[np.ndarray, np.ndarray]:
    """per-mode quad(|f|^2/M) and quad(nu |f - M phi.U_nu|^2 / M)"""
    g_nu = f - np.einsum('bp,np->bn', u_nu, cd.macro_basis)
    f2 = cd.grid.integrate(np.abs(f) ** 2 / cd.m_tab, axis=-1)
    g2 = cd.grid.integrate(cd.nu_tab * np.abs(g_nu) ** 2 / cd.m_tab, axis=-1)
    return f2, g2


@dataclass(frozen=True, eq=False)
class MomentSnapshot:
    time: float
    u: np.ndarray
    u_nu: np.ndarray
    f_norm: float
    g_nu_norm_accum: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    lattice: SpectralLattice
    cfg: SolverConfig
    gamma: float
    conservation: Conservation
    snapshots: list[MomentSnapshot]
    step_times: np.ndarray
    f_norm_history: np.ndarray
    g_accum_history: np.ndarray
    final: PhaseField

    @property
    def times(self) -> list[float]:
        return [snapshot.time for snapshot in self.snapshots]

    def at(self, time: float) -> MomentSnapshot:
        for snapshot in self.snapshots:
            if abs(snapshot.time - time) <= 1e-9 * max(1.0, abs(time)):
                return snapshot
        raise InvalidSpec(detail=f'time {time} was not recorded')


def _record_steps(record: Sequence[float], cfg: SolverConfig) -> list[int]:
    n_steps = cfg.n_steps
    if n_steps < 1 or abs(n_steps * cfg.dt - cfg.t_final) > 1e-9 * cfg.t_final:
        raise InvalidSpec(detail=f'T_final={cfg.t_final} is not a multiple of dt={cfg.dt}')
    steps = {0}
    for time in record:
        step = int(round(time / cfg.dt))
        if time < 0.0 or time > cfg.t_final * (1.0 + 1e-12) or abs(step * cfg.dt - time) > 1e-9 * max(1.0, time):
            raise InvalidSpec(detail=f'record time {time} is not a multiple of dt within [0, T_final]')
        steps.add(step)
    return sorted(steps)


def _evolve_block(f0: np.ndarray, wavevectors: np.ndarray, cfg: SolverConfig, cd: CollisionData, steps: list[int]):
    stepper = _BlockStepper(wavevectors, cfg, cd)
    n_steps = cfg.n_steps
    f = f0.copy()
    u_nu = moments_nu(f, cd)
    f2_history = np.empty((n_steps + 1, f.shape[0]))
    g2_history = np.zeros((n_steps + 1, f.shape[0]))
    f2_history[0], _ = mode_norms(f, u_nu, cd)
    recorded = {0: (moments(f, cd), u_nu)} if 0 in steps else {}
    for step in range(1, n_steps + 1):
        f, u_nu = stepper.step(f)
        f2_history[step], g2_history[step] = mode_norms(f, u_nu, cd)
        if step in steps:
            recorded[step] = (moments(f, cd), u_nu)
    return f, f2_history, g2_history, recorded


@log_elapsed('kinetic.evolve')
def evolve(f0: PhaseField, cfg: SolverConfig, cd: CollisionData, record: Sequence[float] = ()) -> Trajectory:
    """Advance all modes to T_final, recording moments at the requested times (t=0 always recorded)"""
    steps = _record_steps(record, cfg)
    lattice = f0.lattice
    starts = range(0, lattice.n_total, MODE_BLOCK)
    blocks = [slice(start, min(start + MODE_BLOCK, lattice.n_total)) for start in starts]

    def run(block: slice):
        return _evolve_block(f0.coeffs[block], lattice.wavevectors[block], cfg, cd, steps)

    workers = max(1, get_settings().lab_settings.workers)
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run, blocks))
    else:
        results = [run(block) for block in blocks]

    final = np.concatenate([result[0] for result in results], axis=0)
    f2 = np.concatenate([result[1] for result in results], axis=1)
    g2 = np.concatenate([result[2] for result in results], axis=1)
    f_norm_history = np.sqrt(lattice.volume * np.sum(f2, axis=1))
    g_accum_history = np.sqrt(np.cumsum(cfg.dt * lattice.volume * np.sum(g2, axis=1)))

    snapshots = []
    for step in steps:
        u = np.concatenate([result[3][step][0] for result in results], axis=0)
        u_nu = np.concatenate([result[3][step][1] for result in results], axis=0)
        snapshots.append(
            MomentSnapshot(
                time=step * cfg.dt,
                u=u,
                u_nu=u_nu,
                f_norm=float(f_norm_history[step]),
                g_nu_norm_accum=float(g_accum_history[step]),
            )
        )
    logger.info(
        'Evolved %s modes, %s steps, eps=%.4g: f_norm %.6g -> %.6g',
        lattice.n_total,
        cfg.n_steps,
        cfg.epsilon,
        f_norm_history[0],
        f_norm_history[-1],
    )
    return Trajectory(
        lattice=lattice,
        cfg=cfg,
        gamma=cd.params.gamma,
        conservation=cd.params.conservation,
        snapshots=snapshots,
        step_times=cfg.dt * np.arange(cfg.n_steps + 1),
        f_norm_history=f_norm_history,
        g_accum_history=g_accum_history,
        final=PhaseField(lattice=lattice, coeffs=final),
    )


@dataclass(frozen=True, eq=False)
class HydroMode:
    eigenvalue: complex
    vector: np.ndarray
    macro_fraction: float
    u_nu: np.ndarray


def _macro_fraction(vectors: np.ndarray, cd: CollisionData) -> np.ndarray:
    """||K x|| / ||x|| in L2(nu M^-1) for each column x.

    K is the orthogonal projection of that space onto the null space of L, so the ratio lies in [0, 1].
    """
    rows = vectors.T
    weight = cd.nu_tab / cd.m_tab
    full = cd.grid.integrate(np.abs(rows) ** 2 * weight, axis=-1)
    kept = cd.grid.integrate(np.abs(apply_K(rows, cd)) ** 2 * weight, axis=-1)
    return np.sqrt(kept / full)


def hydrodynamic_modes(k: np.ndarray, cd: CollisionData, n_eigs: int = None) -> list[HydroMode]:
    """Eigenpairs of G_k = -i diag(v.k) + L closest to 0, ordered by macroscopic fraction (largest first).

    G_k = -diag(nu + i v.k) + U V^T with U = nu M phi and V^T = A^-1 (w nu phi)^T, inverted through Woodbury.
    """
    k = np.asarray(k, dtype=float)
    if np.linalg.norm(k) == 0.0:
        raise InvalidSpec(detail='slow spectrum needs |k| > 0')
    n_nodes = cd.n_nodes
    diagonal = cd.nu_tab + 1j * (cd.grid.nodes @ k)
    left = (cd.nu_tab[:, None] * cd.macro_basis).astype(complex)
    right = cd.a_inv @ (cd.grid.weights * cd.nu_tab * cd.phi_tab.T)
    schur = np.eye(cd.p) - right @ (left / diagonal[:, None])
    schur_lu = linalg.lu_factor(schur)
    n_eigs = n_eigs or min(n_nodes - 2, max(4 * cd.p, 24))

    def inverse(x):
        x = np.asarray(x).reshape(-1)
        y = x / diagonal
        return -y - (left / diagonal[:, None]) @ linalg.lu_solve(schur_lu, right @ y)

    try:
        operator = LinearOperator((n_nodes, n_nodes), matvec=inverse, dtype=complex)
        start = np.ones(n_nodes, dtype=complex) / np.sqrt(n_nodes)
        mu, vectors = eigs(operator, k=n_eigs, which='LM', v0=start, maxiter=50 * n_nodes)
        eigenvalues = 1.0 / mu
    except (ArpackNoConvergence, ArpackError) as exc:
        if n_nodes > get_settings().solver_settings.eig_dense_limit:
            raise EigSolveFailure(detail=f'shift-invert stagnated and N_v={n_nodes} is too large') from exc
        logger.warning('Shift-invert stagnated at |k|=%.3g, dense fallback', np.linalg.norm(k))
        generator = -np.diag(diagonal) + left @ right
        all_values, all_vectors = linalg.eig(generator)
        order = np.argsort(np.abs(all_values))[:n_eigs]
        eigenvalues, vectors = all_values[order], all_vectors[:, order]

    fractions = _macro_fraction(vectors, cd)
    u_nu = moments_nu(vectors.T, cd)
    modes = [
        HydroMode(
            eigenvalue=complex(eigenvalues[j]),
            vector=vectors[:, j],
            macro_fraction=float(fractions[j]),
            u_nu=u_nu[j],
        )
        for j in range(len(eigenvalues))
    ]
    return sorted(modes, key=lambda mode: -mode.macro_fraction)


def slow_spectrum(k: np.ndarray, cd: CollisionData) -> np.ndarray:
    """The p hydrodynamic eigenvalues of -i v.k + L, sorted by |Re|"""
    modes = hydrodynamic_modes(k, cd)[: cd.p]
    values = np.array([mode.eigenvalue for mode in modes])
    return values[np.argsort(np.abs(values.real), kind='stable')]
