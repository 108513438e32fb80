"""Direct Schroedinger integration in physical time.

Used for the TFIM momentum blocks and as the small-system oracle for the
eigenbasis engine.  All reduced Hamiltonians here are affine in lambda,
``H(lam) = H(0) + lam * V``, which keeps the right-hand side cheap.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..models import DickeFockSystem, LmgmSystem, ModelKind, ModelSpec, TfimChainSystem, momenta
from ..models._linalg import apply, as_dense
from ..models.tfim import block_stack
from ..schedule import AnnealingSchedule
from .core import DIRECT_SETTINGS, IntegratorSettings, QuenchTrace, integrate_segments

DIMENSION_CAP = 4096


def _row_sum_norm(H):
    if hasattr(H, "diagonal") and hasattr(H, "offdiag") and not sp.issparse(H):
        e = np.abs(H.offdiag)
        out = np.abs(H.diagonal).copy()
        out[:-1] += e
        out[1:] += e
        return float(out.max())
    if sp.issparse(H):
        return float(abs(H).sum(axis=1).max())
    return float(np.abs(H).sum(axis=1).max())


def _time_grid(schedule: AnnealingSchedule, output):
    t = np.asarray(schedule.t_of_lambda(output), dtype=float)
    t[0], t[-1] = schedule.t_of_lambda(output[0]), schedule.t_of_lambda(output[-1])
    return t


def evolve_direct_tfim(
    N: int,
    schedule: AnnealingSchedule,
    settings: IntegratorSettings | None = None,
    output=None,
) -> QuenchTrace:
    """All momentum blocks integrated together in time.

    The trace's amplitudes are projections ``<phi_n(lam)|psi_k>`` on the
    instantaneous block eigenvectors, so populations and heating can be read
    off as for the eigenbasis engine; ``heating_direct`` is
    ``<psi_k|H_k|psi_k> - E_0`` per block.
    """
    settings = settings or DIRECT_SETTINGS
    ks = momenta(N)
    c, s = np.cos(ks), np.sin(ks)
    if output is None:
        output = np.linspace(schedule.lambda_start, schedule.lambda_end, settings.n_output)
    output = np.asarray(output, dtype=float)
    t_out = _time_grid(schedule, output)

    def rhs(t, y):
        lam = schedule.lambda_of_t(t)
        psi = y.reshape(-1, 2)
        g = 1.0 - lam
        a = 1.0 + g * c
        b = g * s
        out = np.empty_like(psi)
        out[:, 0] = a * psi[:, 0] + b * psi[:, 1]
        out[:, 1] = b * psi[:, 0] - a * psi[:, 1]
        return (-1j * out).ravel()

    _, U0 = np.linalg.eigh(block_stack(ks, schedule.lambda_start))
    psi0 = U0[:, :, 0].astype(complex)
    g_max = 1.0 + max(abs(1.0 - schedule.lambda_start), abs(1.0 - schedule.lambda_end))
    hmax = np.inf if settings.phase_step is None else settings.phase_step / g_max
    states = integrate_segments(rhs, t_out, psi0, settings, hmax).reshape(t_out.size, ks.size, 2)

    H = np.stack([block_stack(ks, lam) for lam in output])
    E, U = np.linalg.eigh(H)
    amps = np.einsum("tbin,tbi->tbn", U, states)
    energy = np.einsum("tbi,tbij,tbj->tb", states.conj(), H, states).real
    return QuenchTrace(
        lam=output,
        amplitudes=amps,
        gaps=E - E[..., :1],
        engine="direct-tfim",
        s=t_out,
        coordinate="t",
        heating_direct=energy - E[..., 0],
        info={"velocity": schedule.velocity, "kappa": schedule.kappa},
    )


def reference_system(spec: ModelSpec, photon_cap: int = 60):
    """Fixed-basis system used by :func:`evolve_direct_reference`."""
    if spec.kind is ModelKind.TFIM:
        return TfimChainSystem(spec.N)
    if spec.kind is ModelKind.LMGM:
        return LmgmSystem(spec.N)
    return DickeFockSystem(spec.N, photon_cap)


def evolve_direct_reference(
    spec: ModelSpec,
    schedule: AnnealingSchedule,
    settings: IntegratorSettings | None = None,
    output=None,
    n_levels: int = 20,
    dimension_cap: int = DIMENSION_CAP,
    photon_cap: int = 60,
) -> QuenchTrace:
    """Time integration in the full even-parity space of a small system.

    TFIM uses the spin chain, LMGM its reduced basis and DICKE a plain
    truncated Fock basis with ``photon_cap`` photons.
    """
    settings = settings or DIRECT_SETTINGS
    system = reference_system(spec, photon_cap)
    d = system.dimension
    if d > dimension_cap:
        raise ValueError(f"direct integration needs dimension <= {dimension_cap} (dimension_cap), got {d}")
    H0 = system.hamiltonian(0.0)
    V = system.interaction(0.0)
    if output is None:
        output = np.linspace(schedule.lambda_start, schedule.lambda_end, settings.n_output)
    output = np.asarray(output, dtype=float)
    t_out = _time_grid(schedule, output)

    def rhs(t, y):
        lam = schedule.lambda_of_t(t)
        return -1j * (apply(H0, y) + lam * apply(V, y))

    _, v0 = system.eigh(schedule.lambda_start, 1)
    psi0 = v0[:, 0].astype(complex)
    norm = max(_row_sum_norm(system.hamiltonian(schedule.lambda_start)), _row_sum_norm(system.hamiltonian(schedule.lambda_end)))
    hmax = np.inf if settings.phase_step is None else settings.phase_step / norm
    states = integrate_segments(rhs, t_out, psi0, settings, hmax)

    L = min(n_levels, d)
    amps = np.empty((output.size, 1, L), dtype=complex)
    gaps = np.empty((output.size, 1, L))
    heat = np.empty((output.size, 1))
    for i, lam in enumerate(output):
        E, U = system.eigh(lam, L)
        psi = states[i]
        amps[i, 0] = U.T @ psi
        gaps[i, 0] = E - E[0]
        Hpsi = apply(H0, psi) + lam * apply(V, psi)
        heat[i, 0] = float(np.real(np.vdot(psi, Hpsi))) - E[0]
    return QuenchTrace(
        lam=output,
        amplitudes=amps,
        gaps=gaps,
        engine="direct",
        s=t_out,
        coordinate="t",
        heating_direct=heat,
        states=states,
        info={"velocity": schedule.velocity, "kappa": schedule.kappa, "dimension": d},
    )


def hamiltonian_is_affine(system, lam: float = 0.7, tol: float = 1e-12) -> bool:
    """``H(lam) == H(0) + lam * dH/dlambda`` (checked densely; small systems only)."""
    H = as_dense(system.hamiltonian(lam))
    ref = as_dense(system.hamiltonian(0.0)) + lam * as_dense(system.interaction(0.0))
    return bool(np.max(np.abs(H - ref)) <= tol * max(1.0, np.max(np.abs(H))))
