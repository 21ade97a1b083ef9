"""Rotational coupling of a TE whispering-gallery multiplet to sphere spin.

The dimensionless coupling constant is

    Lambda = pi kappa_c integral_0^R (eps - 1) r^2 |u(k0, r)|^2 dr

with u the continuum-normalized radial mode at the resonance center. The
optical angular momentum S of the multiplet lives in the spin-l
representation; dynamics treat S as a mean-field expectation vector built
from coherent amplitudes (no Fock-space state is represented).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT, HBAR
from .specfun import angular_momentum_matrices
from .wgm import ModeRecord, SphereParams, attach_profile

__all__ = [
    "CouplingConstants",
    "OpticalAngularMomentum",
    "PrecessionEstimate",
    "compute_lambda",
    "optical_S_from_amplitudes",
    "zeeman_shift",
    "resolvability_threshold",
    "precession_rate_estimate",
    "coupling_to_json",
]

LAMBDA_QUAD_TOL = 1e-4   # relative Richardson bound on the Lambda quadrature


@dataclass(frozen=True)
class CouplingConstants:
    """Lambda plus the moment of inertia and the mode it belongs to."""

    lambda_: float
    I: float
    mode: ModeRecord
    l: int


@dataclass(frozen=True)
class OpticalAngularMomentum:
    """Mean-field optical angular momentum of the l-multiplet, in hbar units."""

    S: np.ndarray
    photon_number: float
    l: int


@dataclass(frozen=True)
class PrecessionEstimate:
    """Mechanical precession rate in Hz: exact Lambda(Lambda-1) N l hbar / I
    form and the simplified (n^2-1) N hbar l / (rho R^5) form."""

    exact_hz: float
    simplified_hz: float


def _simpson(y, h):
    # composite Simpson; len(y) must be odd
    return h / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-1:2]))


def compute_lambda(mode: ModeRecord, params: SphereParams, *,
                   rel_tol=LAMBDA_QUAD_TOL) -> CouplingConstants:
    """Lambda by composite Simpson over the tabulated profile on [0, R].

    Uses mode.radial_profile when present (grid must be uniform over [0, R]
    with 4m+1 points there), otherwise tabulates a default profile. The
    Richardson estimate |S_h - S_2h|/15 must stay below rel_tol, else a
    ValueError reports the required refinement factor.
    """
    if mode.polarization != "TE":
        raise ValueError("Lambda is defined for TE modes only")
    if mode.radial_profile is None:
        mode = attach_profile(mode, params)
    prof = mode.radial_profile
    R = params.R
    inside = prof.r <= R * (1.0 + 1e-12)
    r = prof.r[inside]
    u = prof.u[inside]
    if abs(r[-1] - R) > 1e-9 * R:
        raise ValueError("profile grid must contain a point at r = R")
    if r.size < 5 or r.size % 4 != 1:
        raise ValueError("profile needs 4m+1 uniformly spaced points on [0, R]")
    h = r[1] - r[0]
    if not np.allclose(np.diff(r), h, rtol=1e-9):
        raise ValueError("profile grid must be uniform on [0, R]")

    integrand = r * r * u * u
    s_fine = _simpson(integrand, h)
    s_coarse = _simpson(integrand[::2], 2.0 * h)
    err = abs(s_fine - s_coarse) / 15.0
    if s_fine != 0 and err / abs(s_fine) > rel_tol:
        factor = math.ceil((err / (abs(s_fine) * rel_tol)) ** 0.25)
        raise ValueError(
            f"profile grid too coarse for Lambda quadrature "
            f"(relative error estimate {err / abs(s_fine):.2e} > {rel_tol}); "
            f"refine the grid by at least {factor}x"
        )
    lam = math.pi * mode.kappa_c * (params.n**2 - 1.0) * s_fine
    return CouplingConstants(lambda_=lam, I=params.I, mode=mode, l=mode.l)


def optical_S_from_amplitudes(alpha) -> OpticalAngularMomentum:
    """S_i = alpha^dagger L_i alpha for coherent amplitudes alpha_m, m = -l..l.

    The amplitude vector length fixes l (2l+1 entries); photon number is
    sum |alpha_m|^2.
    """
    alpha = np.asarray(alpha, dtype=complex).ravel()
    if alpha.size % 2 != 1 or alpha.size < 1:
        raise ValueError(f"amplitude vector must have odd length 2l+1, got {alpha.size}")
    l = (alpha.size - 1) // 2
    mats = angular_momentum_matrices(l)
    s = np.array([
        np.real(np.vdot(alpha, mats.Lx @ alpha)),
        np.real(np.vdot(alpha, mats.Ly @ alpha)),
        np.real(np.vdot(alpha, mats.Lz @ alpha)),
    ])
    return OpticalAngularMomentum(S=s, photon_number=float(np.vdot(alpha, alpha).real), l=l)


def zeeman_shift(m: int, lambda_: float, omega_z: float) -> float:
    """Zeeman-type shift m * Lambda * omega_z [rad/s] of the m sublevel under
    mechanical rotation at omega_z about z."""
    return m * lambda_ * omega_z


def resolvability_threshold(lambda_: float, m: int, Q: float, k0: float, *,
                            c: float = C_LIGHT) -> float:
    """Smallest spin rate omega_z [rad/s] whose Zeeman shift matches the cavity
    linewidth: |m| Lambda omega_z = c k0 / Q."""
    if m == 0:
        raise ValueError("m = 0 carries no shift and can never be resolved")
    if not (Q > 0 and k0 > 0):
        raise ValueError("Q and k0 must be positive")
    return c * k0 / (Q * abs(m) * lambda_)


def precession_rate_estimate(params: SphereParams, N: float, l: int,
                             lambda_: float, *, hbar: float = HBAR) -> PrecessionEstimate:
    """Order-of-magnitude mechanical precession rate for N photons at m = l.

    exact:      Lambda (Lambda - 1) <S> / I with <S> = N l hbar
    simplified: (n^2 - 1) N hbar l / (rho R^5)
    both divided by 2 pi to report Hz.
    """
    if N < 0:
        raise ValueError("photon number must be non-negative")
    exact = lambda_ * (lambda_ - 1.0) * N * l * hbar / params.I
    simplified = (params.n**2 - 1.0) * N * hbar * l / (params.rho * params.R**5)
    return PrecessionEstimate(exact_hz=exact / (2.0 * math.pi),
                              simplified_hz=simplified / (2.0 * math.pi))


def coupling_to_json(cc: CouplingConstants, path=None):
    """CouplingConstants as JSON with fields lambda, I, l, k0, kappa_c, Q."""
    payload = {
        "lambda": cc.lambda_,
        "I": cc.I,
        "l": cc.l,
        "k0": cc.mode.k0,
        "kappa_c": cc.mode.kappa_c,
        "Q": cc.mode.Q,
    }
    if path is not None:
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return payload
