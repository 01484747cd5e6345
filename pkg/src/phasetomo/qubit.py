"""Bloch-sphere tomography for a single qubit.

The projector family P(theta, phi) and its dual kernel G(theta, phi)
resolve the identity over the sphere; with a Gauss-Legendre rule in
cos(theta) and a uniform rule in phi both reconstruction forms are exact
to machine precision, which makes this module the zero-ambiguity anchor
for the rest of the package.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError


@dataclass
class SphereQuadrature:
    """Nodes (theta_j, phi_j) and weights absorbing sin(theta) dtheta dphi."""

    nodes: np.ndarray   # shape (n, 2)
    weights: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights < 0):
            raise GridError("sphere quadrature weights must be >= 0")
        if abs(self.weights.sum() - 4 * np.pi) > 1e-12:
            raise GridError("sphere quadrature weights must sum to 4*pi")


def sphere_quadrature(n_theta: int = 3, n_phi: int = 4) -> SphereQuadrature:
    """Gauss-Legendre in cos(theta) x uniform in phi.

    Exact for the degree-<=2 trigonometric integrands produced by 2x2
    kernels whenever n_theta >= 3 and n_phi >= 4.
    """
    if n_theta < 3 or n_phi < 4:
        raise GridError("need n_theta >= 3 and n_phi >= 4 for exactness")
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    wphi = 2 * np.pi / n_phi
    nodes = np.array([(t, p) for t in theta for p in phi])
    weights = np.array([w * wphi for w in wx for _ in phi])
    return SphereQuadrature(nodes, weights)


def bloch_kernels(theta: float, phi: float):
    """Projector P and Gram kernel G at one direction on the sphere."""
    ct, st = np.cos(theta), np.sin(theta)
    em, ep = np.exp(-1j * phi), np.exp(1j * phi)
    P = 0.5 * np.array([[1 + ct, em * st], [ep * st, 1 - ct]])
    G = (1 / (4 * np.pi)) * np.array([[1 + 3 * ct, 3 * em * st], [3 * ep * st, 1 - 3 * ct]])
    return P, G


def qubit_tomogram(A: np.ndarray, theta: float, phi: float) -> complex:
    """Tr(P(theta, phi) A); real when A is Hermitian."""
    P, _ = bloch_kernels(theta, phi)
    return complex(np.trace(P @ np.asarray(A, dtype=complex)))


def _reconstruct(A: np.ndarray, form: str, quad: SphereQuadrature) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    out = np.zeros((2, 2), dtype=complex)
    for (theta, phi), w in zip(quad.nodes, quad.weights):
        P, G = bloch_kernels(theta, phi)
        if form == "A1":
            out += w * G * np.trace(P @ A)
        else:
            out += w * P * np.trace(G @ A)
    return out


def qubit_reconstruct(A: np.ndarray, form: str = "A1", quad: SphereQuadrature | None = None) -> np.ndarray:
    """Reconstruct A from its sphere tomogram, by either dual pairing.

    Form A1 integrates G * Tr(P A), form A2 integrates P * Tr(G A). The
    quadrature is self-diagnosed by reconstructing I and the three Pauli
    matrices before touching A.
    """
    if form not in ("A1", "A2"):
        raise ValueError("form must be 'A1' or 'A2'")
    if quad is None:
        quad = sphere_quadrature()
    paulis = [
        np.eye(2, dtype=complex),
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]
    worst = max(np.abs(_reconstruct(B, form, quad) - B).max() for B in paulis)
    if worst > 1e-10:
        raise GridError(f"sphere quadrature too coarse: basis residual {worst:.2e}")
    return _reconstruct(A, form, quad)
