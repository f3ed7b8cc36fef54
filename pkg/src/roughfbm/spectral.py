"""Gaussian paths on a finite symmetric frequency grid.

A path component is ``B_t = 2 Re sum_k a_k (exp(i t xi_k) - 1) / (i xi_k)``
over positive modes ``xi_k = k * delta_xi``; the mode ``-k`` carries
``conj(a_k)``.  Downstream code works on the full signed mode list laid out in
sector order ``-1, 1, -2, 2, ...``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, special

INDEPENDENT = "independent"
ANTISYMMETRIC = "antisymmetric"


@dataclass(frozen=True)
class FrequencyGrid:
    """``K`` positive modes at spacing ``delta_xi``.

    ``rule`` fixes how spectral mass is assigned to a mode: ``"node"`` uses
    the density at ``xi_k`` times ``delta_xi``; ``"cell"`` integrates the
    density exactly over the cell around ``xi_k`` (the first cell starts at 0).
    """

    K: int = 1024
    delta_xi: float = 2 * math.pi / 8
    rule: str = "node"

    def __post_init__(self) -> None:
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")
        if not (self.delta_xi > 0 and math.isfinite(self.delta_xi)):
            raise ValueError(f"delta_xi must be positive, got {self.delta_xi}")
        if self.rule not in ("node", "cell"):
            raise ValueError(f"unknown mass rule {self.rule!r}")

    @property
    def k(self) -> np.ndarray:
        return np.arange(1, self.K + 1)

    @property
    def xi(self) -> np.ndarray:
        return self.k * self.delta_xi

    @property
    def full_k(self) -> np.ndarray:
        """Signed modes in sector order: -1, 1, -2, 2, ..., -K, K."""
        k = np.repeat(self.k, 2)
        k[0::2] *= -1
        return k

    def mass(self, alpha: float, eta: float) -> np.ndarray:
        """Spectral mass of ``exp(-2 eta xi) xi^(1 - 2 alpha)`` carried by each mode."""
        if self.rule == "node":
            return np.exp(-2 * eta * self.xi) * self.xi ** (1 - 2 * alpha) * self.delta_xi
        edges = self.delta_xi * (np.arange(self.K + 1) + 0.5)
        edges[0] = 0.0
        p = 2 - 2 * alpha
        if eta > 0:
            cum = special.gamma(p) * special.gammainc(p, 2 * eta * edges) / (2 * eta) ** p
        else:
            cum = edges**p / p
        return np.diff(cum)


@dataclass(frozen=True)
class FbmModel:
    alpha: float
    eta: float
    d: int = 1
    kind: str = INDEPENDENT

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.kind not in (INDEPENDENT, ANTISYMMETRIC):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == ANTISYMMETRIC and self.d != 2:
            raise ValueError("the antisymmetric model is two-dimensional")
        if self.d < 1:
            raise ValueError("d must be at least 1")


def c_alpha(alpha: float) -> float:
    """``1/2 sqrt(-alpha / (cos(pi alpha) Gamma(-2 alpha)))``."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if alpha == 0.5:
        raise ValueError("alpha = 1/2 is a removable singularity; use a flat Brownian spectrum")
    return 0.5 * math.sqrt(-alpha / (math.cos(math.pi * alpha) * special.gamma(-2 * alpha)))


def amplitude_constant(alpha: float) -> float:
    """Constant in front of the spectral density making ``Var B_t -> |t|^(2 alpha)``.

    ``c_alpha`` as defined above yields ``alpha |t|^(2 alpha)`` with this
    discretization, hence the extra ``1/sqrt(alpha)``.
    """
    return c_alpha(alpha) / math.sqrt(alpha)


def kernel_f(t, xi):
    """``(exp(i t xi) - 1) / (i xi)``, broadcasting."""
    t = np.asarray(t, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return np.expm1(1j * np.multiply.outer(t, xi)) / (1j * xi)


@dataclass(frozen=True)
class SpectralPath:
    """``amp[i-1, k-1]`` is the derivative amplitude of component ``i`` at ``xi_k``."""

    grid: FrequencyGrid
    amp: np.ndarray

    def __post_init__(self) -> None:
        amp = np.array(self.amp, dtype=complex, ndmin=2)
        if amp.ndim != 2 or amp.shape[1] != self.grid.K:
            raise ValueError(f"amplitudes must have shape (d, {self.grid.K})")
        if not np.all(np.isfinite(amp)):
            raise ValueError("amplitudes must be finite")
        amp.setflags(write=False)
        object.__setattr__(self, "amp", amp)

    @property
    def d(self) -> int:
        return self.amp.shape[0]

    def _component(self, i: int) -> np.ndarray:
        if not 1 <= i <= self.d:
            raise ValueError(f"component {i} out of range 1..{self.d}")
        return self.amp[i - 1]

    def eval(self, i: int, t):
        a = self._component(i)
        return 2 * np.real(kernel_f(t, self.grid.xi) @ a)

    def increment(self, i: int, s, t):
        return self.eval(i, t) - self.eval(i, s)

    def derivative(self, i: int, x):
        a = self._component(i)
        return 2 * np.real(np.exp(1j * np.multiply.outer(np.asarray(x, float), self.grid.xi)) @ a)

    def full_amplitudes(self, i: int) -> np.ndarray:
        """Amplitudes on ``grid.full_k`` (negative modes conjugated)."""
        a = self._component(i)
        out = np.empty(2 * self.grid.K, dtype=complex)
        out[0::2] = np.conj(a)
        out[1::2] = a
        return out

    def support(self, i: int) -> np.ndarray:
        """Signed modes with nonzero amplitude, in sector order."""
        full = self.full_amplitudes(i)
        return self.grid.full_k[full != 0]

    @classmethod
    def from_atoms(cls, grid: FrequencyGrid, atoms) -> SpectralPath:
        """Deterministic path; ``atoms[i-1]`` maps positive mode ``k`` to ``a_k``."""
        amp = np.zeros((len(atoms), grid.K), dtype=complex)
        for i, comp in enumerate(atoms):
            for k, a in comp.items():
                if not 1 <= k <= grid.K:
                    raise ValueError(f"mode {k} outside grid 1..{grid.K}")
                amp[i, k - 1] = a
        return cls(grid, amp)


def standard_noise(grid: FrequencyGrid, d: int, seed: int, index: int = 0) -> np.ndarray:
    """Circular complex normals with ``E|Z|^2 = 1``, one substream per component."""
    out = np.empty((d, grid.K), dtype=complex)
    for comp in range(d):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index, comp)))
        z = rng.standard_normal((grid.K, 2)) * math.sqrt(0.5)
        out[comp] = z[:, 0] + 1j * z[:, 1]
    return out


def noise_batch(grid: FrequencyGrid, d: int, seed: int, M: int, start: int = 0) -> np.ndarray:
    """Stack of ``standard_noise`` for sample indices ``start..start+M-1``."""
    return np.stack([standard_noise(grid, d, seed, start + m) for m in range(M)])


def fbm_amplitudes(model: FbmModel, grid: FrequencyGrid, noise: np.ndarray) -> np.ndarray:
    """Map standard noise of shape ``(..., d_noise, K)`` to path amplitudes ``(..., d, K)``.

    The same noise at different ``eta`` gives coupled approximations.
    """
    scale = amplitude_constant(model.alpha) * np.sqrt(grid.mass(model.alpha, model.eta))
    if model.kind == ANTISYMMETRIC:
        base = noise[..., 0, :] * scale
        return np.stack([base, -1j * base], axis=-2)
    return noise[..., : model.d, :] * scale


def sample_fbm(model: FbmModel, grid: FrequencyGrid, seed: int, index: int = 0) -> SpectralPath:
    if model.kind != INDEPENDENT:
        raise ValueError("use sample_antisym_fbm for the antisymmetric model")
    return SpectralPath(grid, fbm_amplitudes(model, grid, standard_noise(grid, model.d, seed, index)))


def sample_antisym_fbm(alpha: float, eta: float, grid: FrequencyGrid, seed: int,
                       index: int = 0) -> SpectralPath:
    """``Z = (2 Re G, 2 Im G)`` from one complex stream; component 2 is rotated by ``-i``."""
    model = FbmModel(alpha, eta, 2, ANTISYMMETRIC)
    return SpectralPath(grid, fbm_amplitudes(model, grid, standard_noise(grid, 1, seed, index)))


def _coupling(model: FbmModel, i: int, j: int) -> complex:
    """``E[a^(i) conj(a^(j))] / E|a|^2`` for amplitudes of components i and j."""
    if not (1 <= i <= model.d and 1 <= j <= model.d):
        raise ValueError("component out of range")
    if i == j:
        return 1.0
    if model.kind == INDEPENDENT:
        return 0.0
    return 1j if (i, j) == (1, 2) else -1j


def exact_covariance(model: FbmModel, grid: FrequencyGrid, i: int, j: int, s: float,
                     t: float) -> float:
    """Exact ``E[B_s(i) B_t(j)]`` of the discrete model."""
    rho = _coupling(model, i, j)
    if rho == 0:
        return 0.0
    var = amplitude_constant(model.alpha) ** 2 * grid.mass(model.alpha, model.eta)
    fs, ft = kernel_f(s, grid.xi), kernel_f(t, grid.xi)
    return float(2 * np.real(rho * np.sum(var * fs * np.conj(ft))))


def continuum_covariance(model: FbmModel, i: int, j: int, s: float, t: float) -> float:
    """Same second moment for the continuous spectral integral at the model's ``eta``.

    Closed form: ``int x^(-1-2a) exp(-p x) dx = Gamma(-2a) p^(2a)`` continued
    analytically, applied to the four exponentials of ``f_s conj(f_t)``.
    """
    rho = _coupling(model, i, j)
    if rho == 0:
        return 0.0
    a, e2 = model.alpha, 2 * model.eta
    parts = (complex(e2, -(s - t)) ** (2 * a) - complex(e2, -s) ** (2 * a)
             - complex(e2, t) ** (2 * a) + e2 ** (2 * a))
    return float(amplitude_constant(a) ** 2 * 2 * np.real(rho * special.gamma(-2 * a) * parts))


def continuum_covariance_quad(model: FbmModel, i: int, j: int, s: float, t: float) -> float:
    """``continuum_covariance`` by direct quadrature of the spectral integral (slow)."""
    rho = _coupling(model, i, j)
    if rho == 0:
        return 0.0
    a, eta = model.alpha, model.eta
    c2 = amplitude_constant(a) ** 2

    def density(x):
        fs = np.expm1(1j * s * x) / (1j * x)
        ft = np.expm1(1j * t * x) / (1j * x)
        return 2 * np.real(rho * fs * np.conj(ft)) * np.exp(-2 * eta * x) * x ** (1 - 2 * a)

    # integrate period by period of the slowest phase, out to where exp(-2 eta xi) is negligible
    step = 2 * math.pi / max(abs(s), abs(t), abs(t - s), 1e-3)
    upper = 40.0 / eta
    edges = np.unique(np.concatenate([np.arange(0.0, upper, step), [upper]]))
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate.quad(density, lo, hi, limit=200, epsabs=0, epsrel=1e-11)[0]
    return float(c2 * total)


def fbm_covariance(alpha: float, s, t):
    """``1/2 (|s|^2a + |t|^2a - |t-s|^2a)``."""
    s, t = np.asarray(s, float), np.asarray(t, float)
    return 0.5 * (np.abs(s) ** (2 * alpha) + np.abs(t) ** (2 * alpha) - np.abs(t - s) ** (2 * alpha))


def antisym_cross_covariance(alpha: float, s, t):
    """``Cov(Z_s(1), Z_t(2))`` of the antisymmetric fBm."""
    s, t = np.asarray(s, float), np.asarray(t, float)
    p = 2 * alpha
    bracket = (-np.sign(s) * np.abs(s) ** p + np.sign(t) * np.abs(t) ** p
               - np.sign(t - s) * np.abs(t - s) ** p)
    return -0.5 * math.tan(math.pi * alpha) * bracket


def save_spectrum(path: SpectralPath, csv_path, meta: dict) -> None:
    """CSV ``component,k,xi,re_amp,im_amp`` plus a JSON sidecar next to it."""
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["component", "k", "xi", "re_amp", "im_amp"])
        for i in range(path.d):
            for k, x, a in zip(path.grid.k, path.grid.xi, path.amp[i]):
                w.writerow([i + 1, int(k), repr(float(x)), repr(float(a.real)), repr(float(a.imag))])
    sidecar = dict(meta)
    sidecar.update(K=path.grid.K, delta_xi=path.grid.delta_xi, rule=path.grid.rule, d=path.d,
                   convention="hermitian")
    csv_path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def load_spectrum(csv_path) -> tuple[SpectralPath, dict]:
    csv_path = Path(csv_path)
    meta = json.loads(csv_path.with_suffix(".json").read_text())
    if meta.get("convention") != "hermitian":
        raise ValueError("only the hermitian convention is supported")
    grid = FrequencyGrid(int(meta["K"]), float(meta["delta_xi"]), meta.get("rule", "node"))
    amp = np.zeros((int(meta["d"]), grid.K), dtype=complex)
    with csv_path.open() as fh:
        for row in csv.DictReader(fh):
            amp[int(row["component"]) - 1, int(row["k"]) - 1] = complex(
                float(row["re_amp"]), float(row["im_amp"]))
    return SpectralPath(grid, amp), meta
