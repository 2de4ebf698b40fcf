"""Random-matrix Monte Carlo oracle.

Scattering matrices are drawn either from the circular unitary ensemble
(ideal leads) or built from a random GUE Hamiltonian coupled to the leads
(the Hamiltonian approach, which also handles tunnel barriers).  Cumulants
are estimated with k-statistics and block-jackknife error bars.

Sampling is chunked: chunk ``i`` uses the ``i``-th child of
``SeedSequence(seed)``, so results depend only on ``seed`` and the sample
count, never on how many worker processes ran the chunks.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .nonideal import TunnelConfig
from .params import SHOT, LeadConfig, normalization_c, thermo_factor
from .quadrature import adaptive_gauss_legendre, composite_rule
from .params import conductance_variance

__all__ = [
    "ScatteringSample",
    "CumulantEstimate",
    "InsufficientSamplesError",
    "sample_haar_unitary",
    "scattering_sample",
    "observables",
    "k_statistic",
    "estimate_cumulants",
    "heidelberg_smatrix",
    "poisson_kernel_sample",
    "cue_observables",
    "jmgf_quadrature",
    "toda_joint_check",
    "report_records",
    "dump_raw",
]

CHUNK = 50_000


class InsufficientSamplesError(ValueError):
    pass


@dataclass
class ScatteringSample:
    """A batch of scattering matrices with their transport eigenvalues.

    ``S`` has shape ``(batch, N, N)``; ``T`` holds the ``min(N_L, N_R)``
    transmission eigenvalues and ``R`` the ``N_L`` reflection eigenvalues
    of the left lead.
    """

    S: np.ndarray
    N_L: int
    N_R: int
    T: np.ndarray
    R: np.ndarray

    def unitarity_error(self) -> np.ndarray:
        eye = np.eye(self.S.shape[-1])
        return np.linalg.norm(self.S @ np.conj(np.swapaxes(self.S, -1, -2)) - eye, axis=(-2, -1))

    def trace_mismatch(self) -> np.ndarray:
        """``|sum T - tr(t t^dagger)|`` per sample."""
        t = self.S[:, self.N_L:, :self.N_L]
        return np.abs(self.T.sum(axis=1) - np.sum(np.abs(t) ** 2, axis=(1, 2)))


@dataclass(frozen=True)
class CumulantEstimate:
    order: int
    estimate: float
    stderr: float
    n_samples: int


# -- sampling -----------------------------------------------------------------

def sample_haar_unitary(N: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-distributed ``N x N`` unitary (or a stack of ``size`` of them).

    QR of a complex Ginibre matrix, with the columns rephased by the
    phases of ``diag(R)``; without that correction the result is not Haar.
    """
    shape = (N, N) if size is None else (size, N, N)
    Z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    phase = d / np.abs(d)
    return Q * phase[..., None, :]


def scattering_sample(S: np.ndarray, N_L: int, N_R: int) -> ScatteringSample:
    """Attach transmission and reflection eigenvalues to a stack of ``S``."""
    S = np.asarray(S)
    if S.ndim == 2:
        S = S[None]
    t = S[:, N_L:, :N_L]
    th = np.conj(np.swapaxes(t, -1, -2))
    Q = th @ t if N_L <= N_R else t @ th
    T = np.clip(np.linalg.eigvalsh(Q), 0.0, 1.0)
    r = S[:, :N_L, :N_L]
    R = np.clip(np.linalg.eigvalsh(r @ np.conj(np.swapaxes(r, -1, -2))), 0.0, 1.0)
    return ScatteringSample(S, N_L, N_R, T, R)


def observables(sample: ScatteringSample | np.ndarray, cfg: LeadConfig | None = None, eta=SHOT):
    """``(G, P_shot, P)`` per sample.

    ``G = sum T``, ``P_shot = sum T(1-T)``, ``P = G + f_eta P_shot``; with
    ``eta`` the shot sentinel ``P`` is returned equal to ``P_shot``.
    ``sample`` may also be a bare array of transmission eigenvalues.
    """
    T = sample.T if isinstance(sample, ScatteringSample) else np.atleast_2d(np.asarray(sample, dtype=float))
    G = T.sum(axis=1)
    P_shot = (T * (1.0 - T)).sum(axis=1)
    tf = thermo_factor(eta)
    P = P_shot.copy() if tf is SHOT else G + tf.f_eta * P_shot
    return G, P_shot, P


def _cue_chunk(args):
    N_L, N_R, size, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    smp = scattering_sample(sample_haar_unitary(N_L + N_R, rng, size), N_L, N_R)
    G, P_shot, _ = observables(smp)
    return G, P_shot


def _chunks(n_samples: int, seed: int):
    k = -(-n_samples // CHUNK)
    children = np.random.SeedSequence(seed).spawn(k)
    sizes = [CHUNK] * (k - 1) + [n_samples - CHUNK * (k - 1)]
    return list(zip(sizes, children))


def cue_observables(N_L: int, N_R: int, n_samples: int, seed: int = 0, workers: int = 1):
    """``G`` and ``P_shot`` arrays from ``n_samples`` CUE scattering matrices."""
    jobs = [(N_L, N_R, size, ss) for size, ss in _chunks(n_samples, seed)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_cue_chunk, jobs))
    else:
        parts = [_cue_chunk(j) for j in jobs]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def heidelberg_smatrix(M: int, cfg: TunnelConfig, rng: np.random.Generator, size: int = 1,
                       max_retries: int = 5) -> ScatteringSample:
    """Scattering matrices at the band centre from an ``M x M`` GUE Hamiltonian.

    Convention: ``E|H_ij|^2 = 1/M`` so the semicircle has radius 2 and the
    mean level spacing at ``E = 0`` is ``Delta = pi / M``.  The coupling
    ``W`` has orthogonal columns with ``pi^2 |W_c|^2 / (M Delta) = x_c``,
    where ``(1 - x)/(1 + x) = sqrt(gamma2)`` on the left lead and ``x = 1``
    on the ideal right lead, so that the average ``S`` is
    ``diag(sqrt(gamma2), 0)`` up to ``O(1/M)``.
    """
    N = cfg.N_L + cfg.N_R
    if M < 10 * N:
        raise ValueError(f"need M >= 10 (N_L + N_R) = {10 * N}, got {M}")
    gamma = math.sqrt(cfg.gamma2)
    x = np.array([(1 - gamma) / (1 + gamma)] * cfg.N_L + [1.0] * cfg.N_R)
    delta = math.pi / M
    W = np.zeros((M, N), dtype=complex)
    W[np.arange(N), np.arange(N)] = np.sqrt(x * M * delta) / math.pi
    coupling = 1j * math.pi * (W @ W.conj().T)
    sigma = 1.0 / math.sqrt(M)
    out = np.empty((size, N, N), dtype=complex)
    for i in range(size):
        for _ in range(max_retries):
            A = sigma * (rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M)))
            H = 0.5 * (A + A.conj().T)
            try:
                X = np.linalg.solve(-H + coupling, W)
            except np.linalg.LinAlgError:
                continue
            out[i] = np.eye(N) - 2j * math.pi * (W.conj().T @ X)
            break
        else:
            raise np.linalg.LinAlgError("resolvent solve failed repeatedly")
    return scattering_sample(out, cfg.N_L, cfg.N_R)


def poisson_kernel_sample(cfg: TunnelConfig, rng: np.random.Generator, size: int) -> ScatteringSample:
    """Direct Poisson-kernel sampling with average ``diag(sqrt(gamma2), 0)``.

    Composes a Haar unitary ``U`` with a tunnel barrier:
    ``S = D + C U (1 + D U)^-1 C`` where ``D = diag(gamma_c)`` and
    ``C = sqrt(1 - D^2)``.  A cross-check sampler only.
    """
    N = cfg.N_L + cfg.N_R
    d = np.array([math.sqrt(cfg.gamma2)] * cfg.N_L + [0.0] * cfg.N_R)
    c = np.sqrt(1.0 - d * d)
    U = sample_haar_unitary(N, rng, size)
    inner = np.linalg.solve(np.eye(N) + d[:, None] * U, np.broadcast_to(np.diag(c), U.shape))
    S = np.diag(d) + c[:, None] * (U @ inner)
    return scattering_sample(S, cfg.N_L, cfg.N_R)


# -- estimators ---------------------------------------------------------------

def _set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def _int_partitions(r, largest=None):
    largest = r if largest is None else largest
    if r == 0:
        yield ()
        return
    for k in range(min(r, largest), 0, -1):
        for rest in _int_partitions(r - k, k):
            yield (k,) + rest


@lru_cache(maxsize=None)
def _kstat_terms(r: int):
    """k_r as ``sum coef * prod S_q / (n)_b`` over block shapes.

    Cumulants are sums over set partitions of products of raw moments;
    unbiased estimators of those products are augmented symmetric sums
    divided by falling factorials, which in turn are Moebius sums of
    power-sum products.  Returns ``[(coef, b, (q1, q2, ...)), ...]``.
    """
    terms = {}
    for lam in _int_partitions(r):
        b = len(lam)
        mult = math.factorial(r)
        for part in lam:
            mult //= math.factorial(part)
        for v in set(lam):
            mult //= math.factorial(lam.count(v))
        outer = mult * (-1) ** (b - 1) * math.factorial(b - 1)
        for sp in _set_partitions(list(range(b))):
            mu = 1
            qs = []
            for block in sp:
                mu *= (-1) ** (len(block) - 1) * math.factorial(len(block) - 1)
                qs.append(sum(lam[j] for j in block))
            key = (b, tuple(sorted(qs)))
            terms[key] = terms.get(key, 0) + outer * mu
    return [(c, b, qs) for (b, qs), c in terms.items() if c]


def _kstat_from_sums(r: int, S, n: int) -> float:
    total = 0.0
    for coef, b, qs in _kstat_terms(r):
        falling = math.prod(n - i for i in range(b))
        total += coef * math.prod(S[q] for q in qs) / falling
    return total


def k_statistic(values, r: int) -> float:
    """Unbiased estimator of the ``r``-th cumulant (``r <= 6``)."""
    x = np.asarray(values, dtype=float)
    if not 1 <= r <= 6:
        raise ValueError("k-statistics implemented for orders 1..6")
    if x.size <= r:
        raise InsufficientSamplesError(f"k_{r} needs more than {r} samples")
    shift = x.mean()
    y = x - shift
    S = {q: float(np.sum(y ** q)) for q in range(1, r + 1)}
    k = _kstat_from_sums(r, S, x.size)
    return k + shift if r == 1 else k


def estimate_cumulants(values, Lmax: int, blocks: int = 100) -> list[CumulantEstimate]:
    """k-statistics of orders ``1 .. min(Lmax, 6)`` with block-jackknife errors.

    Power sums are accumulated per block about a common shift, so each
    leave-one-block-out estimate costs only a subtraction.
    """
    x = np.asarray(values, dtype=float).ravel()
    n = x.size
    if n < 10 * Lmax:
        raise InsufficientSamplesError(f"need at least {10 * Lmax} samples for Lmax={Lmax}, got {n}")
    L = min(Lmax, 6)
    B = min(blocks, n // max(L + 2, 2))
    if B < 2:
        raise InsufficientSamplesError("too few samples for a jackknife")
    shift = x.mean()
    y = x - shift
    edges = np.linspace(0, n, B + 1).astype(int)
    block_sums = np.array([[np.sum(y[a:b] ** q) for q in range(L + 1)] for a, b in zip(edges[:-1], edges[1:])])
    total = block_sums.sum(axis=0)
    out = []
    for r in range(1, L + 1):
        full = _kstat_from_sums(r, {q: total[q] for q in range(1, r + 1)}, n)
        jack = []
        for i in range(B):
            rem = total - block_sums[i]
            jack.append(_kstat_from_sums(r, {q: rem[q] for q in range(1, r + 1)}, int(round(rem[0]))))
        jack = np.array(jack)
        se = math.sqrt((B - 1) / B * np.sum((jack - jack.mean()) ** 2))
        out.append(CumulantEstimate(r, full + (shift if r == 1 else 0.0), se, n))
    return out


# -- quadrature oracles for the joint MGF ---------------------------------------

def _weight(T, z, w, f):
    return np.exp(-(z + w) * T - w * f * T * (1.0 - T))


def jmgf_quadrature(cfg: LeadConfig, eta, z: float, w: float, rule=None) -> float:
    """Joint MGF ``<exp(-z G - w P)>`` as ``n!/c * det`` of one-dimensional integrals.

    With the shot sentinel the exponent is ``-z G - w P_shot``.  Passing a
    fixed ``rule = (nodes, weights)`` bypasses adaptive refinement.
    """
    if not cfg.integer_nu:
        raise ValueError("quadrature oracle needs integer nu")
    n, nu = cfg.n, int(cfg.nu)
    if n == 0:
        return 1.0
    if n > 4:
        raise ValueError("quadrature oracle limited to n <= 4")
    tf = thermo_factor(eta)
    if tf is SHOT:
        gam = lambda T: np.exp(-z * T - w * T * (1.0 - T))  # noqa: E731
    else:
        gam = lambda T: _weight(T, z, w, tf.f_eta)  # noqa: E731
    mat = np.empty((n, n))
    for j in range(n):
        for k in range(j, n):
            f = lambda T, p=nu + j + k: T ** p * gam(T)  # noqa: E731
            if rule is None:
                val = adaptive_gauss_legendre(f, 0.0, 1.0, rtol=1e-14)
            else:
                val = float(np.dot(rule[1], f(rule[0])))
            mat[j, k] = mat[k, j] = val
    return float(math.factorial(n) / normalization_c(n, nu)) * float(np.linalg.det(mat))


def toda_joint_check(cfg: LeadConfig, eta, z: float, w: float, h: float, var_scale: float = 1.0) -> float:
    """``|F F'' - F'^2 - var F_{n-1} F_{n+1}|`` with z-derivatives by central differences.

    ``var_scale`` multiplies the variance coefficient (a sensitivity hook).
    """
    if cfg.n < 1:
        raise ValueError("need n >= 1")
    rule = composite_rule(0.0, 1.0, panels=4, order=40)
    F = lambda c, zz: jmgf_quadrature(c, eta, zz, w, rule)  # noqa: E731
    f0, fp, fm = F(cfg, z), F(cfg, z + h), F(cfg, z - h)
    d1 = (fp - fm) / (2 * h)
    d2 = (fp - 2 * f0 + fm) / (h * h)
    var = float(conductance_variance(cfg.n, cfg.nu)) * var_scale
    return abs(f0 * d2 - d1 * d1 - var * F(cfg.shifted(-1), z) * F(cfg.shifted(1), z))


# -- reports --------------------------------------------------------------------

def report_records(observable: str, estimates, seed: int) -> list[dict]:
    return [{"observable": observable, "order": e.order, "estimate": e.estimate, "stderr": e.stderr,
             "n_samples": e.n_samples, "seed": seed} for e in estimates]


def dump_raw(path, values) -> None:
    """Write samples as little-endian 64-bit floats."""
    np.asarray(values, dtype="<f8").tofile(path)


def report_json(records) -> str:
    return json.dumps(records, indent=1)
