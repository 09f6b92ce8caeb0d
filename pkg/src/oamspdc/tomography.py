"""High-dimensional two-photon state tomography and entanglement witnesses.

The two-photon state lives in a d x d OAM subspace per photon with local
index n = l + (d-1)/2 for l in [-(d-1)/2, (d-1)/2].  The source is
anti-correlated (signal -l with idler +l), so the reference maximally
entangled state is sum_l |-l> |l> / sqrt(d).

Measurements project both photons onto states drawn from a complete set of
mutually unbiased bases (d + 1 groups for prime d, the last group being
the OAM eigenbasis).  Reconstruction is available both as direct linear
inversion over an SU(d) generator expansion (fast, possibly non-physical)
and as maximum-likelihood estimation over a Cholesky-like parametrization
that enforces positivity and unit trace.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, WindowError
from .spectrum import SpiralSpectrum

__all__ = [
    "DensityMatrix",
    "MUBSet",
    "GeneratorBasis",
    "CountsRecord",
    "LinearReconstruction",
    "mub_bases",
    "su_generators",
    "mes_state",
    "theoretical_state",
    "tomography_settings",
    "simulate_counts",
    "linear_reconstruct",
    "mle_reconstruct",
    "likelihood_objective",
    "fidelity",
    "linear_entropy",
    "cglmp_value",
    "dimensional_witness",
]

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % k for k in range(2, int(math.isqrt(n)) + 1))


@dataclass(frozen=True)
class DensityMatrix:
    """Two-photon density matrix on the d^2-dimensional joint space.

    Hermitian within 1e-10, unit trace within 1e-10, eigenvalues above
    -1e-10.  ``matrix`` is indexed row-major over the product basis
    |n_s> |n_i| with n = l + (d-1)/2.
    """

    d: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = self.d**2
        if m.shape != (dim, dim):
            raise ValueError(f"matrix must be {dim}x{dim} for local dimension d={self.d}")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValueError("matrix is not Hermitian within tolerance")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise ValueError(f"trace must be 1, got {np.trace(m)!r}")
        if np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T))) < -PSD_TOL:
            raise ValueError("matrix has a negative eigenvalue beyond tolerance")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_pure(cls, psi, d: int) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(d, np.outer(psi, psi.conj()))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def to_json_dict(self) -> dict:
        return {
            "schemaVersion": 1,
            "d": self.d,
            "basisOrder": "row-major product basis |n_s>|n_i>, n = l + (d-1)/2",
            "real": self.matrix.real.tolist(),
            "imag": self.matrix.imag.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "DensityMatrix":
        m = np.array(data["real"], dtype=float) + 1j * np.array(data["imag"], dtype=float)
        return cls(int(data["d"]), m)


@dataclass(frozen=True)
class MUBSet:
    """d + 1 mutually unbiased bases for prime d; the last group is computational."""

    d: int
    groups: tuple  # (d + 1) groups, each a (d, d) array whose rows are the basis kets

    def vector(self, j: int, m: int) -> np.ndarray:
        return self.groups[j][m]


def mub_bases(d: int) -> MUBSet:
    """Complete MUB set in prime dimension d via quadratic Fourier-Gauss phases.

    Group j (j = 0..d-1) consists of the vectors
    (1/sqrt(d)) sum_n omega^(j n^2 + n m) |n>, omega = exp(2 pi i / d);
    group d is the computational basis.  For d = 2 the quadratic phase
    needs the 4th root of unity (groups are the X and Y eigenbases);
    with omega_2 alone the j = 0, 1 groups would coincide.
    """
    if not _is_prime(d):
        raise ValueError(f"MUB construction requires prime dimension, got d={d}")
    groups = []
    n = np.arange(d)
    if d == 2:
        quad_phase = 1j ** (n * n)  # i^(n^2): 4th root fixes the qubit case
    else:
        quad_phase = None
    for j in range(d):
        rows = np.empty((d, d), dtype=complex)
        for m in range(d):
            if d == 2:
                rows[m] = (quad_phase**j) * (-1.0) ** (n * m) / math.sqrt(2)
            else:
                rows[m] = np.exp(2j * np.pi * ((j * n * n + n * m) % d) / d) / math.sqrt(d)
        groups.append(rows)
    groups.append(np.eye(d, dtype=complex))
    return MUBSet(d=d, groups=tuple(groups))


@dataclass(frozen=True)
class GeneratorBasis:
    """d^2 trace-orthogonal Hermitian matrices: scaled identity plus the SU(d) set.

    Tr(lambda_j lambda_k) = 2 delta_jk.
    """

    d: int
    matrices: np.ndarray  # shape (d^2, d, d)
    norm_constant: float = 2.0


def su_generators(d: int) -> GeneratorBasis:
    """Generalized Gell-Mann basis of d x d Hermitian space, plus sqrt(2/d) identity."""
    if d < 2:
        raise ValueError(f"generator basis needs d >= 2, got d={d}")
    mats = [np.eye(d, dtype=complex) * math.sqrt(2.0 / d)]
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            mats.append(sym)
            asym = np.zeros((d, d), dtype=complex)
            asym[j, k] = -1j
            asym[k, j] = 1j
            mats.append(asym)
    for l in range(1, d):
        diag = np.zeros((d, d), dtype=complex)
        for i in range(l):
            diag[i, i] = 1.0
        diag[l, l] = -l
        mats.append(diag * math.sqrt(2.0 / (l * (l + 1))))
    return GeneratorBasis(d=d, matrices=np.array(mats))


def mes_state(d: int) -> DensityMatrix:
    """The anti-correlated maximally entangled state sum_l |-l>|l> / sqrt(d)."""
    psi = np.zeros(d * d, dtype=complex)
    for n in range(d):
        psi[(d - 1 - n) * d + n] = 1.0
    return DensityMatrix.from_pure(psi, d)


def theoretical_state(spectrum: SpiralSpectrum, d: int) -> DensityMatrix:
    """Pure two-photon state predicted by a spiral spectrum on a d-dim subspace.

    |psi> prop. sum_l C(-l, l) |-l>_s |l>_i restricted to
    l in [-(d-1)/2, (d-1)/2] and renormalized; d must be odd so the window
    is symmetric.
    """
    if d < 2 or d % 2 == 0:
        raise ValueError(f"local dimension must be odd and >= 3, got d={d}")
    half = (d - 1) // 2
    if spectrum.ell_min > -half or spectrum.ell_max < half:
        raise WindowError(
            f"spectrum window [{spectrum.ell_min}, {spectrum.ell_max}] "
            f"cannot host a d={d} subspace"
        )
    psi = np.zeros(d * d, dtype=complex)
    for ell in range(-half, half + 1):
        n_i = ell + half
        n_s = -ell + half
        psi[n_s * d + n_i] = spectrum.amplitude(ell)
    return DensityMatrix.from_pure(psi, d)


def tomography_settings(d: int) -> list:
    """Index pairs ((j_A, m_A), (j_B, m_B)) of the d^4 projective settings.

    Per side: the first d - 1 states of each of the d + 1 MUB groups plus
    the last computational state, i.e. d^2 states whose projectors span the
    local Hermitian space (each group contributes d - 1 independent
    traceless directions, any single extra state fixes the trace).  The
    joint settings are the full cross product, u-major.
    """
    side = [(j, m) for j in range(d + 1) for m in range(d - 1)]
    side.append((d, d - 1))
    return [(u, v) for u in side for v in side]


def _setting_vectors(d: int, settings, mubs: MUBSet | None = None) -> np.ndarray:
    mubs = mubs if mubs is not None else mub_bases(d)
    vecs = np.empty((len(settings), d * d), dtype=complex)
    for s, ((j_a, m_a), (j_b, m_b)) in enumerate(settings):
        vecs[s] = np.kron(mubs.vector(j_a, m_a), mubs.vector(j_b, m_b))
    return vecs


@dataclass(frozen=True)
class CountsRecord:
    """Coincidence counts over a tomographically complete set of settings.

    ``settings[i]`` is ((j_A, m_A), (j_B, m_B)) indexing MUB group/state on
    each side; ``counts[i]`` the coincidences; ``n_flux`` the expected
    coincidences per unit-probability setting; ``seed`` the RNG seed when
    simulated (None for imported or noiseless data).
    """

    d: int
    settings: tuple
    counts: np.ndarray
    n_flux: float
    seed: int | None = None
    noise: str = "none"

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=float)
        if counts.shape != (len(self.settings),):
            raise ValueError("counts length must match settings length")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "settings", tuple(tuple(map(tuple, s)) for s in self.settings))

    def to_json_dict(self) -> dict:
        return {
            "schemaVersion": 1,
            "d": self.d,
            "settings": [list(map(list, s)) for s in self.settings],
            "counts": self.counts.tolist(),
            "N": self.n_flux,
            "seed": self.seed,
            "noise": self.noise,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "CountsRecord":
        return cls(
            d=int(data["d"]),
            settings=tuple(tuple(map(tuple, s)) for s in data["settings"]),
            counts=np.asarray(data["counts"], dtype=float),
            n_flux=float(data["N"]),
            seed=data.get("seed"),
            noise=data.get("noise", "none"),
        )

    def dump(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "CountsRecord":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def simulate_counts(rho: DensityMatrix, mubs: MUBSet, n_flux: float,
                    seed: int | None = None, noise: str = "none",
                    settings=None) -> CountsRecord:
    """Projective coincidence counts N <Psi_uv| rho |Psi_uv> over a setting set.

    The default setting set is the tomographically complete d^4 cross
    product from ``tomography_settings``; pass ``settings`` to simulate any
    other collection of MUB-indexed projector pairs.  With
    ``noise='poisson'`` each expected count is Poisson-resampled using the
    given seed, so records are bit-reproducible.
    """
    if rho.d != mubs.d:
        raise ValueError(f"state dimension d={rho.d} does not match MUBs d={mubs.d}")
    if not n_flux > 0:
        raise ValueError(f"pair flux must be positive, got {n_flux}")
    if noise not in ("none", "poisson"):
        raise ValueError(f"noise must be 'none' or 'poisson', got {noise!r}")
    if settings is None:
        settings = tomography_settings(rho.d)
    vecs = _setting_vectors(rho.d, settings, mubs)
    probs = np.einsum("sa,ab,sb->s", vecs.conj(), rho.matrix, vecs).real
    expected = n_flux * np.clip(probs, 0.0, None)
    if noise == "poisson":
        if seed is None:
            raise ValueError("poisson noise requires an explicit seed")
        counts = np.random.default_rng(seed).poisson(expected).astype(float)
    else:
        counts = expected
    return CountsRecord(d=rho.d, settings=tuple(settings), counts=counts,
                        n_flux=n_flux, seed=seed, noise=noise)


@dataclass(frozen=True)
class LinearReconstruction:
    """Linear-inversion estimate: Hermitian, unit trace, possibly not PSD."""

    d: int
    matrix: np.ndarray
    physical: bool
    min_eigenvalue: float


def linear_reconstruct(counts: CountsRecord,
                       generators: GeneratorBasis | None = None) -> LinearReconstruction:
    """Invert counts through the generator expansion rho = sum c_jk lambda_j (x) lambda_k.

    Solves A c = n / N with A[s, jk] = <Psi_s| lambda_j (x) lambda_k |Psi_s>.
    The estimate is Hermitian and renormalized to unit trace but PSD is not
    guaranteed; inspect the ``physical`` flag.
    """
    d = counts.d
    gens = generators if generators is not None else su_generators(d)
    if gens.d != d:
        raise ValueError(f"generator dimension {gens.d} does not match counts d={d}")
    mubs = mub_bases(d)
    n_gen = d * d
    side_a = np.empty((len(counts.settings), n_gen))
    side_b = np.empty((len(counts.settings), n_gen))
    cache: dict = {}
    for s, (ia, ib) in enumerate(counts.settings):
        for idx, out in ((ia, side_a), (ib, side_b)):
            if idx not in cache:
                v = mubs.vector(*idx)
                cache[idx] = np.einsum("a,gab,b->g", v.conj(), gens.matrices, v).real
            out[s] = cache[idx]
    a_matrix = np.einsum("sj,sk->sjk", side_a, side_b).reshape(len(counts.settings), n_gen**2)
    if a_matrix.shape[0] == a_matrix.shape[1]:
        cond = np.linalg.cond(a_matrix)
        if not np.isfinite(cond) or cond > 1e10:
            raise ValueError(
                f"setting set is not informationally complete (condition number {cond!r})"
            )
        coeff = np.linalg.solve(a_matrix, counts.counts / counts.n_flux)
    else:
        coeff, _, rank, _ = np.linalg.lstsq(
            a_matrix, counts.counts / counts.n_flux, rcond=None
        )
        if rank < n_gen**2:
            raise ValueError(f"setting set is not informationally complete (rank {rank})")
    c = coeff.reshape(n_gen, n_gen)
    rho = np.einsum("jk,jab,kcd->acbd", c, gens.matrices, gens.matrices).reshape(d * d, d * d)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    eigs = np.linalg.eigvalsh(rho)
    return LinearReconstruction(
        d=d, matrix=rho, physical=bool(eigs.min() >= -PSD_TOL), min_eigenvalue=float(eigs.min())
    )


def _triangular_from_params(t: np.ndarray, dim: int) -> np.ndarray:
    """Lower-triangular T from dim^2 real parameters (real diagonal first)."""
    tri = np.zeros((dim, dim), dtype=complex)
    tri[np.diag_indices(dim)] = t[:dim]
    lower = np.tril_indices(dim, -1)
    n_off = lower[0].size
    tri[lower] = t[dim:dim + n_off] + 1j * t[dim + n_off:]
    return tri


def _params_from_triangular(tri: np.ndarray) -> np.ndarray:
    dim = tri.shape[0]
    lower = np.tril_indices(dim, -1)
    return np.concatenate([tri.diagonal().real, tri[lower].real, tri[lower].imag])


def likelihood_objective(counts: CountsRecord):
    """Weighted least-squares likelihood over the Cholesky-like parametrization.

    Returns ``f(t) -> (L, grad)`` with
    L = sum_s (N p_s - n_s)^2 / (2 N p_s),  p_s = <Psi_s| T'T/tr(T'T) |Psi_s>,
    and the analytic gradient with respect to the d^4 real parameters of T.
    """
    d = counts.d
    dim = d * d
    vecs = _setting_vectors(d, counts.settings)
    n_obs = counts.counts
    flux = counts.n_flux

    def objective(t: np.ndarray):
        tri = _triangular_from_params(np.asarray(t, dtype=float), dim)
        gram = tri.conj().T @ tri
        tau = np.trace(gram).real
        rho = gram / tau
        p = np.einsum("sa,ab,sb->s", vecs.conj(), rho, vecs).real
        p = np.clip(p, 1e-12, None)
        resid = flux * p - n_obs
        value = float(np.sum(resid**2 / (2.0 * flux * p)))
        # dL/dp_s, then chain through rho = T'T/tau
        g = flux / 2.0 - n_obs**2 / (2.0 * flux * p**2)
        big_g = (vecs * g[:, None]).T @ vecs.conj()
        corr = (big_g - np.trace(big_g @ rho).real * np.eye(dim)) / tau
        w = tri @ corr
        grad_full = 2.0 * w
        lower = np.tril_indices(dim, -1)
        grad = np.concatenate([
            grad_full.diagonal().real,
            grad_full[lower].real,
            grad_full[lower].imag,
        ])
        return value, grad

    return objective


def _psd_projection(matrix: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues and renormalize the trace."""
    eigvals, eigvecs = np.linalg.eigh(0.5 * (matrix + matrix.conj().T))
    eigvals = np.clip(eigvals, 0.0, None)
    if eigvals.sum() == 0.0:
        eigvals = np.ones_like(eigvals)
    out = (eigvecs * eigvals) @ eigvecs.conj().T
    return out / np.trace(out).real


def mle_reconstruct(counts: CountsRecord, init: DensityMatrix | None = None,
                    max_iterations: int = 2000) -> DensityMatrix:
    """Maximum-likelihood density matrix from coincidence counts.

    The state is parametrized as rho = T'T / tr(T'T) with lower-triangular
    T (d^4 real parameters), which enforces positivity and unit trace.
    Quasi-Newton (L-BFGS) minimization stops when the relative objective
    decrease drops below 1e-10 or the gradient norm below 1e-8.  Default
    initialization is the linear reconstruction projected onto the PSD
    cone.
    """
    d = counts.d
    dim = d * d
    if init is not None:
        if init.d != d:
            raise ValueError(f"init dimension d={init.d} does not match counts d={d}")
        rho0 = init.matrix
    else:
        rho0 = _psd_projection(linear_reconstruct(counts).matrix)
    # small ridge keeps the Cholesky factor well-defined for rank-deficient inits
    rho0 = (1.0 - 1e-9) * rho0 + 1e-9 * np.eye(dim) / dim
    # need lower-triangular T with T'T = rho; numpy factors rho = L L', so
    # factor the index-reversed matrix instead: with J the reversal,
    # J rho J = L L'  =>  rho = (J L' J)(J L J) and T = J L' J is lower.
    ell = np.linalg.cholesky(rho0[::-1, ::-1])
    tri0 = ell.conj().T[::-1, ::-1]
    t0 = _params_from_triangular(tri0)

    objective = likelihood_objective(counts)
    result = minimize(
        objective, t0, jac=True, method="L-BFGS-B",
        options={"maxiter": max_iterations, "ftol": 1e-10, "gtol": 1e-8, "maxcor": 30},
    )
    if not result.success and result.status == 1:
        raise ConvergenceError(
            f"MLE did not converge within {max_iterations} iterations "
            f"(objective {result.fun!r})",
            objective=float(result.fun), iterate=result.x,
        )
    tri = _triangular_from_params(result.x, dim)
    gram = tri.conj().T @ tri
    rho = gram / np.trace(gram).real
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(d, rho)


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity [tr sqrt(sqrt(rho) sigma sqrt(rho))]^2."""
    if rho.d != sigma.d:
        raise ValueError(f"dimension mismatch: {rho.d} vs {sigma.d}")
    eigvals, eigvecs = np.linalg.eigh(rho.matrix)
    sqrt_rho = (eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.conj().T
    inner = sqrt_rho @ sigma.matrix @ sqrt_rho
    vals = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    root = float(np.sum(np.sqrt(np.clip(vals, 0.0, None))))
    return min(root**2, 1.0)


def linear_entropy(rho: DensityMatrix) -> float:
    """1 - tr(rho^2); zero for pure states."""
    return float(1.0 - rho.purity())


def _cglmp_probabilities(rho: np.ndarray, d: int, alpha: float, beta: float) -> np.ndarray:
    """Joint outcome table for Fourier-type measurements with angle offsets.

    Alice projects onto (1/sqrt(d)) sum_n omega^(n(k + alpha)) |n'> with the
    local index flipped (n' = d-1-n) to match this package's anti-correlated
    state convention; Bob onto (1/sqrt(d)) sum_n omega^(-n(l - beta)) |n>.
    """
    n = np.arange(d)
    table = np.empty((d, d))
    flip = slice(None, None, -1)
    for k in range(d):
        va = np.exp(2j * np.pi * n * (k + alpha) / d)[flip] / math.sqrt(d)
        for l in range(d):
            vb = np.exp(2j * np.pi * n * (-l + beta) / d) / math.sqrt(d)
            v = np.kron(va, vb)
            table[k, l] = np.real(v.conj() @ rho @ v)
    return table


def cglmp_value(rho: DensityMatrix, d: int | None = None) -> float:
    """CGLMP Bell expression I_d at the canonical optimal settings for the MES.

    Two Fourier-type measurement settings per side with offsets
    (0, 1/2) for Alice and (1/4, -1/4) for Bob; local-realistic bound 2.
    Evaluated in the anti-correlated state convention of this package, so
    the ideal MES from ``mes_state`` attains the known quantum maxima.
    """
    d = rho.d if d is None else d
    if d != rho.d:
        raise ValueError(f"dimension mismatch: asked d={d}, state has d={rho.d}")
    if d < 2:
        raise ValueError(f"CGLMP needs d >= 2, got {d}")
    m = rho.matrix
    tables = {
        (1, 1): _cglmp_probabilities(m, d, 0.0, 0.25),
        (1, 2): _cglmp_probabilities(m, d, 0.0, -0.25),
        (2, 1): _cglmp_probabilities(m, d, 0.5, 0.25),
        (2, 2): _cglmp_probabilities(m, d, 0.5, -0.25),
    }

    def p_a_eq_b_plus(table, off):
        return sum(table[(l + off) % d, l] for l in range(d))

    def p_b_eq_a_plus(table, off):
        return sum(table[k, (k + off) % d] for k in range(d))

    total = 0.0
    for k in range(d // 2):
        weight = 1.0 - 2.0 * k / (d - 1)
        plus = (
            p_a_eq_b_plus(tables[(1, 1)], k)
            + p_b_eq_a_plus(tables[(2, 1)], k + 1)
            + p_a_eq_b_plus(tables[(2, 2)], k)
            + p_b_eq_a_plus(tables[(1, 2)], k)
        )
        minus = (
            p_a_eq_b_plus(tables[(1, 1)], -k - 1)
            + p_b_eq_a_plus(tables[(2, 1)], -k)
            + p_a_eq_b_plus(tables[(2, 2)], -k - 1)
            + p_b_eq_a_plus(tables[(1, 2)], -k - 1)
        )
        total += weight * (plus - minus)
    return float(total)


def dimensional_witness(fid: float, d: int) -> bool:
    """True iff fidelity to the d-dim MES strictly exceeds (d - 1)/d."""
    if not 0.0 <= fid <= 1.0:
        raise ValueError(f"fidelity must lie in [0, 1], got {fid}")
    return fid > (d - 1) / d
