"""Samplers and moment estimators for the gridded field and point processes.

The complex field is drawn through the real 2M-dimensional augmented
covariance of (Re G, Im G); the doubly stochastic counts are Poisson with
conditional rate |G(x_m)|^2 vol_m per cell.  Every estimator reports a
batch-based standard error; exact quadrature values carry none.

Randomness: every entry point takes a 64-bit seed (or a Generator).
Replicate-level streams are derived with ``replicate_rng``, a counter-style
split (SeedSequence spawn keys), so replicates are independent and safe to
generate in parallel.  Batch samplers draw from one stream with a fixed
reduction order, so results are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import CapacityError, DimensionError, ModelError, PreconditionError
from .kernels import GaussianFieldModel, IntensityProfile, block_kernel
from .matfun import hafnian_dp


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Independent per-replicate stream derived from one root seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class MomentReport:
    """Named moment value; std_error is present iff the value is a Monte
    Carlo estimate."""

    label: str
    value: complex | float
    std_error: float | None = None
    n_samples: int | None = None

    def to_dict(self) -> dict:
        val = self.value
        if isinstance(val, complex):
            val = [val.real, val.imag]
        out = {"label": self.label, "value": val}
        if self.std_error is not None:
            out["std_error"] = self.std_error
        if self.n_samples is not None:
            out["n_samples"] = self.n_samples
        return out


def _batch_stats(values: np.ndarray, batches: int) -> tuple[float, float]:
    # Distribution-free standard error from near-equal batch means.
    nb = min(batches, values.size)
    if nb < 2:
        return float(np.mean(values)), 0.0
    means = np.array([chunk.mean() for chunk in np.array_split(values, nb)])
    return float(values.mean()), float(means.std(ddof=1) / np.sqrt(nb))


# ---------------------------------------------------------------------------
# Field sampling
# ---------------------------------------------------------------------------


def augmented_covariance(model: GaussianFieldModel) -> np.ndarray:
    """Real covariance of (Re G(x_1..x_M), Im G(x_1..x_M)).

    Blocks: E[XX^T] = Re(k1+k2)/2, E[YY^T] = Re(k1-k2)/2,
    E[XY^T] = (Im k2 - Im k1)/2, E[YX^T] = (Im k2 + Im k1)/2.
    """
    k1, k2 = model.k1, model.k2
    xx = 0.5 * (k1.real + k2.real)
    yy = 0.5 * (k1.real - k2.real)
    xy = 0.5 * (k2.imag - k1.imag)
    yx = 0.5 * (k2.imag + k1.imag)
    cov = np.block([[xx, xy], [yx, yy]])
    w = np.linalg.eigvalsh(cov)
    floor = -1e-8 * float(np.max(np.abs(w), initial=0.0))
    if w.min(initial=0.0) < floor:
        raise ModelError(
            f"augmented covariance has eigenvalue {w.min():.3e}; kernel pair inconsistent")
    return cov


def _field_factor(model: GaussianFieldModel) -> np.ndarray:
    # Symmetric factorization with small negative eigenvalues clipped to 0.
    cov = augmented_covariance(model)
    w, v = np.linalg.eigh(cov)
    return v * np.sqrt(np.clip(w, 0.0, None))[None, :]


def sample_field(model: GaussianFieldModel, seed, size: int | None = None) -> np.ndarray:
    """Draw the complex field on the grid; shape (M,) or (size, M)."""
    rng = _as_rng(seed)
    factor = _field_factor(model)
    m = model.grid.n_cells
    n = 1 if size is None else int(size)
    z = rng.standard_normal((n, 2 * m)) @ factor.T
    g = z[:, :m] + 1j * z[:, m:]
    return g[0] if size is None else g


def sample_field_direct(alpha, beta, seed, size: int | None = None) -> np.ndarray:
    """Draw G(x_m) = (xi . alpha[:, m] + i eta . beta[:, m]) / sqrt(2)
    with independent standard real Gaussian vectors xi, eta."""
    a = np.asarray(alpha, dtype=complex)
    b = np.asarray(beta, dtype=complex)
    if a.shape != b.shape or a.ndim != 2:
        raise DimensionError("alpha and beta must share a (d, M) shape")
    rng = _as_rng(seed)
    n = 1 if size is None else int(size)
    xi = rng.standard_normal((n, a.shape[0]))
    eta = rng.standard_normal((n, a.shape[0]))
    g = (xi @ a + 1j * (eta @ b)) / np.sqrt(2.0)
    return g[0] if size is None else g


# ---------------------------------------------------------------------------
# Point-pattern sampling (counts per cell)
# ---------------------------------------------------------------------------


def sample_poisson(profile: IntensityProfile, seed, size: int | None = None) -> np.ndarray:
    """Independent counts[m] ~ Poisson(|lam_m|^2 vol_m)."""
    rng = _as_rng(seed)
    rate = np.abs(profile.lam) ** 2 * profile.grid.volumes
    shape = rate.shape if size is None else (int(size), rate.size)
    return rng.poisson(rate, size=shape)


def sample_cox(model: GaussianFieldModel, seed, size: int | None = None) -> np.ndarray:
    """Doubly stochastic counts: draw the field, then conditionally
    independent Poisson counts with rate |G(x_m)|^2 vol_m."""
    rng = _as_rng(seed)
    g = sample_field(model, rng, size=size if size is not None else 1)
    rate = np.abs(g) ** 2 * model.grid.volumes[None, :]
    counts = rng.poisson(rate)
    return counts[0] if size is None else counts


def box_counts(patterns: np.ndarray, box) -> np.ndarray:
    """Total count inside a cell set, per pattern."""
    idx = np.asarray(sorted(box), dtype=int)
    pats = np.atleast_2d(np.asarray(patterns))
    if idx.size == 0:
        return np.zeros(pats.shape[0], dtype=pats.dtype)
    return pats[:, idx].sum(axis=1)


# ---------------------------------------------------------------------------
# Moment estimators and the exact quadrature they are checked against
# ---------------------------------------------------------------------------


def field_moment_mc(model: GaussianFieldModel, points, n_samples: int, seed,
                    batches: int = 100) -> MomentReport:
    """Monte Carlo mean of prod_i |G(x_{m_i})|^2 over the given points."""
    pts = np.asarray(points, dtype=int)
    if pts.size < 1 or pts.size > 4:
        raise PreconditionError("between 1 and 4 points (estimator variance grows fast)")
    rng = _as_rng(seed)
    factor = _field_factor(model)
    m = model.grid.n_cells
    nb = max(1, min(batches, n_samples))
    base, extra = divmod(n_samples, nb)
    sizes = [base + (1 if i < extra else 0) for i in range(nb)]
    batch_means = np.empty(nb)
    for i, sz in enumerate(sizes):
        z = rng.standard_normal((sz, 2 * m)) @ factor.T
        g = z[:, :m] + 1j * z[:, m:]
        batch_means[i] = np.prod(np.abs(g[:, pts]) ** 2, axis=1).mean()
    value = float(np.average(batch_means, weights=sizes))
    se = float(batch_means.std(ddof=1) / np.sqrt(nb)) if nb > 1 else 0.0
    label = "E prod |G|^2 at " + ",".join(map(str, pts.tolist()))
    return MomentReport(label, value, se, n_samples)


def _as_boxes(boxes, n_cells: int) -> list[tuple[int, ...]]:
    out = []
    for box in boxes:
        idx = tuple(sorted(int(i) for i in box))
        if any(i < 0 or i >= n_cells for i in idx):
            raise DimensionError(f"cell index out of range 0..{n_cells - 1}")
        if len(set(idx)) != len(idx):
            raise DimensionError("duplicate cell inside one box")
        out.append(idx)
    return out


def _check_disjoint(boxes: list[tuple[int, ...]]) -> None:
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            if set(boxes[i]) & set(boxes[j]):
                raise PreconditionError(f"boxes {i} and {j} overlap")


def quadrature_haf_moment(model: GaussianFieldModel, boxes, *,
                          allow_repeats: bool = False,
                          tuple_limit: int = 200_000,
                          max_order: int = 4) -> MomentReport:
    """Exact discrete value sum over cell tuples of haf(block kernel)
    times the product of cell volumes.

    For pairwise disjoint boxes this is the product moment
    E[gamma(D_1) ... gamma(D_n)] of the doubly stochastic counts, and n!
    times the order-n correlation measure of the box product.  Pass
    ``allow_repeats=True`` for the correlation-measure semantics on
    overlapping or repeated boxes (used by factorial moments and the
    growth bound).
    """
    cells = _as_boxes(boxes, model.grid.n_cells)
    n = len(cells)
    if n < 1 or n > max_order:
        raise PreconditionError(f"between 1 and {max_order} boxes")
    if not allow_repeats:
        _check_disjoint(cells)
    n_tuples = int(np.prod([len(c) for c in cells]))
    if n_tuples > tuple_limit:
        raise CapacityError(f"{n_tuples} cell tuples exceed limit {tuple_limit}")
    vols = model.grid.volumes
    total = 0.0 + 0.0j
    for combo in product(*cells):
        pts = np.asarray(combo, dtype=int)
        total += hafnian_dp(block_kernel(model, pts)) * np.prod(vols[pts])
    label = "haf quadrature over " + "x".join(str(list(c)) for c in cells)
    return MomentReport(label, float(total.real), None, None)


def empirical_product_moment(patterns, boxes, batches: int = 100) -> MomentReport:
    """Sample mean and standard error of prod_i gamma(D_i) over patterns."""
    pats = np.atleast_2d(np.asarray(patterns))
    if pats.size == 0 or pats.shape[0] == 0:
        raise PreconditionError("need at least one pattern")
    cells = _as_boxes(boxes, pats.shape[1])
    _check_disjoint(cells)
    values = np.ones(pats.shape[0], dtype=float)
    for box in cells:
        values *= box_counts(pats, box)
    mean, se = _batch_stats(values, batches)
    label = "empirical prod gamma over " + "x".join(str(list(c)) for c in cells)
    return MomentReport(label, mean, se, pats.shape[0])


def empirical_factorial_moment(patterns, box, n: int, batches: int = 100) -> MomentReport:
    """Sample mean of the falling factorial gamma(D)(gamma(D)-1)...(gamma(D)-n+1)."""
    if n < 1:
        raise PreconditionError("order must be >= 1")
    pats = np.atleast_2d(np.asarray(patterns))
    if pats.shape[0] == 0:
        raise PreconditionError("need at least one pattern")
    t = box_counts(pats, box).astype(float)
    values = np.ones_like(t)
    for k in range(n):
        values *= t - k
    mean, se = _batch_stats(values, batches)
    return MomentReport(f"empirical falling factorial order {n}", mean, se, pats.shape[0])
