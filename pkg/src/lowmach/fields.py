"""Periodic grids and pseudo-spectral vector calculus.

Scalar fields are plain arrays of shape ``grid.shape``.  Vector fields carry
a leading component axis, ``(ncomp,) + grid.shape``.  On a 2D grid a vector
has either 2 components (in-plane) or 3 (the third points out of plane and
nothing depends on z).

Transform convention: forward FFT unnormalized, inverse carries 1/n^d
(numpy's default).  Odd derivatives drop the Nyquist mode.
"""

import json
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "StrainData",
    "cross",
    "dot",
    "lift",
    "advect",
    "lorentz_force",
    "induction_rhs",
    "induction_expanded",
    "strain_and_stress",
    "identity_suite",
    "write_snapshot",
    "read_snapshot",
    "export_csv",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice on the box [0, length)^dim."""

    dim: int = 2
    n: int = 64
    length: float = 2 * np.pi

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def axes(self):
        return tuple(range(-self.dim, 0))

    @property
    def dx(self):
        return self.length / self.n

    @property
    def cell_volume(self):
        return self.dx**self.dim

    @property
    def volume(self):
        return self.length**self.dim

    @cached_property
    def x(self):
        """Nodal coordinates, one array per axis ('ij' indexing)."""
        x1 = np.arange(self.n) * self.dx
        return tuple(np.meshgrid(*([x1] * self.dim), indexing="ij"))

    @cached_property
    def modes(self):
        """Integer mode numbers per axis, broadcastable to the rfft layout."""
        out = []
        for ax in range(self.dim):
            if ax == self.dim - 1:
                m = np.arange(self.n // 2 + 1, dtype=float)
            else:
                m = np.fft.fftfreq(self.n, 1.0 / self.n)
            shape = [1] * self.dim
            shape[ax] = m.size
            out.append(m.reshape(shape))
        return tuple(out)

    @cached_property
    def wavenumbers(self):
        return tuple(2 * np.pi / self.length * m for m in self.modes)

    @cached_property
    def kd(self):
        """Derivative wavenumbers (Nyquist zeroed)."""
        return tuple(
            np.where(np.abs(m) == self.n // 2, 0.0, k)
            for m, k in zip(self.modes, self.wavenumbers)
        )

    @cached_property
    def k2(self):
        """Symbol of -Laplacian, consistent with div(grad)."""
        return sum(k**2 for k in self.kd)

    @cached_property
    def ksq(self):
        return sum(k**2 for k in self.wavenumbers)

    @property
    def spectral_shape(self):
        return self.shape[:-1] + (self.n // 2 + 1,)

    @cached_property
    def dealias_mask(self):
        keep = np.ones(self.spectral_shape, dtype=bool)
        for m in self.modes:
            keep &= np.abs(m) <= self.n / 3
        return keep

    @cached_property
    def null_modes(self):
        """Modes annihilated by the spectral gradient (mean and pure Nyquist)."""
        null = np.ones(self.spectral_shape, dtype=bool)
        for k in self.kd:
            null &= k == 0
        return null

    @cached_property
    def parseval_weights(self):
        w = np.ones(self.spectral_shape)
        m = self.modes[-1]
        w *= np.where((m > 0) & (m < self.n // 2), 2.0, 1.0)
        return w

    # -- transforms ---------------------------------------------------------

    def fft(self, f):
        return np.fft.rfftn(f, axes=self.axes)

    def ifft(self, fh):
        return np.fft.irfftn(fh, s=self.shape, axes=self.axes)

    def check_scalar(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"scalar field of shape {f.shape} does not match grid {self.shape}")
        return f

    def check_vector(self, u, ncomp=None):
        u = np.asarray(u, dtype=float)
        if u.ndim != self.dim + 1 or u.shape[1:] != self.shape:
            raise ValueError(f"vector field of shape {u.shape} does not match grid {self.shape}")
        allowed = (self.dim, 3) if ncomp is None else (ncomp,)
        if u.shape[0] not in allowed:
            raise ValueError(f"vector field has {u.shape[0]} components, expected one of {allowed}")
        return u

    # -- differential operators ---------------------------------------------

    def derivative(self, f, axis):
        f = self.check_scalar(f)
        if not 0 <= axis < self.dim:
            raise ValueError(f"axis {axis} out of range for dim {self.dim}")
        return self.ifft(1j * self.kd[axis] * self.fft(f))

    def grad(self, f):
        fh = self.fft(self.check_scalar(f))
        return self.ifft(np.stack([1j * k * fh for k in self.kd]))

    def div(self, u):
        u = self.check_vector(u)
        uh = self.fft(u[: self.dim])
        return self.ifft(sum(1j * k * c for k, c in zip(self.kd, uh)))

    def curl(self, u):
        """Scalar curl for in-plane 2D vectors, vector curl otherwise."""
        u = self.check_vector(u)
        uh = self.fft(u)
        d = [1j * k for k in self.kd]
        if self.dim == 2 and u.shape[0] == 2:
            return self.ifft(d[0] * uh[1] - d[1] * uh[0])
        if self.dim == 2:
            return self.ifft(np.stack([d[1] * uh[2], -d[0] * uh[2], d[0] * uh[1] - d[1] * uh[0]]))
        return self.ifft(
            np.stack(
                [
                    d[1] * uh[2] - d[2] * uh[1],
                    d[2] * uh[0] - d[0] * uh[2],
                    d[0] * uh[1] - d[1] * uh[0],
                ]
            )
        )

    def curl_z(self, psi):
        """Curl of the out-of-plane field psi*e_z on a 2D grid: (d_y psi, -d_x psi)."""
        if self.dim != 2:
            raise ValueError("curl_z is defined on 2D grids only")
        ph = self.fft(self.check_scalar(psi))
        return self.ifft(np.stack([1j * self.kd[1] * ph, -1j * self.kd[0] * ph]))

    def laplacian(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            self.check_vector(f)
        return self.ifft(-self.k2 * self.fft(f))

    def dealias(self, f):
        """2/3 rule: zero every mode with some |m_axis| > n/3."""
        return self.ifft(self.dealias_mask * self.fft(f))

    def leray_project(self, u):
        u = self.check_vector(u, ncomp=self.dim)
        uh = self.fft(u)
        kdotu = sum(k * c for k, c in zip(self.kd, uh))
        k2 = np.where(self.k2 > 0, self.k2, 1.0)
        return self.ifft(np.stack([c - k * kdotu / k2 for k, c in zip(self.kd, uh)]))

    def interpolate(self, f, factor=4):
        """Trigonometric interpolant of a scalar field on a grid ``factor`` times finer."""
        f = self.check_scalar(f)
        n, m = self.n, self.n * factor
        fh = self.fft(f)
        fine = np.zeros((m,) * (self.dim - 1) + (m // 2 + 1,), dtype=complex)
        half = n // 2
        full = [np.r_[0:half, m - half + 1 : m]] * (self.dim - 1)
        coarse = [np.r_[0:half, n - half + 1 : n]] * (self.dim - 1)
        fine[np.ix_(*full, np.arange(half))] = fh[np.ix_(*coarse, np.arange(half))]
        return np.fft.irfftn(fine, s=(m,) * self.dim, axes=tuple(range(self.dim))) * factor**self.dim

    def extrema(self, f, factor=4, newton_steps=4):
        """(min, max) of the band-limited interpolant.

        The refined-grid samples are polished by Newton iterations on the
        interpolant itself, so a peak between samples is still found.
        """
        fine = self.interpolate(f, factor)
        fh = self.fft(self.check_scalar(f))
        h = self.dx / factor
        out = []
        for idx, sign in ((np.argmin(fine), 1.0), (np.argmax(fine), -1.0)):
            sample = float(fine.flat[idx])
            x = np.array(np.unravel_index(idx, fine.shape), dtype=float) * h
            best = sample
            for _ in range(newton_steps):
                value, grad, hess = self._local_expansion(fh, x)
                # sign * hess must be positive definite near a min (max)
                try:
                    step = np.linalg.solve(hess, grad)
                except np.linalg.LinAlgError:
                    break
                if np.max(np.abs(step)) > h or np.any(np.linalg.eigvalsh(sign * hess) <= 0):
                    break
                x = x - step
                best = value if sign * value < sign * best else best
            value = self._local_expansion(fh, x)[0]
            out.append(min(best, value, sample) if sign > 0 else max(best, value, sample))
        return out[0], out[1]

    @cached_property
    def _expansion_tables(self):
        keep = np.ones(self.spectral_shape, dtype=bool)
        for m in self.modes:
            keep &= np.abs(m) < self.n // 2
        # rfft storage holds one of each conjugate pair for m_last > 0
        weights = np.where(self.modes[-1] == 0, 1.0, 2.0) * keep / self.n**self.dim
        return weights, [np.broadcast_to(k, self.spectral_shape) for k in self.wavenumbers]

    def _local_expansion(self, fh, x):
        """Value, gradient and Hessian of the trigonometric interpolant at point x."""
        weights, k = self._expansion_tables
        phase = np.exp(1j * sum(kk * xi for kk, xi in zip(k, x)))
        c = weights * fh * phase
        value = float(np.sum(c).real)
        grad = np.array([float(np.sum(1j * kk * c).real) for kk in k])
        hess = np.array([[float(np.sum(-ki * kj * c).real) for kj in k] for ki in k])
        return value, grad, hess

    # -- quadrature and norms -----------------------------------------------

    def integrate(self, f):
        """Nodal quadrature; vector input gives one integral per component."""
        return np.sum(f, axis=self.axes) * self.cell_volume

    def inner(self, f, g):
        return float(np.sum(np.asarray(f) * np.asarray(g)) * self.cell_volume)

    def l2(self, f):
        return float(np.sqrt(self.inner(f, f)))

    def sobolev_norm(self, f, s):
        """(sum_k (1+|k|^2)^s |f_k|^2)^(1/2) scaled so that s=0 is the L2 norm."""
        if s < 0:
            raise ValueError("Sobolev index must be non-negative")
        fh = self.fft(np.asarray(f, dtype=float))
        w = self.parseval_weights * (1.0 + self.ksq) ** s
        total = np.sum(w * (fh.real**2 + fh.imag**2))
        return float(np.sqrt(total * self.volume) / self.n**self.dim)


# -- pointwise vector algebra -----------------------------------------------


def lift(u):
    """Append a zero out-of-plane component to an in-plane 2-vector."""
    if u.shape[0] == 3:
        return u
    return np.concatenate([u, np.zeros_like(u[:1])])


def cross(a, b):
    """a x b; for two in-plane vectors returns the scalar z-component."""
    if a.shape[0] == 2 and b.shape[0] == 2:
        return a[0] * b[1] - a[1] * b[0]
    a, b = lift(a), lift(b)
    return np.stack(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def dot(a, b):
    return np.sum(a * b, axis=0)


def advect(grid, a, b):
    """(a . grad) b for scalar or vector b (not dealiased)."""
    bh = grid.fft(b)
    return sum(a[j] * grid.ifft(1j * grid.kd[j] * bh) for j in range(grid.dim))


# -- MHD building blocks ----------------------------------------------------


def lorentz_force(grid, H):
    """(curl H) x H with one dealias applied to the product."""
    H = grid.check_vector(H)
    if grid.dim == 2 and H.shape[0] == 2:
        J = grid.curl(H)
        return grid.dealias(np.stack([-J * H[1], J * H[0]]))
    return grid.dealias(cross(grid.curl(H), H))


def induction_rhs(grid, u, H, div_tol=1e-8):
    """curl(u x H) via the cross product route."""
    u = grid.check_vector(u)
    H = grid.check_vector(H, ncomp=u.shape[0])
    divH = np.max(np.abs(grid.div(H)))
    if divH > div_tol:
        raise ValueError(f"induction_rhs requires div H <= {div_tol}, got {divH:.3e}")
    if grid.dim == 2 and u.shape[0] == 2:
        return grid.curl_z(grid.dealias(cross(u, H)))
    return grid.curl(grid.dealias(cross(u, H)))


def induction_expanded(grid, u, H):
    """(H.grad)u - (u.grad)H + u div H - H div u, each product dealiased."""
    return grid.dealias(
        advect(grid, H, u) - advect(grid, u, H) + u * grid.div(H) - H * grid.div(u)
    )


@dataclass
class StrainData:
    D: np.ndarray  # (d, d) + grid.shape, symmetric
    divu: np.ndarray
    psi_colon_gradu: np.ndarray  # 2 mu |D|^2 + lambda (tr D)^2, nodal
    div_psi: np.ndarray  # mu Lap u + (mu + lambda) grad div u


def strain_and_stress(grid, u, mu, lam):
    from .errors import ConfigurationError

    d = grid.dim
    if not (mu > 0 and 2 * mu + d * lam > 0):
        raise ConfigurationError(f"viscosity requires mu > 0 and 2mu + {d}lambda > 0 (mu={mu}, lambda={lam})")
    u = grid.check_vector(u, ncomp=d)
    uh = grid.fft(u)
    G = np.stack([grid.ifft(1j * grid.kd[i] * uh) for i in range(d)])  # G[i, j] = d_i u_j
    D = 0.5 * (G + G.swapaxes(0, 1))
    divu = np.einsum("ii...->...", G)
    psi = 2 * mu * np.sum(D * D, axis=(0, 1)) + lam * divu**2
    div_psi = mu * grid.laplacian(u) + (mu + lam) * grid.grad(divu)
    return StrainData(D=D, divu=divu, psi_colon_gradu=psi, div_psi=div_psi)


# -- identity check -----------------------------------------------------------


def identity_suite(grid, a, b, c, f):
    """Residuals of the basic vector identities on the given operands.

    Vectors are promoted to 3 components; every pointwise product is
    dealiased so both sides live in the same truncated space.  Each entry
    holds the L-infinity residual and the magnitude of the largest term,
    which sets the round-off scale.
    """
    a, b, c = lift(a), lift(b), lift(c)
    P = grid.dealias

    def curl(v):
        return grid.curl(v)

    def grad3(g):
        gr = grid.grad(g)
        return gr if grid.dim == 3 else np.concatenate([gr, np.zeros_like(gr[:1])])

    def adv(p, q):
        return P(advect(grid, p, q))

    report = []

    def record(name, lhs, rhs_terms):
        rhs = sum(rhs_terms)
        scale = max([np.max(np.abs(lhs))] + [np.max(np.abs(t)) for t in rhs_terms])
        res = float(np.max(np.abs(lhs - rhs)))
        report.append({"identity": name, "residual": res, "scale": float(scale)})

    axb = P(cross(a, b))
    record("div(a x b)", grid.div(axb), [P(dot(b, curl(a))), -P(dot(a, curl(b)))])
    record(
        "grad|a|^2",
        grad3(P(dot(a, a))),
        [2 * adv(a, a), 2 * P(cross(a, curl(a)))],
    )
    record("curl(f a)", curl(P(f * a)), [P(f * curl(a)), P(cross(grad3(f), a))])
    record(
        "curl(a x b)",
        curl(axb),
        [adv(b, a), -adv(a, b), P(a * grid.div(b)), -P(b * grid.div(a))],
    )
    record(
        "div((a x b) x c)",
        grid.div(P(cross(axb, c))),
        [P(dot(c, curl(axb))), -P(dot(axb, curl(c)))],
    )
    d = grid.dim
    u, H = a[:d], grid.leray_project(b[:d])
    record("curl(u x H) expansion", induction_rhs(grid, u, H), [induction_expanded(grid, u, H)])
    return report


# -- persistence --------------------------------------------------------------

_MAGIC = b"MHDF"
_VERSION = 1
_AXIS_NAMES = "xyz"


def _flatten(fields):
    out = {}
    for name, arr in fields.items():
        arr = np.asarray(arr, dtype="<f8")
        if arr.ndim == 0:
            raise ValueError(f"field {name} is not an array")
        out[name] = arr
    return out


def write_snapshot(path, grid, fields, meta=None):
    """Write named fields in the MHDF binary format.

    Vector entries are split into components named ``<name>_x``, ``_y``,
    ``_z``.  ``meta`` is stored as a JSON string in the header.
    """
    scalars = {}
    for name, arr in _flatten(fields).items():
        if arr.shape == grid.shape:
            scalars[name] = arr
        else:
            grid.check_vector(arr)
            for i, comp in enumerate(arr):
                scalars[f"{name}_{_AXIS_NAMES[i]}"] = comp
    header = bytearray(_MAGIC)
    header += struct.pack("<IIId I", _VERSION, grid.dim, grid.n, float(grid.length), len(scalars))
    for name in scalars:
        raw = name.encode("utf-8")
        header += struct.pack("<H", len(raw)) + raw
    raw_meta = json.dumps(meta or {}, sort_keys=True).encode("utf-8")
    header += struct.pack("<I", len(raw_meta)) + raw_meta
    with open(path, "wb") as fh:
        fh.write(bytes(header))
        for arr in scalars.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_snapshot(path):
    """Inverse of write_snapshot: returns (grid, {name: scalar array}, meta)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise ValueError(f"{path}: not an MHDF snapshot")
    off = 4
    version, dim, n, length, count = struct.unpack_from("<IIId I", data, off)
    off += struct.calcsize("<IIId I")
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    grid = Grid(dim=dim, n=n, length=length)
    names = []
    for _ in range(count):
        (ln,) = struct.unpack_from("<H", data, off)
        off += 2
        names.append(data[off : off + ln].decode("utf-8"))
        off += ln
    (ln,) = struct.unpack_from("<I", data, off)
    off += 4
    meta = json.loads(data[off : off + ln].decode("utf-8"))
    off += ln
    size = n**dim
    payload = np.frombuffer(data, dtype="<f8", count=count * size, offset=off)
    fields = {name: payload[i * size : (i + 1) * size].reshape(grid.shape).copy() for i, name in enumerate(names)}
    return grid, fields, meta


def gather(fields, name, ncomp):
    """Reassemble a vector field split by write_snapshot."""
    return np.stack([fields[f"{name}_{_AXIS_NAMES[i]}"] for i in range(ncomp)])


def export_csv(out, grid, values):
    """Write one scalar field as (x, y[, z], value) rows."""
    values = grid.check_scalar(values)
    cols = [c.ravel() for c in grid.x] + [values.ravel()]
    header = ",".join(list(_AXIS_NAMES[: grid.dim]) + ["value"])
    np.savetxt(out, np.column_stack(cols), delimiter=",", header=header, comments="", fmt="%.17g")
