"""Run configuration: ``key = value`` files with ``#`` comments."""

import math
from dataclasses import dataclass, fields

from .eos import EosParams, PhysParams, Variant
from .errors import ConfigurationError
from .fields import Grid
from .isolver import LimitParams, LimitState, prepare_w0
from .prep import entropy_bump, general_data, orszag_tang_like, rest_state, well_prepared

IC_KINDS = ("general", "well_prepared", "orszag_tang_like", "rest")
MODELS = ("compressible", "limit")
LIMIT_VARIANTS = ("ideal_magnetic", "resistive_magnetic")


@dataclass
class Config:
    run_name: str = "run"
    out_dir: str = "out"
    model: str = "compressible"
    variant: str = Variant.ZERO_MAGNETIC_DIFFUSIVITY.value
    epsilon: float = 0.25
    gamma: float = 1.4
    p_bar: float = 1.0
    mu: float = None
    lam: float = 0.0
    nu: float = 0.0
    mu_slope: float = 0.0
    lam_slope: float = 0.0
    dim: int = 2
    n: int = 64
    length: float = 2 * math.pi
    T: float = 0.5
    cfl: float = 0.4
    observer_stride: int = 10
    checkpoint_every: int = 0
    snapshot_every: int = 0
    wall_budget: float = 0.0
    limit_variant: str = None
    elliptic_tol: float = 1e-12
    elliptic_max_iter: int = 500
    sweep_samples: int = 25
    ic_kind: str = "orszag_tang_like"
    ic_seed: int = 0
    ic_amplitude: float = 0.5
    ic_modes: int = 4
    ic_entropy_height: float = 0.0
    ic_entropy_width: float = 0.5

    def __post_init__(self):
        if self.mu is None:
            self.mu = 0.0 if self.variant == Variant.INFINITE_REYNOLDS.value else 0.05
        if self.limit_variant is None:
            self.limit_variant = (
                "resistive_magnetic" if self.variant == Variant.INFINITE_REYNOLDS.value else "ideal_magnetic"
            )

    # -- derived objects --------------------------------------------------
    def grid(self):
        return Grid(dim=self.dim, n=self.n, length=self.length)

    def phys_params(self, epsilon=None):
        """Compressible parameters; viscosities follow mu + mu_slope * epsilon."""
        eps = self.epsilon if epsilon is None else epsilon
        params = PhysParams(
            epsilon=eps,
            mu=self.mu + self.mu_slope * eps,
            lam=self.lam + self.lam_slope * eps,
            nu=self.nu,
            eos=EosParams(gamma=self.gamma, p_bar=self.p_bar),
            variant=Variant(self.variant),
        )
        return params.validate(self.dim)

    def limit_params(self):
        eos = EosParams(gamma=self.gamma, p_bar=self.p_bar)
        if self.limit_variant == "resistive_magnetic":
            mu, nu = (self.mu, self.nu)
        else:
            mu, nu = (self.mu, 0.0)
        return LimitParams(mu=mu, nu=nu, eos=eos, elliptic_tol=self.elliptic_tol,
                           elliptic_max_iter=self.elliptic_max_iter)

    def base_state(self):
        """epsilon-independent data before any preparation."""
        g = self.grid()
        if self.ic_kind in ("general", "well_prepared"):
            state = general_data(self.ic_seed, self.ic_amplitude, self.ic_modes, g)
        elif self.ic_kind == "orszag_tang_like":
            state = orszag_tang_like(g)
        else:
            state = rest_state(g)
        if self.ic_entropy_height:
            center = (self.length / 2,) * self.dim
            state.S = state.S + entropy_bump(center, self.ic_entropy_width, self.ic_entropy_height, g)
        return state

    def initial_state(self):
        base = self.base_state()
        if self.ic_kind == "well_prepared":
            return well_prepared(base, self.epsilon)
        return base

    def limit_state(self):
        base = self.base_state()
        u = well_prepared(base, 0.0).u if self.ic_kind == "well_prepared" else base.u
        w0 = prepare_w0(base.grid, u, base.S, self.limit_params())
        return LimitState(grid=base.grid, S=base.S, v=w0, H=base.H)

    def echo(self):
        lines = []
        for key, attr, _ in _KEYS:
            lines.append(f"{key} = {getattr(self, attr)}")
        return "\n".join(lines) + "\n"


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text

    return parse


def _positive_int(text):
    value = int(text)
    if value < 0:
        raise ValueError("must be non-negative")
    return value


# (config key, attribute, parser)
_KEYS = [
    ("run_name", "run_name", str),
    ("out_dir", "out_dir", str),
    ("model", "model", _choice(MODELS)),
    ("variant", "variant", _choice([v.value for v in Variant])),
    ("epsilon", "epsilon", float),
    ("gamma", "gamma", float),
    ("p_bar", "p_bar", float),
    ("mu", "mu", float),
    ("lambda", "lam", float),
    ("mu_slope", "mu_slope", float),
    ("lambda_slope", "lam_slope", float),
    ("nu", "nu", float),
    ("dim", "dim", int),
    ("n", "n", int),
    ("L", "length", float),
    ("T", "T", float),
    ("cfl", "cfl", float),
    ("observer_stride", "observer_stride", _positive_int),
    ("checkpoint_every", "checkpoint_every", _positive_int),
    ("snapshot_every", "snapshot_every", _positive_int),
    ("wall_budget", "wall_budget", float),
    ("limit_variant", "limit_variant", _choice(LIMIT_VARIANTS)),
    ("elliptic_tol", "elliptic_tol", float),
    ("elliptic_max_iter", "elliptic_max_iter", _positive_int),
    ("sweep_samples", "sweep_samples", _positive_int),
    ("ic.kind", "ic_kind", _choice(IC_KINDS)),
    ("ic.seed", "ic_seed", int),
    ("ic.amplitude", "ic_amplitude", float),
    ("ic.modes", "ic_modes", _positive_int),
    ("ic.entropy_height", "ic_entropy_height", float),
    ("ic.entropy_width", "ic_entropy_width", float),
]
_BY_KEY = {key: (attr, parse) for key, attr, parse in _KEYS}


def parse_config_text(text):
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"expected key = value, got {raw.strip()!r}", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _BY_KEY:
            raise ConfigurationError(f"unknown key {key!r}", line=lineno)
        attr, parse = _BY_KEY[key]
        try:
            values[attr] = parse(value)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key}: {value!r} ({exc})", line=lineno) from None
        lines[attr] = lineno
    config = Config(**values)
    _validate(config, lines)
    return config


def _validate(config, lines):
    def fail(attr, message):
        raise ConfigurationError(message, line=lines.get(attr))

    try:
        config.grid()
    except ValueError as exc:
        fail("n", str(exc))
    if not 0 < config.epsilon <= 1:
        fail("epsilon", f"epsilon must lie in (0, 1], got {config.epsilon}; the scaled system is singular at 0")
    if config.T < 0:
        fail("T", "T must be non-negative")
    if not 0 < config.cfl <= 1:
        fail("cfl", "cfl must lie in (0, 1]")
    if config.ic_modes > config.n // 4:
        fail("ic_modes", f"ic.modes must not exceed n/4 = {config.n // 4}")
    try:
        config.phys_params()
    except ConfigurationError as exc:
        attr = "nu" if "nu" in str(exc) else "mu" if "mu" in str(exc) else "variant"
        if attr == "mu" and "mu" not in lines:
            attr = "mu_slope"
        raise ConfigurationError(str(exc), line=lines.get(attr, lines.get("variant"))) from None
    try:
        config.limit_params()
    except ValueError as exc:
        fail("mu", str(exc))


def parse_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text)


def config_to_meta(config):
    return {f.name: getattr(config, f.name) for f in fields(config)}


__all__ = ["Config", "parse_config", "parse_config_text", "config_to_meta"]
