"""Line-oriented run configuration: ``section.key = value``.

Complex numbers are written ``re,im``; lists of complex are separated by
semicolons (``problem.p = 0,0; 1,0`` is P = z).  ``#`` starts a comment and
blank lines are skipped.  Unknown keys are rejected with their line number,
as are malformed numbers and invariant violations.  Every value has a
documented default; ``auto`` selects the computed default for keys that
depend on other values (grid center, fit window, disk radii).  Parsing uses
plain float syntax only, so results do not depend on the process locale.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ConfigError

__all__ = ["RunSpec", "parse_config", "serialize_config"]


@dataclass(frozen=True)
class RunSpec:
    # problem
    p: tuple[complex, ...] = (0j, 1 + 0j)
    pdot: tuple[complex, ...] = (1 + 0j,)
    chart: str = "z"
    # grid
    grid_l: float = 6.0
    grid_n: int = 257
    grid_center: complex | None = None  # None -> half-cell offset (h/2, 0)
    # solver
    newton_tol: float = 1e-10
    max_newton: int = 50
    cg_rel_tol: float = 1e-12
    cg_max_iters: int | None = None  # None -> 10 n^2
    armijo_c1: float = 1e-4
    armijo_backtrack: float = 0.5
    armijo_max_halvings: int = 40
    # experiment
    t_list: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0)
    r0: float | None = None  # near-disk |phi_0|-radius; None -> default rule
    rho: float | None = None  # stokes disk radius; None -> 2L/3
    chi: tuple[complex, ...] = (1 + 0j,)
    disk_center: complex = 0j
    fit_rmin: float | None = None
    fit_rmax: float | None = None
    bins: int = 16
    stencil: int = 16
    workers: int = 1
    circle_samples: int | None = None  # None -> max(64, ceil(2 pi rho / h))
    x_list: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 12.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0)
    # output
    out_dir: str = "out"
    fields: tuple[str, ...] = ()
    formats: tuple[str, ...] = ("csv", "png")

    def grid_spacing(self) -> float:
        return 2.0 * self.grid_l / (self.grid_n - 1)

    def effective_center(self) -> complex:
        if self.grid_center is not None:
            return self.grid_center
        # half-cell offset keeps chart-origin zeros off the node lattice while
        # preserving the y -> -y node symmetry
        return complex(self.grid_spacing() / 2.0, 0.0)


def _parse_real(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"malformed number {text!r}") from None


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"malformed integer {text!r}") from None


def _parse_complex(text: str) -> complex:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"complex values are written re,im, got {text!r}")
    return complex(_parse_real(parts[0]), _parse_real(parts[1]))


def _parse_complex_list(text: str) -> tuple[complex, ...]:
    items = [s.strip() for s in text.split(";") if s.strip()]
    if not items:
        raise ConfigError("empty list")
    return tuple(_parse_complex(s) for s in items)


def _parse_real_list(text: str) -> tuple[float, ...]:
    items = [s.strip() for s in text.split(";") if s.strip()]
    if not items:
        raise ConfigError("empty list")
    return tuple(_parse_real(s) for s in items)


def _parse_str_list(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(";") if s.strip())


def _optional(parser):
    def parse(text: str):
        return None if text.strip() == "auto" else parser(text)

    return parse


# key -> (attribute, parser)
_KEYS = {
    "problem.p": ("p", _parse_complex_list),
    "problem.pdot": ("pdot", _parse_complex_list),
    "problem.chart": ("chart", lambda s: s.strip()),
    "grid.l": ("grid_l", _parse_real),
    "grid.n": ("grid_n", _parse_int),
    "grid.center": ("grid_center", _optional(_parse_complex)),
    "solver.newton_tol": ("newton_tol", _parse_real),
    "solver.max_newton": ("max_newton", _parse_int),
    "solver.cg_rel_tol": ("cg_rel_tol", _parse_real),
    "solver.cg_max_iters": ("cg_max_iters", _optional(_parse_int)),
    "solver.armijo_c1": ("armijo_c1", _parse_real),
    "solver.armijo_backtrack": ("armijo_backtrack", _parse_real),
    "solver.armijo_max_halvings": ("armijo_max_halvings", _parse_int),
    "experiment.t_list": ("t_list", _parse_real_list),
    "experiment.r0": ("r0", _optional(_parse_real)),
    "experiment.rho": ("rho", _optional(_parse_real)),
    "experiment.chi": ("chi", _parse_complex_list),
    "experiment.disk_center": ("disk_center", _parse_complex),
    "experiment.fit_rmin": ("fit_rmin", _optional(_parse_real)),
    "experiment.fit_rmax": ("fit_rmax", _optional(_parse_real)),
    "experiment.bins": ("bins", _parse_int),
    "experiment.stencil": ("stencil", _parse_int),
    "experiment.workers": ("workers", _parse_int),
    "experiment.circle_samples": ("circle_samples", _optional(_parse_int)),
    "experiment.x_list": ("x_list", _parse_real_list),
    "output.dir": ("out_dir", lambda s: s.strip()),
    "output.fields": ("fields", _parse_str_list),
    "output.formats": ("formats", _parse_str_list),
}

_KNOWN_FIELDS = ("u", "w", "f", "r")
_KNOWN_FORMATS = ("csv", "png")


def _validate(spec: RunSpec, lines: dict[str, int]) -> RunSpec:
    def fail(key: str, message: str):
        raise ConfigError(message, line=lines.get(key))

    if len(spec.p) == 0 or max(abs(a) for a in spec.p) == 0.0:
        fail("problem.p", "problem.p must be a nonzero polynomial")
    if len(spec.pdot) == 0:
        fail("problem.pdot", "problem.pdot must be nonempty")
    if spec.grid_n % 2 == 0 or spec.grid_n < 33:
        fail("grid.n", f"grid.n must be odd and >= 33, got {spec.grid_n}")
    if not (spec.grid_l > 0):
        fail("grid.l", f"grid.l must be positive, got {spec.grid_l}")
    for key, attr in (
        ("solver.newton_tol", "newton_tol"),
        ("solver.cg_rel_tol", "cg_rel_tol"),
        ("solver.armijo_c1", "armijo_c1"),
        ("solver.armijo_backtrack", "armijo_backtrack"),
    ):
        if not (getattr(spec, attr) > 0):
            fail(key, f"{key} must be positive")
    for key, attr in (
        ("solver.max_newton", "max_newton"),
        ("solver.armijo_max_halvings", "armijo_max_halvings"),
        ("experiment.bins", "bins"),
        ("experiment.workers", "workers"),
    ):
        if getattr(spec, attr) <= 0:
            fail(key, f"{key} must be positive")
    if spec.cg_max_iters is not None and spec.cg_max_iters <= 0:
        fail("solver.cg_max_iters", "solver.cg_max_iters must be positive or auto")
    if spec.stencil not in (8, 16):
        fail("experiment.stencil", f"experiment.stencil must be 8 or 16, got {spec.stencil}")
    if spec.bins < 8:
        fail("experiment.bins", "experiment.bins must be >= 8")
    if any(t <= 0 for t in spec.t_list) or any(
        b <= a for a, b in zip(spec.t_list, spec.t_list[1:])
    ):
        fail("experiment.t_list", "experiment.t_list must be positive and strictly increasing")
    if spec.rho is not None and not (0 < spec.rho < spec.grid_l):
        fail("experiment.rho", "experiment.rho must lie in (0, L)")
    if spec.r0 is not None and spec.r0 <= 0:
        fail("experiment.r0", "experiment.r0 must be positive")
    if spec.fit_rmin is not None and spec.fit_rmax is not None and spec.fit_rmin >= spec.fit_rmax:
        fail("experiment.fit_rmin", "fit window must have rmin < rmax")
    if spec.circle_samples is not None and spec.circle_samples < 16:
        fail("experiment.circle_samples", "experiment.circle_samples must be >= 16")
    for f in spec.fields:
        if f.lower() not in _KNOWN_FIELDS:
            fail("output.fields", f"unknown field {f!r}; known: {', '.join(_KNOWN_FIELDS)}")
    for f in spec.formats:
        if f.lower() not in _KNOWN_FORMATS:
            fail("output.formats", f"unknown format {f!r}; known: {', '.join(_KNOWN_FORMATS)}")
    return spec


def parse_config(text: str) -> RunSpec:
    """Parse config text into a RunSpec, filling documented defaults."""
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'section.key = value', got {raw.strip()!r}", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        attr, parser = _KEYS[key]
        try:
            values[attr] = parser(value)
        except ConfigError as exc:
            raise ConfigError(str(exc), line=lineno) from None
        lines[key] = lineno
    spec = replace(RunSpec(), **values)
    return _validate(spec, lines)


def _fmt_real(x: float) -> str:
    return repr(float(x))


def _fmt_complex(z: complex) -> str:
    return f"{_fmt_real(z.real)},{_fmt_real(z.imag)}"


def _fmt_value(key: str, value) -> str:
    if value is None:
        return "auto"
    if key in ("problem.p", "problem.pdot", "experiment.chi"):
        return "; ".join(_fmt_complex(z) for z in value)
    if key in ("experiment.t_list", "experiment.x_list"):
        return "; ".join(_fmt_real(x) for x in value)
    if key in ("grid.center", "experiment.disk_center"):
        return _fmt_complex(value)
    if key in ("output.fields", "output.formats"):
        return "; ".join(value)
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return _fmt_real(value)
    return str(value)


def serialize_config(spec: RunSpec) -> str:
    """Canonical text form; reparses to an identical RunSpec."""
    out = []
    for key, (attr, _) in _KEYS.items():
        out.append(f"{key} = {_fmt_value(key, getattr(spec, attr))}")
    return "\n".join(out) + "\n"
