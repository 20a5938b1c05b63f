"""Two-coordinate potentials h(x, y) on the unit square.

A potential on the XY model that only looks at the first two coordinates,
phi(x) = h(x0, x1), is described by a :class:`PotentialSpec`. Specs are
immutable, hashable and serialize to plain dictionaries (and from there to
JSON) without loss.

Three kinds exist:

``builtin``
    A named closed form (``projection``, ``product``, ``squared_difference``,
    ``squared_difference_plus_well``) or a one-variable perturbation profile
    (``well``, ``cosine_well``).
``polynomial``
    ``sum_ij coeffs[i][j] * x**i * y**j`` with a declared degree.
``sum``
    ``base + epsilon * perturbation`` where the perturbation depends on the
    first coordinate only.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from numpy.polynomial import polynomial as P

FD_STEP = 1e-5
LIPSCHITZ_SAFETY = 1.05
MIN_CERT_DENSITY = 64

TWO_D_BUILTINS = {
    "projection": 0,
    "product": 0,
    "squared_difference": 0,
    "squared_difference_plus_well": 1,
}
ONE_D_BUILTINS = {
    "well": 1,
    "cosine_well": 1,
}
_DEFAULT_PARAMS = {
    "squared_difference_plus_well": (0.5,),
    "well": (0.5,),
    "cosine_well": (0.5,),
}
KINDS = ("builtin", "polynomial", "sum")


class DomainError(ValueError):
    """Raised when a potential is evaluated outside [0, 1]^2."""


class SpecError(ValueError):
    """Raised for malformed potential specifications."""


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    name: str | None = None
    params: tuple[float, ...] = ()
    coeffs: tuple[tuple[float, ...], ...] | None = None
    base: PotentialSpec | None = None
    perturbation: PotentialSpec | None = None
    epsilon: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown potential kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind == "builtin":
            table = {**TWO_D_BUILTINS, **ONE_D_BUILTINS}
            if self.name not in table:
                raise SpecError(f"unknown builtin potential {self.name!r}")
            if not self.params and self.name in _DEFAULT_PARAMS:
                object.__setattr__(self, "params", _DEFAULT_PARAMS[self.name])
            if len(self.params) != table[self.name]:
                raise SpecError(
                    f"builtin {self.name!r} takes {table[self.name]} parameter(s), "
                    f"got {len(self.params)}"
                )
        elif self.kind == "polynomial":
            if self.coeffs is None:
                raise SpecError("polynomial potential needs coeffs")
            rows = tuple(tuple(float(c) for c in row) for row in self.coeffs)
            width = len(rows)
            if width == 0 or any(len(row) != width for row in rows):
                raise SpecError("polynomial coeffs must be a non-empty square table")
            if not all(math.isfinite(c) for row in rows for c in row):
                raise SpecError("polynomial coeffs must be finite")
            object.__setattr__(self, "coeffs", rows)
        else:
            if self.base is None or self.perturbation is None:
                raise SpecError("sum potential needs base and perturbation")
            if not depends_on_first_only(self.perturbation):
                raise SpecError("perturbation must depend on the first coordinate only")
            if not math.isfinite(self.epsilon) or self.epsilon < 0:
                raise SpecError("epsilon must be finite and >= 0")
            object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def degree(self) -> int | None:
        if self.coeffs is None:
            return None
        return len(self.coeffs) - 1

    def __call__(self, x, y):
        return evaluate(self, x, y)


@dataclass(frozen=True)
class TwistCertificate:
    passed: bool
    max_mixed_partial: float
    sample_density: int
    margin: float


@dataclass(frozen=True)
class LipschitzBound:
    l_planar: float
    l_shift: float
    safety_factor: float = LIPSCHITZ_SAFETY


@dataclass(frozen=True)
class SampledFunction:
    x: np.ndarray
    values: np.ndarray

    def argmin(self) -> float:
        return float(self.x[int(np.argmin(self.values))])


# -- constructors -----------------------------------------------------------


def builtin(name: str, *params: float) -> PotentialSpec:
    return PotentialSpec(kind="builtin", name=name, params=tuple(params))


def polynomial(coeffs) -> PotentialSpec:
    """Polynomial potential from a square table, ``coeffs[i][j]`` multiplying x^i y^j."""
    arr = np.asarray(coeffs, dtype=float)
    if arr.ndim != 2:
        raise SpecError("coeffs must be two-dimensional")
    k = max(arr.shape)
    table = np.zeros((k, k))
    table[: arr.shape[0], : arr.shape[1]] = arr
    return PotentialSpec(kind="polynomial", coeffs=tuple(map(tuple, table.tolist())))


def perturb(base: PotentialSpec, v: PotentialSpec, epsilon: float) -> PotentialSpec:
    """Return the potential ``h(x, y) + epsilon * V(x)``."""
    if epsilon < 0:
        raise SpecError("epsilon must be >= 0")
    return PotentialSpec(kind="sum", base=base, perturbation=v, epsilon=epsilon)


def depends_on_first_only(spec: PotentialSpec) -> bool:
    if spec.kind == "builtin":
        return spec.name in ONE_D_BUILTINS or spec.name == "projection"
    if spec.kind == "polynomial":
        c = np.asarray(spec.coeffs)
        return bool(np.all(c[:, 1:] == 0.0))
    return depends_on_first_only(spec.base) and depends_on_first_only(spec.perturbation)


# -- polynomial backbone ----------------------------------------------------


def _builtin_coeffs(name: str, params: tuple[float, ...]) -> np.ndarray | None:
    c = np.zeros((3, 3))
    if name == "projection":
        c[1, 0] = 1.0
    elif name == "product":
        c[1, 1] = -1.0
    elif name == "squared_difference":
        c[2, 0], c[1, 1], c[0, 2] = 1.0, -2.0, 1.0
    elif name == "squared_difference_plus_well":
        (a,) = params
        c[2, 0], c[1, 1], c[0, 2] = 2.0, -2.0, 1.0
        c[1, 0], c[0, 0] = -2.0 * a, a * a
    elif name == "well":
        (a,) = params
        c[2, 0], c[1, 0], c[0, 0] = 1.0, -2.0 * a, a * a
    else:
        return None
    return c


@lru_cache(maxsize=256)
def _poly_table(spec: PotentialSpec) -> np.ndarray | None:
    if spec.kind == "builtin":
        c = _builtin_coeffs(spec.name, spec.params)
    elif spec.kind == "polynomial":
        c = np.array(spec.coeffs, dtype=float)
    else:
        cb, cp = _poly_table(spec.base), _poly_table(spec.perturbation)
        if cb is None or cp is None:
            return None
        k = max(cb.shape[0], cp.shape[0])
        c = np.zeros((k, k))
        c[: cb.shape[0], : cb.shape[1]] += cb
        c[: cp.shape[0], : cp.shape[1]] += spec.epsilon * cp
    if c is not None:
        c.setflags(write=False)
    return c


def polynomial_coeffs(spec: PotentialSpec) -> np.ndarray | None:
    """Monomial coefficient table of ``spec``, or None if it is not polynomial."""
    c = _poly_table(spec)
    return None if c is None else c.copy()


def as_polynomial(spec: PotentialSpec) -> PotentialSpec:
    c = _poly_table(spec)
    if c is None:
        raise SpecError("potential is not polynomial")
    return polynomial(c)


def is_polynomial(spec: PotentialSpec) -> bool:
    return _poly_table(spec) is not None


# -- evaluation -------------------------------------------------------------


def _check_domain(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(~np.isfinite(y)):
        raise DomainError("non-finite argument")
    if np.any((x < 0.0) | (x > 1.0)) or np.any((y < 0.0) | (y > 1.0)):
        raise DomainError("arguments must lie in [0, 1]")
    return x, y


def _raw_eval(spec: PotentialSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    c = _poly_table(spec)
    if c is not None:
        return P.polyval2d(x, y, c)
    if spec.kind == "builtin":
        if spec.name == "cosine_well":
            (a,) = spec.params
            return np.cos(2.0 * np.pi * (x - a) + np.pi) + 0.0 * y
        raise SpecError(f"no evaluator for {spec.name!r}")  # pragma: no cover
    return _raw_eval(spec.base, x, y) + spec.epsilon * _raw_eval(spec.perturbation, x, y)


def evaluate(spec: PotentialSpec, x, y):
    """Evaluate h(x, y); scalars in give a float out, arrays broadcast."""
    x, y = _check_domain(x, y)
    out = _raw_eval(spec, x, y)
    return float(out) if np.ndim(out) == 0 else out


def _fd_partial(spec, x, y, axis, step=FD_STEP):
    # central differences; one-sided second-order stencils within step of the edge
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t = x if axis == 0 else y

    def f(tt):
        return _raw_eval(spec, tt, y) if axis == 0 else _raw_eval(spec, x, tt)

    tc = np.clip(t, step, 1 - step)
    central = (f(tc + step) - f(tc - step)) / (2 * step)
    tf = np.clip(t, 0.0, 1 - 2 * step)
    fwd = (-3 * f(tf) + 4 * f(tf + step) - f(tf + 2 * step)) / (2 * step)
    tb = np.clip(t, 2 * step, 1.0)
    bwd = (3 * f(tb) - 4 * f(tb - step) + f(tb - 2 * step)) / (2 * step)
    return np.where(t - step < 0, fwd, np.where(t + step > 1, bwd, central))


def _raw_grad(spec, x, y):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    c = _poly_table(spec)
    if c is not None:
        return (P.polyval2d(x, y, P.polyder(c, axis=0)),
                P.polyval2d(x, y, P.polyder(c, axis=1)))
    if spec.kind == "sum":
        b1, b2 = _raw_grad(spec.base, x, y)
        p1, p2 = _raw_grad(spec.perturbation, x, y)
        return b1 + spec.epsilon * p1, b2 + spec.epsilon * p2
    d1 = _fd_partial(spec, x, y, 0)
    d2 = _fd_partial(spec, x, y, 1) if not depends_on_first_only(spec) else np.zeros_like(d1)
    return d1, d2


def gradient(spec: PotentialSpec, x, y):
    """First partials (D1 h, D2 h) at (x, y)."""
    x, y = _check_domain(x, y)
    x, y = np.broadcast_arrays(x, y)
    d1, d2 = _raw_grad(spec, x, y)
    if np.ndim(d1) == 0:
        return float(d1), float(d2)
    return d1, d2


def _raw_mixed(spec, x, y, step=FD_STEP):
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    c = _poly_table(spec)
    if c is not None:
        return P.polyval2d(x, y, P.polyder(P.polyder(c, axis=0), axis=1)) + 0.0 * x
    if spec.kind == "sum":
        return _raw_mixed(spec.base, x, y) + spec.epsilon * _raw_mixed(spec.perturbation, x, y)
    if depends_on_first_only(spec):
        return np.zeros(np.broadcast(x, y).shape)
    xs = np.clip(x, step, 1 - step)
    ys = np.clip(y, step, 1 - step)
    f = lambda a, b: _raw_eval(spec, a, b)  # noqa: E731
    return (f(xs + step, ys + step) - f(xs + step, ys - step)
            - f(xs - step, ys + step) + f(xs - step, ys - step)) / (4 * step * step)


def mixed_partial(spec: PotentialSpec, x, y):
    """D2 D1 h at (x, y)."""
    x, y = _check_domain(x, y)
    out = _raw_mixed(spec, *np.broadcast_arrays(x, y))
    return float(out) if np.ndim(out) == 0 else out


# -- certificates -----------------------------------------------------------


def _sample_square(density: int):
    t = np.linspace(0.0, 1.0, density)
    return np.meshgrid(t, t, indexing="ij")


def certify_twist(spec: PotentialSpec, density: int = 128) -> TwistCertificate:
    """Sample D2 D1 h on a ``density`` x ``density`` grid.

    The certificate passes iff every sample is strictly negative. A failing
    certificate is a normal return value.
    """
    if density < MIN_CERT_DENSITY:
        raise ValueError(f"density must be >= {MIN_CERT_DENSITY}")
    xx, yy = _sample_square(density)
    top = float(np.max(_raw_mixed(spec, xx, yy)))
    return TwistCertificate(passed=top < 0.0, max_mixed_partial=top,
                            sample_density=density, margin=abs(top))


def lipschitz_bound(spec: PotentialSpec, density: int = 128) -> LipschitzBound:
    if density < MIN_CERT_DENSITY:
        raise ValueError(f"density must be >= {MIN_CERT_DENSITY}")
    xx, yy = _sample_square(density)
    d1, d2 = _raw_grad(spec, xx, yy)
    l_planar = LIPSCHITZ_SAFETY * float(np.max(np.hypot(d1, d2)))
    # |phi(x) - phi(y)| <= L |.|_2 <= 2 L d(x, y) on the shift space
    return LipschitzBound(l_planar=l_planar, l_shift=2.0 * l_planar)


def diag_profile(spec: PotentialSpec, density: int) -> SampledFunction:
    """Samples of g(a) = h(a, a) on ``density`` equally spaced points of [0, 1]."""
    if density < 2:
        raise ValueError("density must be >= 2")
    a = np.linspace(0.0, 1.0, density)
    return SampledFunction(x=a, values=np.asarray(_raw_eval(spec, a, a), dtype=float))


def diagonal(spec: PotentialSpec, a):
    """g(a) = h(a, a)."""
    return evaluate(spec, a, a)


# -- serialization ----------------------------------------------------------

_ALLOWED_KEYS = {
    "builtin": {"kind", "name", "params"},
    "polynomial": {"kind", "degree", "coeffs"},
    "sum": {"kind", "base", "perturbation", "epsilon"},
}


def to_dict(spec: PotentialSpec) -> dict:
    if spec.kind == "builtin":
        d = {"kind": "builtin", "name": spec.name}
        if spec.params:
            d["params"] = list(spec.params)
        return d
    if spec.kind == "polynomial":
        return {"kind": "polynomial", "degree": spec.degree,
                "coeffs": [list(row) for row in spec.coeffs]}
    return {"kind": "sum", "base": to_dict(spec.base),
            "perturbation": to_dict(spec.perturbation), "epsilon": spec.epsilon}


def from_dict(d: dict, where: str = "potential") -> PotentialSpec:
    if not isinstance(d, dict):
        raise SpecError(f"{where}: expected an object")
    kind = d.get("kind")
    if kind not in _ALLOWED_KEYS:
        raise SpecError(f"{where}.kind: unknown kind {kind!r}")
    extra = set(d) - _ALLOWED_KEYS[kind]
    if extra:
        raise SpecError(f"{where}: unknown key(s) {sorted(extra)}")
    if kind == "builtin":
        if "name" not in d:
            raise SpecError(f"{where}.name: missing")
        return PotentialSpec(kind="builtin", name=d["name"], params=tuple(d.get("params", ())))
    if kind == "polynomial":
        if "coeffs" not in d:
            raise SpecError(f"{where}.coeffs: missing")
        spec = PotentialSpec(kind="polynomial", coeffs=tuple(tuple(r) for r in d["coeffs"]))
        if "degree" in d and d["degree"] != spec.degree:
            raise SpecError(f"{where}.degree: declared {d['degree']} but coeffs give {spec.degree}")
        return spec
    for key in ("base", "perturbation"):
        if key not in d:
            raise SpecError(f"{where}.{key}: missing")
    return PotentialSpec(kind="sum", base=from_dict(d["base"], where + ".base"),
                         perturbation=from_dict(d["perturbation"], where + ".perturbation"),
                         epsilon=float(d.get("epsilon", 0.0)))


def describe(spec: PotentialSpec) -> str:
    if spec.kind == "builtin":
        forms = {
            "projection": "x",
            "product": "-x*y",
            "squared_difference": "(x-y)^2",
            "squared_difference_plus_well": "(x-y)^2+(x-{0})^2",
            "well": "(x-{0})^2",
            "cosine_well": "cos(2pi(x-{0})+pi)",
        }
        return forms[spec.name].format(*spec.params)
    if spec.kind == "polynomial":
        return f"polynomial(degree={spec.degree})"
    return f"{describe(spec.base)} + {spec.epsilon!r}*[{describe(spec.perturbation)}]"
