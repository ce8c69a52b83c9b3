"""Generator functions of matrix-variate elliptical distributions.

A model ``h`` enters every series through its derivative sequence
``h^(k)(c)``, which is returned as ``(sign, log|value|)`` because degree
~150 values are far outside double range.

Supported generators (``mn = m * n``):

* ``gaussian``: ``h(y) = exp(-y/2) / (2 pi)^(mn/2)``
* ``t``: ``h(y) = G((mn+rho)/2) / ((pi rho)^(mn/2) G(rho/2)) (1 + y/rho)^(-(mn+rho)/2)``
* ``kotz1``: ``h(y) = A y^(q-1) exp(-theta y)`` with
  ``A = theta^((2q+mn-2)/2) G(mn/2) / (pi^(mn/2) G((2q+mn-2)/2))``
* ``exponential``: ``h(y) = exp(y)``, which turns the ``P`` series into the
  classical hypergeometric ``F`` series.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .numerics import signed_log_sum

LOG_PI = math.log(math.pi)
KINDS = ("gaussian", "t", "kotz1", "exponential")


class ModelError(ValueError):
    """Invalid generator parameters or model specification."""


class BoundUnavailable(ModelError):
    """The uniform derivative bound is not certified for these parameters."""


@dataclass(frozen=True)
class GeneratorModel:
    kind: str
    m: int = 1
    n: int = 1
    rho: float | None = None
    theta: float | None = None
    q: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown generator kind {self.kind!r}")
        if self.m < 1 or self.n < 1:
            raise ModelError("dimensions must be positive")
        if self.kind == "t" and not (self.rho is not None and self.rho > 0):
            raise ModelError("matrix-t needs rho > 0")
        if self.kind == "kotz1":
            if self.theta is None or not self.theta > 0:
                raise ModelError("Kotz type I needs theta > 0")
            if self.q is None or int(self.q) != self.q or self.q < 1:
                raise ModelError("Kotz type I is implemented for integer q >= 1 only")
            if not 2 * self.q + self.m * self.n > 2:
                raise ModelError("Kotz type I needs 2q + mn > 2")

    @classmethod
    def gaussian(cls, m, n):
        return cls("gaussian", m, n)

    @classmethod
    def matrix_t(cls, rho, m, n):
        return cls("t", m, n, rho=float(rho))

    @classmethod
    def kotz1(cls, theta, q, m, n):
        return cls("kotz1", m, n, theta=float(theta), q=int(q))

    @classmethod
    def exponential(cls, m=1, n=1):
        return cls("exponential", m, n)

    @property
    def mn(self) -> int:
        return self.m * self.n

    def with_dims(self, m, n) -> "GeneratorModel":
        return GeneratorModel(self.kind, m, n, self.rho, self.theta, self.q)

    def __str__(self):
        if self.kind == "t":
            return f"t:rho={self.rho:g}"
        if self.kind == "kotz1":
            return f"kotz1:theta={self.theta:g},q={self.q}"
        return self.kind

    # -- direct evaluation -------------------------------------------------

    def log_norm(self) -> float:
        """log of the constant in front of the functional form."""
        mn = self.mn
        if self.kind == "gaussian":
            return -0.5 * mn * math.log(2 * math.pi)
        if self.kind == "t":
            a = 0.5 * (mn + self.rho)
            return math.lgamma(a) - math.lgamma(0.5 * self.rho) - 0.5 * mn * math.log(math.pi * self.rho)
        if self.kind == "kotz1":
            s = 0.5 * (2 * self.q + mn - 2)
            return s * math.log(self.theta) + math.lgamma(0.5 * mn) - 0.5 * mn * LOG_PI - math.lgamma(s)
        return 0.0

    def __call__(self, y):
        """``h(y)``, coded directly from the functional form."""
        y = np.asarray(y, dtype=float)
        c = math.exp(self.log_norm())
        if self.kind == "gaussian":
            out = c * np.exp(-0.5 * y)
        elif self.kind == "t":
            out = c * (1.0 + y / self.rho) ** (-0.5 * (self.mn + self.rho))
        elif self.kind == "kotz1":
            out = c * y ** (self.q - 1) * np.exp(-self.theta * y)
        else:
            out = np.exp(y)
        return float(out) if out.ndim == 0 else out


def parse_model(text: str, m: int, n: int) -> GeneratorModel:
    """Parse ``gaussian``, ``t:rho=7`` or ``kotz1:theta=0.5,q=2``."""
    text = text.strip()
    head, _, tail = text.partition(":")
    params = {}
    if tail:
        for item in tail.split(","):
            match = re.fullmatch(r"\s*(\w+)\s*=\s*([-+0-9.eE]+)\s*", item)
            if not match:
                raise ModelError(f"cannot parse model parameter {item!r} in {text!r}")
            try:
                params[match.group(1)] = float(match.group(2))
            except ValueError as exc:
                raise ModelError(f"bad number in {text!r}") from exc
    kind = head.strip().lower()
    aliases = {"normal": "gaussian", "matrix-t": "t", "kotz": "kotz1", "exp": "exponential"}
    kind = aliases.get(kind, kind)
    expected = {"gaussian": set(), "exponential": set(), "t": {"rho"}, "kotz1": {"theta", "q"}}
    if kind not in expected:
        raise ModelError(f"unknown model {head!r}")
    if set(params) != expected[kind]:
        raise ModelError(f"model {kind!r} takes parameters {sorted(expected[kind])}, got {sorted(params)}")
    if kind == "kotz1" and params["q"] != int(params["q"]):
        raise ModelError("Kotz type I is implemented for integer q only")
    q = int(params["q"]) if "q" in params else None
    return GeneratorModel(kind, m, n, rho=params.get("rho"), theta=params.get("theta"), q=q)


def shift_allowed(model: GeneratorModel, c: float) -> bool:
    """Whether ``h^(k)(c)`` is defined: entire generators accept any real ``c``."""
    if model.kind in ("gaussian", "exponential"):
        return math.isfinite(c)
    if model.kind == "t":
        return c > -model.rho
    return c >= 0 or model.q == 1


def derivative_sequence(model: GeneratorModel, kmax: int, c: float = 0.0):
    """``h^(k)(c)`` for ``k = 0..kmax`` as arrays ``(sign, log|value|)``."""
    if kmax < 0:
        raise ModelError("derivative order must be non-negative")
    if not shift_allowed(model, c):
        raise ModelError(f"shift {c:g} is outside the domain of the {model.kind} generator")
    k = np.arange(kmax + 1, dtype=float)
    alt = np.where(k % 2 == 0, 1.0, -1.0)
    base = model.log_norm()
    if model.kind == "gaussian":
        return alt, base - k * math.log(2.0) - 0.5 * c
    if model.kind == "t":
        rho = model.rho
        a = 0.5 * (model.mn + rho)
        logs = base + gammaln(a + k) - gammaln(a) - k * math.log(rho) - (a + k) * math.log1p(c / rho)
        return alt, logs
    if model.kind == "exponential":
        return np.ones_like(k), np.full_like(k, c)
    return _kotz_sequence(model, kmax, c, base)


def _kotz_sequence(model, kmax, c, base):
    # Leibniz: d^k [x^(q-1) e^(-theta x)] = sum_j C(k,j) (q-1)!/(q-1-j)! x^(q-1-j) (-theta)^(k-j) e^(-theta x)
    q, theta = model.q, model.theta
    signs = np.zeros(kmax + 1)
    logs = np.full(kmax + 1, -np.inf)
    for k in range(kmax + 1):
        ts, tl = [], []
        for j in range(min(k, q - 1) + 1):
            power = q - 1 - j
            if power > 0 and c == 0.0:
                continue
            lv = (
                math.lgamma(k + 1) - math.lgamma(j + 1) - math.lgamma(k - j + 1)
                + math.lgamma(q) - math.lgamma(q - j)
                + (power * math.log(c) if power > 0 else 0.0)
                + (k - j) * math.log(theta)
            )
            ts.append(-1.0 if (k - j) % 2 else 1.0)
            tl.append(lv)
        if ts:
            s, lv = signed_log_sum(ts, tl)
            signs[k] = s
            logs[k] = lv + base - theta * c
    return signs, logs


def h_derivative_at(model: GeneratorModel, k: int, c: float = 0.0) -> tuple[float, float]:
    """``h^(k)(c)`` as ``(sign, log|value|)``; sign 0 marks an exact zero."""
    if k < 0:
        raise ModelError("derivative order must be non-negative")
    s, lv = derivative_sequence(model, k, c)
    return float(s[k]), float(lv[k])


def h_derivative_at_zero(model: GeneratorModel, k: int) -> tuple[float, float]:
    return h_derivative_at(model, k, 0.0)


def derivative_bound(model: GeneratorModel) -> float:
    """Constant ``M`` with ``|h^(k)(0)| <= M`` as stated for each model.

    Raises ``BoundUnavailable`` when the stated preconditions fail
    (matrix-t with ``mn > rho``, Kotz with ``theta >= 1``).
    """
    mn = model.mn
    if model.kind == "gaussian":
        return (2 * math.pi) ** (-0.5 * mn)
    if model.kind == "exponential":
        return 1.0
    if model.kind == "t":
        if mn > model.rho:
            raise BoundUnavailable(f"matrix-t bound needs mn <= rho (mn={mn}, rho={model.rho:g})")
        return math.pi ** (-0.5 * mn)
    if not model.theta < 1:
        raise BoundUnavailable(f"Kotz bound needs theta < 1 (theta={model.theta:g})")
    return math.pi ** (-0.5 * mn)


def bound_violations(model: GeneratorModel, kmax: int = 500) -> list[int]:
    """Orders ``k <= kmax`` at which ``|h^(k)(0)|`` exceeds ``derivative_bound``.

    The stated bound is asymptotic; for matrix-t the sequence actually grows
    like ``G(a+k)/rho^k`` and leaves the bound after a few orders.  Callers
    treat a non-empty result as a diagnostic.
    """
    bound = math.log(derivative_bound(model))
    s, lv = derivative_sequence(model, kmax, 0.0)
    return [int(k) for k in np.flatnonzero((s != 0) & (lv > bound + 1e-12))]
