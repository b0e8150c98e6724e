"""File-size laws: exponential (E), exponential body with a Pareto tail (EP)
and exponential body with an exponential tail (EE).

Sizes are in packets.  Every law has a minimum size A and survival
G(x) = P(X > x) = 1 for x < A.  For EP and EE the body is exponential up to
the knee k, where G(k) = H, and the tail takes over beyond it.
"""
import json
import math
from dataclasses import asdict, dataclass

from ._validation import InvalidParameters, check_fraction, check_positive

KINDS = ("E", "EP", "EE")

DEFAULT_A = 3.0
DEFAULT_H = 0.1
DEFAULT_ALPHA = 1.5
# omega used for the EE law when the caller does not give one
DEFAULT_OMEGA = 7.0


@dataclass(frozen=True)
class SizeDistribution:
    kind: str
    mean: float
    A: float
    B: float
    k: float | None = None
    H: float | None = None
    alpha: float | None = None
    C: float | None = None
    omega: float | None = None

    def survival(self, x):
        return survival(self, x)

    def inverse_survival(self, u):
        return inverse_survival(self, u)

    def sample(self, u):
        return sample(self, u)

    def mean_above_tail(self, H):
        return mean_above_tail(self, H)

    def analytic_mean(self):
        return self.A + tail_integral(self, self.A)

    def describe(self):
        d = asdict(self)
        return {key: val for key, val in d.items() if val is not None}

    def to_config(self):
        cfg = {"kind": self.kind, "mean": self.mean, "A": self.A}
        if self.kind in ("EP", "EE"):
            cfg["H"] = self.H
        if self.kind == "EP":
            cfg["alpha"] = self.alpha
        if self.kind == "EE":
            cfg["omega"] = self.omega
        return cfg

    def to_json(self):
        return json.dumps(self.to_config(), sort_keys=True)


def derive_exponential(mean, A=DEFAULT_A):
    check_positive("mean", mean)
    check_positive("A", A)
    if A < 1:
        raise InvalidParameters(f"A must be >= 1, got {A}")
    if mean <= A:
        raise InvalidParameters(f"mean ({mean}) must exceed the minimum size A ({A})")
    return SizeDistribution("E", float(mean), float(A), float(mean - A))


def derive_exp_pareto(mean, A=DEFAULT_A, alpha=DEFAULT_ALPHA, H=DEFAULT_H):
    check_positive("mean", mean)
    check_positive("A", A)
    check_fraction("H", H)
    if not alpha > 1:
        raise InvalidParameters(f"alpha must be > 1, got {alpha}")
    num = mean - A * (1 + H / (alpha - 1))
    den = 1 - H - H * math.log(H) / (alpha - 1)
    B = num / den
    if not B > 0:
        raise InvalidParameters(f"mean {mean} too small for an EP law with A={A}, H={H}, alpha={alpha}")
    k = A - B * math.log(H)
    return SizeDistribution("EP", float(mean), float(A), B, k=k, H=float(H), alpha=float(alpha))


def exp_exp_omega_bound(mean, A=DEFAULT_A, H=DEFAULT_H):
    """Largest admissible omega (exclusive) for the EE law."""
    return (mean - A) / (H * mean)


def derive_exp_exp(mean, A=DEFAULT_A, H=DEFAULT_H, omega=DEFAULT_OMEGA):
    check_positive("mean", mean)
    check_positive("A", A)
    check_fraction("H", H)
    check_positive("omega", omega)
    if mean <= A:
        raise InvalidParameters(f"mean ({mean}) must exceed the minimum size A ({A})")
    bound = exp_exp_omega_bound(mean, A, H)
    if omega >= bound:
        raise InvalidParameters(f"omega must be < {bound:.6g} for mean={mean}, got {omega}")
    C = omega * mean
    B = (mean - A - C * H) / (1 - H)
    k = A - B * math.log(H)
    return SizeDistribution("EE", float(mean), float(A), B, k=k, H=float(H), C=C, omega=float(omega))


def make_distribution(kind, mean, A=DEFAULT_A, H=DEFAULT_H, alpha=DEFAULT_ALPHA, omega=DEFAULT_OMEGA):
    kind = kind.upper()
    if kind == "E":
        return derive_exponential(mean, A)
    if kind == "EP":
        return derive_exp_pareto(mean, A, alpha, H)
    if kind == "EE":
        return derive_exp_exp(mean, A, H, omega)
    raise InvalidParameters(f"unknown distribution kind {kind!r}; expected one of {KINDS}")


def from_config(cfg):
    cfg = dict(cfg)
    kind = cfg.pop("kind")
    mean = cfg.pop("mean")
    return make_distribution(kind, mean, **cfg)


def survival(dist, x):
    """G(x) = P(X > x)."""
    if x < dist.A:
        return 1.0
    if dist.kind == "E" or x <= dist.k:
        return math.exp(-(x - dist.A) / dist.B)
    if dist.kind == "EP":
        return dist.H * (dist.k / x) ** dist.alpha
    return dist.H * math.exp(-(x - dist.k) / dist.C)


def inverse_survival(dist, u):
    """Continuous x with G(x) = u; returns A for u >= 1."""
    if u >= 1.0:
        return dist.A
    if u <= 0.0:
        return math.inf
    if dist.kind == "E" or u >= dist.H:
        return dist.A - dist.B * math.log(u)
    if dist.kind == "EP":
        return dist.k * (dist.H / u) ** (1.0 / dist.alpha)
    return dist.k - dist.C * math.log(u / dist.H)


def sample(dist, u):
    """Integer file size for a uniform variate u in (0, 1).

    Rounds the continuous inverse to the nearest integer (halves go up) and
    clamps to the minimum size.
    """
    x = inverse_survival(dist, u)
    n = math.floor(x + 0.5)
    return max(int(n), int(math.ceil(dist.A)))


def tail_integral(dist, x0):
    """Integral of G from x0 to infinity (x0 >= A)."""
    x0 = max(x0, dist.A)
    if dist.kind == "E":
        return dist.B * math.exp(-(x0 - dist.A) / dist.B)
    total = 0.0
    if x0 < dist.k:
        total += dist.B * (math.exp(-(x0 - dist.A) / dist.B) - dist.H)
        x0 = dist.k
    if dist.kind == "EP":
        a = dist.alpha
        total += dist.H * dist.k ** a * x0 ** (1 - a) / (a - 1)
    else:
        total += dist.C * dist.H * math.exp(-(x0 - dist.k) / dist.C)
    return total


def mean_above_tail(dist, H):
    """Average size of the files in the top-H probability mass.

    k_H is the size with G(k_H) = H; the conditional mean beyond it is
    k_H + (1/H) * integral of G from k_H to infinity.
    """
    check_fraction("H", H)
    kH = inverse_survival(dist, H)
    return kH + tail_integral(dist, kH) / H
