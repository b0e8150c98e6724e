"""Simulation scenarios and the run-label shorthand.

A label is a dash-separated list of tokens in any order, e.g.
``100M10M2M-R50-W44-B200-F12-EE7-N134``:

    100M10M2M   capacities C1 C2 C3 (k/M/G suffixes, ``inf`` allowed);
                two values mean C2 C3 with C1 = 100M
    R50         empty-path round trip RTT0 in ms (propagation is derived)
    D300ms      round-trip propagation delay in ms (alternative to R)
    P576B       data packet size in bytes
    a40B        ack size in bytes
    W44         receiver window in packets
    B200        bottleneck buffer in packets (Binf = unbounded)
    F12         mean file size in packets
    E | EP | EP1.5 | EE7 | EE(7)   size law; without one every file has exactly F packets
    N134        number of sources
    OFF1000ms   mean OFF time
    Nc5000      connections to complete
    seed7       RNG seed
    minrto200ms minimum RTO
"""
import json
import math
import re
from dataclasses import asdict, dataclass, replace

from .._validation import InvalidParameters
from ..dist import make_distribution
from ..model.path import path_from_rtt0, path_params

DEFAULT_C1 = 100e6
DEFAULT_P = 1500
DEFAULT_A = 40
DEFAULT_OFF = 1.0
DEFAULT_W_R = 44

_UNITS = {"": 1.0, "k": 1e3, "M": 1e6, "G": 1e9}
_CAP = r"(?:inf|\d+(?:\.\d+)?[kMG])"
_CAP_RE = re.compile(rf"^({_CAP})({_CAP})({_CAP})?$")


class ScenarioError(InvalidParameters):
    """Unknown or conflicting token in a scenario label or config."""


def parse_capacity(text):
    if text == "inf":
        return math.inf
    m = re.fullmatch(r"(\d+(?:\.\d+)?)([kMG]?)", text)
    if not m:
        raise ScenarioError(f"bad capacity {text!r}")
    return float(m.group(1)) * _UNITS[m.group(2)]


def format_capacity(c):
    if math.isinf(c):
        return "inf"
    for unit in ("G", "M", "k"):
        v = c / _UNITS[unit]
        if v >= 1 and abs(round(v, 6) - v) < 1e-9:
            return f"{v:g}{unit}"
    return f"{c:g}"


def _ms(x):
    return f"{x * 1000:.10g}"


@dataclass(frozen=True)
class Scenario:
    N: int
    C1: float = DEFAULT_C1
    C2: float = 10e6
    C3: float = 2e6
    RTT0: float | None = 0.05
    D: float | None = None
    P: int = DEFAULT_P
    a: int = DEFAULT_A
    W_R: int = DEFAULT_W_R
    B: int | None = None
    F: float = 12
    dist: str | None = "E"
    omega: float | None = None
    alpha: float | None = None
    OFF: float = DEFAULT_OFF
    Nc: int | None = None
    seed: int = 1
    min_rto: float = 1.0
    max_rto: float = 64.0
    trace: bool = False

    def __post_init__(self):
        if (self.RTT0 is None) == (self.D is None):
            raise ScenarioError("give exactly one of RTT0 or D")
        if self.N < 1:
            raise ScenarioError(f"N must be >= 1, got {self.N}")
        if self.B is not None and self.B < 1:
            raise ScenarioError(f"B must be >= 1 or unbounded, got {self.B}")
        if self.Nc is not None and self.Nc < 1:
            raise ScenarioError(f"Nc must be >= 1, got {self.Nc}")
        if self.dist is not None and self.dist not in ("E", "EP", "EE"):
            raise ScenarioError(f"unknown size law {self.dist!r}")

    @property
    def path(self):
        if self.RTT0 is not None:
            return path_from_rtt0(self.C1, self.C2, self.C3, self.RTT0, self.P, self.a)
        return path_params(self.C1, self.C2, self.C3, self.D, self.P, self.a)

    @property
    def size_dist(self):
        """A SizeDistribution, or the integer F when sizes are fixed."""
        if self.dist is None:
            return int(self.F)
        kw = {}
        if self.dist == "EE" and self.omega is not None:
            kw["omega"] = self.omega
        if self.dist == "EP" and self.alpha is not None:
            kw["alpha"] = self.alpha
        return make_distribution(self.dist, self.F, **kw)

    @property
    def mean_size(self):
        return float(self.F)

    def with_(self, **kw):
        return replace(self, **kw)

    def connections(self, packets=10**6):
        """Nc if set, else enough connections to send about `packets` packets."""
        if self.Nc is not None:
            return self.Nc
        return max(1, int(round(packets / self.F)))

    def name(self):
        caps = "".join(format_capacity(c) for c in (self.C1, self.C2, self.C3))
        toks = [caps]
        toks.append(f"R{_ms(self.RTT0)}" if self.RTT0 is not None else f"D{_ms(self.D)}ms")
        if self.P != DEFAULT_P:
            toks.append(f"P{self.P}B")
        if self.a != DEFAULT_A:
            toks.append(f"a{self.a}B")
        toks.append(f"W{self.W_R}")
        toks.append("Binf" if self.B is None else f"B{self.B}")
        toks.append(f"F{self.F:g}")
        if self.dist == "EE":
            toks.append("EE" if self.omega is None else f"EE{self.omega:g}")
        elif self.dist == "EP":
            toks.append("EP" if self.alpha is None else f"EP{self.alpha:g}")
        elif self.dist == "E":
            toks.append("E")
        toks.append(f"N{self.N}")
        if self.OFF != DEFAULT_OFF:
            toks.append(f"OFF{_ms(self.OFF)}ms")
        if self.Nc is not None:
            toks.append(f"Nc{self.Nc}")
        if self.seed != 1:
            toks.append(f"seed{self.seed}")
        if self.min_rto != 1.0:
            toks.append(f"minrto{_ms(self.min_rto)}ms")
        return "-".join(toks)

    def to_config(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_config(), sort_keys=True)


_TOKEN_RULES = [
    (re.compile(r"^R(\d+(?:\.\d+)?)(?:ms)?$"), lambda m: {"RTT0": float(m[1]) / 1000}),
    (re.compile(r"^D(\d+(?:\.\d+)?)(?:ms)?$"), lambda m: {"D": float(m[1]) / 1000}),
    (re.compile(r"^P(\d+)B?$"), lambda m: {"P": int(m[1])}),
    (re.compile(r"^a(\d+)B?$"), lambda m: {"a": int(m[1])}),
    (re.compile(r"^W(\d+)$"), lambda m: {"W_R": int(m[1])}),
    (re.compile(r"^B(\d+|inf)$"), lambda m: {"B": None if m[1] == "inf" else int(m[1])}),
    (re.compile(r"^F(\d+(?:\.\d+)?)$"), lambda m: {"F": float(m[1]) if "." in m[1] else int(m[1])}),
    (re.compile(r"^E$"), lambda m: {"dist": "E"}),
    (re.compile(r"^EP(\d+(?:\.\d+)?)?$"), lambda m: {"dist": "EP", "alpha": float(m[1]) if m[1] else None}),
    (re.compile(r"^EE\(?(\d+(?:\.\d+)?)?\)?$"), lambda m: {"dist": "EE", "omega": float(m[1]) if m[1] else None}),
    (re.compile(r"^Nc(\d+)$"), lambda m: {"Nc": int(m[1])}),
    (re.compile(r"^N(\d+)$"), lambda m: {"N": int(m[1])}),
    (re.compile(r"^OFF(\d+(?:\.\d+)?)(?:ms)?$"), lambda m: {"OFF": float(m[1]) / 1000}),
    (re.compile(r"^seed(\d+)$"), lambda m: {"seed": int(m[1])}),
    (re.compile(r"^minrto(\d+(?:\.\d+)?)(?:ms)?$"), lambda m: {"min_rto": float(m[1]) / 1000}),
]


def parse_label(label, **overrides):
    """Fields named by a run label, as a dict (no defaults filled in)."""
    out = {}
    for tok in label.split("-"):
        if not tok:
            continue
        m = _CAP_RE.match(tok)
        if m and not re.fullmatch(r"\d+", tok):
            caps = [parse_capacity(g) for g in m.groups() if g is not None]
            if len(caps) == 2:
                caps = [DEFAULT_C1] + caps
            _merge(out, dict(zip(("C1", "C2", "C3"), caps)), tok)
            continue
        for rx, fn in _TOKEN_RULES:
            mm = rx.match(tok)
            if mm:
                _merge(out, fn(mm), tok)
                break
        else:
            raise ScenarioError(f"unknown scenario token {tok!r} in {label!r}")
    if "RTT0" in out and "D" in out:
        raise ScenarioError("a label may give R (round trip) or D (propagation), not both")
    out.update({k: v for k, v in overrides.items() if v is not None})
    return out


def _merge(out, new, tok):
    for k, v in new.items():
        if k in out and out[k] != v:
            raise ScenarioError(f"token {tok!r} conflicts with an earlier value of {k}")
        out[k] = v


def scenario_from_label(label, **overrides):
    fields = parse_label(label, **overrides)
    if "D" in fields:
        fields.setdefault("RTT0", None)
    if "N" not in fields:
        raise ScenarioError(f"label {label!r} has no source count (N...)")
    if "dist" not in fields:
        fields["dist"] = None
    return Scenario(**fields)


def scenario_from_config(cfg):
    cfg = dict(cfg)
    if "label" in cfg:
        label = cfg.pop("label")
        return scenario_from_label(label, **cfg)
    known = set(Scenario.__dataclass_fields__)
    bad = set(cfg) - known
    if bad:
        raise ScenarioError(f"unknown scenario fields {sorted(bad)}")
    if "D" in cfg and cfg["D"] is not None and "RTT0" not in cfg:
        cfg["RTT0"] = None
    return Scenario(**cfg)


def load_scenario(path):
    with open(path) as fh:
        return scenario_from_config(json.load(fh))
