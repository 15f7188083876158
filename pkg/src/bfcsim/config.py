"""Scenario configuration: defaults, validation and TOML round-tripping."""

import math
from dataclasses import asdict, dataclass, fields, replace

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib
import tomli_w

STRATEGIES = ("hd_baseline", "ideal_fd", "eigen_only", "eigen_omp", "case_a", "case_b")
ALIASES = {"hd": "hd_baseline", "ideal": "ideal_fd", "eigen": "eigen_only"}
OUTPUT_FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Invalid scenario configuration."""


def snr_range(start, stop, step):
    """Inclusive dB grid from ``start`` to ``stop``."""
    if step <= 0:
        raise ConfigError("snr step must be positive")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    if n < 1:
        raise ConfigError(f"empty SNR grid from {start} to {stop}")
    return tuple(float(round(start + k * step, 10)) for k in range(n))


def parse_strategy(spec):
    """Split ``"case_b:4"`` into ``("case_b", 4)``; plain names give ``None``.

    The optional suffix overrides the RF-chain count for that strategy.
    """
    name, _, nrf = str(spec).partition(":")
    name = ALIASES.get(name.strip(), name.strip())
    if name not in STRATEGIES:
        raise ConfigError(f"strategies: unknown strategy {name!r} (choose from {', '.join(STRATEGIES)})")
    if not nrf:
        return name, None
    try:
        value = int(nrf)
    except ValueError:
        raise ConfigError(f"strategies: bad RF-chain suffix in {spec!r}") from None
    if value < 1:
        raise ConfigError(f"strategies: RF-chain count must be >= 1 in {spec!r}")
    return name, value


def canonical_strategy(spec):
    name, nrf = parse_strategy(spec)
    return name if nrf is None else f"{name}:{nrf}"


@dataclass(frozen=True)
class ScenarioConfig:
    nt: int = 16
    nr: int = 16
    ns: int = 3
    nrf: int = 6
    strategies: tuple = ("hd_baseline", "eigen_only", "case_a", "ideal_fd")
    snr_db_grid: tuple = snr_range(-10.0, 20.0, 2.0)
    snr_si_db: float = 120.0
    kappa_db: float = 30.0
    si_separation_wavelengths: float = 10.0
    si_angle: float = math.pi / 6
    si_rx_axis_angle: float = math.pi / 6
    element_spacing: float = 0.5
    desired_clusters: tuple = (1, 6)
    desired_rays: tuple = (1, 10)
    si_nlos_clusters: tuple = (1, 3)
    si_nlos_rays: tuple = (1, 3)
    angular_std: float = 0.2
    trials: int = 100
    seed: int = 0
    phase_bits: int = None
    power: str = "stream"
    workers: int = 1
    output_path: str = None
    output_format: str = "csv"
    dump_channels: str = None

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        for name in ("strategies", "desired_clusters", "desired_rays", "si_nlos_clusters", "si_nlos_rays"):
            value = getattr(self, name)
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            set_(name, tuple(value))
        set_("strategies", tuple(canonical_strategy(s) for s in self.strategies))
        set_("snr_db_grid", tuple(float(x) for x in self.snr_db_grid))
        for name in ("snr_si_db", "kappa_db", "si_separation_wavelengths", "si_angle",
                     "si_rx_axis_angle", "element_spacing", "angular_std"):
            set_(name, float(getattr(self, name)))
        self.validate()

    def validate(self):
        for name in ("nt", "nr", "ns", "nrf", "trials", "workers"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name}: must be a positive integer, got {value!r}")
        if self.ns > min(self.nt, self.nr):
            raise ConfigError(f"ns: constraint ns ≤ min(nt,nr) violated (ns={self.ns}, nt={self.nt}, nr={self.nr})")
        if not self.strategies:
            raise ConfigError("strategies: at least one strategy is required")
        for spec in self.strategies:
            name, nrf = parse_strategy(spec)
            if name in ("case_b", "eigen_omp") and (nrf or self.nrf) < self.ns:
                raise ConfigError(f"nrf: constraint nrf ≥ ns violated for {spec} (ns={self.ns})")
        if not self.snr_db_grid:
            raise ConfigError("snr_db_grid: grid must be nonempty")
        if not all(math.isfinite(x) for x in self.snr_db_grid):
            raise ConfigError("snr_db_grid: values must be finite")
        for name in ("desired_clusters", "desired_rays", "si_nlos_clusters", "si_nlos_rays"):
            value = getattr(self, name)
            if len(value) != 2 or not all(isinstance(v, int) for v in value) or not 1 <= value[0] <= value[1]:
                raise ConfigError(f"{name}: must be an integer interval [low, high] with 1 <= low <= high")
        if not self.angular_std > 0:
            raise ConfigError("angular_std: must be positive")
        if not self.si_separation_wavelengths > 0:
            raise ConfigError("si_separation_wavelengths: must be positive")
        if not self.element_spacing > 0:
            raise ConfigError("element_spacing: must be positive")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.phase_bits is not None and (not isinstance(self.phase_bits, int) or self.phase_bits < 1):
            raise ConfigError("phase_bits: must be a positive integer")
        if self.power not in ("stream", "total"):
            raise ConfigError("power: must be 'stream' or 'total'")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"output_format: must be one of {OUTPUT_FORMATS}")

    def strategy_nrf(self, spec):
        _, nrf = parse_strategy(spec)
        return self.nrf if nrf is None else nrf

    def updated(self, **changes):
        return replace(self, **changes)


FIELD_NAMES = tuple(f.name for f in fields(ScenarioConfig))

PRESETS = {
    "fig2": dict(nt=16, nr=16, ns=3, nrf=6,
                 strategies=("hd_baseline", "eigen_only", "case_a", "ideal_fd")),
    "fig3": dict(nt=64, nr=64, ns=3, nrf=6,
                 strategies=("hd_baseline", "eigen_only", "case_a", "ideal_fd")),
    "fig4": dict(nt=16, nr=16, ns=3, nrf=6,
                 strategies=("hd_baseline", "ideal_fd", "eigen_omp:6",
                             "case_b:3", "case_b:4", "case_b:5", "case_b:6")),
    "fig5": dict(nt=64, nr=64, ns=3, nrf=6,
                 strategies=("hd_baseline", "ideal_fd", "eigen_omp:6",
                             "case_b:3", "case_b:4", "case_b:5", "case_b:6")),
}


def config_from_mapping(mapping, base=None):
    """Overlay a key/value mapping on ``base`` (defaults if omitted)."""
    unknown = sorted(set(mapping) - set(FIELD_NAMES))
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
    values = asdict(base) if base is not None else {}
    values.update(mapping)
    try:
        return ScenarioConfig(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, base=None):
    """Read a flat TOML file; omitted fields keep their defaults."""
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config must be flat; found table(s): {', '.join(nested)}")
    return config_from_mapping(data, base)


def dumps_config(config):
    data = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(config).items() if v is not None}
    return tomli_w.dumps(data)


def save_config(config, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_config(config))
