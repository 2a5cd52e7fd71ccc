"""Study window and pipeline configuration."""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


def _as_date(value) -> date:
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value).strip())
    except ValueError as exc:
        raise ConfigError(f"not an ISO date: {value!r}") from exc


@dataclass(frozen=True)
class StudyWindow:
    """Consecutive baseline and disruption periods covering the study dates."""

    start_date: date
    baseline_end: date
    disruption_start: date
    end_date: date

    def __post_init__(self):
        for name in ("start_date", "baseline_end", "disruption_start", "end_date"):
            object.__setattr__(self, name, _as_date(getattr(self, name)))
        if not (self.start_date <= self.baseline_end < self.disruption_start <= self.end_date):
            raise ConfigError(
                "window dates must satisfy start <= baseline_end < disruption_start <= end"
            )
        if self.disruption_start - self.baseline_end != timedelta(days=1):
            raise ConfigError("baseline and disruption periods must be adjacent")

    @classmethod
    def default(cls) -> "StudyWindow":
        return cls(date(2024, 6, 15), date(2024, 7, 5), date(2024, 7, 6), date(2024, 7, 20))

    @staticmethod
    def _span(a: date, b: date) -> list[date]:
        return [a + timedelta(days=i) for i in range((b - a).days + 1)]

    def days(self) -> list[date]:
        return self._span(self.start_date, self.end_date)

    def baseline_days(self) -> list[date]:
        return self._span(self.start_date, self.baseline_end)

    def disruption_days(self) -> list[date]:
        return self._span(self.disruption_start, self.end_date)

    def __len__(self) -> int:
        return (self.end_date - self.start_date).days + 1

    def contains(self, d: date) -> bool:
        return self.start_date <= d <= self.end_date


@dataclass
class PipelineConfig:
    """Every field is settable from the config file and as ``--<name>``."""

    # inputs
    outages: str = "outages.csv"
    trips: str = "trips.csv"
    pois: str = "pois.csv"
    zones: str = "zones.csv"
    output_dir: str = "out"
    # optional raw mobility: when both are set, trips are rebuilt from them
    pings: str = ""
    visits: str = ""
    night_start: int = 20
    night_end: int = 6
    local_timezone: str = "UTC"
    home_observation: str = "baseline"
    # study window
    start_date: date = date(2024, 6, 15)
    baseline_end: date = date(2024, 7, 5)
    disruption_start: date = date(2024, 7, 6)
    end_date: date = date(2024, 7, 20)
    landfall: date | None = date(2024, 7, 8)
    # thresholds
    outage_threshold: float = 0.001
    inactivity_drop: float = 0.90
    lag_alpha: float = 0.01
    anova_alpha: float = 0.001
    percentile: float = 0.25
    percentile_scope: str = "region"
    # analysis
    max_lag: int = 7
    lag_mode: str = "pooled"
    k_min: int = 2
    k_max: int = 6
    smoothing_window: int = 3
    smooth_after_pct: bool = True
    access_metrics: str = "redundancy,frequency,proximity"
    outage_metrics: str = "intensity,duration"
    per_trip_proximity: bool = False
    dtw_band: int = -1
    kmeans_max_iter: int = 50
    kmeans_tol: float = 1e-6
    seed: int = 0
    strict: bool = True

    def __post_init__(self):
        self.validate()

    @property
    def window(self) -> StudyWindow:
        return StudyWindow(self.start_date, self.baseline_end, self.disruption_start, self.end_date)

    @property
    def k_range(self) -> list[int]:
        return list(range(self.k_min, self.k_max + 1))

    @property
    def band(self) -> int | None:
        return None if self.dtw_band < 0 else self.dtw_band

    def metric_list(self, domain: str) -> list[str]:
        raw = self.access_metrics if domain == "access" else self.outage_metrics
        return [m.strip() for m in raw.split(",") if m.strip()]

    def validate(self) -> None:
        self.window  # date ordering
        if self.landfall is not None and not self.window.contains(_as_date(self.landfall)):
            raise ConfigError("landfall must fall inside the study window")
        for name in ("outage_threshold", "inactivity_drop", "lag_alpha", "anova_alpha"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")
        if not 0.0 < self.percentile < 0.5:
            raise ConfigError("percentile must lie in (0, 0.5)")
        if self.percentile_scope not in ("region", "within_zones"):
            raise ConfigError("percentile_scope must be 'region' or 'within_zones'")
        if self.lag_mode not in ("pooled", "zone_mean"):
            raise ConfigError("lag_mode must be 'pooled' or 'zone_mean'")
        if self.max_lag < 0:
            raise ConfigError("max_lag must be non-negative")
        if not 1 <= self.k_min <= self.k_max:
            raise ConfigError("require 1 <= k_min <= k_max")
        if self.home_observation not in ("baseline", "window", "all"):
            raise ConfigError("home_observation must be 'baseline', 'window' or 'all'")
        if not (0 <= self.night_start < 24 and 0 <= self.night_end < 24) or self.night_start == self.night_end:
            raise ConfigError("night_start and night_end must be distinct hours in [0, 24)")
        if bool(self.pings) != bool(self.visits):
            raise ConfigError("pings and visits must be given together")
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ConfigError("smoothing_window must be a positive odd integer")

    @classmethod
    def fields(cls) -> list[dataclasses.Field]:
        return list(dataclasses.fields(cls))

    @classmethod
    def coerce(cls, name: str, raw: str):
        """Convert a text value to the type of field ``name``."""
        types = {f.name: f.type for f in cls.fields()}
        if name not in types:
            raise ConfigError(f"unknown configuration key: {name}")
        kind = str(types[name])
        raw = str(raw).strip()
        try:
            if "date" in kind:
                if raw.lower() in ("", "none"):
                    return None
                return _as_date(raw)
            if kind == "bool":
                low = raw.lower()
                if low in ("1", "true", "yes", "on"):
                    return True
                if low in ("0", "false", "no", "off"):
                    return False
                raise ValueError(raw)
            if kind == "int":
                return int(raw)
            if kind == "float":
                return float(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {name}: {raw!r}") from exc
        return raw

    @classmethod
    def from_file(cls, path: str | Path | None, overrides: dict | None = None) -> "PipelineConfig":
        """Load a sectioned ``key = value`` file; section names are ignored.

        Relative input paths resolve against the config file's directory.
        """
        values: dict = {}
        base = None
        if path is not None:
            path = Path(path)
            if not path.exists():
                raise FileNotFoundError(f"config file not found: {path}")
            parser = configparser.ConfigParser(interpolation=None)
            parser.optionxform = str
            text = path.read_text(encoding="utf-8")
            if not text.lstrip().startswith("["):
                text = "[pipeline]\n" + text
            parser.read_string(text, source=str(path))
            for section in parser.sections():
                for key, raw in parser.items(section):
                    values[key] = cls.coerce(key, raw)
            base = path.parent
        for key, val in (overrides or {}).items():
            values[key] = cls.coerce(key, val) if isinstance(val, str) else val
        if base is not None:
            for key in ("outages", "trips", "pois", "zones", "output_dir", "pings", "visits"):
                if values.get(key) and not Path(values[key]).is_absolute() and key not in (overrides or {}):
                    values[key] = str(base / values[key])
        return cls(**values)

    def to_text(self) -> str:
        lines = ["[pipeline]"]
        for f in self.fields():
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {'none' if v is None else v}")
        return "\n".join(lines) + "\n"


@dataclass
class SynthConfig:
    """Planted structure for the synthetic coupled-event generator.

    Typology counts are given outage level first (``n_hl`` = high outage,
    low access disruption). The defaults reproduce a 140-zone split of
    10 / 14 / 70 / 46 and 294 critical facilities.
    """

    seed: int = 1
    n_zones: int = 140
    n_pois: int = 3000
    start_date: date = date(2024, 6, 15)
    baseline_end: date = date(2024, 7, 5)
    disruption_start: date = date(2024, 7, 6)
    end_date: date = date(2024, 7, 20)
    landfall_offset: int = 2  # disruption day index of the access collapse
    planted_lag_days: int = 2
    noise_sigma: float = 0.05
    n_hh: int = 10
    n_hl: int = 14
    n_lh: int = 70
    n_ll: int = 46
    # bottom road-density quartile, split by typology
    low_hh: int = 5
    low_hl: int = 0
    low_lh: int = 25
    low_ll: int = 5
    n_crit_hh: int = 92
    n_crit_low_density: int = 131
    n_crit_downtime: int = 139
    n_critical: int = 294
    n_inactive_other: int = 40  # inactive facilities outside the top visit quartile
    distinct_per_zone_day: float = 200.0
    visits_per_distinct: float = 1.5
    customers_min: int = 8_000
    customers_max: int = 30_000
    baseline_intensity: float = 0.002
    baseline_intervals: int = 8
    severe_peak: float = 0.10
    mild_peak: float = 0.03
    severe_jitter: float = 0.08  # relative spread of per-zone outage amplitude
    mild_jitter: float = 0.2
    access_jitter: float = 0.25  # relative spread of per-zone access response

    def __post_init__(self):
        for name in ("start_date", "baseline_end", "disruption_start", "end_date"):
            setattr(self, name, _as_date(getattr(self, name)))
        self.validate()

    @property
    def window(self) -> StudyWindow:
        return StudyWindow(self.start_date, self.baseline_end, self.disruption_start, self.end_date)

    @property
    def typology_counts(self) -> dict[str, int]:
        return {"HH": self.n_hh, "HL": self.n_hl, "LH": self.n_lh, "LL": self.n_ll}

    @property
    def low_density_counts(self) -> dict[str, int]:
        return {"HH": self.low_hh, "HL": self.low_hl, "LH": self.low_lh, "LL": self.low_ll}

    @property
    def n_low_density(self) -> int:
        """Size of the bottom quartile under linear-interpolation quantiles."""
        return (self.n_zones - 1) // 4 + 1

    @property
    def n_popular(self) -> int:
        """Size of the top visit quartile under linear-interpolation quantiles."""
        return self.n_pois - -(-3 * (self.n_pois - 1) // 4)

    def validate(self) -> None:
        win = self.window
        n_dis = len(win.disruption_days())
        if sum(self.typology_counts.values()) != self.n_zones:
            raise ConfigError(f"typology counts sum to {sum(self.typology_counts.values())}, expected n_zones={self.n_zones}")
        if min(self.typology_counts.values()) < 0 or min(self.low_density_counts.values()) < 0:
            raise ConfigError("zone counts must be non-negative")
        if sum(self.low_density_counts.values()) != self.n_low_density:
            raise ConfigError(f"low-density counts must sum to the bottom quartile size {self.n_low_density}")
        for t, n in self.low_density_counts.items():
            if n > self.typology_counts[t]:
                raise ConfigError(f"{n} low-density {t} zones exceed the {self.typology_counts[t]} {t} zones")
        if self.n_hh + self.n_hl == 0 or self.n_lh + self.n_ll == 0:
            raise ConfigError("both outage regimes need at least one zone")
        if self.n_hh + self.n_lh == 0 or self.n_hl + self.n_ll == 0:
            raise ConfigError("both access regimes need at least one zone")
        if not 0 <= self.planted_lag_days < n_dis:
            raise ConfigError(f"planted lag {self.planted_lag_days} must be below the disruption length {n_dis}")
        if not 0 <= self.landfall_offset or self.landfall_offset + self.planted_lag_days >= n_dis:
            raise ConfigError("landfall plus planted lag must fall inside the disruption period")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        for name in ("severe_jitter", "mild_jitter", "access_jitter"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f"{name} must lie in [0, 1)")
        if not 0 < self.customers_min <= self.customers_max:
            raise ConfigError("customer range must be positive and ordered")
        if self.baseline_intensity * self.customers_min < 2 or self.baseline_intensity < 0.0015:
            raise ConfigError("baseline_intensity must clear the 0.001 filter for every zone")
        if not 1 <= self.baseline_intervals <= 96:
            raise ConfigError("baseline_intervals must be in [1, 96]")
        if self.visits_per_distinct < 1 or self.distinct_per_zone_day < 1:
            raise ConfigError("visit volume settings must be >= 1")
        if self.n_pois < 4 or self.n_zones < 4:
            raise ConfigError("need at least 4 zones and 4 POIs")
