"""Scenario geometry: node positions, RIS descriptors, path loss, config files.

Scenario files are TOML with sections [bs], [ue], [[ris]], [channel] and one
[scheme.<name>] block per configured scheme. Unknown keys anywhere are a hard
error so typos cannot silently change an experiment.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEME_NAMES = ("ampmod", "spectral", "watermark")


class ScenarioError(ValueError):
    """Scenario document failed to parse or validate; names the bad field."""


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ScenarioError(f"position coordinates must be finite, got ({self.x}, {self.y})")


def distance(a: Position, b: Position) -> float:
    """Euclidean distance in meters."""
    return math.hypot(a.x - b.x, a.y - b.y)


def path_loss_amplitude(d: float, exponent: float) -> float:
    """Amplitude attenuation d**(-exponent/2) of the adopted power law."""
    if d <= 0.0:
        raise ScenarioError(f"degenerate geometry: colocated nodes (distance {d})")
    return d ** (-exponent / 2.0)


@dataclass(frozen=True)
class RisDescriptor:
    ris_id: int
    position: Position
    num_elements: int
    # optional per-scheme signature indices (codeword / group / code);
    # missing entries default to the RIS's ordinal position in the scenario
    signature: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.ris_id <= 0:
            raise ScenarioError(f"ris id must be a positive integer, got {self.ris_id}")
        if self.num_elements < 1:
            raise ScenarioError(f"ris {self.ris_id}: num_elements must be >= 1, got {self.num_elements}")
        for key in self.signature:
            if key not in SCHEME_NAMES:
                raise ScenarioError(f"ris {self.ris_id}: unknown signature scheme '{key}'")


@dataclass(frozen=True)
class Scenario:
    bs_position: Position
    ue_position: Position
    ris_list: tuple[RisDescriptor, ...]
    serving_ris_id: int
    snr_db: float
    scheme: str                      # active scheme for run/sweep
    scheme_params: dict[str, dict]   # one entry per configured scheme
    path_loss_exponent: float = 2.0
    num_delay_taps: int = 1
    pdp_decay: float = 1.0
    snr_reference: str = "serving"   # "serving" or "transmit"
    waveform: str = "single_carrier"  # or "multi_carrier"
    direct_path: bool = False

    def __post_init__(self):
        if not self.ris_list:
            raise ScenarioError("ris_list must not be empty")
        ids = [r.ris_id for r in self.ris_list]
        dupes = {i for i in ids if ids.count(i) > 1}
        if dupes:
            raise ScenarioError(f"duplicate ris_id: {sorted(dupes)}")
        if self.serving_ris_id not in ids:
            raise ScenarioError(f"serving_ris_id {self.serving_ris_id} not among ris ids {ids}")
        if self.num_delay_taps < 1:
            raise ScenarioError(f"num_delay_taps must be >= 1, got {self.num_delay_taps}")
        if self.path_loss_exponent <= 0:
            raise ScenarioError(f"path_loss_exponent must be positive, got {self.path_loss_exponent}")
        if self.pdp_decay <= 0:
            raise ScenarioError(f"pdp_decay must be positive, got {self.pdp_decay}")
        if self.snr_reference not in ("serving", "transmit"):
            raise ScenarioError(f"snr_reference must be 'serving' or 'transmit', got '{self.snr_reference}'")
        if self.waveform not in ("single_carrier", "multi_carrier"):
            raise ScenarioError(f"waveform must be 'single_carrier' or 'multi_carrier', got '{self.waveform}'")
        if self.scheme not in SCHEME_NAMES:
            raise ScenarioError(f"scheme must be one of {SCHEME_NAMES}, got '{self.scheme}'")
        if self.scheme not in self.scheme_params:
            raise ScenarioError(f"active scheme '{self.scheme}' has no [scheme.{self.scheme}] block")
        for name in self.scheme_params:
            if name not in SCHEME_NAMES:
                raise ScenarioError(f"unknown scheme block [scheme.{name}]")
        for r in self.ris_list:
            if distance(self.bs_position, r.position) <= 0:
                raise ScenarioError(f"ris {r.ris_id} colocated with the BS")
            if distance(self.ue_position, r.position) <= 0:
                raise ScenarioError(f"ris {r.ris_id} colocated with the UE")

    @property
    def serving_ris(self) -> RisDescriptor:
        return next(r for r in self.ris_list if r.ris_id == self.serving_ris_id)

    def ris(self, ris_id: int) -> RisDescriptor:
        for r in self.ris_list:
            if r.ris_id == ris_id:
                return r
        raise ScenarioError(f"unknown ris_id {ris_id}")

    def signature_index(self, ris: RisDescriptor, scheme: str) -> int:
        """Scheme signature of a RIS; defaults to its ordinal position."""
        if scheme in ris.signature:
            return ris.signature[scheme]
        return self.ris_list.index(ris)

    def hop_amplitudes(self, ris: RisDescriptor) -> tuple[float, float]:
        """Large-scale amplitude factors of the BS->RIS and RIS->UE hops."""
        e = self.path_loss_exponent
        return (path_loss_amplitude(distance(self.bs_position, ris.position), e),
                path_loss_amplitude(distance(ris.position, self.ue_position), e))

    def with_updates(self, **kwargs) -> "Scenario":
        return replace(self, **kwargs)


# ----------------------------------------------------------------------
# TOML loading / serialization

_CHANNEL_KEYS = {
    "serving_ris": int,
    "snr_db": float,
    "scheme": str,
    "path_loss_exponent": float,
    "num_delay_taps": int,
    "pdp_decay": float,
    "snr_reference": str,
    "waveform": str,
    "direct_path": bool,
}
_CHANNEL_REQUIRED = ("serving_ris", "snr_db", "scheme")


def _reject_unknown(table: dict, allowed, where: str) -> None:
    unknown = set(table) - set(allowed)
    if unknown:
        raise ScenarioError(f"unknown key(s) {sorted(unknown)} in {where}")


def _position(table: dict, where: str) -> Position:
    _reject_unknown(table, {"position"}, where)
    if "position" not in table:
        raise ScenarioError(f"missing 'position' in {where}")
    pos = table["position"]
    if not (isinstance(pos, list) and len(pos) == 2
            and all(isinstance(v, (int, float)) for v in pos)):
        raise ScenarioError(f"'position' in {where} must be a two-number array")
    return Position(float(pos[0]), float(pos[1]))


def _coerce(value, kind, key: str, where: str):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"'{key}' in {where} must be a number")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"'{key}' in {where} must be an integer")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ScenarioError(f"'{key}' in {where} must be a boolean")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ScenarioError(f"'{key}' in {where} must be a string")
        return value
    raise AssertionError(kind)


def load_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"scenario parse error: {exc}") from exc

    _reject_unknown(doc, {"bs", "ue", "ris", "channel", "scheme"}, "document root")
    for section in ("bs", "ue", "ris", "channel"):
        if section not in doc:
            raise ScenarioError(f"missing [{section}] section")

    bs = _position(doc["bs"], "[bs]")
    ue = _position(doc["ue"], "[ue]")

    if not isinstance(doc["ris"], list):
        raise ScenarioError("[[ris]] must be an array of tables")
    ris_list = []
    for i, entry in enumerate(doc["ris"]):
        where = f"[[ris]] #{i + 1}"
        _reject_unknown(entry, {"id", "position", "num_elements", "signature"}, where)
        for key in ("id", "position", "num_elements"):
            if key not in entry:
                raise ScenarioError(f"missing '{key}' in {where}")
        sig_raw = entry.get("signature", {})
        if not isinstance(sig_raw, dict):
            raise ScenarioError(f"'signature' in {where} must be a table of scheme = index")
        signature = {k: _coerce(v, int, f"signature.{k}", where) for k, v in sig_raw.items()}
        ris_list.append(RisDescriptor(
            ris_id=_coerce(entry["id"], int, "id", where),
            position=_position({"position": entry["position"]}, where),
            num_elements=_coerce(entry["num_elements"], int, "num_elements", where),
            signature=signature,
        ))

    chan = doc["channel"]
    _reject_unknown(chan, _CHANNEL_KEYS, "[channel]")
    for key in _CHANNEL_REQUIRED:
        if key not in chan:
            raise ScenarioError(f"missing '{key}' in [channel]")
    values = {k: _coerce(chan[k], kind, k, "[channel]")
              for k, kind in _CHANNEL_KEYS.items() if k in chan}

    scheme_params: dict[str, dict] = {}
    for name, block in doc.get("scheme", {}).items():
        if name not in SCHEME_NAMES:
            raise ScenarioError(f"unknown scheme block [scheme.{name}]")
        if not isinstance(block, dict):
            raise ScenarioError(f"[scheme.{name}] must be a table")
        scheme_params[name] = dict(block)

    return Scenario(
        bs_position=bs,
        ue_position=ue,
        ris_list=tuple(ris_list),
        serving_ris_id=values["serving_ris"],
        snr_db=values["snr_db"],
        scheme=values["scheme"],
        scheme_params=scheme_params,
        path_loss_exponent=values.get("path_loss_exponent", 2.0),
        num_delay_taps=values.get("num_delay_taps", 1),
        pdp_decay=values.get("pdp_decay", 1.0),
        snr_reference=values.get("snr_reference", "serving"),
        waveform=values.get("waveform", "single_carrier"),
        direct_path=values.get("direct_path", False),
    )


def load_scenario_file(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scenario(fh.read())


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ScenarioError(f"cannot serialize value {v!r}")


def dump_scenario(s: Scenario) -> str:
    """Serialize a Scenario back to the document format (round-trips)."""
    lines = [
        "[bs]", f"position = [{s.bs_position.x!r}, {s.bs_position.y!r}]", "",
        "[ue]", f"position = [{s.ue_position.x!r}, {s.ue_position.y!r}]", "",
    ]
    for r in s.ris_list:
        lines += ["[[ris]]",
                  f"id = {r.ris_id}",
                  f"position = [{r.position.x!r}, {r.position.y!r}]",
                  f"num_elements = {r.num_elements}"]
        if r.signature:
            inner = ", ".join(f"{k} = {v}" for k, v in sorted(r.signature.items()))
            lines.append(f"signature = {{ {inner} }}")
        lines.append("")
    lines += ["[channel]",
              f"serving_ris = {s.serving_ris_id}",
              f"snr_db = {_toml_value(s.snr_db)}",
              f"scheme = {_toml_value(s.scheme)}",
              f"path_loss_exponent = {_toml_value(s.path_loss_exponent)}",
              f"num_delay_taps = {s.num_delay_taps}",
              f"pdp_decay = {_toml_value(s.pdp_decay)}",
              f"snr_reference = {_toml_value(s.snr_reference)}",
              f"waveform = {_toml_value(s.waveform)}",
              f"direct_path = {_toml_value(s.direct_path)}",
              ""]
    for name in sorted(s.scheme_params):
        lines.append(f"[scheme.{name}]")
        for key, value in s.scheme_params[name].items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)
