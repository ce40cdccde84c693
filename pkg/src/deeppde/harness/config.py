"""INI configuration: one section per module, presets shipped with the package."""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from ..dgm import DGMConfig
from ..models import ModelSpec
from ..reference import CosConfig
from ..tdgf import TDGFConfig

PRESETS = ("desk", "paper")
MODEL_KEYS = ("r", "T", "K", "sigma", "lam", "kappa", "eta", "rho")


def _coerce(raw: str, like):
    if isinstance(like, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    return raw.strip()


def _apply(obj, section: configparser.SectionProxy, where: str):
    known = {f.name: getattr(obj, f.name) for f in fields(obj)}
    updates = {}
    for key, raw in section.items():
        if key not in known:
            raise ValueError(f"[{where}] unknown key {key!r}; expected one of {sorted(known)}")
        updates[key] = _coerce(raw, known[key])
    return replace(obj, **updates)


@dataclass(frozen=True)
class HarnessConfig:
    model: dict = field(default_factory=lambda: {k: getattr(ModelSpec(), k) for k in MODEL_KEYS})
    tdgf: TDGFConfig = TDGFConfig()
    dgm: DGMConfig = DGMConfig()
    points: int = 47
    cos: CosConfig = CosConfig()
    seeds: tuple = (0, 1, 2)

    def model_spec(self, name: str) -> ModelSpec:
        return ModelSpec(name=name, **self.model)

    def solver(self, method: str):
        if method == "tdgf":
            return self.tdgf
        if method == "dgm":
            return self.dgm
        raise ValueError(f"unknown method {method!r}; expected tdgf or dgm")

    def with_solver(self, method: str, **kw) -> "HarnessConfig":
        return replace(self, **{method: replace(self.solver(method), **kw)})

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp["model"] = {k: repr(v) for k, v in self.model.items()}
        for name in ("tdgf", "dgm"):
            cp[name] = {k: str(v).lower() if isinstance(v, bool) else repr(v)
                        for k, v in dataclasses.asdict(getattr(self, name)).items()}
        cp["evaluation"] = {"points": str(self.points)}
        cp["reference"] = {"terms": str(self.cos.terms), "width": repr(self.cos.width)}
        cp["sweep"] = {"seeds": ", ".join(str(s) for s in self.seeds)}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def echo(self, directory) -> Path:
        """Write the resolved configuration into an output directory."""
        path = Path(directory) / "config.ini"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_ini())
        return path


def _parse(cfg: HarnessConfig, text: str, origin: str) -> HarnessConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_string(text, source=origin)
    for name in cp.sections():
        sec = cp[name]
        if name == "model":
            model = dict(cfg.model)
            for key, raw in sec.items():
                if key not in MODEL_KEYS:
                    raise ValueError(f"[model] unknown key {key!r}")
                model[key] = float(raw)
            cfg = replace(cfg, model=model)
        elif name in ("tdgf", "dgm"):
            cfg = replace(cfg, **{name: _apply(getattr(cfg, name), sec, name)})
        elif name == "evaluation":
            cfg = replace(cfg, points=sec.getint("points", cfg.points))
        elif name == "reference":
            cfg = replace(cfg, cos=_apply(cfg.cos, sec, name))
        elif name == "sweep":
            seeds = tuple(int(s) for s in sec.get("seeds", "").replace(",", " ").split())
            if not seeds:
                raise ValueError("[sweep] seeds must be nonempty")
            cfg = replace(cfg, seeds=seeds)
        else:
            raise ValueError(f"{origin}: unknown section [{name}]")
    return cfg


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESETS}")
    return resources.files("deeppde").joinpath("presets", f"{name}.ini").read_text()


def load_config(path=None, preset: str = "desk") -> HarnessConfig:
    """Preset values, overlaid by the optional user file."""
    cfg = _parse(HarnessConfig(), preset_text(preset), f"preset:{preset}")
    if path is not None:
        cfg = _parse(cfg, Path(path).read_text(), str(path))
    return cfg
