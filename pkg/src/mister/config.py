"""Parameter ledger for the interpolation pipeline.

Every tunable lives in one dataclass tree; plain-text ``key = value`` files
(one parameter per line, ``#`` comments) override the factor-specific
defaults.  Patch sides are given at the high-resolution scale and must be
divisible by the upscaling factor; search windows must be odd.

Ridge strengths are dimensionless: each solve scales them by the mean squared
norm of its basis patches, so the same value works across patch sizes and
intensity ranges.  Similarity decay constants (``c_w``) are per-pixel gray
levels; the effective decay is ``c_w * side**2``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, replace

__all__ = [
    "SvarConfig",
    "GuideConfig",
    "Stage1Config",
    "Stage2Config",
    "Stage3Config",
    "Stage4Config",
    "PipelineConfig",
    "default_config",
    "load_config",
    "parse_config",
    "format_config",
]

GUIDE_MODES = ("mister", "ec1", "ec2", "ec3", "ec4")


@dataclass
class SvarConfig:
    """Spatially-variant aliasing removal (runs at the low-resolution scale)."""

    patch_side: int = 8
    group_size: int = 8        # similar patches gathered per neighborhood seed
    window: int = 21
    gaussian_side: int = 7
    gaussian_sigma: float = 0.6
    components: int = 3        # principal components kept per union group
    iterations: int = 2
    stride: int = 2
    prefilter_each_iteration: bool = False

    def validate(self) -> None:
        _odd("svar.window", self.window)
        _odd("svar.gaussian_side", self.gaussian_side)
        _at_least("svar.patch_side", self.patch_side, 2)
        _at_least("svar.group_size", self.group_size, 1)
        _at_least("svar.components", self.components, 1)
        _at_least("svar.iterations", self.iterations, 1)
        _at_least("svar.stride", self.stride, 1)
        _positive("svar.gaussian_sigma", self.gaussian_sigma)
        if self.components > self.patch_side**2:
            raise ValueError("svar.components cannot exceed patch_side**2")


@dataclass
class GuideConfig:
    """Bias-corrected guide construction (interpolate/blur rounds after aliasing removal)."""

    blur_side: int = 5
    blur_sigma: float = 0.5
    interp_rounds: int = 2       # interpolate-then-blur repetitions
    stage1_iterations: int = 1   # iterations of the embedded interpolation pass
    ec3_side: int = 5            # low-pass parameters for the ec3 ablation guide
    ec3_sigma: float = 0.55

    def validate(self) -> None:
        _odd("guide.blur_side", self.blur_side)
        _odd("guide.ec3_side", self.ec3_side)
        _positive("guide.blur_sigma", self.blur_sigma)
        _positive("guide.ec3_sigma", self.ec3_sigma)
        _at_least("guide.interp_rounds", self.interp_rounds, 0)
        _at_least("guide.stage1_iterations", self.stage1_iterations, 1)


@dataclass
class Stage1Config:
    """Initial refinement: measured-pixel bases, weights from measured-phase pixels."""

    n_a: int = 12
    n_b: int = 8
    k: int = 8
    w_a: int = 31
    w_b: int = 21
    lambda_a: float = 0.05
    lambda_b: float = 0.05
    c_w: float = 5.0
    iterations: int = 1

    def validate(self, factor: int) -> None:
        _patch_side("stage1.n_a", self.n_a, factor)
        _patch_side("stage1.n_b", self.n_b, factor)
        _odd("stage1.w_a", self.w_a)
        _odd("stage1.w_b", self.w_b)
        _at_least("stage1.k", self.k, 1)
        _at_least("stage1.iterations", self.iterations, 1)
        _nonnegative("stage1.lambda_a", self.lambda_a)
        _nonnegative("stage1.lambda_b", self.lambda_b)
        _positive("stage1.c_w", self.c_w)


@dataclass
class Stage2Config:
    """Full-pixel weight refinement with the same phase-wise reconstruction."""

    n: int = 8
    k: int = 10
    w: int = 21
    lam: float = 0.05
    c_w: float = 10.0
    iterations: int = 2

    def validate(self, factor: int) -> None:
        _patch_side("stage2.n", self.n, factor)
        _odd("stage2.w", self.w)
        _at_least("stage2.k", self.k, 1)
        _at_least("stage2.iterations", self.iterations, 1)
        _nonnegative("stage2.lambda", self.lam)
        _positive("stage2.c_w", self.c_w)


@dataclass
class Stage3Config:
    """Polarity-aware refinement of off-grid pixels with cosine-matched groups."""

    n_a: int = 8
    n_b: int = 6
    k: int = 12
    w_a: int = 21
    w_b: int = 21
    lambda_a: float = 0.005
    lambda_b: float = 0.003
    iters_a: int = 1
    iters_b: int = 1
    stride: int = 3
    similarity_floor: float = 1e-3   # clamps nonpositive cosines before penalty ratios

    def validate(self, factor: int) -> None:
        _patch_side("stage3.n_a", self.n_a, factor)
        _patch_side("stage3.n_b", self.n_b, factor)
        _odd("stage3.w_a", self.w_a)
        _odd("stage3.w_b", self.w_b)
        _at_least("stage3.k", self.k, 1)
        _at_least("stage3.iters_a", self.iters_a, 1)
        _at_least("stage3.iters_b", self.iters_b, 1)
        _at_least("stage3.stride", self.stride, 1)
        _nonnegative("stage3.lambda_a", self.lambda_a)
        _nonnegative("stage3.lambda_b", self.lambda_b)
        _positive("stage3.similarity_floor", self.similarity_floor)
        if self.stride >= min(self.n_a, self.n_b):
            raise ValueError("stage3.stride must be smaller than the patch sides for full coverage")


@dataclass
class Stage4Config:
    """Low-rank group refinement via weighted singular-value shrinkage (factor 2 only)."""

    n_a: int = 8
    n_b: int = 6
    k: int = 16
    w: int = 21
    alpha_a: float = 2.4
    alpha_b: float = 1.2
    th_a: float = 20.0
    th_b: float = 10.0
    eps: float = 1e-6
    iters_a: int = 2
    iters_b: int = 2
    stride: int = 3
    double_alpha: bool = False   # alternative reading: strength also scales the threshold

    def validate(self, factor: int) -> None:
        _patch_side("stage4.n_a", self.n_a, factor)
        _patch_side("stage4.n_b", self.n_b, factor)
        _odd("stage4.w", self.w)
        _at_least("stage4.k", self.k, 2)
        _at_least("stage4.iters_a", self.iters_a, 1)
        _at_least("stage4.iters_b", self.iters_b, 1)
        _at_least("stage4.stride", self.stride, 1)
        _nonnegative("stage4.alpha_a", self.alpha_a)
        _nonnegative("stage4.alpha_b", self.alpha_b)
        _nonnegative("stage4.th_a", self.th_a)
        _nonnegative("stage4.th_b", self.th_b)
        _positive("stage4.eps", self.eps)
        if self.stride >= min(self.n_a, self.n_b):
            raise ValueError("stage4.stride must be smaller than the patch sides for full coverage")


@dataclass
class PipelineConfig:
    factor: int = 2
    guide_mode: str = "mister"
    pad: int = 8               # reflective padding margin, in low-resolution pixels
    svar: SvarConfig = field(default_factory=SvarConfig)
    guide: GuideConfig = field(default_factory=GuideConfig)
    stage1: Stage1Config = field(default_factory=Stage1Config)
    stage2: Stage2Config = field(default_factory=Stage2Config)
    stage3: Stage3Config = field(default_factory=Stage3Config)
    stage4: Stage4Config = field(default_factory=Stage4Config)

    def validate(self) -> None:
        if self.factor not in (2, 3):
            raise ValueError(f"factor must be 2 or 3, got {self.factor}")
        if self.guide_mode not in GUIDE_MODES:
            raise ValueError(f"guide_mode must be one of {GUIDE_MODES}, got {self.guide_mode!r}")
        _at_least("pipeline.pad", self.pad, 0)
        self.svar.validate()
        self.guide.validate()
        self.stage1.validate(self.factor)
        self.stage2.validate(self.factor)
        self.stage3.validate(self.factor)
        if self.factor == 2:
            self.stage4.validate(self.factor)


def _odd(name: str, value: int) -> None:
    if value < 1 or value % 2 == 0:
        raise ValueError(f"{name}: window side must be odd, got {value}")


def _patch_side(name: str, value: int, factor: int) -> None:
    if value < factor or value % factor != 0:
        word = "even" if factor == 2 else f"divisible by {factor}"
        raise ValueError(f"{name}: patch side must be {word}, got {value}")


def _at_least(name: str, value: int, bound: int) -> None:
    if value < bound:
        raise ValueError(f"{name} must be at least {bound}, got {value}")


def _positive(name: str, value: float) -> None:
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")


def _nonnegative(name: str, value: float) -> None:
    if value < 0:
        raise ValueError(f"{name} must be nonnegative, got {value}")


def default_config(factor: int = 2) -> PipelineConfig:
    """Built-in defaults; factor 3 swaps in patch sides divisible by three."""
    if factor == 2:
        cfg = PipelineConfig(factor=2)
    elif factor == 3:
        cfg = PipelineConfig(
            factor=3,
            pad=6,
            stage1=Stage1Config(n_a=12, n_b=9),
            stage2=Stage2Config(n=9),
            stage3=Stage3Config(n_a=9, n_b=6, stride=4),
        )
    else:
        raise ValueError(f"factor must be 2 or 3, got {factor}")
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# key = value serialization
# ---------------------------------------------------------------------------

_SECTIONS = ("svar", "guide", "stage1", "stage2", "stage3", "stage4")
_KEY_ALIASES = {("stage2", "lam"): "lambda"}
_TOP_LEVEL = ("factor", "guide_mode", "pad")


def _field_key(section: str, field_name: str) -> str:
    return f"{section}.{_KEY_ALIASES.get((section, field_name), field_name)}"


def _key_table(cfg: PipelineConfig):
    """Maps config-file keys to (container, attribute, type)."""
    table = {}
    for name in _TOP_LEVEL:
        table[name] = (cfg, name, type(getattr(cfg, name)))
    for section in _SECTIONS:
        sub = getattr(cfg, section)
        for f in dataclasses.fields(sub):
            table[_field_key(section, f.name)] = (sub, f.name, f.type)
    return table


def _parse_value(raw: str, typ, key: str):
    typ = {"int": int, "float": float, "bool": bool, "str": str}.get(typ, typ)
    if typ is bool:
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(f"{key}: expected true/false, got {raw!r}")
    if typ is int:
        return int(raw)
    if typ is float:
        return float(raw)
    return raw


def parse_config(text: str, factor: int = 2) -> PipelineConfig:
    """Build a PipelineConfig from ``key = value`` lines over the factor defaults.

    Unknown keys and malformed lines raise with their line number.  A
    ``factor`` line in the file overrides the argument and re-bases the
    defaults before other keys apply.
    """
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if not key or not raw:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {line!r}")
        if key in overrides:
            raise ValueError(f"config line {lineno}: duplicate key {key!r}")
        overrides[key] = (raw, lineno)

    if "factor" in overrides:
        raw, lineno = overrides["factor"]
        try:
            factor = int(raw)
        except ValueError:
            raise ValueError(f"config line {lineno}: factor must be an integer") from None
    cfg = default_config(factor) if factor in (2, 3) else PipelineConfig(factor=factor)

    table = _key_table(cfg)
    for key, (raw, lineno) in overrides.items():
        if key not in table:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        holder, attr, typ = table[key]
        try:
            value = _parse_value(raw, typ, key)
        except ValueError as exc:
            raise ValueError(f"config line {lineno}: {exc}") from None
        setattr(holder, attr, value)
    cfg.validate()
    return cfg


def load_config(path, factor: int = 2) -> PipelineConfig:
    """Parse a config file; an empty file yields the documented defaults."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), factor=factor)


def format_config(cfg: PipelineConfig) -> str:
    """Serialize every parameter as sorted ``key = value`` lines (re-parseable)."""
    lines = []
    for name in _TOP_LEVEL:
        lines.append(f"{name} = {getattr(cfg, name)}")
    for section in _SECTIONS:
        sub = getattr(cfg, section)
        for f in dataclasses.fields(sub):
            value = getattr(sub, f.name)
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{_field_key(section, f.name)} = {value}")
    return "\n".join(sorted(lines)) + "\n"


def copy_config(cfg: PipelineConfig) -> PipelineConfig:
    """Deep copy so nested stage configs can be edited independently."""
    return replace(
        cfg,
        svar=replace(cfg.svar),
        guide=replace(cfg.guide),
        stage1=replace(cfg.stage1),
        stage2=replace(cfg.stage2),
        stage3=replace(cfg.stage3),
        stage4=replace(cfg.stage4),
    )


def with_guide_mode(cfg: PipelineConfig, mode: str) -> PipelineConfig:
    out = copy_config(cfg)
    out.guide_mode = mode
    out.validate()
    return out
