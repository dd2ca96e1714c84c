"""Architecture description for the dual-channel MTAM CNN."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from agentfp.errors import ShapeError


@dataclass(frozen=True)
class Block2d:
    filters: int
    kernel: tuple[int, int]
    pool: tuple[int, int]
    dropout: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kernel", tuple(self.kernel))
        object.__setattr__(self, "pool", tuple(self.pool))


@dataclass(frozen=True)
class Block1d:
    filters: int
    kernel: int
    pool: int
    dropout: float = 0.0


def _default_blocks2d():
    return (Block2d(32, (2, 8), (1, 8), 0.3), Block2d(64, (2, 8), (2, 8), 0.3))


def _default_blocks1d():
    return (Block1d(64, 8, 8, 0.3), Block1d(128, 8, 4, 0.3))


@dataclass(frozen=True)
class ArchConfig:
    """Layer plan.  Pools use ceil rounding; the 2D pools must bring height 2 down to 1."""

    W: int = 1800
    num_classes: int = 2
    blocks2d: tuple = field(default_factory=_default_blocks2d)
    reduce_channels: int = 32
    blocks1d: tuple = field(default_factory=_default_blocks1d)
    in_channels: int = 2

    def __post_init__(self):
        object.__setattr__(self, "blocks2d", tuple(
            b if isinstance(b, Block2d) else Block2d(**b) for b in self.blocks2d))
        object.__setattr__(self, "blocks1d", tuple(
            b if isinstance(b, Block1d) else Block1d(**b) for b in self.blocks1d))
        self.shapes()

    def shapes(self) -> list[tuple[str, tuple[int, ...]]]:
        """Per-stage output shapes (channels, height, length); raises ShapeError."""
        if self.W < 1 or self.num_classes < 2 or self.reduce_channels < 1:
            raise ShapeError("W >= 1, num_classes >= 2 and reduce_channels >= 1 are required")
        h, length, ch = 2, self.W, self.in_channels
        out = [("input", (ch, h, length))]
        for i, b in enumerate(self.blocks2d):
            ph, pw = b.pool
            if ph > h or pw > length:
                raise ShapeError(f"2D block {i}: pool {b.pool} exceeds feature map ({h}, {length})")
            h, length, ch = math.ceil(h / ph), math.ceil(length / pw), b.filters
            out.append((f"block2d_{i}", (ch, h, length)))
        if h != 1:
            raise ShapeError(f"2D pools leave height {h}; it must be exactly 1")
        ch = self.reduce_channels
        out.append(("reduce", (ch, 1, length)))
        for i, b in enumerate(self.blocks1d):
            if b.pool > length:
                raise ShapeError(f"1D block {i}: pool {b.pool} exceeds length {length}")
            length, ch = math.ceil(length / b.pool), b.filters
            out.append((f"block1d_{i}", (ch, 1, length)))
        out.append(("classes", (self.num_classes, 1, length)))
        return out

    @property
    def embedding_dim(self) -> int:
        return self.blocks1d[-1].filters if self.blocks1d else self.reduce_channels

    def to_dict(self) -> dict:
        d = asdict(self)
        d["blocks2d"] = [dict(b, kernel=list(b["kernel"]), pool=list(b["pool"])) for b in d["blocks2d"]]
        d["blocks1d"] = [dict(b) for b in d["blocks1d"]]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ArchConfig":
        return cls(**d)


def default_arch(W: int = 1800, num_classes: int = 2) -> ArchConfig:
    return ArchConfig(W=W, num_classes=num_classes)


def tiny_arch(W: int = 16, num_classes: int = 3) -> ArchConfig:
    """One block per stage; small enough for double-precision gradient checks."""
    return ArchConfig(
        W=W,
        num_classes=num_classes,
        blocks2d=(Block2d(4, (2, 3), (2, 2), 0.0),),
        reduce_channels=4,
        blocks1d=(Block1d(4, 3, 2, 0.0),),
    )
