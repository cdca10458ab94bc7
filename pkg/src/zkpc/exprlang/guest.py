"""The shipped guest compiler: ``exprcc.mini`` and its built image."""

from __future__ import annotations

import functools
from importlib import resources

from ..isa import GuestImage, compute_image_id
from ..minilang import compile_minilang


def exprcc_source() -> bytes:
    return resources.files(__package__).joinpath("exprcc.mini").read_bytes()


@functools.lru_cache(maxsize=1)
def exprcc_image() -> GuestImage:
    return compile_minilang(exprcc_source())


def exprcc_image_id() -> bytes:
    return compute_image_id(exprcc_image())
