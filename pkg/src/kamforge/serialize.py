"""JSON-compatible serialization: matrices as row-major nested lists,
unfoldings as {base, directions, codimension}, coverings as
{l, j, k1, sigma}."""

from __future__ import annotations

import numpy as np

from .covering import CoveringData, UnimodularTransform
from .revlin import (MINUS, LinearUnfolding, ReversingStructure,
                     StructuredMatrix)


def matrix_to_list(M) -> list:
    return [[float(x) for x in row] for row in np.atleast_2d(M)]


def unfolding_to_record(unf: LinearUnfolding) -> dict:
    return {"base": matrix_to_list(unf.base.entries),
            "directions": [matrix_to_list(D.entries)
                           for D in unf.directions],
            "codimension": unf.codimension}


def unfolding_from_record(rec: dict,
                          structure: ReversingStructure) -> LinearUnfolding:
    base = StructuredMatrix(np.array(rec["base"], float), MINUS, structure)
    dirs = [StructuredMatrix(np.array(D, float), MINUS, structure)
            for D in rec["directions"]]
    return LinearUnfolding(base=base, directions=dirs,
                           codimension=len(dirs))


def covering_to_record(cov: CoveringData,
                       sigma: UnimodularTransform | None = None) -> dict:
    rec = cov.as_record()
    if sigma is not None:
        rec["sigma"] = [[int(x) for x in row] for row in sigma.sigma]
    return rec
