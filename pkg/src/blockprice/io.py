"""JSON instance format.

Expressions are nested prefix arrays over named variables (y0.., z0.. for
continuous inner variables, w0.. for integer inner variables); matrices are
sparse (row, col, value) triples sorted by (row, col). Serialization is
canonical, so write -> read -> write round-trips bit-identically.
"""

from __future__ import annotations

import json

import numpy as np

from .expr import Expr, expr_from_prefix, expr_to_prefix
from .model import Block, InitialColumn, StructuredModel

__all__ = ["model_to_json", "model_from_json", "write_model", "read_model"]


def _triples(mat: np.ndarray) -> list:
    out = []
    for r in range(mat.shape[0]):
        for c in range(mat.shape[1]):
            v = mat[r, c]
            if v != 0.0:
                out.append([r, c, float(v)])
    return out


def _from_triples(triples, shape) -> np.ndarray:
    mat = np.zeros(shape)
    for r, c, v in triples:
        mat[int(r), int(c)] = float(v)
    return mat


def _block_name_of(blk: Block):
    return blk.var_name


def _block_index_of(p: int, q: int, q_int: int):
    def index_of(name: str) -> int:
        kind, num = name[0], int(name[1:])
        if kind == "y" and num < p:
            return num
        if kind == "z" and num < q:
            return p + num
        if kind == "w" and num < q_int:
            return p + q + num
        raise ValueError(f"unknown variable name {name!r}")

    return index_of


def _block_to_obj(blk: Block) -> dict:
    name_of = _block_name_of(blk)
    obj = {
        "y_min": [int(v) for v in blk.y_min],
        "y_max": [int(v) for v in blk.y_max],
        "z_cont_min": [float(v) for v in blk.z_cont_min],
        "z_cont_max": [float(v) for v in blk.z_cont_max],
        "z_int_min": [int(v) for v in blk.z_int_min],
        "z_int_max": [int(v) for v in blk.z_int_max],
        "objective": expr_to_prefix(blk.objective, name_of),
        "constraints": [expr_to_prefix(g, name_of) for g in blk.constraints],
        "D": _triples(blk.D),
    }
    if blk.entity_weights is not None:
        obj["entity_weights"] = [float(v) for v in blk.entity_weights]
    if blk.monotone_feasible:
        obj["monotone_feasible"] = True
    if blk.z_closed_form is not None:
        obj["z_closed_form"] = [expr_to_prefix(e, name_of) for e in blk.z_closed_form]
    return obj


def _block_from_obj(obj: dict, num_rows: int) -> Block:
    p = len(obj["y_min"])
    q = len(obj["z_cont_min"])
    q_int = len(obj["z_int_min"])
    index_of = _block_index_of(p, q, q_int)
    closed = obj.get("z_closed_form")
    return Block(
        D=_from_triples(obj["D"], (num_rows, p)),
        y_min=obj["y_min"],
        y_max=obj["y_max"],
        z_cont_min=obj["z_cont_min"],
        z_cont_max=obj["z_cont_max"],
        z_int_min=obj["z_int_min"],
        z_int_max=obj["z_int_max"],
        objective=expr_from_prefix(obj["objective"], index_of),
        constraints=[expr_from_prefix(g, index_of) for g in obj["constraints"]],
        entity_weights=obj.get("entity_weights"),
        monotone_feasible=bool(obj.get("monotone_feasible", False)),
        z_closed_form=None if closed is None else [expr_from_prefix(e, index_of) for e in closed],
    )


def model_to_json(model: StructuredModel) -> str:
    obj = {
        "x_continuous": model.num_x_cont,
        "x_integer": model.num_x_int,
        "c": [float(v) for v in model.c],
        "A": _triples(model.A),
        "b": [float(v) for v in model.b],
        "convexity": model.convexity,
        "shared_design": model.shared_design,
        "blocks": [_block_to_obj(b) for b in model.blocks],
    }
    if model.initial_columns:
        obj["initial_columns"] = [
            {"block": col.block, "y": [int(v) for v in col.design], "cost": float(col.cost)}
            for col in model.initial_columns
        ]
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def model_from_json(text: str) -> StructuredModel:
    obj = json.loads(text)
    num_rows = len(obj["b"])
    init = None
    if "initial_columns" in obj:
        init = [
            InitialColumn(int(c["block"]), tuple(int(v) for v in c["y"]), float(c["cost"]))
            for c in obj["initial_columns"]
        ]
    nx = int(obj["x_continuous"]) + int(obj["x_integer"])
    return StructuredModel(
        num_x_cont=int(obj["x_continuous"]),
        num_x_int=int(obj["x_integer"]),
        c=np.asarray(obj["c"], dtype=float),
        A=_from_triples(obj["A"], (num_rows, nx)),
        b=np.asarray(obj["b"], dtype=float),
        blocks=[_block_from_obj(b, num_rows) for b in obj["blocks"]],
        convexity=obj.get("convexity", "equality"),
        shared_design=bool(obj.get("shared_design", False)),
        initial_columns=init,
    )


def write_model(model: StructuredModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(model_to_json(model))


def read_model(path) -> StructuredModel:
    with open(path) as fh:
        return model_from_json(fh.read())
