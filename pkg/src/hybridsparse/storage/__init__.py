from .coo import (
    CooStorage,
    coo_append_many,
    coo_audit,
    coo_build_from_triplets,
    coo_canonicalize,
    coo_get,
    coo_iter,
)
from .csc import CHUNK, CscStorage, csc_audit, csc_get, csc_insert, csc_insert_many, csc_iter
from .rbt import (
    RbtNode,
    RbtStorage,
    rbt_arrays,
    rbt_audit,
    rbt_delete,
    rbt_height,
    rbt_insert,
    rbt_insert_many,
    rbt_iter,
    rbt_lookup,
)

__all__ = [
    "CHUNK",
    "CooStorage",
    "CscStorage",
    "RbtNode",
    "RbtStorage",
    "coo_append_many",
    "coo_audit",
    "coo_build_from_triplets",
    "coo_canonicalize",
    "coo_get",
    "coo_iter",
    "csc_audit",
    "csc_get",
    "csc_insert",
    "csc_insert_many",
    "csc_iter",
    "rbt_arrays",
    "rbt_audit",
    "rbt_delete",
    "rbt_height",
    "rbt_insert",
    "rbt_insert_many",
    "rbt_iter",
    "rbt_lookup",
]
