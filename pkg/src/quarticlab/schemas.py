"""JSON schemas of the files written by the command line tool.

Every JSON document carries a ``schema`` key naming one of these entries;
CSV files are described by their header row.
"""

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_STR = {"type": "string"}
_INT_LIST = {"type": "array", "items": _INT}
_STR_LIST = {"type": "array", "items": _STR}


def _doc(name, props, required=None):
    props = dict(props, schema={"const": name})
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "$id": name,
        "type": "object",
        "properties": props,
        "required": sorted(required if required is not None else props),
    }


_VALUE = {"type": "object", "properties": {"minpoly": _INT_LIST, "index": _INT, "value": _STR},
          "required": ["minpoly", "index", "value"]}

_ENTRY = {"type": "object",
          "properties": {"a": _VALUE, "b": _VALUE, "m": _INT, "n": _INT_LIST, "root": _INT, "point": _STR_LIST},
          "required": ["a", "b", "m", "n", "root", "point"]}

SCHEMAS = {
    "quarticlab.surface/1": _doc("quarticlab.surface/1", {
        "id": _STR, "seed": {"type": ["integer", "null"]}, "bound": {"type": ["integer", "null"]},
        "coefficients": _STR_LIST, "lines": _STR_LIST, "linear_system_dimension": _INT,
        "smooth": {"type": "boolean"}, "attempt": {"type": ["integer", "null"]}}),
    "quarticlab.fibration-info/1": _doc("quarticlab.fibration-info/1", {
        "surface": _STR,
        "fibrations": {"type": "array", "items": {"type": "object", "properties": {
            "index": _INT, "axis": _STR, "A": _STR_LIST, "B": _STR_LIST, "X": _STR_LIST, "Y": _STR_LIST,
            "discriminant_degree": _INT, "singular_count": _INT, "singular_at_infinity": {"type": "boolean"},
            "singular_values": _STR_LIST, "multiplicities": _INT_LIST},
            "required": ["index", "axis", "A", "B", "discriminant_degree", "singular_count",
                         "singular_values"]}}}),
    "quarticlab.torsion-values/1": _doc("quarticlab.torsion-values/1", {
        "surface": _STR, "fibration": _INT, "m": _INT,
        "orders": {"type": "array", "items": {"type": "object", "properties": {
            "m": _INT, "degree": _INT, "primitive_degree": _INT, "at_infinity": {"type": "boolean"},
            "factors": {"type": "array", "items": _INT_LIST}, "roots": _STR_LIST},
            "required": ["m", "degree", "primitive_degree", "roots"]}},
        "survey": {"type": "object"}}),
    "quarticlab.betti-scan/1": _doc("quarticlab.betti-scan/1", {
        "surface": _STR, "fibration": _INT, "qmax": _INT, "cells": _INT, "samples": _INT, "hits": _INT,
        "by_denominator": {"type": "object"}, "matched": _INT, "unmatched_hits": _INT, "missed_roots": _INT,
        "excluded": _INT}),
    "quarticlab.orbit/1": _doc("quarticlab.orbit/1", {
        "surface": _STR, "point": _STR_LIST, "r1max": _INT, "r2max": _INT, "mode": _STR, "status": _STR,
        "entries": _INT, "distinct": _INT, "notes": _STR_LIST}),
    "quarticlab.finite-orbit-catalog/1": _doc("quarticlab.finite-orbit-catalog/1", {
        "surface": _STR, "N": _INT, "n_max": _INT, "candidates": _INT,
        "catalog": {"type": "array", "items": _ENTRY}, "orders": _INT_LIST,
        "max_order": {"type": ["integer", "null"]}, "inconclusive": {"type": "array", "items": _ENTRY},
        "rejected": {"type": "object", "additionalProperties": _INT}}),
    "quarticlab.bounds/1": _doc("quarticlab.bounds/1", {
        "g": _INT, "d": _INT, "h": _NUM, "c": _NUM, "C": _NUM, "remond_constant": _STR,
        "isogeny_delta": {"type": "object"},
        "rows": {"type": "array", "items": {"type": "object", "properties": {
            "name": _STR, "exponent": _STR, "log10": _NUM}, "required": ["name", "exponent", "log10"]}}}),
    "quarticlab.conjugate-control/1": _doc("quarticlab.conjugate-control/1", {
        "surface": _STR, "fibration": _INT, "m": _INT, "threshold": _NUM, "delta0": _NUM,
        "values": {"type": "array", "items": {"type": "object", "properties": {
            "order": _INT, "degree": _INT, "minpoly": _INT_LIST, "delta": _NUM, "fraction": _NUM,
            "passed": {"type": "boolean"}},
            "required": ["order", "degree", "minpoly", "delta", "fraction", "passed"]}},
        "passed": _INT}),
    "quarticlab.bezout-check/1": _doc("quarticlab.bezout-check/1", {
        "surface": _STR, "singular_count": _INT, "bound": _INT,
        "fibers": {"type": "array", "items": {"type": "object", "properties": {
            "s": _STR, "count": _INT, "ok": {"type": "boolean"}, "degenerate": {"type": "boolean"},
            "factors": {"type": "array"}}, "required": ["s", "count", "ok"]}},
        "violations": _INT}),
    "quarticlab.run/1": _doc("quarticlab.run/1", {
        "command": _STR, "config": _STR, "outputs": _STR_LIST, "timestamp": _STR, "version": _STR}),
}

CSV_HEADERS = {
    "orbit.csv": ["r1", "r2", "x", "y", "z", "w", "height"],
    "betti-scan.csv": ["t_real", "t_imag", "beta1", "beta2", "q", "H", "flags"],
    "torsion-values.csv": ["order", "degree", "height", "height_err", "minimal_polynomial"],
    "bounds.csv": ["name", "g", "d", "h", "exponent", "log10"],
}
