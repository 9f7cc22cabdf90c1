"""
Flag Parsing

Compact flag strings and the translation of parsed arguments into a nested
override layer for RunConfig.build.

    --kernel imq:c=1,beta=0.5 | rbf:ell=1
    --weight identity | logrecip:gamma=1,eps=0.1 | trunc:gamma=1,eps=0.1,tau=2
"""

import argparse
from pathlib import Path
from typing import Any, Dict, List

from validation.errors import InputError

KERNEL_ALIASES = {"ell": "lengthscale"}
WEIGHT_ALIASES = {"eps": "epsilon"}


def _parse_spec(text: str, what: str, aliases: Dict[str, str]) -> Dict[str, Any]:
    kind, _, params = text.strip().partition(":")
    if not kind:
        raise InputError(f"Empty {what} spec '{text}'")
    spec: Dict[str, Any] = {"kind": kind.lower()}
    for item in filter(None, (p.strip() for p in params.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"Malformed {what} parameter '{item}' in '{text}' (expected key=value)")
        try:
            spec[aliases.get(key.strip(), key.strip())] = float(value)
        except ValueError:
            raise InputError(f"{what.capitalize()} parameter '{key.strip()}' must be a number, got '{value}'")
    return spec


def parse_kernel_flag(text: str) -> Dict[str, Any]:
    """'imq:c=1,beta=0.5' -> {'kind': 'imq', 'c': 1.0, 'beta': 0.5}."""
    return _parse_spec(text, "kernel", KERNEL_ALIASES)


def parse_weight_flag(text: str) -> Dict[str, Any]:
    """'logrecip:gamma=1,eps=0.1' -> {'kind': 'logrecip', 'gamma': 1.0, 'epsilon': 0.1}."""
    spec = _parse_spec(text, "weight", WEIGHT_ALIASES)
    if spec["kind"] == "none":
        spec["kind"] = "identity"
    return spec


def parse_float_list(text: str) -> List[float]:
    """'0,0.1,0.2' -> [0.0, 0.1, 0.2]."""
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"Expected a comma-separated list of numbers, got '{text}'")


def parse_int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"Expected a comma-separated list of integers, got '{text}'")


def _put(tree: Dict[str, Any], path: str, value: Any) -> None:
    node = tree
    keys = path.split(".")
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def build_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """
    Nested override layer from parsed flags (flags left unset add nothing).

    --kernel applies to the shared method and to the galaxy/gene kernels.
    --gamma replaces the weight's gamma after --weight is applied.
    """
    tree: Dict[str, Any] = {}
    get = lambda name: getattr(args, name, None)

    if get("seed") is not None:
        _put(tree, "seed", args.seed)
    if get("kernel"):
        kernel = parse_kernel_flag(args.kernel)
        _put(tree, "method.kernel", kernel)
        _put(tree, "galaxy.kernel", dict(kernel))
        _put(tree, "gene.kernel", dict(kernel))
    if get("weight"):
        _put(tree, "method.weight", parse_weight_flag(args.weight))
    if get("gamma") is not None:
        _put(tree, "method.weight.gamma", args.gamma)
    if get("alpha") is not None:
        _put(tree, "method.alpha", args.alpha)
    if get("plugin"):
        _put(tree, "method.plugin", args.plugin)
    if get("predictive"):
        _put(tree, "method.predictive", args.predictive)
    if get("n_jobs") is not None:
        _put(tree, "method.n_jobs", args.n_jobs)
        _put(tree, "mcmc.n_jobs", args.n_jobs)

    if get("model"):
        _put(tree, "model.kind", args.model)
    if get("theta"):
        _put(tree, "model.theta", parse_float_list(args.theta))
    if get("kef_p") is not None:
        _put(tree, "model.kef.p", args.kef_p)
    if get("steps") is not None:
        _put(tree, "mcmc.steps", args.steps)
    if get("chains") is not None:
        _put(tree, "mcmc.chains", args.chains)

    name = get("name")
    if get("epsilon"):
        eps = parse_float_list(args.epsilon)
        _put(tree, "location.epsilons" if name == "location" else "galaxy.epsilons", eps)
    if get("y"):
        ys = parse_float_list(args.y)
        if name == "location":
            _put(tree, "location.ys", ys)
        else:
            if len(ys) != 1:
                raise InputError(f"Galaxy takes a single contaminant location, got {args.y}")
            _put(tree, "galaxy.y", ys[0])
    if get("n") is not None:
        _put(tree, "blindness.n" if name == "blindness" else "location.n", args.n)
    if get("w1") is not None:
        _put(tree, "blindness.w1_true" if name == "blindness" else "model.mixture.w1", args.w1)
    if get("mu") is not None:
        _put(tree, "blindness.mu" if name == "blindness" else "model.mixture.mu", args.mu)
    if get("sigma") is not None:
        _put(tree, "blindness.sigma" if name == "blindness" else "model.mixture.sigma", args.sigma)
    if get("csv"):
        _put(tree, "gene.csv_path", args.csv)
    if get("log_transform") and name == "gene":
        _put(tree, "gene.log_transform", True)
    if get("sizes"):
        _put(tree, "rate.sizes", parse_int_list(args.sizes))
    return tree


def output_dir(args: argparse.Namespace, root, default_name: str) -> Path:
    """--out if given, else <output root>/<default_name>."""
    return Path(args.out) if getattr(args, "out", None) else Path(root) / default_name