"""Deterministic serialization: JSON artifacts and CSV time series.

All floating-point numbers are written with 17 significant digits so
that every double round-trips exactly, and the emitter is hand-rolled
so that byte-identical reruns are a property of the data alone, not of
library version details. Field order follows construction order.
"""

import csv
import json

import numpy as np

from .models import problem_from_dict, problem_to_dict
from .synthesis import PdRciSolution
from .templates import ConfiguredTemplate


def fmt_float(x):
    return format(float(x), ".17g")


def dumps_json(obj, indent=0):
    out = []
    _emit(obj, out, indent, 0)
    return "".join(out) + ("\n" if indent else "")


def dump_json(obj, path, indent=2):
    with open(path, "w") as fh:
        fh.write(dumps_json(obj, indent=indent))


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _emit(obj, out, indent, depth):
    pad = " " * (indent * (depth + 1)) if indent else ""
    close_pad = " " * (indent * depth) if indent else ""
    nl = "\n" if indent else ""
    sep = "," + nl if indent else ", "
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{" + nl)
        for i, (key, val) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise TypeError(f"non-string key {key!r}")
            out.append(pad + json.dumps(key) + ": ")
            _emit(val, out, indent, depth + 1)
            out.append(sep if i + 1 < len(obj) else nl)
        out.append(close_pad + "}")
    elif isinstance(obj, (list, tuple)) or isinstance(obj, np.ndarray):
        items = obj.tolist() if isinstance(obj, np.ndarray) else list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[" + nl)
        for i, val in enumerate(items):
            out.append(pad)
            _emit(val, out, indent, depth + 1)
            out.append(sep if i + 1 < len(items) else nl)
        out.append(close_pad + "]")
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(fmt_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif obj is None:
        out.append("null")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def save_problem(problem, path, lift=False):
    dump_json(problem_to_dict(problem, lift=lift), path)


def load_problem(path, **kwargs):
    return problem_from_dict(load_json(path), **kwargs)


def template_to_dict(template, init_result=None, C_hat=None):
    data = {
        "C": template.C.tolist(),
        "sigma": template.seed_sigma.tolist(),
        "V": [Vk.tolist() for Vk in template.V],
        "E": template.E.tolist(),
        "active_sets": [list(J) for J in template.active_sets],
        "simple": bool(template.simple),
    }
    if init_result is not None:
        data["init"] = init_result.to_dict(C_hat)
    return data


def template_from_dict(data):
    return ConfiguredTemplate(
        C=np.array(data["C"], float),
        V=[np.array(Vk, float) for Vk in data["V"]],
        E=np.array(data["E"], float),
        active_sets=[tuple(J) for J in data["active_sets"]],
        seed_sigma=np.array(data["sigma"], float),
        simple=bool(data.get("simple", True)),
    )


def save_template(template, path, init_result=None, C_hat=None):
    dump_json(template_to_dict(template, init_result, C_hat), path)


def load_template(path):
    return template_from_dict(load_json(path))


def save_solution(solution, path):
    dump_json(solution.to_dict(), path)


def load_solution(path):
    return PdRciSolution.from_dict(load_json(path))


def trajectory_to_csv(traj, path):
    """One row per step: t, states, inputs, params, disturbances, residual.

    The final row carries the terminal state/parameter/residual with the
    input and disturbance columns empty.
    """
    n = traj.states.shape[1]
    m = traj.inputs.shape[1]
    s = traj.params.shape[1]
    header = (["t"]
              + [f"x{i+1}" for i in range(n)]
              + [f"u{i+1}" for i in range(m)]
              + [f"p{i+1}" for i in range(s)]
              + [f"w{i+1}" for i in range(n)]
              + ["max_residual"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        T = traj.horizon
        for t in range(T + 1):
            row = [str(t)] + [fmt_float(v) for v in traj.states[t]]
            if t < T:
                row += [fmt_float(v) for v in traj.inputs[t]]
            else:
                row += [""] * m
            row += [fmt_float(v) for v in traj.params[t]]
            if t < T:
                row += [fmt_float(v) for v in traj.disturbances[t]]
            else:
                row += [""] * n
            row += [fmt_float(traj.residuals[t])]
            writer.writerow(row)


def boundary_to_csv(loop, path, labels=("c1", "c2")):
    """Closed 2D boundary loop (first vertex repeated last) as CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(labels))
        for point in loop:
            writer.writerow([fmt_float(point[0]), fmt_float(point[1])])
