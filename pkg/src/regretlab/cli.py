"""Command-line interface: TOML experiment configs, sweeps and the construction tools."""

from __future__ import annotations

import argparse
import difflib
import math
import os
import re
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from . import harness
from .adversaries import (
    CtAdversary,
    EqualizerAdversary,
    EqualizerConfig,
    FixedAdversary,
    IidAdversary,
    auto_equalizer,
    critical_alpha,
    equalizing_certificate,
    validate_equalizer,
)
from .core import BallZ, BoxZ, FiniteZ, HullZ, LabeledZ, make_game
from .geometry import (
    Box,
    Ellipsoid,
    Interval,
    L2Ball,
    LpBall,
    Simplex,
    VertexPolytope,
    modulus_of_convexity,
)
from .losses import (
    Absolute,
    CanonicalLoss,
    CanonicalPwl,
    Congestion,
    CongestionSpec,
    Hinge,
    Linear,
    MulticlassHinge,
    PwlRecord,
    Security,
    TwoStage,
    TwoStageSpec,
    parse_security_edges,
)
from .minimax import exact_value, finite_game, finite_witness, is_trivial
from .players import FTL, OGD, ConstantPlayer, ExpWeights
from .suite import BUILTIN, builtin_game

SEED_LIMIT = 2**64


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if path:
            where.append(path)
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.path = path


# ---------------------------------------------------------------------------
# schema

NUM, INT, BOOL, STR, LIST, TABLE = "number", "integer", "boolean", "string", "array", "table"

# kind -> {key: (type, required)}
LOSS_KINDS = {
    "linear": {},
    "hinge": {"side_info": (BOOL, False), "features": (INT, False)},
    "absolute": {"side_info": (BOOL, False), "features": (INT, False)},
    "multiclass_hinge": {"classes": (INT, True), "features": (INT, True)},
    "two_stage": {
        "c1": (LIST, True), "c2": (LIST, True), "A": (LIST, True), "B": (LIST, True),
        "x_lower": (LIST, False), "x_upper": (LIST, False), "duals": (LIST, False),
    },
    "stackelberg_security": {"graph": (STR, True)},
    "congestion": {"slopes": (LIST, True), "intercepts": (LIST, True)},
    "canonical_pwl": {"records": (LIST, True)},
}
RECORD_KEYS = {"z": (LIST, True), "C": (LIST, True), "c": (LIST, True), "X": (LIST, True)}
Z_KINDS = {
    "finite": {"points": (LIST, True)},
    "ball": {"center": (LIST, True), "radius": (NUM, True), "surface": (BOOL, False)},
    "box": {"lo": (LIST, True), "hi": (LIST, True)},
    "hull": {"vertices": (LIST, True)},
    "labeled": {"base": (TABLE, True), "labels": (LIST, True)},
}
F_KINDS = {
    "simplex": {"dim": (INT, True)},
    "box": {"lo": (LIST, True), "hi": (LIST, True)},
    "interval": {"a": (NUM, True), "b": (NUM, True)},
    "vertex_polytope": {"points": (LIST, True)},
    "l2_ball": {"radius": (NUM, False), "center": (LIST, False), "dim": (INT, False)},
    "lp_ball": {"p": (NUM, True), "radius": (NUM, False), "center": (LIST, False), "dim": (INT, False)},
    "ellipsoid": {"Q": (LIST, True), "center": (LIST, False)},
}
PLAYER_KINDS = {
    "ftl": {"linearize": (BOOL, False)},
    "ogd": {"grad_bound": (NUM, False)},
    "exp_weights": {"eta": (NUM, False)},
    "constant": {"point": (LIST, True)},
}
ADVERSARY_KINDS = {
    "ct": {"z_star": (LIST, True), "alpha": (NUM, True), "e": (LIST, True)},
    "iid": {"points": (LIST, False), "p": (LIST, False)},
    "equalizer": {
        "z": (LIST, False), "e": (LIST, False), "eps": (NUM, False),
        "f1": (LIST, False), "f2": (LIST, False),
    },
    "fixed": {"sequence": (LIST, True)},
    "critical_alpha": {"p1": (LIST, False)},
}
TOP_KEYS = {
    "seed": (INT, False), "trials": (INT, False), "horizons": (LIST, False),
    "output": (STR, False), "game": (TABLE, True), "player": (TABLE, False),
    "adversary": (TABLE, False),
}
GAME_KEYS = {"builtin": (STR, False), "loss": (TABLE, False), "Z": (TABLE, False), "F": (TABLE, False)}


def _is_type(v, t) -> bool:
    if t == NUM:
        return isinstance(v, (int, float)) and not isinstance(v, bool)
    if t == INT:
        return isinstance(v, int) and not isinstance(v, bool)
    if t == BOOL:
        return isinstance(v, bool)
    if t == STR:
        return isinstance(v, str)
    if t == LIST:
        return isinstance(v, list)
    return isinstance(v, dict)


def _suggest(key, allowed) -> str:
    m = difflib.get_close_matches(key, list(allowed), n=1)
    return f" (did you mean '{m[0]}'?)" if m else ""


def _check_table(tbl: dict, schema: dict, path: str) -> None:
    for k, v in tbl.items():
        if k not in schema:
            raise ConfigError(f"unknown field '{k}'{_suggest(k, schema)}", path=path or None)
        t, _ = schema[k]
        if not _is_type(v, t):
            raise ConfigError(f"expected {t}, got {type(v).__name__}", path=_join(path, k))
    for k, (_, req) in schema.items():
        if req and k not in tbl:
            raise ConfigError("missing required field", path=_join(path, k))


def _join(path, key):
    return f"{path}.{key}" if path else key


def _check_kinded(tbl: dict, kinds: dict, path: str, tag: str = "kind") -> None:
    if tag not in tbl:
        raise ConfigError(f"missing '{tag}' (one of {sorted(kinds)})", path=path)
    kind = tbl[tag]
    if not isinstance(kind, str) or kind not in kinds:
        raise ConfigError(f"unknown {tag} {kind!r}{_suggest(str(kind), kinds)}", path=_join(path, tag))
    schema = dict(kinds[kind])
    schema[tag] = (STR, True)
    _check_table(tbl, schema, path)


@dataclass
class Component:
    """A named variant with its parameters, e.g. ``kind = "ball"`` plus ``center``/``radius``."""

    kind: str
    params: Dict = field(default_factory=dict)

    def to_table(self, tag: str = "kind") -> dict:
        return {tag: self.kind, **self.params}

    @classmethod
    def from_table(cls, tbl: dict, tag: str = "kind") -> "Component":
        params = {k: v for k, v in tbl.items() if k != tag}
        return cls(tbl[tag], params)


@dataclass
class GameSpec:
    builtin: Optional[str] = None
    loss: Optional[Component] = None
    Z: Optional[Component] = None
    F: Optional[Component] = None


@dataclass
class ExperimentSpec:
    game: GameSpec
    player: Optional[Component] = None
    adversary: Optional[Component] = None
    horizons: List[int] = field(default_factory=lambda: list(harness.DEFAULT_HORIZONS))
    trials: int = 100
    seed: int = 0
    output: Optional[str] = None


def _toml_line(exc) -> Optional[int]:
    m = re.search(r"line (\d+)", str(exc))
    return int(m.group(1)) if m else None


def parse_config(text: str) -> ExperimentSpec:
    """Parse and validate a TOML experiment description (unknown keys are errors)."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}", line=_toml_line(exc)) from None
    _check_table(doc, TOP_KEYS, "")
    g = doc["game"]
    _check_table(g, GAME_KEYS, "game")
    if "builtin" in g:
        if set(g) != {"builtin"}:
            raise ConfigError("'builtin' cannot be combined with loss/Z/F", path="game")
        if g["builtin"] not in BUILTIN:
            raise ConfigError(f"unknown built-in game{_suggest(g['builtin'], BUILTIN)}", path="game.builtin")
        game = GameSpec(builtin=g["builtin"])
    else:
        for part in ("loss", "Z", "F"):
            if part not in g:
                raise ConfigError("missing required field", path=f"game.{part}")
        _check_kinded(g["loss"], LOSS_KINDS, "game.loss")
        if g["loss"]["kind"] == "canonical_pwl":
            for i, rec in enumerate(g["loss"]["records"]):
                if not isinstance(rec, dict):
                    raise ConfigError("expected table", path=f"game.loss.records[{i}]")
                _check_table(rec, RECORD_KEYS, f"game.loss.records[{i}]")
        _check_z(g["Z"], "game.Z")
        _check_kinded(g["F"], F_KINDS, "game.F")
        game = GameSpec(None, *(Component.from_table(g[p]) for p in ("loss", "Z", "F")))

    player = adversary = None
    if "player" in doc:
        _check_kinded(doc["player"], PLAYER_KINDS, "player", tag="name")
        player = Component.from_table(doc["player"], tag="name")
    if "adversary" in doc:
        _check_kinded(doc["adversary"], ADVERSARY_KINDS, "adversary", tag="name")
        adversary = Component.from_table(doc["adversary"], tag="name")

    spec = ExperimentSpec(game, player, adversary)
    if "horizons" in doc:
        H = doc["horizons"]
        if not H or not all(_is_type(h, INT) for h in H):
            raise ConfigError("must be a non-empty list of integers", path="horizons")
        if H[0] < 1 or any(b <= a for a, b in zip(H, H[1:])):
            raise ConfigError("must be positive and strictly increasing", path="horizons")
        spec.horizons = list(H)
    if "trials" in doc:
        if doc["trials"] < 1:
            raise ConfigError("must be >= 1", path="trials")
        spec.trials = doc["trials"]
    if "seed" in doc:
        if not 0 <= doc["seed"] < SEED_LIMIT:
            raise ConfigError("must be a nonnegative 64-bit integer", path="seed")
        spec.seed = doc["seed"]
    if "output" in doc:
        spec.output = doc["output"]
    return spec


def _check_z(tbl, path):
    _check_kinded(tbl, Z_KINDS, path)
    if tbl["kind"] == "labeled":
        _check_z(tbl["base"], f"{path}.base")


def render(spec: ExperimentSpec) -> str:
    """TOML text that :func:`parse_config` maps back to ``spec``."""
    doc = {"seed": spec.seed, "trials": spec.trials, "horizons": list(spec.horizons)}
    if spec.output is not None:
        doc["output"] = spec.output
    g = spec.game
    if g.builtin is not None:
        doc["game"] = {"builtin": g.builtin}
    else:
        doc["game"] = {"loss": g.loss.to_table(), "Z": g.Z.to_table(), "F": g.F.to_table()}
    if spec.player is not None:
        doc["player"] = spec.player.to_table("name")
    if spec.adversary is not None:
        doc["adversary"] = spec.adversary.to_table("name")
    return tomli_w.dumps(doc)


# ---------------------------------------------------------------------------
# building components


def _arr(x):
    return np.asarray(x, dtype=float)


def _bounds(lo, hi, n):
    lo = [None] * n if lo is None else [None if math.isinf(v) else float(v) for v in lo]
    hi = [None] * n if hi is None else [None if math.isinf(v) else float(v) for v in hi]
    return tuple(zip(lo, hi))


def build_loss(c: Component):
    p = c.params
    if c.kind == "linear":
        return Linear()
    if c.kind in ("hinge", "absolute"):
        cls = Hinge if c.kind == "hinge" else Absolute
        return cls(p.get("side_info", False), p.get("features", 1))
    if c.kind == "multiclass_hinge":
        return MulticlassHinge(p["classes"], p["features"])
    if c.kind == "two_stage":
        n2 = len(p["c2"])
        bounds = None
        if "x_lower" in p or "x_upper" in p:
            bounds = _bounds(p.get("x_lower"), p.get("x_upper"), n2)
        spec = TwoStageSpec(_arr(p["c1"]), _arr(p["c2"]), _arr(p["A"]), _arr(p["B"]), bounds)
        return TwoStage(spec, None if "duals" not in p else _arr(p["duals"]))
    if c.kind == "stackelberg_security":
        return Security(parse_security_edges(p["graph"]))
    if c.kind == "congestion":
        return Congestion(CongestionSpec(p["slopes"], p["intercepts"]))
    if c.kind == "canonical_pwl":
        recs = {tuple(_arr(r["z"]).ravel()): PwlRecord(_arr(r["C"]), _arr(r["c"]), _arr(r["X"]))
                for r in p["records"]}
        return CanonicalLoss(CanonicalPwl(recs))
    raise ConfigError(f"unknown loss {c.kind!r}")


def build_z(c: Component):
    p = c.params
    if c.kind == "finite":
        return FiniteZ(_arr(p["points"]))
    if c.kind == "ball":
        return BallZ(_arr(p["center"]), float(p["radius"]), p.get("surface", False))
    if c.kind == "box":
        return BoxZ(_arr(p["lo"]), _arr(p["hi"]))
    if c.kind == "hull":
        return HullZ(_arr(p["vertices"]))
    if c.kind == "labeled":
        return LabeledZ(build_z(Component.from_table(p["base"])), tuple(p["labels"]))
    raise ConfigError(f"unknown opponent set {c.kind!r}")


def build_f(c: Component):
    p = c.params
    if c.kind == "simplex":
        return Simplex(p["dim"])
    if c.kind == "box":
        return Box(_arr(p["lo"]), _arr(p["hi"]))
    if c.kind == "interval":
        return Interval(float(p["a"]), float(p["b"]))
    if c.kind == "vertex_polytope":
        return VertexPolytope(_arr(p["points"]))
    if c.kind in ("l2_ball", "lp_ball"):
        center = _arr(p["center"]) if "center" in p else np.zeros(p.get("dim", 2))
        r = float(p.get("radius", 1.0))
        return L2Ball(r, center) if c.kind == "l2_ball" else LpBall(float(p["p"]), r, center)
    if c.kind == "ellipsoid":
        Q = _arr(p["Q"])
        return Ellipsoid(Q, _arr(p["center"]) if "center" in p else np.zeros(Q.shape[0]))
    raise ConfigError(f"unknown decision set {c.kind!r}")


def build_game(g: GameSpec):
    if g.builtin is not None:
        return builtin_game(g.builtin)
    return make_game(build_loss(g.loss), build_z(g.Z), build_f(g.F))


def build_player(c: Component):
    p = c.params
    if c.kind == "ftl":
        return FTL(p.get("linearize", False))
    if c.kind == "ogd":
        return OGD(p.get("grad_bound", 1.0))
    if c.kind == "exp_weights":
        return ExpWeights(p.get("eta", 0.1))
    return ConstantPlayer(_arr(p["point"]))


def build_adversary(c: Component, game):
    p = c.params
    if c.kind == "ct":
        return CtAdversary(p["z_star"], p["alpha"], p["e"])
    if c.kind == "iid":
        if "points" in p:
            return IidAdversary(_arr(p["points"]), p.get("p"))
        if game.opponent_set.is_finite:
            return IidAdversary(game.opponent_set.points, p.get("p"))
        if "p" in p:
            raise ConfigError("'p' needs a finite point list", path="adversary.p")
        return IidAdversary(sampler=game.opponent_set)
    if c.kind == "equalizer":
        if "z" in p:
            missing = [k for k in ("e", "eps", "f1", "f2") if k not in p]
            if missing:
                raise ConfigError(f"explicit equaliser also needs {missing}", path="adversary")
            cfg = EqualizerConfig(p["z"], p["e"], float(p["eps"]), _arr(p["f1"]), _arr(p["f2"]))
            return EqualizerAdversary(validate_equalizer(cfg, game))
        return EqualizerAdversary(auto_equalizer(game, p.get("eps")))
    if c.kind == "fixed":
        return FixedAdversary(p["sequence"])
    return critical_alpha(game, p.get("p1")).adversary(game)


# ---------------------------------------------------------------------------
# output


def write_atomic(files: Dict[str, str], out_dir: str) -> List[str]:
    """Write all ``files`` into ``out_dir`` or none of them."""
    os.makedirs(out_dir, exist_ok=True)
    temps = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            temps.append((tmp, os.path.join(out_dir, name)))
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
        for tmp, final in temps:
            os.replace(tmp, final)
    except BaseException:
        for tmp, _ in temps:
            if os.path.exists(tmp):
                os.remove(tmp)
        raise
    return [final for _, final in temps]


def run_experiment(spec: ExperimentSpec, out_dir: Optional[str] = None, threads: int = 1):
    """Sweep the configured game and write ``trials.csv`` and ``summary.json``."""
    if spec.player is None or spec.adversary is None:
        raise ConfigError("'run' needs both [player] and [adversary] sections")
    game = build_game(spec.game)
    player = build_player(spec.player)
    adv = build_adversary(spec.adversary, game)
    data = harness.sweep(game, player, adv, spec.horizons, spec.trials, spec.seed, threads=threads)
    result = harness.fit_sweep(data)
    out_dir = out_dir or spec.output or "."
    files = {
        "trials.csv": harness.trials_csv(data),
        "summary.json": harness.summary_json(result, {"seed": spec.seed}),
    }
    paths = write_atomic(files, out_dir)
    return result, paths


def verdict_line(r: harness.SweepResult) -> str:
    lo, hi = r.exponent_ci
    a, b = r.log_fit
    return (f"verdict: {r.verdict}  exponent {r.exponent:.4f} [{lo:.4f}, {hi:.4f}]  "
            f"log fit {a:.6g} + {b:.6g} ln T")


# ---------------------------------------------------------------------------
# subcommands


def _emit(name: str, payload: dict, out_dir: Optional[str]) -> None:
    text = harness.dumps17(payload) + "\n"
    sys.stdout.write(text)
    if out_dir:
        write_atomic({f"{name}.json": text}, out_dir)


def _load(args) -> ExperimentSpec:
    if not args.config:
        raise ConfigError("--config is required")
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    spec = parse_config(text)
    if args.seed is not None:
        if not 0 <= args.seed < SEED_LIMIT:
            raise ConfigError("--seed must be a nonnegative 64-bit integer")
        spec.seed = args.seed
    return spec


def cmd_run(args) -> int:
    spec = _load(args)
    result, paths = run_experiment(spec, args.out, args.threads)
    print(verdict_line(result))
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_minimax(args) -> int:
    game = build_game(_load(args).game)
    fg = finite_game(game, grid_size=args.grid_size)
    values = [exact_value(fg, T) for T in range(1, args.T + 1)]
    _emit("minimax", {"T": list(range(1, args.T + 1)), "value": values,
                      "grid": fg.grid.tolist()}, args.out)
    return 0


def cmd_check_trivial(args) -> int:
    spec = _load(args)
    game = build_game(spec.game)
    if game.opponent_set.is_finite:
        v = is_trivial(game)
        payload = {"trivial": v.trivial, "violation": v.violation}
        if v.trivial:
            payload["f_star"] = v.f_star
        else:
            payload["witness_z"] = v.witness_z
            payload["improving_f"] = v.improving_f
    else:
        w = finite_witness(game, budget=args.budget, seed=spec.seed)
        payload = {"trivial": None, "witness_found": w.found}
        if w.found:
            payload["witness_set"] = w.points
        elif w.best_f is not None:
            payload["best_f"] = w.best_f
    _emit("check-trivial", payload, args.out)
    return 0


def cmd_construct_alpha(args) -> int:
    spec = _load(args)
    game = build_game(spec.game)
    p1 = None
    if spec.adversary is not None and spec.adversary.kind == "critical_alpha":
        p1 = spec.adversary.params.get("p1")
    r = critical_alpha(game, p1)
    cert = equalizing_certificate(game, r.p, r.f_a, r.f_b)
    _emit("construct-alpha", {
        "alpha": r.alpha, "p": r.p, "f_a": r.f_a, "f_b": r.f_b, "p1": r.p1,
        "certificate": cert.passed, "certificate_message": cert.message,
    }, args.out)
    return 0 if cert.passed else 1


def _ball_from(args):
    if args.config:
        spec = _load(args)
        if spec.game.builtin is not None:
            F = build_game(spec.game).player_set
        else:
            F = build_f(spec.game.F)
        return F, spec.seed
    p = 2.0 if args.p is None else args.p
    F = L2Ball(1.0, np.zeros(args.dim)) if p == 2.0 else LpBall(p, 1.0, np.zeros(args.dim))
    return F, 0 if args.seed is None else args.seed


def cmd_estimate_modulus(args) -> int:
    F, seed = _ball_from(args)
    est = modulus_of_convexity(F, args.eps, budget=args.budget, seed=seed)
    _emit("estimate-modulus", {"set": F.kind, "eps": args.eps, "budget": args.budget,
                               "estimate": est}, args.out)
    return 0


def cmd_holder_check(args) -> int:
    spec = _load(args)
    game = build_game(spec.game)
    F = game.player_set
    q = args.q if args.q is not None else float(getattr(F, "p", 2.0))
    r = harness.holder_check(F, game.opponent_set, q=q, samples=args.samples, seed=spec.seed)
    _emit("holder-check", {"q": q, "constant": r.constant, "violation_ratio": r.violation_ratio,
                           "max_ratio": r.max_ratio, "analytic_bound": r.analytic_bound,
                           "pairs": r.pairs}, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="regretlab", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="TOML experiment file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads for trials")
        return p

    common(sub.add_parser("run", help="Monte Carlo regret sweep")).set_defaults(fn=cmd_run)
    p = common(sub.add_parser("minimax", help="exact game values for small T"))
    p.add_argument("--T", type=int, default=4)
    p.add_argument("--grid-size", type=int, default=5)
    p.set_defaults(fn=cmd_minimax)
    p = common(sub.add_parser("check-trivial", help="triviality verdict or finite witness"))
    p.add_argument("--budget", type=int, default=200)
    p.set_defaults(fn=cmd_check_trivial)
    common(sub.add_parser("construct-alpha", help="equalising mixture and its certificate")).set_defaults(
        fn=cmd_construct_alpha)
    p = common(sub.add_parser("estimate-modulus", help="modulus of convexity of a ball"), False)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--budget", type=int, default=1000)
    p.add_argument("--p", type=float, default=None, help="unit lp ball when no config is given")
    p.add_argument("--dim", type=int, default=2)
    p.set_defaults(fn=cmd_estimate_modulus)
    p = common(sub.add_parser("holder-check", help="sampled sensitivity of the argmin map"))
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--samples", type=int, default=2000)
    p.set_defaults(fn=cmd_holder_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
