"""Scenario files: JSON with rationals as "p/q" strings.

A scenario holds a tower (arcs with attachments and optional planar
coordinates), ends with declared limit sets, named paths, rays and lines,
generators, relations, a Følner rule and default run options.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .dynamics import Line, Ray
from .measure import FolnerSpec, rule_from_spec
from .plaction import GroupAction, Path, PLHomeo, Step, TowerPiece, parse_word, path_homeo
from .tower import ArcSpec, Attachment, End, LimitSet, Model, Tower, TowerPoint

COMMANDS = ("validate", "dendrite-check", "find-periodic", "classify-ray", "measure", "render")


class ScenarioError(ValueError):
    """Parse or reference error; the message carries a location."""


def rat(v, where: str = "") -> Fraction:
    if isinstance(v, bool) or isinstance(v, float):
        raise ScenarioError(f"{where}: rationals must be integers or 'p/q' strings, got {v!r}")
    try:
        return Fraction(v)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ScenarioError(f"{where}: cannot parse rational {v!r}") from None


def srat(x: Fraction) -> str:
    return str(Fraction(x))


@dataclass(frozen=True)
class GenSpec:
    name: str
    path: str | None = None
    segments: tuple[tuple[Fraction, Fraction, Fraction, Fraction], ...] = ()
    pieces: tuple[TowerPiece, ...] = ()
    fixes: tuple[int, ...] = ()
    identity_elsewhere: bool = True


@dataclass(frozen=True)
class RunSpec:
    base: TowerPoint | None = None
    level: int = 8
    radius: int = 6
    seed: int = 0
    ray: str | None = None
    line: str | None = None
    cell: int = 0
    imax: int = 10
    shift: str | None = None
    c2: Fraction | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    tower: Tower
    ends: tuple[End, ...] = ()
    limits: tuple[tuple[str, LimitSet], ...] = ()
    paths: tuple[tuple[str, Path], ...] = ()
    rays: tuple = ()
    generators: tuple[GenSpec, ...] = ()
    relations: tuple[str, ...] = ()
    folner: str = ""  # canonical JSON of the Følner block
    run: RunSpec = field(default_factory=RunSpec)
    commands: tuple[str, ...] = COMMANDS
    description: str = ""

    @property
    def model(self) -> Model:
        return Model(self.tower, self.ends, self.limits)

    def path(self, name: str) -> Path:
        for k, p in self.paths:
            if k == name:
                return p
        raise ScenarioError(f"unknown path {name!r}")

    def ray(self, name: str):
        for r in self.rays:
            if r.name == name:
                return r
        raise ScenarioError(f"unknown ray or line {name!r}")

    def folner_spec(self) -> FolnerSpec | None:
        if not self.folner:
            return None
        spec = json.loads(self.folner)
        explicit = tuple(tuple(parse_word(w) for w in ws) for ws in spec.pop("sets", []))
        return FolnerSpec(rule_from_spec(spec), explicit)

    def action(self) -> GroupAction:
        return _action(self)

    def hash(self) -> str:
        return hashlib.sha256(dumps(self).encode()).hexdigest()


_ACTIONS: dict = {}


def _action(s: Scenario) -> GroupAction:
    key = s.hash()
    if key not in _ACTIONS:
        gens = []
        for g in s.generators:
            if g.path is not None:
                gens.append(path_homeo(g.name, s.tower, s.path(g.path), g.segments, g.identity_elsewhere))
            else:
                gens.append(PLHomeo(g.name, g.pieces, g.fixes))
        _ACTIONS[key] = GroupAction(s.tower, gens, [parse_word(w) for w in s.relations])
    return _ACTIONS[key]


# ---------------------------------------------------------------------------
# Serialization


def _pt(tw: Tower, p: TowerPoint) -> dict:
    return {"arc": tw.spec(p.arc).name, "s": srat(p.s)}


def to_dict(s: Scenario) -> dict:
    tw = s.tower
    arcs = []
    for a in tw.arcs:
        d = {"name": a.name}
        if a.attach:
            d["attach"] = [
                {"target": tw.spec(t.target).name, "at": srat(t.target_s), "own": srat(t.own_s)} for t in a.attach
            ]
        if a.planar is not None:
            d["planar"] = [[srat(c) for c in xy] for xy in a.planar]
        arcs.append(d)
    ends = []
    lim = dict(s.limits)
    for e in s.ends:
        d = {"name": e.name, "chain": [tw.spec(i).name for i in e.chain]}
        if e.name in lim:
            L = lim[e.name]
            if L.kind == "external":
                d["limit"] = {"point": L.name, "planar": [srat(c) for c in L.planar] if L.planar else None}
            else:
                d["limit"] = {"arc": tw.spec(L.arc).name, "from": srat(L.s0), "to": srat(L.s1)}
        ends.append(d)
    paths = {
        k: [
            {"arc": tw.spec(st.arc).name, "from": srat(st.s0), "to": srat(st.s1), "start": srat(st.p0), "stop": srat(st.p1)}
            for st in p.steps
        ]
        for k, p in s.paths
    }
    rays = []
    for r in s.rays:
        if isinstance(r, Line):
            rays.append({"name": r.name, "line": [_ray_dict(tw, r.negative), _ray_dict(tw, r.positive)]})
        else:
            rays.append(_ray_dict(tw, r))
    gens = []
    for g in s.generators:
        d = {"name": g.name}
        if g.path is not None:
            d["path"] = g.path
            d["map"] = [[srat(x) for x in seg] for seg in g.segments]
            d["identity_elsewhere"] = g.identity_elsewhere
        else:
            d["pieces"] = [
                [tw.spec(p.src).name, srat(p.a), srat(p.b), tw.spec(p.dst).name, srat(p.c), srat(p.d)] for p in g.pieces
            ]
            d["fixes"] = [tw.spec(i).name for i in g.fixes]
        gens.append(d)
    run = s.run
    rd = {"level": run.level, "radius": run.radius, "seed": run.seed, "cell": run.cell, "imax": run.imax}
    if run.base is not None:
        rd["base"] = _pt(tw, run.base)
    for k in ("ray", "line", "shift"):
        if getattr(run, k) is not None:
            rd[k] = getattr(run, k)
    if run.c2 is not None:
        rd["c2"] = srat(run.c2)
    out = {
        "name": s.name,
        "description": s.description,
        "commands": list(s.commands),
        "tower": {"arcs": arcs},
        "ends": ends,
        "paths": paths,
        "rays": rays,
        "generators": gens,
        "relations": list(s.relations),
        "run": rd,
    }
    if s.folner:
        out["folner"] = json.loads(s.folner)
    return out


def _ray_dict(tw, r: Ray) -> dict:
    d = {"name": r.name, "base": _pt(tw, r.base)}
    if r.end is not None:
        d["end"] = r.end
    else:
        d["limit"] = _pt(tw, r.limit)
    return d


def dumps(s: Scenario) -> str:
    return json.dumps(to_dict(s), indent=1, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Parsing


def loads(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return from_dict(data)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ScenarioError(f"malformed scenario: {type(exc).__name__} {exc}") from None


def load(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def _req(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ScenarioError(f"{where}: missing {key!r}")
    return d[key]


def from_dict(data: dict) -> Scenario:
    arcs_in = _req(_req(data, "tower", "$"), "arcs", "$.tower")
    names: dict[str, int] = {}
    for i, a in enumerate(arcs_in, 1):
        nm = _req(a, "name", f"$.tower.arcs[{i - 1}]")
        if nm in names:
            raise ScenarioError(f"$.tower.arcs[{i - 1}]: duplicate arc name {nm!r}")
        names[nm] = i

    def arc_id(v, where):
        if isinstance(v, int) and not isinstance(v, bool) and 1 <= v <= len(arcs_in):
            return v
        if v in names:
            return names[v]
        raise ScenarioError(f"{where}: unknown arc {v!r}")

    arcs = []
    for i, a in enumerate(arcs_in):
        w = f"$.tower.arcs[{i}]"
        att = tuple(
            Attachment(arc_id(_req(t, "target", w), w), rat(_req(t, "at", w), w), rat(t.get("own", 0), w))
            for t in a.get("attach", [])
        )
        pl = a.get("planar")
        planar = None
        if pl is not None:
            planar = tuple(tuple(rat(c, w + ".planar") for c in xy) for xy in pl)
        arcs.append(ArcSpec(a["name"], att, planar))
    tw = Tower(tuple(arcs))

    def point(d, where):
        if "path" in d:
            return paths_map[d["path"]].point(tw, rat(_req(d, "t", where), where))
        return tw.canon(TowerPoint(arc_id(_req(d, "arc", where), where), rat(_req(d, "s", where), where)))

    ends, limits = [], []
    for k, e in enumerate(data.get("ends", [])):
        w = f"$.ends[{k}]"
        name = _req(e, "name", w)
        ends.append(End(name, tuple(arc_id(c, w) for c in _req(e, "chain", w))))
        lim = e.get("limit")
        if lim is not None:
            if "point" in lim:
                pl = lim.get("planar")
                limits.append((name, LimitSet("external", name=lim["point"], planar=tuple(rat(c, w) for c in pl) if pl else None)))
            else:
                limits.append((name, LimitSet("arc", arc_id(_req(lim, "arc", w), w), rat(lim.get("from", 0), w), rat(lim.get("to", 0), w))))
    paths_map = {}
    for k, steps in sorted(data.get("paths", {}).items()):
        w = f"$.paths.{k}"
        try:
            paths_map[k] = Path(
                tuple(
                    Step(arc_id(_req(st, "arc", w), w), rat(st["from"], w), rat(st["to"], w), rat(st["start"], w), rat(st["stop"], w))
                    for st in steps
                )
            )
        except (KeyError, ValueError) as exc:
            raise ScenarioError(f"{w}: {exc}") from None
    rays = []
    for k, r in enumerate(data.get("rays", [])):
        w = f"$.rays[{k}]"
        if "line" in r:
            neg, pos = (_parse_ray(x, point, f"{w}.line") for x in r["line"])
            rays.append(Line(_req(r, "name", w), neg, pos))
        else:
            rays.append(_parse_ray(r, point, w))
    gens = []
    for k, g in enumerate(data.get("generators", [])):
        w = f"$.generators[{k}]"
        name = _req(g, "name", w)
        if "path" in g:
            if g["path"] not in paths_map:
                raise ScenarioError(f"{w}: unknown path {g['path']!r}")
            segs = tuple(tuple(rat(x, w) for x in seg) for seg in _req(g, "map", w))
            gens.append(GenSpec(name, g["path"], segs, (), (), bool(g.get("identity_elsewhere", True))))
        else:
            pieces = tuple(
                TowerPiece(arc_id(p[0], w), rat(p[1], w), rat(p[2], w), arc_id(p[3], w), rat(p[4], w), rat(p[5], w))
                for p in _req(g, "pieces", w)
            )
            fixes = tuple(arc_id(f, w) for f in g.get("fixes", []))
            gens.append(GenSpec(name, None, (), pieces, fixes))
    run_in = data.get("run", {})
    run = RunSpec(
        base=point(run_in["base"], "$.run.base") if "base" in run_in else None,
        level=int(run_in.get("level", 8)),
        radius=int(run_in.get("radius", 6)),
        seed=int(run_in.get("seed", 0)),
        ray=run_in.get("ray"),
        line=run_in.get("line"),
        cell=int(run_in.get("cell", 0)),
        imax=int(run_in.get("imax", 10)),
        shift=run_in.get("shift"),
        c2=rat(run_in["c2"], "$.run.c2") if "c2" in run_in else None,
    )
    commands = tuple(data.get("commands", COMMANDS))
    for c in commands:
        if c not in COMMANDS:
            raise ScenarioError(f"$.commands: unknown command {c!r}")
    folner = json.dumps(data["folner"], sort_keys=True) if data.get("folner") else ""
    s = Scenario(
        name=_req(data, "name", "$"),
        tower=tw,
        ends=tuple(ends),
        limits=tuple(limits),
        paths=tuple(sorted(paths_map.items())),
        rays=tuple(rays),
        generators=tuple(gens),
        relations=tuple(data.get("relations", [])),
        folner=folner,
        run=run,
        commands=commands,
        description=data.get("description", ""),
    )
    _check_refs(s)
    return s


def _parse_ray(r, point, where) -> Ray:
    name = _req(r, "name", where)
    base = point(_req(r, "base", where), where)
    if "end" in r:
        return Ray(name, base, end=r["end"])
    return Ray(name, base, limit=point(_req(r, "limit", where), where))


def _check_refs(s: Scenario) -> None:
    ends = {e.name for e in s.ends}
    for k, _ in s.limits:
        if k not in ends:
            raise ScenarioError(f"limit declared for unknown end {k!r}")
    for r in s.rays:
        for ray in (r.negative, r.positive) if isinstance(r, Line) else (r,):
            if ray.end is not None and ray.end not in ends:
                raise ScenarioError(f"ray {ray.name}: unknown end {ray.end!r}")
    gens = {g.name for g in s.generators}
    for w in s.relations:
        for n, _ in parse_word(w):
            if n not in gens:
                raise ScenarioError(f"relation {w!r}: unknown generator {n!r}")
    for key in ("ray", "line"):
        v = getattr(s.run, key)
        if v is not None:
            s.ray(v)


def with_run(s: Scenario, **kw) -> Scenario:
    return replace(s, run=replace(s.run, **kw))
