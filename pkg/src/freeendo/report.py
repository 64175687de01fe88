"""Text input format, analysis runners and versioned reports."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

from .certify import (
    DEFAULT_CAP,
    CapExceeded,
    CleanImmersionRep,
    SearchBounds,
    UncleanImmersion,
    certify_fully_irreducible,
    certify_hyperbolic,
    find_immersion_rep,
    invariant_subgroup_index,
    periodic_class_search,
)
from .errors import CapExceededError, NonInjective, ParseError, PreconditionError
from .graphs import is_immersion, rose_map
from .markings import image_marked_graph, marked_equal
from .stallings import fold_to_immersion, iterate_image, labeled_isomorphism
from .traintrack import (
    is_clean,
    is_irreducible,
    is_primitive,
    legality,
    pf_eigenvalue,
    transition_matrix,
    whitehead_graphs,
)
from .words import IDENTITY, Basis, Endomorphism, Word

SCHEMA = "freeendo.report/1"

_KEYS = ("witness", "twist", "complement", "cap", "max_n", "max_len")


@dataclass(frozen=True)
class EndoSpec:
    endo: Endomorphism
    witness: tuple[Word, ...] = ()
    twist: Word = IDENTITY
    complement: tuple[Word, ...] | None = None
    cap: int | None = None
    max_n: int | None = None
    max_len: int | None = None

    @property
    def basis(self) -> Basis:
        return self.endo.basis

    @property
    def rank(self) -> int:
        return self.endo.rank

    def echo(self) -> dict:
        b = self.basis
        out: dict = {
            "gens": list(b.names),
            "images": {n: _spaced(b, w) for n, w in zip(b.names, self.endo.images)},
        }
        if self.witness:
            out["witness"] = [_spaced(b, w) for w in self.witness]
        if self.twist:
            out["twist"] = _spaced(b, self.twist)
        if self.complement is not None:
            out["complement"] = [_spaced(b, w) for w in self.complement]
        for k in ("cap", "max_n", "max_len"):
            if getattr(self, k) is not None:
                out[k] = getattr(self, k)
        return out


def _spaced(b: Basis, w: Word) -> str:
    return b.format(w, sep=" ") if w else "1"


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _tokens(text: str, offset: int):
    """Whitespace-separated tokens with their 1-based columns."""
    col = 0
    for part in text.split():
        col = text.index(part, col)
        yield part, offset + col + 1
        col += len(part)


def _parse_word(b: Basis, text: str, lineno: int, offset: int, allow_empty=False) -> Word:
    letters: list[int] = []
    single = all(len(n) == 1 for n in b.names)
    for tok, col in _tokens(text, offset):
        if tok in ("1", "ε") and allow_empty:
            continue
        try:
            letters.append(b.letter(tok))
            continue
        except ParseError:
            if not single:
                raise ParseError(f"unknown token {tok!r}", lineno, col) from None
        for i, ch in enumerate(tok):
            try:
                letters.append(b.letter(ch))
            except ParseError:
                raise ParseError(f"unknown token {ch!r}", lineno, col + i) from None
    w = Word(tuple(letters))
    if not w and not allow_empty:
        raise ParseError("empty image", lineno, offset + 1)
    return w


def _int(text: str, lineno: int, col: int) -> int:
    try:
        v = int(text.strip())
    except ValueError:
        raise ParseError(f"expected an integer, got {text.strip()!r}", lineno, col) from None
    if v < 1:
        raise ParseError("expected a positive integer", lineno, col)
    return v


def parse_endo(text: str) -> EndoSpec:
    """Read the ``gens:`` / ``x -> ...`` format.

    Optional lines: ``witness: w1, w2``, ``twist: w``, ``complement: w1, w2``,
    ``cap: N``, ``max_n: N``, ``max_len: N``.
    """
    basis = None
    images: dict[str, Word] = {}
    extra: dict = {}
    last = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        last = lineno
        if basis is None:
            head, sep, rest = line.partition(":")
            if not sep or head.strip() != "gens":
                raise ParseError("expected header 'gens: ...'", lineno, 1)
            names = [t for t, _ in _tokens(rest, len(head) + 1)]
            cols = [c for _, c in _tokens(rest, len(head) + 1)]
            for n, c in zip(names, cols):
                if not (n.isalpha() and n.islower()):
                    raise ParseError(f"generator name {n!r} must be lowercase letters", lineno, c)
                if names.count(n) > 1:
                    raise ParseError(f"generator {n!r} listed twice", lineno, c)
            if len(names) < 2:
                raise ParseError("need at least two generators", lineno, len(head) + 2)
            basis = Basis(tuple(names))
            continue
        if "->" in line:
            lhs, _, rhs = line.partition("->")
            name = lhs.strip()
            if name not in basis.names:
                col = len(lhs) - len(lhs.lstrip()) + 1
                raise ParseError(f"unknown generator {name!r}", lineno, col)
            if name in images:
                raise ParseError(f"second image for {name!r}", lineno, 1)
            images[name] = _parse_word(basis, rhs, lineno, len(lhs) + 2)
            continue
        key, sep, rest = line.partition(":")
        key = key.strip()
        if not sep or key not in _KEYS:
            raise ParseError(f"cannot read line {line.strip()!r}", lineno, 1)
        offset = len(line) - len(rest)
        if key in ("cap", "max_n", "max_len"):
            extra[key] = _int(rest, lineno, offset + 1)
        elif key == "twist":
            extra[key] = _parse_word(basis, rest, lineno, offset, allow_empty=True)
        else:
            words = []
            for chunk in rest.split(","):
                words.append(_parse_word(basis, chunk, lineno, offset))
                offset += len(chunk) + 1
            extra[key] = tuple(words)
    if basis is None:
        raise ParseError("missing header 'gens: ...'", max(last, 1), 1)
    missing = [n for n in basis.names if n not in images]
    if missing:
        raise ParseError(
            f"rank mismatch: {len(images)} images for {basis.rank} generators (missing {', '.join(missing)})",
            last + 1,
            1,
        )
    endo = Endomorphism(basis, tuple(images[n] for n in basis.names))
    return EndoSpec(endo, **extra)


def format_endo(spec: EndoSpec) -> str:
    """Inverse of :func:`parse_endo`."""
    b = spec.basis
    lines = ["gens: " + " ".join(b.names)]
    lines += [f"{n} -> {_spaced(b, w)}" for n, w in zip(b.names, spec.endo.images)]
    if spec.witness:
        lines.append("witness: " + ", ".join(_spaced(b, w) for w in spec.witness))
    if spec.twist:
        lines.append("twist: " + _spaced(b, spec.twist))
    if spec.complement is not None:
        lines.append("complement: " + ", ".join(_spaced(b, w) for w in spec.complement))
    for k in ("cap", "max_n", "max_len"):
        if getattr(spec, k) is not None:
            lines.append(f"{k}: {getattr(spec, k)}")
    return "\n".join(lines) + "\n"


def _canon(x):
    return json.loads(json.dumps(x, sort_keys=True))


@dataclass(frozen=True)
class Report:
    command: str
    input: dict
    verdicts: dict
    evidence: dict = field(default_factory=dict)
    timing: float | None = None
    schema: str = SCHEMA
    exit_code: int = 0

    def __post_init__(self):
        # JSON-shaped payloads so that emit/parse round-trips exactly
        for k in ("input", "verdicts", "evidence"):
            object.__setattr__(self, k, _canon(getattr(self, k)))

    def to_json(self) -> str:
        d = asdict(self)
        if d["timing"] is None:
            del d["timing"]
        return json.dumps(d, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        if d.get("schema") != SCHEMA:
            raise ParseError(f"unsupported report schema {d.get('schema')!r}")
        return cls(**d)

    def to_text(self) -> str:
        lines = [f"{self.command}: " + ", ".join(f"{k}={_short(v)}" for k, v in self.verdicts.items())]
        for k, v in self.evidence.items():
            lines.append(f"  {k}: {_short(v)}")
        if self.timing is not None:
            lines.append(f"  time: {self.timing:.3f}s")
        return "\n".join(lines) + "\n"


def _short(v) -> str:
    if isinstance(v, str):
        return v
    return json.dumps(v, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------- runners


def _turn(b: Basis, d: int) -> str:
    return b.token(d // 2 + 1 if d % 2 == 0 else -(d // 2 + 1))


def _graph_summary(g) -> dict:
    return {"vertices": g.num_vertices, "edge_pairs": g.num_edges, "rank": g.euler_rank()}


def _fold(spec: EndoSpec, **_) -> tuple[dict, dict, int]:
    b = spec.basis
    try:
        res = fold_to_immersion(rose_map(spec.endo))
    except NonInjective as err:
        return {"injective": False}, {
            "fold": {"index": err.fold_index, "vertex": err.vertex, "edges": list(err.edges)}
        }, 0
    folds = [
        {"index": f.index, "vertex": f.vertex, "edges": list(f.edges), "label": _turn(b, f.label), "kind": f.kind}
        for f in res.folds
    ]
    return {"injective": True, "immersion": not res.folds}, {
        "folds": folds,
        "graph": _graph_summary(res.graph),
        "verified": res.verify(),
    }, 0


def _images(spec: EndoSpec, k: int = 3, **_) -> tuple[dict, dict, int]:
    e = spec.endo
    seq = iterate_image(rose_map(e), k)
    marked = [image_marked_graph(e, i) for i in range(1, k + 1)]
    classes: list[int] = []
    reps: list[int] = []
    for i, m in enumerate(marked):
        for c, j in enumerate(reps):
            if marked_equal(m, marked[j]):
                classes.append(c)
                break
        else:
            classes.append(len(reps))
            reps.append(i)
    labeled = all(
        labeled_isomorphism(seq.graphs[i], seq.graphs[i + 1], pointed=False) is not None
        for i in range(len(seq.graphs) - 1)
    )
    verdicts = {
        "same_marked_graph": len(reps) == 1,
        "labeled_isomorphic": labeled,
        "surjective": seq.surjective,
    }
    evidence = {
        "graphs": [dict(i=i + 1, **_graph_summary(s.graph)) for i, s in enumerate(seq.graphs)],
        "marked_classes": classes,
        "folds": [len(f.folds) for f in seq.folds],
    }
    return verdicts, evidence, 0


def _traintrack_evidence(g) -> dict:
    a = transition_matrix(g)
    out: dict = {"matrix": a.tolist(), "irreducible": is_irreducible(a)}
    if out["irreducible"]:
        pf = pf_eigenvalue(a)
        out["primitive"] = is_primitive(a)
        out["lambda"] = {"value": pf.lam, "lower": float(pf.lower), "upper": float(pf.upper)}
    tt = legality(g)
    out["train_track"] = tt.train_track
    if tt.witness:
        out["illegal_chain"] = [list(t) for t in tt.witness]
    out["whitehead"] = [
        {
            "vertex": w.vertex,
            "edges": sorted(list(x) for x in w.edges),
            "connected": w.is_connected(),
            "cut_vertices": list(w.cut_vertices()),
        }
        for w in whitehead_graphs(g)
    ]
    if tt.train_track:
        out["clean"] = is_clean(g).status.value
    return out


def _traintrack(spec: EndoSpec, **_) -> tuple[dict, dict, int]:
    g = rose_map(spec.endo)
    ev = _traintrack_evidence(g)
    ev["is_immersion"] = is_immersion(g)[0]
    verdicts = {"train_track": ev["train_track"], "is_immersion": ev["is_immersion"]}
    if "clean" in ev:
        verdicts["clean"] = ev["clean"]
    return verdicts, ev, 0


def _rep_evidence(rep) -> dict:
    out: dict = {"kind": type(rep).__name__, "iterations": rep.iterations}
    g = rep.map
    out["graph"] = _graph_summary(g.domain)
    out["map"] = g.format()
    if isinstance(rep, (CleanImmersionRep, UncleanImmersion)):
        out["clean"] = rep.clean.status.value if rep.clean is not None else None
    return out


def _immersion_rep(spec: EndoSpec, cap: int | None = None, **_) -> tuple[dict, dict, int]:
    cap = cap or spec.cap or DEFAULT_CAP
    rep = find_immersion_rep(spec.endo, cap)
    code = 3 if isinstance(rep, CapExceeded) else 0
    return {"representative": type(rep).__name__}, _rep_evidence(rep), code


def _bounds(spec: EndoSpec, flags: dict) -> SearchBounds:
    d = SearchBounds()
    return SearchBounds(
        flags.get("max_n") or spec.max_n or d.max_n,
        flags.get("max_len") or spec.max_len or d.max_len,
        flags.get("cap") or spec.cap or d.cap,
    )


def _certify(spec: EndoSpec, **flags) -> tuple[dict, dict, int]:
    e = spec.endo
    bounds = _bounds(spec, flags)
    witness = flags.get("witness") or spec.witness
    twist = flags.get("twist") or spec.twist
    irr = certify_fully_irreducible(e, witness or None, twist, spec.complement, bounds.cap)
    hyp = certify_hyperbolic(e, bounds)
    g = rose_map(e)
    ev = _traintrack_evidence(g)
    ev["is_immersion"] = is_immersion(g)[0]
    ev["bounds"] = {"max_n": bounds.max_n, "max_len": bounds.max_len, "cap": bounds.cap}
    ev["notes"] = list(irr.notes)
    if irr.rep is not None:
        ev["representative"] = _rep_evidence(irr.rep)
    if irr.evidence is not None:
        b = spec.basis
        ev["reduction"] = {
            "generators": [_spaced(b, w) for w in irr.evidence.generators],
            "twist": _spaced(b, irr.evidence.twist),
            "invariant": list(irr.evidence.images_in_A),
            "complement": [_spaced(b, w) for w in irr.evidence.complement],
            "image_contained": irr.evidence.image_contained,
        }
    verdicts = {"fully_irreducible": irr.verdict, "hyperbolic": hyp.verdict}
    if hyp.witness is not None:
        w = hyp.witness
        verdicts["witness"] = [_spaced(spec.basis, w.word), w.d, w.n]
    code = 3 if isinstance(hyp.rep, CapExceeded) and hyp.verdict == "Unknown" else 0
    return verdicts, ev, code


def _periodic(spec: EndoSpec, **flags) -> tuple[dict, dict, int]:
    b = _bounds(spec, flags)
    w = periodic_class_search(spec.endo, b.max_n, b.max_len)
    if w is None:
        return {"witness": None}, {"bounds": [b.max_n, b.max_len]}, 0
    return {"witness": [_spaced(spec.basis, w.word), w.d, w.n]}, {"bounds": [b.max_n, b.max_len]}, 0


def parse_start(text: str, basis: Basis):
    """``rose``, ``theta`` or ``barbell``, optionally ``:w1,w2`` twisting the marking."""
    from .spine2 import barbell_simplex, rose_simplex, theta_simplex, twisted

    shape, _, rest = text.partition(":")
    base = {"rose": rose_simplex, "theta": theta_simplex, "barbell": barbell_simplex}.get(shape.strip())
    if base is None:
        raise ParseError(f"unknown start shape {shape!r}; use rose, theta or barbell")
    s = base()
    if rest.strip():
        words = tuple(_parse_word(basis, chunk, 1, 0) for chunk in rest.split(","))
        alpha = Endomorphism(basis, words)
        from .stallings import invert_automorphism

        try:
            invert_automorphism(alpha)
        except (PreconditionError, NonInjective):
            raise PreconditionError(f"start marking {rest.strip()!r} is not an automorphism") from None
        s = twisted(s, alpha)
    return s


def _spine_check(spec: EndoSpec):
    if spec.rank != 2:
        raise PreconditionError("spine commands need rank 2")


def _orbit(spec: EndoSpec, start: str = "rose", max_steps: int = 32, **_) -> tuple[dict, dict, int]:
    from .spine2 import orbit

    _spine_check(spec)
    s = parse_start(start, spec.basis)
    try:
        rec = orbit(s, spec.endo, max_steps)
    except CapExceededError:
        return {"orbit": "CapExceeded"}, {"start": s.describe(spec.basis), "max_steps": max_steps}, 3
    return {"preperiod": rec.preperiod, "period": rec.period}, {
        "sequence": [t.describe(spec.basis) for t in rec.sequence]
    }, 0


def _periodic_set(spec: EndoSpec, radius: int = 3, max_steps: int = 32, **_) -> tuple[dict, dict, int]:
    from .spine2 import periodic_set, spine_act_step

    _spine_check(spec)
    try:
        found = periodic_set(spec.endo, radius, max_steps)
    except CapExceededError:
        return {"periodic_set": "CapExceeded"}, {"radius": radius, "max_steps": max_steps}, 3
    simplices = []
    for s in found:
        step = spine_act_step(s, spec.endo)
        simplices.append({"simplex": s.describe(spec.basis), "shape": s.shape.value, "fixed": step.fixed})
    return {"size": len(found)}, {"radius": radius, "simplices": simplices}, 0


def _invariant(spec: EndoSpec, gens=None, twist=None, cap: int | None = None, **_) -> tuple[dict, dict, int]:
    gens = gens or spec.witness
    if not gens:
        raise PreconditionError("invariant needs subgroup generators (--gens or a witness line)")
    twist = twist if twist is not None else spec.twist
    cap = cap or spec.cap or 8
    k = invariant_subgroup_index(spec.endo, gens, twist, cap)
    ev = {"gens": [_spaced(spec.basis, w) for w in gens], "twist": _spaced(spec.basis, twist), "cap": cap}
    if k is None:
        return {"index": "CapExceeded"}, ev, 3
    return {"index": k}, ev, 0


COMMANDS = {
    "fold": _fold,
    "images": _images,
    "traintrack": _traintrack,
    "immersion-rep": _immersion_rep,
    "certify": _certify,
    "periodic": _periodic,
    "orbit": _orbit,
    "periodic-set": _periodic_set,
    "invariant": _invariant,
}


def _flag_echo(spec: EndoSpec, flags: dict) -> dict:
    out = {}
    for k, v in sorted(flags.items()):
        if v is None:
            continue
        if isinstance(v, Word):
            v = _spaced(spec.basis, v)
        elif isinstance(v, (list, tuple)) and v and isinstance(v[0], Word):
            v = [_spaced(spec.basis, w) for w in v]
        out[k] = v
    return out


def run(command: str, spec: EndoSpec, timing: bool = False, **flags) -> Report:
    if command not in COMMANDS:
        raise PreconditionError(f"unknown command {command!r}")
    t0 = time.perf_counter()
    verdicts, evidence, code = COMMANDS[command](spec, **flags)
    elapsed = time.perf_counter() - t0
    echo = spec.echo()
    fl = _flag_echo(spec, flags)
    if fl:
        echo["flags"] = fl
    return Report(command, echo, verdicts, evidence, elapsed if timing else None, SCHEMA, code)


__all__ = [
    "SCHEMA",
    "EndoSpec",
    "parse_endo",
    "format_endo",
    "Report",
    "run",
    "parse_start",
    "COMMANDS",
]
