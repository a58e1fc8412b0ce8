"""Batch command-line driver for the compilation chain and its checkers.

Verbs:

* ``compile`` — translate a source term and print any stage of the
  chain (``label``, ``erase``, ``cps``, ``vn``, ``cc``, ``hoist``,
  ``rtl``, or ``all``), optionally type-checked and region-enriched.
* ``run`` — execute a term in a chosen calculus, collecting its label
  trace.
* ``cost`` — compile, price every label from the emitted routines, and
  check that the labelling is sound and precise.
* ``certify`` — compare the source-level, monitored, and compiled cost
  of one program end to end.
* ``check`` — run one property suite over a generated corpus, or print
  the per-stage typing judgements of a single term (``--types``).
* ``gen`` — emit a deterministic corpus of well-typed terms.

Streams: each invocation writes a single self-describing JSON document
to stdout and human-readable text to stderr.  Exit status: 0 for PASS,
1 for FAIL, 2 for usage or input errors, 3 for INCONCLUSIVE.

The structured document is deterministic — identical argv, input, and
seed produce byte-identical output — so wall-clock timings appear on
the human stream only.  Program input comes from a file argument or
standard input (``-``).  The COSTLAM_SEED environment variable supplies
the default seed for the corpus verbs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional

from . import cost as ct
from . import harness as hn
from . import parser as ps
from . import printer as pr
from . import regions as rg
from . import semantics as sem
from . import terms as tm
from . import testgen as tg
from . import transform as tr
from . import typesys as ty
from .names import HALT, NameSupply

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3

_STAGES = ("label", "erase", "cps", "vn", "cc", "hoist", "rtl", "all")
_CHAIN = ("cps", "vn", "cc", "hoist", "rtl")
_CALCULI = ("source", "cps", "vn", "region")


# ---------------------------------------------------------------------------
# Report document
# ---------------------------------------------------------------------------


@dataclass
class PipelineReport:
    """Everything one ``compile`` invocation produced.

    Term snapshots are held as concrete syntax, so the report is plain
    data: ``doc()`` emits a JSON-ready dictionary and ``from_doc``
    restores an equal report.  Check outcomes are tri-state strings
    (PASS/FAIL/INCONCLUSIVE); timings are kept out of ``doc()`` so the
    structured output stays byte-stable.
    """

    options: dict[str, Any] = field(default_factory=dict)
    stages: dict[str, str] = field(default_factory=dict)
    outcomes: dict[str, str] = field(default_factory=dict)
    judgements: dict[str, str] = field(default_factory=dict)
    table: Optional[dict[str, int]] = None
    traces: dict[str, dict] = field(default_factory=dict)
    timing: dict[str, float] = field(default_factory=dict)
    detail: str = ""

    @property
    def verdict(self) -> str:
        vals = self.outcomes.values()
        if any(v == "FAIL" for v in vals):
            return "FAIL"
        if any(v == "INCONCLUSIVE" for v in vals):
            return "INCONCLUSIVE"
        return "PASS"

    def doc(self) -> dict:
        out: dict[str, Any] = {
            "verb": "compile",
            "options": self.options,
            "stages": self.stages,
            "outcomes": self.outcomes,
            "verdict": self.verdict,
        }
        if self.judgements:
            out["judgements"] = self.judgements
        if self.table is not None:
            out["table"] = dict(sorted(self.table.items()))
        if self.traces:
            out["traces"] = self.traces
        if self.detail:
            out["detail"] = self.detail
        return out

    @staticmethod
    def from_doc(doc: dict) -> "PipelineReport":
        return PipelineReport(
            options=dict(doc.get("options", {})),
            stages=dict(doc.get("stages", {})),
            outcomes=dict(doc.get("outcomes", {})),
            judgements=dict(doc.get("judgements", {})),
            table=dict(doc["table"]) if "table" in doc else None,
            traces={k: dict(v) for k, v in doc.get("traces", {}).items()},
            detail=doc.get("detail", ""),
        )


# ---------------------------------------------------------------------------
# Plumbing
# ---------------------------------------------------------------------------


class CliError(Exception):
    """Carries a finished document and exit code up to the driver."""

    def __init__(self, doc: dict, human: list[str], code: int):
        super().__init__(human[0] if human else "")
        self.doc = doc
        self.human = human
        self.code = code


def _emit(doc: dict, human: list[str], out=None, err=None) -> None:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for line in human:
        err.write(line + "\n")


def _read_input(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise CliError(
            {"error": {"kind": "input", "message": str(e)}, "verdict": "FAIL"},
            [f"error: {e}"],
            EXIT_USAGE,
        )


def _line_col(src: str, pos: int) -> tuple[int, int]:
    pos = max(0, min(pos, len(src)))
    line = src.count("\n", 0, pos) + 1
    col = pos - (src.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _parse(src: str, what: str, parse_fn) -> Any:
    try:
        return parse_fn(src)
    except ps.ParseError as e:
        line, col = _line_col(src, e.pos)
        doc = {
            "error": {
                "kind": "parse",
                "what": what,
                "line": line,
                "column": col,
                "message": str(e),
            },
            "verdict": "FAIL",
        }
        raise CliError(doc, [f"parse error at line {line}, column {col}: {e}"], EXIT_USAGE)
    except tm.FragmentError as e:
        doc = {
            "error": {"kind": "fragment", "what": what, "message": str(e)},
            "verdict": "FAIL",
        }
        raise CliError(doc, [f"malformed {what}: {e}"], EXIT_USAGE)


def _context(args) -> dict[str, ty.Type]:
    if not getattr(args, "context", None):
        return {}
    return _parse(args.context, "context", ps.parse_context)


def _seed(args, fallback: int = 0) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("COSTLAM_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(
                {"error": {"kind": "usage", "message": f"COSTLAM_SEED is not an integer: {env!r}"}},
                [f"error: COSTLAM_SEED is not an integer: {env!r}"],
                EXIT_USAGE,
            )
    return fallback


def _fail_term(kind: str, message: str, term: tm.Term, code: int = EXIT_FAIL) -> CliError:
    """A failure document that carries the offending term's syntax."""
    syntax = pr.show_term(term)
    doc = {
        "error": {"kind": kind, "message": message, "term": syntax},
        "verdict": "FAIL",
    }
    return CliError(doc, [f"{kind} error: {message}", f"  term: {syntax}"], code)


def _exit_for(verdict: str) -> int:
    return {
        "PASS": EXIT_PASS,
        "FAIL": EXIT_FAIL,
        "INCONCLUSIVE": EXIT_INCONCLUSIVE,
    }[verdict]


# ---------------------------------------------------------------------------
# compile
# ---------------------------------------------------------------------------


def _halt_types(a: ty.Type, opt_halt: bool) -> tuple[ty.Type, ty.Type]:
    """The continuation's type before and after closure conversion."""
    cps_halt = ty.neg(ty.cps_type(a))
    supply = NameSupply("_t", 1000)
    cc_halt = ty.neg(ty.cmp_type(a, supply)) if opt_halt else ty.cc_type(cps_halt, supply)
    return cps_halt, cc_halt


def _cmd_compile(args) -> int:
    if args.regions and args.typed and not args.opt_halt:
        raise CliError(
            {"error": {"kind": "usage", "message": "--regions with --typed requires --opt-halt"}},
            [
                "error: --regions with --typed requires --opt-halt",
                "(the region annotation gives the final continuation a bare function type)",
            ],
            EXIT_USAGE,
        )
    src_text = _read_input(args.file)
    term = _parse(src_text, "term", ps.parse_term)
    ctx = _context(args)
    report = PipelineReport(
        options={
            "stage": args.stage,
            "typed": args.typed,
            "opt_halt": args.opt_halt,
            "regions": args.regions,
        }
    )
    human: list[str] = []
    report.stages["source"] = pr.show_term(term)

    if args.stage in ("label", "erase"):
        t0 = time.perf_counter()
        out = tr.label_init(term) if args.stage == "label" else tm.erase(term)
        report.timing[args.stage] = time.perf_counter() - t0
        report.stages[args.stage] = pr.show_term(out)
        human.append(pr.pretty_term(out))
    else:
        _compile_chain(args, term, ctx, report, human)

    if args.typed:
        _compile_judgements(args, term, ctx, report, human)

    human.append(f"verdict {report.verdict}")
    for name, secs in report.timing.items():
        human.append(f"time {name} {secs:.3f}s")
    _emit(report.doc(), human)
    return _exit_for(report.verdict)


def _compile_chain(args, term, ctx, report: PipelineReport, human: list[str]) -> None:
    want = len(_CHAIN) if args.stage == "all" else _CHAIN.index(args.stage) + 1
    show_all = args.stage == "all"

    def record(name: str, text: str, pretty: str) -> None:
        report.stages[name] = text
        if show_all:
            human.append(f"-- {name} --")
            human.append(pretty)
        elif name == args.stage:
            human.append(pretty)

    def timed(name: str, fn):
        t0 = time.perf_counter()
        out = fn()
        report.timing[name] = time.perf_counter() - t0
        return out

    try:
        n1 = timed("cps", lambda: tr.cps(term, ctx=ctx if args.typed else None))
    except ty.TypingError as e:
        raise _fail_term("type", str(e), term)
    record("cps", pr.show_term(n1), pr.pretty_term(n1))
    if want < 2:
        return

    n2 = timed("vn", lambda: tr.to_value_named(n1))
    record("vn", pr.show_term(n2), pr.pretty_term(n2))
    if want < 3:
        return

    env_types = None
    if args.typed:
        try:
            a = ty.typecheck_source(ctx, term)
        except ty.TypingError as e:
            raise _fail_term("type", str(e), term)
        env_types = {**ty.cps_ctx(ctx), HALT: ty.neg(ty.cps_type(a))}
    n3 = timed(
        "cc",
        lambda: tr.closure_convert(
            n2, typed=args.typed, opt_halt=args.opt_halt, env_types=env_types
        ),
    )
    record("cc", pr.show_term(n3), pr.pretty_term(n3))
    if want < 4:
        return

    try:
        p = timed("hoist", lambda: tr.hoist(n3))
    except tr.HoistBlocked as e:
        report.outcomes["hoist"] = "FAIL"
        report.detail = f"hoisting blocked: {e}"
        human.append(f"hoisting blocked: {e}")
        return
    record("hoist", pr.show_program(p), pr.show_program(p))

    if args.regions:
        penr = timed("regions", lambda: rg.region_enrich(p))
        record("regions", pr.show_region_program(penr), pr.show_region_program(penr))
        if args.typed:
            _region_outcomes(term, ctx, penr, report, human)

    if want < 5:
        return

    try:
        rtl = timed("rtl", lambda: ct.emit_rtl(p))
    except (tm.FragmentError, ValueError) as e:
        report.outcomes["rtl"] = "FAIL"
        report.detail = f"no routine form: {e}"
        human.append(f"no routine form: {e}")
        return
    record("rtl", rtl.render(), rtl.render().rstrip())

    if tm.labels_of(term):
        sound = ct.check_sound(rtl)
        # precision is only defined over sound labellings
        precise = ct.check_precise(rtl) if sound.ok else ct.PreciseReport(False)
        report.outcomes["sound"] = "PASS" if sound.ok else "FAIL"
        report.outcomes["precise"] = "PASS" if precise.ok else "FAIL"
        if sound.ok:
            report.table = dict(ct.costof_table(rtl).costs)
        elif sound.cycle:
            report.detail = "label-free cycle: " + " -> ".join(sound.cycle)
        if show_all:
            _compile_traces(term, p, report)


def _region_outcomes(term, ctx, penr, report: PipelineReport, human: list[str]) -> None:
    a = ty.typecheck_source(ctx, term)
    rctx = rg.region_enrich_ctx({**ctx, HALT: ty.neg(ty.cmp_type(a))})
    try:
        rg.effect_check_program(penr, rctx)
        report.outcomes["effects"] = "PASS"
    except ty.TypingError as e:
        report.outcomes["effects"] = "FAIL"
        report.detail = f"effect check: {e}"
        human.append(f"effect check failed: {e}")


def _compile_traces(term, p: tm.HoistProgram, report: PipelineReport) -> None:
    src = sem.eval_trace(term, "source", fuel=sem.DEFAULT_FUEL)
    comp = sem.eval_trace(p.to_term(), "vn", fuel=sem.DEFAULT_FUEL)
    report.traces = {"source": src.doc(), "compiled": comp.doc()}
    if src.status is sem.Status.FUEL or comp.status is sem.Status.FUEL:
        report.outcomes["trace"] = "INCONCLUSIVE"
    else:
        report.outcomes["trace"] = "PASS" if src.labels == comp.labels else "FAIL"


def _compile_judgements(args, term, ctx, report: PipelineReport, human: list[str]) -> None:
    rep = ty.check_type_preservation(ctx, term, opt_halt=args.opt_halt)
    if not rep.ok:
        report.outcomes["types"] = "FAIL"
        report.detail = f"stage {rep.stage}: {rep.detail}"
        human.append(f"type check failed at {rep.stage}: {rep.detail}")
        return
    report.outcomes["types"] = "PASS"
    a = rep.source_type
    cps_halt, cc_halt = _halt_types(a, args.opt_halt)
    report.judgements = {
        "source": pr.show_type(a),
        "cps": "R",
        "vn": "R",
        "cc": "R",
        "hoist": "R",
        "halt_cps": pr.show_type(cps_halt),
        "halt_cc": pr.show_type(cc_halt),
    }
    human.append(f"source : {pr.show_type(a)}")
    human.append(f"cps    : R    halt : {pr.show_type(cps_halt)}")
    human.append(f"vn     : R    halt : {pr.show_type(cps_halt)}")
    human.append(f"cc     : R    halt : {pr.show_type(cc_halt)}")
    human.append(f"hoist  : R    halt : {pr.show_type(cc_halt)}")


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _cmd_run(args) -> int:
    src_text = _read_input(args.file)
    if args.calculus == "region":
        term = _parse(src_text, "region term", ps.parse_region_term)
        res = rg.reval_trace(term, fuel=args.fuel)
        doc = {
            "verb": "run",
            "calculus": "region",
            "fuel": args.fuel,
            **res.doc(),
            "final": pr.show_region_term(res.final),
        }
        if res.reason:
            doc["reason"] = res.reason
        human = [f"status {res.status.value}", f"labels {' '.join(res.labels) or '(empty)'}"]
        if res.fault is not None:
            human.append(f"fault {res.fault.kind.name} on {res.fault.region}")
        if args.trace:
            human = [f"{i} {lbl}" for i, lbl in enumerate(res.labels)] + human
        _emit(doc, human)
        if res.status is rg.RegionStatus.TERMINAL:
            return EXIT_PASS
        if res.status is rg.RegionStatus.FUEL:
            return EXIT_INCONCLUSIVE
        return EXIT_FAIL

    term = _parse(src_text, "term", ps.parse_term)
    res = sem.eval_trace(term, args.calculus, fuel=args.fuel, record=args.trace)
    doc = {
        "verb": "run",
        "calculus": args.calculus,
        "fuel": args.fuel,
        **res.doc(),
        "final": pr.show_term(res.final),
    }
    if res.stuck_reason:
        doc["reason"] = res.stuck_reason
    human = []
    if args.trace:
        human.extend(sem.trace_lines(res))
    else:
        human.append(f"status {res.status.value}")
    human.append(f"labels {' '.join(res.labels) or '(empty)'}")
    _emit(doc, human)
    if res.status is sem.Status.VALUE:
        return EXIT_PASS
    if res.status is sem.Status.FUEL:
        return EXIT_INCONCLUSIVE
    if args.calculus == "vn" and sem.is_halt_state(res.final):
        return EXIT_PASS  # compiled code finishes blocked on its free continuation
    return EXIT_FAIL


# ---------------------------------------------------------------------------
# cost / certify
# ---------------------------------------------------------------------------


def _cmd_cost(args) -> int:
    src_text = _read_input(args.file)
    term = _parse(src_text, "term", ps.parse_term)
    human: list[str] = []
    labelled = term
    if not tm.labels_of(term):
        labelled = tr.label_init(term)
        human.append("input carried no labels; labelled it first")
    try:
        chain = tr.compile_term(labelled)
        rtl = ct.emit_rtl(chain.hoisted)
    except (tr.HoistBlocked, tm.FragmentError, ValueError) as e:
        raise _fail_term("compile", str(e), labelled)
    sound = ct.check_sound(rtl)
    precise = ct.check_precise(rtl) if sound.ok else ct.PreciseReport(False)
    table = ct.costof_table(rtl).costs if sound.ok else {}
    verdict = "PASS" if sound.ok and precise.ok else "FAIL"
    doc = {
        "verb": "cost",
        "labelled": pr.show_term(labelled),
        "table": dict(sorted(table.items())),
        "sound": sound.doc(),
        "precise": precise.doc(),
        "verdict": verdict,
    }
    width = max((len(l) for l in table), default=5)
    for label in sorted(table):
        human.append(f"{label:<{width}}  {table[label]}")
    human.append(f"SOUND {'yes' if sound.ok else 'no'}")
    human.append(f"PRECISE {'yes' if precise.ok else 'no'}")
    _emit(doc, human)
    return _exit_for(verdict)


def _cmd_certify(args) -> int:
    src_text = _read_input(args.file)
    term = _parse(src_text, "term", ps.parse_term)
    human: list[str] = []
    if tm.labels_of(term):
        term = tm.erase(term)
        human.append("input carried labels; certifying the erased program")
    rep = ct.certify_cost(term, fuel=args.fuel)
    doc = {"verb": "certify", **rep.doc()}
    agree = (
        rep.source_cost is not None
        and rep.source_cost == rep.monitored_cost == rep.compiled_cost
    )
    human.append(f"source cost    {rep.source_cost}")
    human.append(f"monitored cost {rep.monitored_cost}")
    human.append(f"compiled cost  {rep.compiled_cost}")
    human.append("AGREE" if agree else "DISAGREE")
    human.append(f"SOUND {'yes' if rep.sound.ok else 'no'}")
    human.append(f"PRECISE {'yes' if rep.precise.ok else 'no'}")
    human.append(f"verdict {rep.verdict.value}")
    if rep.detail:
        human.append(f"detail: {rep.detail}")
    _emit(doc, human)
    return _exit_for(rep.verdict.value)


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def _suite_kwargs(name: str, args, seed: int) -> dict:
    kwargs: dict[str, Any] = {"seed": seed}
    if args.count is not None:
        kwargs["count"] = args.count
    if args.max_size is not None and name != "monoid":
        kwargs["max_size"] = args.max_size
    return kwargs


def _run_shard(payload: tuple) -> dict:
    name, kwargs = payload
    return hn.run_suite(name, **kwargs).doc()


def _suite_default_count(name: str) -> int:
    import inspect

    return inspect.signature(hn.SUITES[name]).parameters["count"].default


def _cmd_check_suite(args) -> int:
    name = args.property
    seed = _seed(args)
    jobs = max(1, args.jobs)
    if jobs == 1:
        kwargs = _suite_kwargs(name, args, seed)
        rep_doc = hn.run_suite(name, **kwargs).doc()
        docs = [rep_doc]
    else:
        total = args.count if args.count is not None else _suite_default_count(name)
        base, extra = divmod(total, jobs)
        payloads = []
        for k in range(jobs):
            n = base + (1 if k < extra else 0)
            if n == 0:
                continue
            kw = _suite_kwargs(name, args, seed * 1_000_003 + k)
            kw["count"] = n
            payloads.append((name, kw))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            docs = list(pool.map(_run_shard, payloads))
    total = sum(d["total"] for d in docs)
    failures = []
    elapsed = 0.0
    for k, d in enumerate(docs):
        elapsed = max(elapsed, d["elapsed_s"])
        for f in d["failures"]:
            failures.append({**f, "shard": k})
    ok = not failures
    doc = {
        "verb": "check",
        "property": name,
        "seed": seed,
        "count": total,
        "jobs": jobs,
        "ok": ok,
        "failures": failures,
        "verdict": "PASS" if ok else "FAIL",
    }
    human = [f"{name}: {total} cases, {'ok' if ok else f'{len(failures)} failures'} ({elapsed:.1f}s)"]
    for f in failures:
        human.append(f"  [{f['shard']}:{f['index']}] {f['property']}: {f['detail']}")
        if f.get("term"):
            human.append(f"    term: {f['term']}")
        if f.get("shrunk"):
            human.append(f"    shrunk: {f['shrunk']}")
    _emit(doc, human)
    return EXIT_PASS if ok else EXIT_FAIL


def _cmd_check_types(args) -> int:
    src_text = _read_input(args.file)
    term = _parse(src_text, "term", ps.parse_term)
    ctx = _context(args)
    rep = ty.check_type_preservation(ctx, term, opt_halt=args.opt_halt)
    if not rep.ok:
        doc = {
            "verb": "check",
            "mode": "types",
            "opt_halt": args.opt_halt,
            "verdict": "FAIL",
            "stage": rep.stage,
            "detail": rep.detail,
            "term": pr.show_term(term),
        }
        _emit(doc, [f"type check failed at {rep.stage}: {rep.detail}"])
        return EXIT_FAIL
    a = rep.source_type
    cps_halt, cc_halt = _halt_types(a, args.opt_halt)
    judgements = {
        "source": pr.show_type(a),
        "cps": "R",
        "vn": "R",
        "cc": "R",
        "hoist": "R",
        "halt_cps": pr.show_type(cps_halt),
        "halt_cc": pr.show_type(cc_halt),
    }
    doc = {
        "verb": "check",
        "mode": "types",
        "opt_halt": args.opt_halt,
        "verdict": "PASS",
        "judgements": judgements,
    }
    human = [
        f"source : {pr.show_type(a)}",
        f"cps    : R    halt : {pr.show_type(cps_halt)}",
        f"vn     : R    halt : {pr.show_type(cps_halt)}",
        f"cc     : R    halt : {pr.show_type(cc_halt)}",
        f"hoist  : R    halt : {pr.show_type(cc_halt)}",
        "verdict PASS",
    ]
    _emit(doc, human)
    return EXIT_PASS


def _cmd_check(args) -> int:
    if args.types:
        return _cmd_check_types(args)
    if args.property is None:
        raise CliError(
            {"error": {"kind": "usage", "message": "check needs --property or --types"}},
            ["error: check needs --property NAME or --types"],
            EXIT_USAGE,
        )
    return _cmd_check_suite(args)


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------


def _cmd_gen(args) -> int:
    seed = _seed(args)
    count = args.count if args.count is not None else 10
    max_size = args.max_size if args.max_size is not None else 24
    cfg = tg.GenConfig(seed=seed, max_size=max_size)
    items = [
        {"term": pr.show_term(t), "type": pr.show_type(a)}
        for t, a in tg.gen_terms(cfg, count)
    ]
    doc = {
        "verb": "gen",
        "seed": seed,
        "count": count,
        "max_size": max_size,
        "terms": items,
    }
    _emit(doc, [item["term"] for item in items])
    return EXIT_PASS


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="costlam",
        description="Compile labelled functional programs and certify their cost annotations.",
    )
    sub = p.add_subparsers(dest="verb", required=True)

    def add_input(sp):
        sp.add_argument("file", nargs="?", default="-", help="input file, or - for stdin")

    c = sub.add_parser("compile", help="translate a term through the chain")
    add_input(c)
    c.add_argument("--stage", choices=_STAGES, default="all")
    c.add_argument("--typed", action="store_true", help="check the stage judgements")
    c.add_argument("--opt-halt", action="store_true", dest="opt_halt",
                   help="keep the final continuation un-closed")
    c.add_argument("--regions", action="store_true", help="annotate the hoisted program with regions")
    c.add_argument("--context", default="", help="typing context, e.g. 'a : t1, b : t2'")
    c.set_defaults(fn=_cmd_compile)

    r = sub.add_parser("run", help="execute a term and collect its label trace")
    add_input(r)
    r.add_argument("--calculus", choices=_CALCULI, default="source")
    r.add_argument("--fuel", type=int, default=sem.DEFAULT_FUEL)
    r.add_argument("--trace", action="store_true", help="print one line per step")
    r.set_defaults(fn=_cmd_run)

    co = sub.add_parser("cost", help="price the labels of a compiled program")
    add_input(co)
    co.set_defaults(fn=_cmd_cost)

    ce = sub.add_parser("certify", help="compare source, monitored, and compiled costs")
    add_input(ce)
    ce.add_argument("--fuel", type=int, default=sem.DEFAULT_FUEL)
    ce.set_defaults(fn=_cmd_certify)

    ch = sub.add_parser("check", help="run a property suite, or print stage judgements")
    add_input(ch)
    ch.add_argument("--property", choices=sorted(hn.SUITES), default=None)
    ch.add_argument("--types", action="store_true",
                    help="print the per-stage typing judgements of one term")
    ch.add_argument("--opt-halt", action="store_true", dest="opt_halt")
    ch.add_argument("--context", default="")
    ch.add_argument("--seed", type=int, default=None)
    ch.add_argument("--count", type=int, default=None)
    ch.add_argument("--max-size", type=int, default=None, dest="max_size")
    ch.add_argument("--jobs", type=int, default=1, help="shard the corpus over processes")
    ch.set_defaults(fn=_cmd_check)

    g = sub.add_parser("gen", help="emit a deterministic corpus of well-typed terms")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--count", type=int, default=None)
    g.add_argument("--max-size", type=int, default=None, dest="max_size")
    g.set_defaults(fn=_cmd_gen)

    return p


def run_cli(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse has already written usage or help text to its stream
        return EXIT_PASS if e.code in (0, None) else EXIT_USAGE
    try:
        return args.fn(args)
    except CliError as e:
        _emit(e.doc, e.human)
        return e.code


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
