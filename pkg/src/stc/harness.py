"""Seed-reproducible program fuzzer and the cross-executor equivalence
harness.

Random bits come from xorshift64* with the published constants (shifts
12, 25, 27 and multiplier 2685821657736338717); bounded draws are plain
``next() % n``. Given the same seed and limits, the generated program
sequence is identical on every run and platform, so any reported failure
is replayable from its seed alone (and each failure report additionally
carries the offending program, serialized).

Per generated program the harness compares, bit-exactly on both the
output list and the final state store:

* the stage-wise sequential reference,
* the element-wise evaluator (when every letter is distinct),
* the classification-driven fast-path evaluator,
* the pipeline executor at several worker counts, run twice to expose
  scheduling nondeterminism,

plus word-split functor checks, split/join round trips, and single-letter
fast-path comparisons.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .builtins import make_thread
from .composition import (
    Word,
    eval_interleaved,
    eval_psi_ref,
    smap_check,
    validate_word,
)
from .errors import StcError
from .model import StageKind, StateStore, ThreadSpec, build_graph, init_state
from .parallel import (
    BranchProgram,
    classify_thread,
    eval_auto_word,
    eval_branch,
    eval_branch_elementwise,
    run_data_parallel_product,
    run_data_parallel_readonly,
    run_pipeline,
    run_task_parallel_branch,
    split,
    join,
)
from .program import Program, program_digest, program_to_text
from .values import (
    INT_T,
    STR_T,
    PortType,
    TypeKind,
    UNIT,
    Value,
    sum_of,
    v_bool,
    v_float,
    v_inl,
    v_inr,
    v_int,
    v_list,
    v_pair,
    v_str,
)

XORSHIFT_MULTIPLIER = 2685821657736338717
_MASK = (1 << 64) - 1
_SEED_FILL = 0x9E3779B97F4A7C15


class Xorshift64Star:
    """xorshift64*: shift triple (12, 25, 27), 64-bit multiply."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = (seed & _MASK) or _SEED_FILL

    def next(self) -> int:
        x = self.state
        x ^= (x >> 12)
        x ^= (x << 25) & _MASK
        x ^= (x >> 27)
        self.state = x
        return (x * XORSHIFT_MULTIPLIER) & _MASK

    def below(self, n: int) -> int:
        return self.next() % n

    def pick(self, seq: Sequence):
        return seq[self.below(len(seq))]

    def shuffle(self, items: List) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class FuzzConfig:
    seed: int
    trials: int
    max_edges: int = 8
    max_word_len: int = 5
    max_list_len: int = 16
    int_magnitude: int = 1000

    def __post_init__(self):
        if min(self.trials, self.max_edges, self.max_word_len, self.max_list_len) < 1:
            raise ValueError("fuzz limits must be positive")


def random_value(pt: PortType, rng: Xorshift64Star, magnitude: int = 1000) -> Value:
    """A random inhabitant of a port type, driven entirely by ``rng``."""
    k = pt.kind
    if k is TypeKind.UNIT:
        return UNIT
    if k is TypeKind.BOOL:
        return v_bool(rng.below(2) == 0)
    if k is TypeKind.INT:
        return v_int(rng.below(2 * magnitude + 1) - magnitude)
    if k is TypeKind.FLOAT:
        return v_float((rng.below(2 * magnitude + 1) - magnitude) / 8.0)
    if k is TypeKind.STR:
        letters = string.ascii_lowercase
        return v_str("".join(rng.pick(letters) for _ in range(rng.below(6))))
    if k is TypeKind.LIST:
        return v_list(
            pt.args[0],
            [random_value(pt.args[0], rng, magnitude) for _ in range(rng.below(4))],
        )
    if k is TypeKind.PAIR:
        return v_pair(
            random_value(pt.args[0], rng, magnitude),
            random_value(pt.args[1], rng, magnitude),
        )
    if rng.below(2) == 0:
        return v_inl(random_value(pt.args[0], rng, magnitude))
    return v_inr(random_value(pt.args[1], rng, magnitude))


def verify_classification(spec: ThreadSpec, rng: Xorshift64Star, trials: int = 200) -> bool:
    """Spot-check a declared READ_ONLY/PRODUCT hint on random pairs.

    This cannot prove the hint (sampling never can); it exists to catch a
    mislabeled builtin early. GENERAL threads vacuously pass.
    """
    kind = classify_thread(spec)
    for _ in range(trials):
        x = random_value(spec.src, rng)
        sigma = random_value(spec.state_type, rng)
        y, sigma2 = spec.transfer(x, sigma)
        if kind is StageKind.READ_ONLY and sigma2 != sigma:
            return False
        if kind is StageKind.PRODUCT:
            if y != spec.value_part(x) or sigma2 != spec.state_part(sigma):
                return False
    return True


_INT_FNS = ("counter_add", "scale_by_state", "add1_tick")


def _small_int(rng: Xorshift64Star, magnitude: int = 8) -> Value:
    return v_int(rng.below(2 * magnitude + 1) - magnitude)


def _int_thread(tid: int, rng: Xorshift64Star) -> ThreadSpec:
    return make_thread(tid, rng.pick(_INT_FNS), _small_int(rng))


def _input_list(pt: PortType, rng: Xorshift64Star, cfg: FuzzConfig) -> Value:
    n = rng.below(cfg.max_list_len + 1)
    return v_list(pt, [random_value(pt, rng, cfg.int_magnitude) for _ in range(n)])


def gen_random_program(cfg: FuzzConfig, rng: Optional[Xorshift64Star] = None) -> Program:
    """One random, fully valid program.

    Roughly one in five draws is a branch program and one in five a word
    with repeated letters; the rest are duplicate-free thread chains,
    occasionally string-typed. A quarter of graphs carry one extra thread
    the word never touches, which keeps the state-frame property honest.
    """
    rng = rng or Xorshift64Star(cfg.seed)
    roll = rng.below(10)
    if roll < 2 and cfg.max_edges >= 2:
        return _gen_branch(cfg, rng)
    if roll < 4 and cfg.max_word_len >= 2:
        return _gen_repeated(cfg, rng)
    return _gen_chain(cfg, rng)


def _fresh_ids(count: int, rng: Xorshift64Star) -> List[int]:
    ids = []
    nxt = 1 + rng.below(3)
    for _ in range(count):
        ids.append(nxt)
        nxt += 1 + rng.below(2)
    return ids


def _maybe_extra_thread(
    specs: List[ThreadSpec], rng: Xorshift64Star, cfg: FuzzConfig
) -> None:
    if rng.below(4) == 0 and len(specs) < cfg.max_edges:
        extra_id = max(s.id for s in specs) + 1 + rng.below(3)
        specs.append(_int_thread(extra_id, rng))


def _gen_chain(cfg: FuzzConfig, rng: Xorshift64Star) -> Program:
    k = 1 + rng.below(min(cfg.max_word_len, cfg.max_edges))
    if rng.below(8) == 0:
        ids = _fresh_ids(k, rng)
        specs = [
            make_thread(i, "append_tag", v_str(rng.pick(string.ascii_lowercase)))
            for i in ids
        ]
        word_ids = list(ids)
        rng.shuffle(word_ids)
        _maybe_extra_thread_str(specs, rng, cfg)
        graph = build_graph(*specs)
        return Program(graph, Word(tuple(word_ids)), _input_list(STR_T, rng, cfg), STR_T)
    ids = _fresh_ids(k, rng)
    specs = [_int_thread(i, rng) for i in ids]
    word_ids = list(ids)
    rng.shuffle(word_ids)
    _maybe_extra_thread(specs, rng, cfg)
    graph = build_graph(*specs)
    return Program(graph, Word(tuple(word_ids)), _input_list(INT_T, rng, cfg), INT_T)


def _maybe_extra_thread_str(
    specs: List[ThreadSpec], rng: Xorshift64Star, cfg: FuzzConfig
) -> None:
    if rng.below(4) == 0 and len(specs) < cfg.max_edges:
        extra_id = max(s.id for s in specs) + 1 + rng.below(3)
        specs.append(make_thread(extra_id, "append_tag", v_str("z")))


def _gen_repeated(cfg: FuzzConfig, rng: Xorshift64Star) -> Program:
    k = 1 + rng.below(min(cfg.max_word_len, cfg.max_edges))
    ids = _fresh_ids(k, rng)
    specs = [_int_thread(i, rng) for i in ids]
    length = 2 + rng.below(max(1, cfg.max_word_len - 1))
    letters = [rng.pick(ids) for _ in range(length)]
    if len(set(letters)) == len(letters):
        letters[-1] = letters[0]
    _maybe_extra_thread(specs, rng, cfg)
    graph = build_graph(*specs)
    return Program(graph, Word(tuple(letters)), _input_list(INT_T, rng, cfg), INT_T)


def _gen_branch(cfg: FuzzConfig, rng: Xorshift64Star) -> Program:
    budget = max(0, cfg.max_edges - 2)  # brancher and merger are mandatory
    counts = []
    for hi in (3, 3, 3, 2):
        c = rng.below(min(hi, budget + 1))
        counts.append(c)
        budget -= c
    total = sum(counts) + 2
    ids = _fresh_ids(total, rng)
    it = iter(ids)
    pre = [next(it) for _ in range(counts[0])]
    brancher = next(it)
    lefts = [next(it) for _ in range(counts[1])]
    rights = [next(it) for _ in range(counts[2])]
    merger = next(it)
    post = [next(it) for _ in range(counts[3])]

    specs = [_int_thread(i, rng) for i in pre + lefts + rights + post]
    specs.append(make_thread(brancher, "branch_even"))
    specs.append(make_thread(merger, "merge_sum"))
    graph = build_graph(*specs)

    prog = BranchProgram(
        producer=Word(tuple(pre + [brancher])),
        left=Word(tuple(lefts)) if lefts else Word((), INT_T),
        right=Word(tuple(rights)) if rights else Word((), INT_T),
        consumer=Word(tuple([merger] + post)),
    )
    return Program(graph, prog, _input_list(INT_T, rng, cfg), INT_T)


def program_stream(cfg: FuzzConfig) -> Iterator[Program]:
    """The deterministic program sequence for a seed: one shared rng."""
    rng = Xorshift64Star(cfg.seed)
    while True:
        yield gen_random_program(cfg, rng)


def run_program(
    program: Program,
    mode: str,
    workers: int = 4,
    check: bool = False,
) -> Tuple[Value, StateStore]:
    """Evaluate a program under one of the four execution modes."""
    graph = program.graph
    state = init_state(graph)
    xs = program.input
    if program.is_branch:
        prog = program.word
        if mode == "seq":
            return eval_branch(graph, prog, xs, state)
        if mode == "interleaved":
            return eval_branch_elementwise(graph, prog, xs, state)
        if mode == "pipeline":
            return run_task_parallel_branch(graph, prog, xs, state, workers)
        if mode == "auto":
            return eval_branch(
                graph, prog, xs, state,
                word_eval=lambda g, w, v, s: eval_auto_word(g, w, v, s, workers=workers),
            )
        raise ValueError(f"unknown mode {mode!r}")
    word = program.word
    if mode == "seq":
        return eval_psi_ref(graph, word, xs, state, check)
    if mode == "interleaved":
        return eval_interleaved(graph, word, xs, state, check)
    if mode == "pipeline":
        return run_pipeline(graph, word, xs, state, workers, check=check)
    if mode == "auto":
        return eval_auto_word(graph, word, xs, state, workers=workers)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class Divergence:
    mode: str
    kind: str  # "output" | "state" | "length" | "error"
    where: str
    expected: str
    actual: str

    def as_dict(self) -> Dict[str, str]:
        return {
            "mode": self.mode,
            "kind": self.kind,
            "where": self.where,
            "expected": self.expected,
            "actual": self.actual,
        }


@dataclass
class TrialReport:
    index: int
    digest: str
    modes: List[str]
    equal: bool
    divergence: Optional[Divergence] = None
    program_text: Optional[str] = None

    def as_dict(self) -> Dict:
        out: Dict = {
            "trial": self.index,
            "digest": self.digest,
            "modes": self.modes,
            "equal": self.equal,
        }
        if self.divergence is not None:
            out["divergence"] = self.divergence.as_dict()
        if self.program_text is not None:
            out["program"] = self.program_text
        return out


@dataclass
class EquivReport:
    trials: int = 0
    passed: int = 0
    failures: List[TrialReport] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def as_dict(self) -> Dict:
        return {
            "trials": self.trials,
            "passed": self.passed,
            "failed": len(self.failures),
            "failures": [t.as_dict() for t in self.failures],
        }


def first_divergence(
    mode: str, ref: Tuple[Value, StateStore], got: Tuple[Value, StateStore]
) -> Optional[Divergence]:
    """Locate the first output index or state slot where two results part."""
    ref_out, ref_state = ref
    got_out, got_state = got
    if len(got_out.payload) != len(ref_out.payload):
        return Divergence(
            mode, "length", "output",
            str(len(ref_out.payload)), str(len(got_out.payload)),
        )
    for i, (a, b) in enumerate(zip(ref_out.payload, got_out.payload)):
        if a != b:
            return Divergence(mode, "output", f"index {i}", repr(a), repr(b))
    ref_slots = ref_state.as_dict()
    got_slots = got_state.as_dict()
    for n in sorted(set(ref_slots) | set(got_slots)):
        if ref_slots.get(n) != got_slots.get(n):
            return Divergence(
                mode, "state", f"slot {n}",
                repr(ref_slots.get(n)), repr(got_slots.get(n)),
            )
    if ref_out != got_out:
        return Divergence(mode, "output", "list type", repr(ref_out), repr(got_out))
    return None


def _word_of(program: Program) -> Optional[Word]:
    return None if program.is_branch else program.word


def _interleaved_defined(program: Program) -> bool:
    if program.is_branch:
        return all(not smap_check(w) for w in program.word.words())
    return not smap_check(program.word)


def check_program(
    program: Program,
    rng: Xorshift64Star,
    workers_counts: Sequence[int] = (1, 2, 4, 8),
    index: int = 0,
) -> TrialReport:
    """Run every applicable comparison for one program."""
    digest = program_digest(program)
    modes: List[str] = ["seq"]
    ref = run_program(program, "seq")

    def fail(div: Divergence) -> TrialReport:
        return TrialReport(index, digest, modes, False, div, program_to_text(program))

    candidates: List[Tuple[str, int]] = []
    if _interleaved_defined(program):
        candidates.append(("interleaved", 1))
    candidates.append(("auto", 1))
    for w in workers_counts:
        candidates.append(("pipeline", w))
    candidates.append(("pipeline", max(workers_counts)))  # determinism re-run

    for mode, w in candidates:
        label = f"{mode}@{w}" if mode == "pipeline" else mode
        modes.append(label)
        try:
            got = run_program(program, mode, workers=w)
        except StcError as exc:
            return fail(Divergence(label, "error", "-", "result", repr(exc)))
        div = first_divergence(label, ref, got)
        if div is not None:
            return fail(div)

    word = _word_of(program)
    if word is not None and word.letters:
        div = _check_functor_split(program, word, ref, rng)
        if div is not None:
            return fail(div)
        div = _check_fast_paths(program, word)
        if div is not None:
            return fail(div)

    div = _check_split_join(rng)
    if div is not None:
        return fail(div)

    return TrialReport(index, digest, modes + ["functor", "split-join"], True)


def _check_functor_split(
    program: Program, word: Word, ref: Tuple[Value, StateStore], rng: Xorshift64Star
) -> Optional[Divergence]:
    """Cutting a word anywhere and running the halves back to back must
    reproduce the whole word's result."""
    graph = program.graph
    cut = rng.below(len(word.letters) + 1)
    vw = validate_word(graph, word)
    first = Word(word.letters[:cut], vw.src if cut == 0 else None)
    second = Word(word.letters[cut:], vw.tgt if cut == len(word.letters) else None)
    mid, st1 = eval_psi_ref(graph, first, program.input, init_state(graph))
    out, st2 = eval_psi_ref(graph, second, mid, st1)
    return first_divergence(f"functor-split@{cut}", ref, (out, st2))


def _check_fast_paths(program: Program, word: Word) -> Optional[Divergence]:
    """Single-letter fast paths must match the reference on that letter."""
    graph = program.graph
    state = init_state(graph)
    checked = 0
    current = program.input
    for n in word.letters:
        spec = graph.edges[n]
        kind = classify_thread(spec)
        single = Word((n,))
        expect, st_ref = eval_psi_ref(graph, single, current, state)
        if kind is StageKind.READ_ONLY:
            got, sigma = run_data_parallel_readonly(spec, current, state.get(n))
            checked += 1
        elif kind is StageKind.PRODUCT:
            got, sigma = run_data_parallel_product(spec, current, state.get(n))
            checked += 1
        else:
            current, state = expect, st_ref
            continue
        if got != expect or sigma != st_ref.get(n):
            return Divergence(
                f"fastpath[{n}]", "output", spec.fn_name,
                repr((expect, st_ref.get(n))), repr((got, sigma)),
            )
        current, state = expect, st_ref
        if checked >= 2:
            break
    return None


def _random_sum_list(rng: Xorshift64Star, max_len: int = 12) -> Value:
    items = []
    for _ in range(rng.below(max_len + 1)):
        inner = v_int(rng.below(201) - 100)
        items.append(v_inl(inner) if rng.below(2) == 0 else v_inr(inner))
    return v_list(sum_of(INT_T, INT_T), items)


def _check_split_join(rng: Xorshift64Star) -> Optional[Divergence]:
    xs = _random_sum_list(rng)
    bs, cs, flags = split(xs)
    back = join(bs, cs, flags)
    if back != xs:
        return Divergence("split-join", "output", "round trip", repr(xs), repr(back))
    bs2, cs2, flags2 = split(back)
    if (bs2, cs2, flags2) != (bs, cs, flags):
        return Divergence(
            "split-join", "output", "triple round trip",
            repr((bs, cs, flags)), repr((bs2, cs2, flags2)),
        )
    return None


def run_fuzz(
    cfg: FuzzConfig,
    workers_counts: Sequence[int] = (1, 2, 4, 8),
    stop_on_failure: bool = True,
) -> EquivReport:
    """The full fuzz suite: generate programs and check every invariant."""
    report = EquivReport()
    stream = program_stream(cfg)
    rng = Xorshift64Star(cfg.seed ^ _SEED_FILL)
    for i in range(cfg.trials):
        program = next(stream)
        report.trials += 1
        try:
            trial = check_program(program, rng, workers_counts, index=i)
        except StcError as exc:
            trial = TrialReport(
                i,
                program_digest(program),
                ["seq"],
                False,
                Divergence("harness", "error", "-", "result", repr(exc)),
                program_to_text(program),
            )
        if trial.equal:
            report.passed += 1
        else:
            report.failures.append(trial)
            if stop_on_failure:
                break
    return report
