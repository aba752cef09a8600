"""Parallel executors: stage pipeline, data-parallel fast paths, and
deterministic task-parallel branching.

All executors here are required to agree bit-exactly with the sequential
reference ``eval_psi_ref``, on the output list and on the final state
store. Determinism comes from structure, not luck:

* The pipeline is a linear chain of stages connected by bounded FIFO
  channels. Each stage exclusively owns its private state slot, so the
  value/state produced for the i-th element of any stage depends only on
  upstream FIFO order, never on scheduling.
* End-of-stream is a distinct sentinel. Once a stage forwards it, the
  sentinel carries that stage's final private state downstream, where the
  sink reassembles the global state store.
* Branch execution records the inl/inr order of the split as a flag list
  and uses it to rebuild the merged list, so the two branch evaluations
  can run concurrently without reordering anything.

Words with repeated letters cannot be pipelined in one piece; they run
segment by segment (a barrier between segments), with each duplicate-free
segment pipelined on its own.
"""

from __future__ import annotations

import queue
import threading
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

from . import mutations
from .composition import (
    Word,
    eval_phi,
    eval_psi_ref,
    segment_word,
    smap_check,
    validate_word,
)
from .errors import (
    ChannelClosed,
    ExecutionError,
    FlagMismatch,
    PortTypeError,
    RepeatedLetter,
    RepeatedLetterInSegment,
    ValidationError,
)
from .model import Multigraph, StageKind, StateStore, ThreadSpec, apply_thread
from .values import PortType, Tag, TypeKind, Value, sum_of, v_inl, v_inr, v_list

_POLL = 0.05
_IDLE = 0.00005


def classify_thread(spec: ThreadSpec) -> StageKind:
    """The declared execution class of a thread.

    Classification comes from the builtin registry hint; a thread without
    a hint is GENERAL. Sampling-based inference would be unsound (a
    finite sample cannot prove the state is never written), so no
    inference is attempted here.
    """
    return spec.kind


def run_data_parallel_readonly(
    spec: ThreadSpec, xs: Value, sigma: Value, workers: int = 1
) -> Tuple[Value, Value]:
    """Map a read-only thread over a list; the state passes through.

    Every element sees the same state value, so the map is order
    independent and may fan out across ``workers`` threads.
    """
    if classify_thread(spec) is not StageKind.READ_ONLY:
        raise ValidationError(f"thread {spec.id} is not read-only")
    _check_elems(xs, spec)
    items = list(xs.payload)
    if workers > 1 and len(items) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(lambda v: spec.transfer(v, sigma)[0], items))
    else:
        out = [spec.transfer(v, sigma)[0] for v in items]
    return v_list(spec.tgt, out), sigma


def run_data_parallel_product(
    spec: ThreadSpec, xs: Value, sigma: Value, workers: int = 1
) -> Tuple[Value, Value]:
    """Evaluate a product thread as an ordinary map plus an iterated
    state update: the output never reads the state and the state never
    reads the elements, so the two halves are independent."""
    if classify_thread(spec) is not StageKind.PRODUCT:
        raise ValidationError(f"thread {spec.id} is not a product thread")
    _check_elems(xs, spec)
    items = list(xs.payload)
    if workers > 1 and len(items) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(spec.value_part, items))
    else:
        out = [spec.value_part(v) for v in items]
    state = sigma
    for _ in items:
        state = spec.state_part(state)
    return v_list(spec.tgt, out), state


def _check_elems(xs: Value, spec: ThreadSpec) -> None:
    if xs.tag is not Tag.LIST:
        raise PortTypeError(f"expected a list value, got {xs!r}")
    if not xs.elem.compatible(spec.src):
        raise PortTypeError(
            f"list of {xs.elem.name} does not feed thread {spec.id} ({spec.src.name})"
        )


def split(xs: Value) -> Tuple[Value, Value, Tuple[bool, ...]]:
    """Partition a list of sum values, recording the injection order.

    Returns the left elements, the right elements (both order
    preserving), and one boolean per input element: True for a left
    injection, False for a right one.
    """
    if xs.tag is not Tag.LIST or xs.elem.kind is not TypeKind.SUM:
        raise PortTypeError(f"split needs a list of sum values, got {xs!r}")
    left_t, right_t = xs.elem.args
    lefts: List[Value] = []
    rights: List[Value] = []
    flags: List[bool] = []
    for v in xs.payload:
        if v.tag is Tag.SUML:
            lefts.append(v.payload)
            flags.append(True)
        elif v.tag is Tag.SUMR:
            rights.append(v.payload)
            flags.append(False)
        else:
            raise PortTypeError(f"non-sum element {v!r} in split input")
    return v_list(left_t, lefts), v_list(right_t, rights), tuple(flags)


def join(bs: Value, cs: Value, flags: Tuple[bool, ...]) -> Value:
    """Inverse of ``split`` given the recorded flags."""
    if bs.tag is not Tag.LIST or cs.tag is not Tag.LIST:
        raise PortTypeError("join needs two list values")
    out: List[Value] = []
    i = j = 0
    lefts, rights = bs.payload, cs.payload
    for flag in flags:
        if flag:
            if i >= len(lefts):
                raise FlagMismatch(f"flag {len(out)} demands a left element but none remain")
            out.append(v_inl(lefts[i]))
            i += 1
        else:
            if j >= len(rights):
                raise FlagMismatch(f"flag {len(out)} demands a right element but none remain")
            out.append(v_inr(rights[j]))
            j += 1
    if i != len(lefts) or j != len(rights):
        raise FlagMismatch("flags exhausted before both sides were consumed")
    return v_list(sum_of(bs.elem, cs.elem), out)


def _join_ignoring_flags(bs: Value, cs: Value) -> Value:
    # Deliberate fault for the mutation harness: drops the recorded order.
    out = [v_inl(v) for v in bs.payload] + [v_inr(v) for v in cs.payload]
    return v_list(sum_of(bs.elem, cs.elem), out)


class _Flush:
    """End-of-stream sentinel; accumulates per-stage final states on its
    way down the chain."""

    __slots__ = ("states",)

    def __init__(self, states: Dict[int, Value]):
        self.states = states


def _chan_get(q: "queue.Queue", abort: threading.Event):
    while True:
        try:
            return q.get(timeout=_POLL)
        except queue.Empty:
            if abort.is_set():
                raise ChannelClosed("pipeline aborted") from None


def _chan_put(q: "queue.Queue", item, abort: threading.Event) -> None:
    while True:
        try:
            q.put(item, timeout=_POLL)
            return
        except queue.Full:
            if abort.is_set():
                raise ChannelClosed("pipeline aborted") from None


class _Stage:
    """One pipeline stage: owns a thread's state slot, pumps its input
    channel into its output channel."""

    __slots__ = (
        "spec", "state", "inq", "outq", "check",
        "outbox", "saw_flush", "finished",
    )

    _EMPTY = object()

    def __init__(self, spec: ThreadSpec, state: Value, inq, outq, check: bool):
        self.spec = spec
        self.state = state
        self.inq = inq
        self.outq = outq
        self.check = check
        self.outbox = _Stage._EMPTY
        self.saw_flush = False
        self.finished = False

    def _process(self, msg):
        if isinstance(msg, _Flush):
            states = dict(msg.states)
            if not mutations.enabled("state-not-forwarded"):
                states[self.spec.id] = self.state
            self.saw_flush = True
            return _Flush(states)
        y, sigma = apply_thread(self.spec, msg, self.state, self.check)
        if not mutations.enabled("state-update-dropped"):
            self.state = sigma
        return y

    def run_exclusive(self, abort: threading.Event) -> None:
        """Blocking loop used when this stage has a worker to itself."""
        while True:
            msg = _chan_get(self.inq, abort)
            out = self._process(msg)
            _chan_put(self.outq, out, abort)
            if self.saw_flush:
                self.finished = True
                return

    def step(self) -> bool:
        """One cooperative step; returns True when progress was made."""
        if self.finished:
            return False
        if self.outbox is not _Stage._EMPTY:
            try:
                self.outq.put_nowait(self.outbox)
            except queue.Full:
                return False
            self.outbox = _Stage._EMPTY
            if self.saw_flush:
                self.finished = True
            return True
        if self.saw_flush:
            self.finished = True
            return False
        try:
            msg = self.inq.get_nowait()
        except queue.Empty:
            return False
        self.outbox = self._process(msg)
        try:
            self.outq.put_nowait(self.outbox)
            self.outbox = _Stage._EMPTY
            if self.saw_flush:
                self.finished = True
        except queue.Full:
            pass
        return True


def _worker(stages: List[_Stage], abort: threading.Event, errors: List[BaseException]):
    try:
        if len(stages) == 1:
            stages[0].run_exclusive(abort)
            return
        live = list(stages)
        while live:
            if abort.is_set():
                return
            progressed = False
            for st in live:
                progressed = st.step() or progressed
            live = [st for st in live if not st.finished]
            if live and not progressed:
                time.sleep(_IDLE)
    except ChannelClosed:
        pass
    except BaseException as exc:  # propagate to the caller, never hang
        errors.append(exc)
        abort.set()


def _pipeline_segment(
    graph: Multigraph,
    letters: Tuple[int, ...],
    values: List[Value],
    slots: Dict[int, Value],
    workers: int,
    capacity: int,
    check: bool,
) -> Tuple[List[Value], Dict[int, Value]]:
    if len(set(letters)) != len(letters) and not mutations.enabled(
        "segment-barrier-removed"
    ):
        raise RepeatedLetterInSegment(f"segment {letters} repeats a letter")
    if mutations.enabled("stage-order-swapped") and len(letters) >= 2:
        letters = (letters[1], letters[0]) + letters[2:]

    chans = [queue.Queue(maxsize=capacity) for _ in range(len(letters) + 1)]
    stages = [
        _Stage(graph.edges[n], slots[n], chans[i], chans[i + 1], check)
        for i, n in enumerate(letters)
    ]
    abort = threading.Event()
    errors: List[BaseException] = []

    active = min(workers, len(stages))
    buckets: List[List[_Stage]] = [[] for _ in range(active)]
    for i, st in enumerate(stages):
        buckets[i % active].append(st)

    def feed():
        try:
            for v in values:
                _chan_put(chans[0], v, abort)
            _chan_put(chans[0], _Flush({}), abort)
        except ChannelClosed:
            pass
        except BaseException as exc:
            errors.append(exc)
            abort.set()

    threads = [threading.Thread(target=_worker, args=(b, abort, errors)) for b in buckets]
    threads.append(threading.Thread(target=feed))
    for t in threads:
        t.start()

    out: List[Value] = []
    states: Dict[int, Value] = {}
    try:
        while True:
            msg = _chan_get(chans[-1], abort)
            if isinstance(msg, _Flush):
                states = msg.states
                break
            out.append(msg)
    except ChannelClosed:
        pass
    except BaseException:
        abort.set()  # release blocked workers before the join below
        raise
    finally:
        for t in threads:
            t.join()
    if errors:
        raise ExecutionError("pipeline stage failed") from errors[0]
    new_slots = dict(slots)
    new_slots.update(states)
    return out, new_slots


def run_pipeline(
    graph: Multigraph,
    word: Word,
    xs: Value,
    state: StateStore,
    workers: int = 4,
    capacity: int = 16,
    check: bool = False,
) -> Tuple[Value, StateStore]:
    """Pipelined list semantics: one stage per letter, elements streaming
    through bounded FIFO channels.

    Words with repeated letters run as consecutive duplicate-free
    segments with a barrier in between. Single-letter segments have no
    pipelining to offer and run as a plain sequential map. The result is
    bit-exactly that of ``eval_psi_ref``.
    """
    if workers < 1:
        raise ValidationError("workers must be a positive integer")
    vw = validate_word(graph, word)
    if xs.tag is not Tag.LIST:
        raise PortTypeError(f"expected a list value, got {xs!r}")
    if not xs.elem.compatible(vw.src):
        raise PortTypeError(
            f"input element type {xs.elem.name} does not feed a {vw.src.name} source"
        )

    if mutations.enabled("segment-barrier-removed"):
        segments: Tuple[Word, ...] = (word,)
    else:
        segments = segment_word(word).segments

    values = list(xs.payload)
    slots = state.as_dict()
    for seg in segments:
        if not seg.letters:
            continue
        if len(seg.letters) == 1:
            n = seg.letters[0]
            spec = graph.edges[n]
            sigma = slots[n]
            staged = []
            for v in values:
                v, sigma = apply_thread(spec, v, sigma, check)
                staged.append(v)
            values = staged
            slots[n] = sigma
        else:
            values, slots = _pipeline_segment(
                graph, seg.letters, values, slots, workers, capacity, check
            )
    return v_list(vw.tgt, values), StateStore(slots)


@dataclass(frozen=True)
class BranchProgram:
    """A produce/branch/consume shape over sum-typed values.

    ``producer`` ends in a sum vertex; ``left`` and ``right`` transform
    the two components; ``consumer`` starts from the sum of the branch
    results. The four words use pairwise-disjoint letter sets, so their
    state slots never alias.
    """

    producer: Word
    left: Word
    right: Word
    consumer: Word

    def words(self) -> Tuple[Word, ...]:
        return (self.producer, self.left, self.right, self.consumer)


@dataclass(frozen=True)
class ValidatedBranch:
    src: PortType
    tgt: PortType


def validate_branch(graph: Multigraph, prog: BranchProgram) -> ValidatedBranch:
    vp = validate_word(graph, prog.producer)
    vl = validate_word(graph, prog.left)
    vr = validate_word(graph, prog.right)
    vc = validate_word(graph, prog.consumer)
    if vp.tgt.kind is not TypeKind.SUM:
        raise ValidationError(f"producer must end at a sum vertex, got {vp.tgt.name}")
    if vl.src != vp.tgt.args[0]:
        raise ValidationError(
            f"left branch starts at {vl.src.name}, producer emits {vp.tgt.args[0].name}"
        )
    if vr.src != vp.tgt.args[1]:
        raise ValidationError(
            f"right branch starts at {vr.src.name}, producer emits {vp.tgt.args[1].name}"
        )
    merged = sum_of(vl.tgt, vr.tgt)
    if vc.src != merged:
        raise ValidationError(
            f"consumer starts at {vc.src.name}, branches produce {merged.name}"
        )
    seen: set = set()
    for w in prog.words():
        for n in w.letters:
            if n in seen:
                raise RepeatedLetter(n)
            seen.add(n)
    return ValidatedBranch(vp.src, vc.tgt)


WordEval = Callable[[Multigraph, Word, Value, StateStore], Tuple[Value, StateStore]]


def eval_branch(
    graph: Multigraph,
    prog: BranchProgram,
    xs: Value,
    state: StateStore,
    word_eval: WordEval = eval_psi_ref,
) -> Tuple[Value, StateStore]:
    """Sequential branch semantics: produce, split, run both branches,
    join by the recorded flags, consume.

    The full store is handed to both branch evaluations; the final store
    takes each branch's slots from its own run, which is well defined
    because the letter sets are disjoint.
    """
    validate_branch(graph, prog)
    produced, st1 = word_eval(graph, prog.producer, xs, state)
    bs, cs, flags = split(produced)
    bs2, st_left = word_eval(graph, prog.left, bs, st1)
    cs2, st_right = word_eval(graph, prog.right, cs, st1)
    merged = st1.copy()
    for n in prog.left.letters:
        merged.set(n, st_left.get(n))
    for n in prog.right.letters:
        merged.set(n, st_right.get(n))
    ds = join(bs2, cs2, flags)
    return word_eval(graph, prog.consumer, ds, merged)


def eval_branch_elementwise(
    graph: Multigraph, prog: BranchProgram, xs: Value, state: StateStore
) -> Tuple[Value, StateStore]:
    """Independent oracle for branch programs: route one element at a
    time through produce/branch/consume, threading the store.

    Never calls ``split``/``join``; agreement with ``eval_branch`` is the
    branch analogue of the stage/element reordering equivalence. Defined
    only when each word is duplicate-free.
    """
    vb = validate_branch(graph, prog)
    for w in prog.words():
        repeated = smap_check(w)
        if repeated:
            raise RepeatedLetter(min(repeated))
    if xs.tag is not Tag.LIST:
        raise PortTypeError(f"expected a list value, got {xs!r}")
    if not xs.elem.compatible(vb.src):
        raise PortTypeError(
            f"input element type {xs.elem.name} does not feed a {vb.src.name} source"
        )
    out: List[Value] = []
    store = state.copy()
    for x in xs.payload:
        y, store = eval_phi(graph, prog.producer, x, store)
        if y.tag is Tag.SUML:
            b2, store = eval_phi(graph, prog.left, y.payload, store)
            d_in = v_inl(b2)
        else:
            c2, store = eval_phi(graph, prog.right, y.payload, store)
            d_in = v_inr(c2)
        d, store = eval_phi(graph, prog.consumer, d_in, store)
        out.append(d)
    vc = validate_word(graph, prog.consumer)
    return v_list(vc.tgt, out), store


def run_task_parallel_branch(
    graph: Multigraph,
    prog: BranchProgram,
    xs: Value,
    state: StateStore,
    workers: int = 4,
    capacity: int = 16,
) -> Tuple[Value, StateStore]:
    """Task-parallel branch execution: the two branch maps run
    concurrently on disjoint state slots; the flag list restores the
    original element order at the join."""
    validate_branch(graph, prog)
    produced, st1 = run_pipeline(graph, prog.producer, xs, state, workers, capacity)
    bs, cs, flags = split(produced)

    results: Dict[str, Tuple[Value, StateStore]] = {}
    failures: List[BaseException] = []

    def run_side(key: str, word: Word, items: Value) -> None:
        try:
            results[key] = run_pipeline(graph, word, items, st1, workers, capacity)
        except BaseException as exc:
            failures.append(exc)

    sides = [
        threading.Thread(target=run_side, args=("left", prog.left, bs)),
        threading.Thread(target=run_side, args=("right", prog.right, cs)),
    ]
    for t in sides:
        t.start()
    for t in sides:
        t.join()
    if failures:
        raise failures[0]

    bs2, st_left = results["left"]
    cs2, st_right = results["right"]
    merged = st1.copy()
    for n in prog.left.letters:
        merged.set(n, st_left.get(n))
    for n in prog.right.letters:
        merged.set(n, st_right.get(n))
    if mutations.enabled("flags-ignored-in-join"):
        ds = _join_ignoring_flags(bs2, cs2)
    else:
        ds = join(bs2, cs2, flags)
    return run_pipeline(graph, prog.consumer, ds, merged, workers, capacity)


def eval_auto_word(
    graph: Multigraph,
    word: Word,
    xs: Value,
    state: StateStore,
    workers: int = 1,
) -> Tuple[Value, StateStore]:
    """Stage-wise evaluation that takes the data-parallel shortcut for
    every read-only or product stage and falls back to the sequential map
    for general stages."""
    vw = validate_word(graph, word)
    if xs.tag is not Tag.LIST:
        raise PortTypeError(f"expected a list value, got {xs!r}")
    if not xs.elem.compatible(vw.src):
        raise PortTypeError(
            f"input element type {xs.elem.name} does not feed a {vw.src.name} source"
        )
    out = state.copy()
    current = xs
    for n in word.letters:
        spec = graph.edges[n]
        kind = classify_thread(spec)
        if kind is StageKind.READ_ONLY:
            current, sigma = run_data_parallel_readonly(spec, current, out.get(n), workers)
        elif kind is StageKind.PRODUCT:
            current, sigma = run_data_parallel_product(spec, current, out.get(n), workers)
        else:
            sigma = out.get(n)
            staged = []
            for v in current.payload:
                v, sigma = apply_thread(spec, v, sigma)
                staged.append(v)
            current = v_list(spec.tgt, staged)
        out.set(n, sigma)
    return v_list(vw.tgt, list(current.payload)), out
