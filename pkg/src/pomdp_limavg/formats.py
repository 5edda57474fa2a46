"""Line-oriented text formats for POMDPs, PFAs and finite-memory strategies.

Model grammar::

    pomdp <name>            |  pfa <name>
    states: s0 s1 ...
    actions: a b ...
    obs: o1 o2 ...
    see <state> = <obs>
    trans <s> <a> -> <t>:<p> <u>:<q> ...
    reward <s> <a|*> = <x>
    init <s>
    final: <s> ...

``obs:`` is optional (omitted means fully observable) and then needs one
``see`` line per state.  ``reward`` lines are for POMDPs only, omitted
rewards are 0.  ``final:`` is for PFAs only.

A line whose first non-blank character is ``#`` is a comment.  Comments are
whole-line only because ``#`` is a legal identifier (the reduction gadgets
use it as an action name).

Strategy grammar::

    strategy <name>
    memory: m0 m1 ...
    init m0
    action <m> -> <a>:<p> ...
    update <m> <o> <a> -> <m'>:<p> ...

Probabilities are decimals or fractions ``n/d``.
"""
from __future__ import annotations

from fractions import Fraction

from .errors import ModelError
from .model import Distribution, FiniteStrategy, Pomdp, distribution_problem

PROB_DIGITS = 12


def _fmt(p: float) -> str:
    return format(p, f".{PROB_DIGITS}g")


def _prob(tok):
    try:
        return float(Fraction(tok)) if "/" in tok else float(tok)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"bad probability {tok!r}") from None


def _clean(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield lineno, line


def _pairs(tokens):
    out = []
    for tok in tokens:
        name, sep, p = tok.rpartition(":")
        if not sep or not name:
            raise ValueError(f"expected name:probability, got {tok!r}")
        out.append((name, _prob(p)))
    return out


class _Collector:
    def __init__(self):
        self.errors = []

    def err(self, lineno, msg):
        self.errors.append(f"line {lineno}: {msg}" if lineno else msg)

    def raise_if_any(self, what):
        if self.errors:
            raise ModelError(f"invalid {what}: " + "; ".join(self.errors[:5]), self.errors)


def parse_model(text: str):
    """Parse a ``pomdp`` or ``pfa`` document into a Pomdp or Pfa."""
    from .reductions import Pfa

    c = _Collector()
    kind = name = None
    decl = {}
    see, trans, rewards = {}, {}, {}
    init = final = None
    for lineno, line in _clean(text):
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if kind is None:
            if head not in ("pomdp", "pfa"):
                c.err(lineno, "document must start with 'pomdp <name>' or 'pfa <name>'")
                c.raise_if_any("model")
            kind, name = head, rest or "model"
            continue
        if head in ("states:", "actions:", "obs:", "final:"):
            key = head[:-1]
            if key in decl:
                c.err(lineno, f"duplicate '{head}' declaration")
                continue
            names = rest.split()
            dup = {x for x in names if names.count(x) > 1}
            if dup:
                c.err(lineno, f"duplicate names in '{head}': {sorted(dup)}")
            decl[key] = (lineno, names)
            if key == "final":
                if kind != "pfa":
                    c.err(lineno, "'final:' is only allowed in pfa documents")
                final = (lineno, names)
            continue
        if head == "see":
            parts = rest.replace("=", " = ").split()
            if len(parts) != 3 or parts[1] != "=":
                c.err(lineno, "expected 'see <state> = <obs>'")
                continue
            if parts[0] in see:
                c.err(lineno, f"duplicate observation for state {parts[0]}")
            see[parts[0]] = (lineno, parts[2])
        elif head == "trans":
            lhs, arrow, rhs = rest.partition("->")
            parts = lhs.split()
            if not arrow or len(parts) != 2:
                c.err(lineno, "expected 'trans <state> <action> -> <state>:<p> ...'")
                continue
            try:
                pairs = _pairs(rhs.split())
            except ValueError as exc:
                c.err(lineno, str(exc))
                continue
            key = tuple(parts)
            if key in trans:
                c.err(lineno, f"duplicate transition for ({parts[0]}, {parts[1]})")
            trans[key] = (lineno, pairs)
        elif head == "reward":
            if kind != "pomdp":
                c.err(lineno, "'reward' lines are only allowed in pomdp documents")
                continue
            lhs, eq, rhs = rest.partition("=")
            parts = lhs.split()
            if not eq or len(parts) != 2:
                c.err(lineno, "expected 'reward <state> <action> = <value>'")
                continue
            try:
                rewards[tuple(parts)] = (lineno, _prob(rhs.strip()))
            except ValueError:
                c.err(lineno, f"bad reward value {rhs.strip()!r}")
        elif head == "init":
            if init is not None:
                c.err(lineno, "duplicate 'init' line")
            init = (lineno, rest)
        else:
            c.err(lineno, f"unknown directive {head!r}")
    if kind is None:
        raise ModelError("empty document")
    for key in ("states", "actions"):
        if key not in decl:
            c.err(0, f"missing '{key}:' declaration")
    c.raise_if_any(kind)

    states = decl["states"][1]
    actions = decl["actions"][1]
    sset, aset = set(states), set(actions)
    if not states:
        c.err(decl["states"][0], "no states declared")
    if not actions:
        c.err(decl["actions"][0], "no actions declared")

    transitions = {}
    for (s, a), (lineno, pairs) in trans.items():
        if s not in sset:
            c.err(lineno, f"unknown state {s!r}")
            continue
        if a not in aset:
            c.err(lineno, f"unknown action {a!r}")
            continue
        row = {}
        for t, p in pairs:
            if t not in sset:
                c.err(lineno, f"unknown state {t!r}")
            row[t] = row.get(t, 0.0) + p
        problem = distribution_problem({k: v for k, v in row.items() if v != 0})
        if problem:
            c.err(lineno, f"transition ({s}, {a}): {problem}")
        transitions[(s, a)] = row
    for s in states:
        for a in actions:
            if (s, a) not in trans:
                c.err(0, f"missing transition for ({s}, {a})")

    if init is None:
        c.err(0, "missing 'init' line")
    elif init[1] not in sset:
        c.err(init[0], f"unknown initial state {init[1]!r}")

    obs_of = observations = None
    if "obs" in decl:
        if kind == "pfa":
            c.err(decl["obs"][0], "pfa documents have a single implicit observation")
        observations = decl["obs"][1]
        oset = set(observations)
        obs_of = {}
        for s, (lineno, o) in see.items():
            if s not in sset:
                c.err(lineno, f"unknown state {s!r}")
            elif o not in oset:
                c.err(lineno, f"unknown observation {o!r}")
            else:
                obs_of[s] = o
        for s in states:
            if s not in see:
                c.err(0, f"state {s} has no 'see' line")
        for o in observations:
            if o not in obs_of.values():
                c.err(decl["obs"][0], f"observation {o} is not used by any state")
    elif see:
        c.err(next(iter(see.values()))[0], "'see' lines require an 'obs:' declaration")

    reward_map = {}
    for (s, a), (lineno, x) in rewards.items():
        if s not in sset:
            c.err(lineno, f"unknown state {s!r}")
            continue
        if a != "*" and a not in aset:
            c.err(lineno, f"unknown action {a!r}")
            continue
        if not 0.0 <= x <= 1.0:
            c.err(lineno, f"reward {x} outside [0, 1]")
        for b in (actions if a == "*" else [a]):
            reward_map[(s, b)] = x

    if final is not None:
        for s in final[1]:
            if s not in sset:
                c.err(final[0], f"unknown final state {s!r}")
    c.raise_if_any(kind)

    if kind == "pfa":
        return Pfa.build(states, actions, transitions, initial=init[1],
                         final=final[1] if final else (), name=name)
    return Pomdp.build(states, actions, transitions, initial=init[1], observations=observations,
                       obs_of=obs_of, rewards=reward_map, name=name)


def _is_fully_observable(model: Pomdp) -> bool:
    return tuple(model.observations) == tuple(model.states) and tuple(model.obs_of) == tuple(range(model.n_states))


def serialize_model(model) -> str:
    """Text form of a Pomdp or Pfa; ``parse_model`` inverts it."""
    from .reductions import Pfa

    is_pfa = isinstance(model, Pfa)
    lines = [f"{'pfa' if is_pfa else 'pomdp'} {model.name}",
             "states: " + " ".join(model.states),
             "actions: " + " ".join(model.actions)]
    if not is_pfa and not _is_fully_observable(model):
        lines.append("obs: " + " ".join(model.observations))
        for s, o in zip(model.states, model.obs_of):
            lines.append(f"see {s} = {model.observations[o]}")
    for s, row in zip(model.states, model.transition):
        for a, d in zip(model.actions, row):
            rhs = " ".join(f"{model.states[t]}:{_fmt(p)}" for t, p in sorted(d.items()))
            lines.append(f"trans {s} {a} -> {rhs}")
    if not is_pfa:
        for s, row in zip(model.states, model.reward):
            for a, r in zip(model.actions, row):
                if r != 0.0:
                    lines.append(f"reward {s} {a} = {_fmt(r)}")
    lines.append(f"init {model.states[model.initial]}")
    if is_pfa:
        lines.append("final: " + " ".join(model.states[s] for s in sorted(model.final)))
    return "\n".join(lines) + "\n"


def serialize_strategy(sigma: FiniteStrategy) -> str:
    mem, acts, obs = sigma.memory, sigma.actions, sigma.observations
    lines = [f"strategy {sigma.name}", "memory: " + " ".join(mem), f"init {mem[sigma.initial_memory]}"]
    for m, d in enumerate(sigma.next_action):
        rhs = " ".join(f"{acts[a]}:{_fmt(p)}" for a, p in sorted(d.items()))
        lines.append(f"action {mem[m]} -> {rhs}")
    for (m, o, a) in sorted(sigma.update):
        d = sigma.update[(m, o, a)]
        rhs = " ".join(f"{mem[x]}:{_fmt(p)}" for x, p in sorted(d.items()))
        lines.append(f"update {mem[m]} {obs[o]} {acts[a]} -> {rhs}")
    return "\n".join(lines) + "\n"


def parse_strategy(text: str, model: Pomdp) -> FiniteStrategy:
    """Parse a strategy document, resolving action and observation names
    against ``model``."""
    c = _Collector()
    name = None
    memory = None
    init = None
    acts, upds = {}, {}
    for lineno, line in _clean(text):
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        if name is None:
            if head != "strategy":
                c.err(lineno, "document must start with 'strategy <name>'")
                c.raise_if_any("strategy")
            name = rest or "strategy"
        elif head == "memory:":
            if memory is not None:
                c.err(lineno, "duplicate 'memory:' declaration")
            memory = (lineno, rest.split())
        elif head == "init":
            init = (lineno, rest)
        elif head in ("action", "update"):
            lhs, arrow, rhs = rest.partition("->")
            parts = lhs.split()
            want = 1 if head == "action" else 3
            if not arrow or len(parts) != want:
                c.err(lineno, f"malformed '{head}' line")
                continue
            try:
                pairs = _pairs(rhs.split())
            except ValueError as exc:
                c.err(lineno, str(exc))
                continue
            book = acts if head == "action" else upds
            key = tuple(parts)
            if key in book:
                c.err(lineno, f"duplicate {head} for {' '.join(parts)}")
            book[key] = (lineno, pairs)
        else:
            c.err(lineno, f"unknown directive {head!r}")
    if name is None:
        raise ModelError("empty strategy document")
    if memory is None:
        c.err(0, "missing 'memory:' declaration")
        c.raise_if_any("strategy")
    mem = memory[1]
    mi = {m: i for i, m in enumerate(mem)}
    ai = {a: i for i, a in enumerate(model.actions)}
    oi = {o: i for i, o in enumerate(model.observations)}
    if len(mi) != len(mem):
        c.err(memory[0], "duplicate memory names")
    if init is None or init[1] not in mi:
        c.err(init[0] if init else 0, "missing or unknown initial memory")

    def dist(lineno, pairs, table, what):
        row = {}
        for x, p in pairs:
            if x not in table:
                c.err(lineno, f"unknown {what} {x!r}")
                return None
            row[table[x]] = row.get(table[x], 0.0) + p
        problem = distribution_problem({k: v for k, v in row.items() if v != 0})
        if problem:
            c.err(lineno, problem)
            return None
        return Distribution(row)

    next_action = [None] * len(mem)
    for (m,), (lineno, pairs) in acts.items():
        if m not in mi:
            c.err(lineno, f"unknown memory {m!r}")
            continue
        next_action[mi[m]] = dist(lineno, pairs, ai, "action")
    for m, d in zip(mem, next_action):
        if d is None and (m,) not in acts:
            c.err(0, f"missing action line for memory {m}")
    update = {}
    for (m, o, a), (lineno, pairs) in upds.items():
        if m not in mi or o not in oi or a not in ai:
            c.err(lineno, f"unknown identifier in 'update {m} {o} {a}'")
            continue
        d = dist(lineno, pairs, mi, "memory")
        if d is not None:
            update[(mi[m], oi[o], ai[a])] = d
    for m in range(len(mem)):
        for o in range(model.n_observations):
            for a in range(model.n_actions):
                if (m, o, a) not in update and (mem[m], model.observations[o], model.actions[a]) not in upds:
                    c.err(0, f"missing update for ({mem[m]}, {model.observations[o]}, {model.actions[a]})")
    c.raise_if_any("strategy")
    pure = all(len(d) == 1 for d in next_action) and all(len(d) == 1 for d in update.values())
    return FiniteStrategy(tuple(mem), mi[init[1]], tuple(next_action), update,
                          model.actions, model.observations, pure=pure, name=name)


def transition_table(model) -> str:
    """Human-readable dump, one row per (state, action)."""
    from .reductions import Pfa

    rows = []
    width = max(len(s) for s in model.states)
    for s, row in enumerate(model.transition):
        for a, d in enumerate(row):
            succ = ", ".join(f"{model.states[t]} ({p:g})" for t, p in sorted(d.items()))
            extra = "" if isinstance(model, Pfa) else f"  r={model.reward[s][a]:g}"
            rows.append(f"{model.states[s]:<{width}} --{model.actions[a]}--> {succ}{extra}")
    return "\n".join(rows) + "\n"
