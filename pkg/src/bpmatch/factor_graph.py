"""Sum-product belief propagation on the factor graph of a decoding graph.

Every edge of the decoding graph becomes a binary variable with a degree-one
prior factor. Every detection node ``i`` carries a check factor ``c_i`` that is
one iff exactly one incident edge is selected; boundary nodes carry no factor.
The resulting distribution puts mass only on matchings, weighting each by the
product of its edge priors.

Messages are binary distributions. Since each pair sums to one, a message is
stored as its probability of ``1``; the matrix cell ``(i, j)`` of ``f2v`` is
the message from ``c_i`` to the variable of cell ``(i, j)`` (diagonal cells are
boundary variables), and ``v2f[i, j]`` is the message from that variable back
to ``c_i``. Because check ``i`` touches exactly the variables of row ``i``,
all factor updates are row-wise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import DecodingGraph, n_pair_vars, var_layout

EPS = 1e-12
MAX_EXACT_VARS = 20


@dataclass(frozen=True)
class FactorGraph:
    """Adjacency of check factors, prior factors and edge variables.

    ``check_neighbors[i]`` lists the variables of ``c_i`` (the pair variables
    in order of the partner node, then ``u_i``); ``var_checks[k]`` lists the
    one or two check factors of variable ``k``.
    """

    s: int
    check_neighbors: tuple[tuple[int, ...], ...]
    var_checks: tuple[tuple[int, ...], ...]

    @property
    def n_vars(self) -> int:
        return len(self.var_checks)

    @property
    def n_pair_vars(self) -> int:
        return n_pair_vars(self.s)

    @property
    def n_check_factors(self) -> int:
        return self.s

    @property
    def n_prior_factors(self) -> int:
        return self.n_vars

    @property
    def n_factors(self) -> int:
        return self.n_check_factors + self.n_prior_factors

    def is_boundary_var(self, k: int) -> bool:
        return k >= self.n_pair_vars


def build_factor_graph(g: DecodingGraph) -> FactorGraph:
    s = g.s
    rows, cols, ids = var_layout(s)
    check_neighbors = []
    for i in range(s):
        partners = [j for j in range(s) if j != i]
        check_neighbors.append(tuple(int(ids[i, j]) for j in partners) + (int(ids[i, i]),))
    var_checks = tuple(
        (int(i),) if i == j else (int(i), int(j)) for i, j in zip(rows, cols)
    )
    return FactorGraph(s=s, check_neighbors=tuple(check_neighbors), var_checks=var_checks)


def eval_check_factor(values) -> int:
    """Check factor value: 1 iff exactly one incident variable is set."""
    return int(sum(int(v) for v in values) == 1)


@dataclass(frozen=True)
class MessageState:
    """Messages at one iteration, each stored as its probability of 1."""

    f2v: np.ndarray
    v2f: np.ndarray
    prior_msg: np.ndarray
    iteration: int = 0

    @staticmethod
    def _pairs(p1: np.ndarray) -> np.ndarray:
        return np.stack([1.0 - p1, p1], axis=-1)

    def f2v_pair(self, i: int, j: int) -> tuple[float, float]:
        p = float(self.f2v[i, j])
        return 1.0 - p, p

    def v2f_pair(self, i: int, j: int) -> tuple[float, float]:
        p = float(self.v2f[i, j])
        return 1.0 - p, p

    def prior_pair(self, i: int, j: int) -> tuple[float, float]:
        p = float(self.prior_msg[i, j])
        return 1.0 - p, p

    def f2v_pairs(self) -> np.ndarray:
        return self._pairs(self.f2v)

    def v2f_pairs(self) -> np.ndarray:
        return self._pairs(self.v2f)


def init_messages(fg: FactorGraph, g: DecodingGraph, literal_prior_freeze: bool = False) -> MessageState:
    """Variable-to-check messages start at the prior, check-to-variable at uniform.

    With ``literal_prior_freeze`` the prior factors keep sending the uniform
    message forever, so the prior only enters through the initial
    variable-to-check messages.
    """
    priors = np.array(g.priors, dtype=float)
    f2v = np.full((fg.s, fg.s), 0.5)
    prior_msg = np.full_like(priors, 0.5) if literal_prior_freeze else priors
    return MessageState(f2v=f2v, v2f=priors.copy(), prior_msg=prior_msg, iteration=0)


def _leave_one_out_sums(r: np.ndarray) -> np.ndarray:
    # Exclusive prefix plus exclusive suffix along each row; avoids the
    # cancellation of (row total - own term) when one term dominates.
    out = np.zeros_like(r)
    if r.shape[1] > 1:
        out[:, 1:] = np.cumsum(r[:, :-1], axis=1)
        out[:, :-1] += np.cumsum(r[:, :0:-1], axis=1)[:, ::-1]
    return out


def _combine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Normalized product of two binary messages given as P(1)."""
    one = a * b
    return one / (one + (1.0 - a) * (1.0 - b))


def bp_iteration(fg: FactorGraph, st: MessageState, eps: float = EPS) -> MessageState:
    """One flooding update of all check and variable messages.

    For a check factor the update for variable ``v`` is

        m(1) ~ prod_{v' != v} m_{v'}(0)
        m(0) ~ sum_{v' != v} m_{v'}(1) prod_{v'' != v, v'} m_{v''}(0)

    which after dividing by the common product is ``m(1) : m(0) = 1 : sum of
    odds``. A degree-one factor (``s = 1``) gets the empty product and empty
    sum and sends the exact message ``(0, 1)``.
    """
    s = fg.s
    if s == 0:
        return MessageState(st.f2v, st.v2f, st.prior_msg, st.iteration + 1)
    v2f = st.v2f
    odds = v2f / (1.0 - v2f)
    f2v = 1.0 / (1.0 + _leave_one_out_sums(odds))
    if s > 1:
        np.clip(f2v, eps, 1.0 - eps, out=f2v)

    # A pair variable hears from its prior and from the check at the other
    # end; a boundary variable only from its prior.
    new_v2f = _combine(st.prior_msg, st.f2v.T)
    diag = np.arange(s)
    new_v2f[diag, diag] = st.prior_msg[diag, diag]
    np.clip(new_v2f, eps, 1.0 - eps, out=new_v2f)
    return MessageState(f2v=f2v, v2f=new_v2f, prior_msg=st.prior_msg, iteration=st.iteration + 1)


def marginal_p1(fg: FactorGraph, st: MessageState) -> np.ndarray:
    """Posterior ``P(w = 1)`` of every variable, indexed by variable id."""
    s = fg.s
    if s == 0:
        return np.zeros(0)
    rows, cols, _ = var_layout(s)
    prior = st.prior_msg[rows, cols]
    pair = rows != cols
    checks = st.f2v[rows, cols]
    other = np.where(pair, st.f2v[cols, rows], 0.5)
    one = prior * checks * other
    zero = (1.0 - prior) * (1.0 - checks) * (1.0 - other)
    return one / (one + zero)


def marginals(fg: FactorGraph, st: MessageState) -> np.ndarray:
    """Posterior pairs ``(P(w=0), P(w=1))`` per variable, shape ``(n_vars, 2)``."""
    p1 = marginal_p1(fg, st)
    return np.stack([1.0 - p1, p1], axis=-1)


@dataclass(frozen=True)
class ExactDistribution:
    """Exact joint of the matching distribution by enumeration."""

    assignments: list
    probabilities: np.ndarray
    marginals: np.ndarray
    map_assignment: frozenset


def exact_distribution(fg: FactorGraph, g: DecodingGraph) -> ExactDistribution:
    """Enumerate every assignment, weight it by the factor product, normalize.

    Only intended as a test oracle for small instances.
    """
    n = fg.n_vars
    if n > MAX_EXACT_VARS:
        raise OverflowError(f"{n} variables exceed the enumeration limit of {MAX_EXACT_VARS}")
    if n == 0:
        return ExactDistribution([frozenset()], np.ones(1), np.zeros((0, 2)), frozenset())
    bits = (np.arange(2**n)[:, None] >> np.arange(n)) & 1
    incidence = np.zeros((n, fg.s), dtype=np.int64)
    for k, checks in enumerate(fg.var_checks):
        incidence[k, list(checks)] = 1
    valid = np.all(bits @ incidence == 1, axis=1)
    prior = g.var_priors()
    weight = np.prod(np.where(bits == 1, prior, 1.0 - prior), axis=1) * valid
    probs = weight / weight.sum()
    p1 = probs @ bits
    support = np.flatnonzero(probs > 0)
    assignments = [frozenset(int(k) for k in np.flatnonzero(bits[a])) for a in support]
    # Highest mass, ties to the first in enumeration order.
    best = int(np.argmax(probs))
    return ExactDistribution(
        assignments=assignments,
        probabilities=probs[support],
        marginals=np.stack([1.0 - p1, p1], axis=-1),
        map_assignment=frozenset(int(k) for k in np.flatnonzero(bits[best])),
    )
