"""Spectral flow of affine Hermitian paths ``t -> A + t C``.

The flow over ``[a, b]`` with invertible endpoints is ``n^-(A + aC) - n^-(A + bC)``.
It is also the sum of local contributions at the crossings (instants where
``A + tC`` is singular):

* at a regular crossing, the signature of the crossing form ``C`` compressed
  to the kernel;
* at any isolated crossing with ``C`` invertible, the signature of ``<C., .>``
  on the generalised eigenspace of ``C^-1 A`` for ``-t*``, which equals the
  sum of the odd partial signatures.

Partial signatures are computed exactly from Jordan chains. A root function
``u(t) = sum_j u_j (t - t*)^j`` satisfies ``(A + t*C) u_j + C u_(j-1) = 0``,
so with ``X = C^-1 A + t* I`` the chain obeys ``u_(j-1) = -X u_j``. Hence
``W_k = (-X)^(k-1) ker X^k`` and ``B_k(u_0, v_0) = <C u_(k-1), v_0>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy.linalg import lapack

from .core_model import complex_structure
from .errors import (DegenerateCrossingError, NonIsolatedCrossingError, NotACrossingError,
                     NotAnEigenvalueError, NotSymplecticError, SingularEndpointError,
                     UnsupportedPathError)
from .linalg import cluster_radius, hermitian_part, inertia, null_space

RANK_TOL = 1e-9
NONDEG_TOL = 1e-8
HERMITIAN_TOL = 1e-12
IMAG_TOL = 1e-7
PROJECTOR_TOL = 1e-6


def krein_operator(dim: int) -> np.ndarray:
    """``G = i J``; Hermitian, involutive, with signature zero."""
    return 1j * complex_structure(dim)


def _is_invertible(a: np.ndarray, rel_tol: float = RANK_TOL) -> bool:
    s = np.linalg.svd(a, compute_uv=False)
    return s.size == 0 or s[-1] > rel_tol * max(s[0], 1.0)


def _signature(form: np.ndarray, rel_tol: float = NONDEG_TOL, scale: float | None = None):
    """Inertia of a Hermitian form; zeros decided relative to ``scale``."""
    if form.size == 0:
        return inertia(form)
    e = np.linalg.eigvalsh(hermitian_part(form))
    cut = rel_tol * (scale if scale is not None else max(np.max(np.abs(e)), 1e-300))
    return inertia(form, rel_tol=0.0, abs_floor=cut)


@dataclass(frozen=True)
class HermitianPath:
    """The affine path ``t -> A + t C`` on ``[a, b]``."""

    A: np.ndarray
    C: np.ndarray
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        A = np.array(self.A, dtype=complex)
        C = np.array(self.C, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != C.shape:
            raise ValueError(f"A and C must be square of equal size, got {A.shape}, {C.shape}")
        for name, m in (("A", A), ("C", C)):
            if np.linalg.norm(m - m.conj().T) > HERMITIAN_TOL * max(np.linalg.norm(m), 1.0):
                raise ValueError(f"{name} is not Hermitian")
        if not self.a < self.b:
            raise ValueError(f"interval must satisfy a < b, got [{self.a}, {self.b}]")
        A = hermitian_part(A)
        C = hermitian_part(C)
        A.setflags(write=False)
        C.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def start(self) -> float:
        return self.a

    @property
    def end(self) -> float:
        return self.b

    def at(self, t: float) -> np.ndarray:
        return self.A + t * self.C

    def derivative(self, t: float | None = None) -> np.ndarray:
        return self.C

    def on(self, a: float, b: float) -> "HermitianPath":
        return HermitianPath(self.A, self.C, a, b)

    @property
    def pieces(self) -> tuple["HermitianPath", ...]:
        return (self,)


@dataclass(frozen=True)
class PiecewiseAffinePath:
    """Concatenation of affine paths joined continuously end to start."""

    pieces: tuple[HermitianPath, ...]

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("a piecewise path needs at least one piece")
        for p, q in zip(self.pieces, self.pieces[1:]):
            if not np.isclose(p.b, q.a):
                raise ValueError(f"pieces are not adjacent: {p.b} vs {q.a}")
            gap = np.linalg.norm(p.at(p.b) - q.at(q.a))
            if gap > 1e-10 * max(1.0, np.linalg.norm(p.at(p.b))):
                raise ValueError("pieces do not join continuously")

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    @property
    def start(self) -> float:
        return self.pieces[0].a

    @property
    def end(self) -> float:
        return self.pieces[-1].b

    def at(self, t: float) -> np.ndarray:
        for p in self.pieces:
            if t <= p.b:
                return p.at(t)
        return self.pieces[-1].at(t)


def concatenate(*paths) -> PiecewiseAffinePath:
    pieces = []
    for p in paths:
        pieces.extend(p.pieces)
    return PiecewiseAffinePath(tuple(pieces))


def normalization_path(P: np.ndarray, A: np.ndarray) -> HermitianPath:
    """``t -> (t - 1/2) P + (I - P) A (I - P)`` on ``[0, 1]``, ``P`` a rank-one projection.

    Its flow is 1 whenever ``A`` is invertible on the range of ``I - P``.
    """
    P = np.asarray(P, dtype=complex)
    Q = np.eye(P.shape[0]) - P
    return HermitianPath(Q @ A @ Q - 0.5 * P, P, 0.0, 1.0)


def spectral_flow_endpoints(path) -> int:
    """``n^-(T(a)) - n^-(T(b))``."""
    ta, tb = path.at(path.start), path.at(path.end)
    for t, m in ((path.start, ta), (path.end, tb)):
        if not _is_invertible(m):
            raise SingularEndpointError(
                f"path is singular at t = {t:g}; shift the endpoint off the crossing", t=t)
    return inertia(ta, rel_tol=0.0).negative - inertia(tb, rel_tol=0.0).negative


def _single_linkage(values: np.ndarray, idx: list[int], radius: float) -> list[list[int]]:
    comps, todo = [], list(idx)
    while todo:
        comp, frontier = [todo.pop(0)], None
        frontier = list(comp)
        while frontier:
            i = frontier.pop()
            near = [j for j in todo if abs(values[j] - values[i]) <= radius]
            for j in near:
                todo.remove(j)
            comp += near
            frontier += near
        comps.append(sorted(comp))
    return comps


def multiplets(values, scale: float, factor: float = 10.0) -> list[np.ndarray]:
    """Group eigenvalues into perturbed multiple eigenvalues.

    An ``m``-fold defective eigenvalue splits by about ``eps^(1/m) * scale``.
    Components are formed top-down: a single-linkage component is accepted
    when its diameter is below ``factor * eps^(1/m) * scale`` for its own size
    ``m``, and is split at successively smaller radii otherwise.
    """
    values = np.asarray(values, dtype=complex)
    eps = np.finfo(float).eps

    def radius(m: int) -> float:
        return factor * eps ** (1.0 / m) * scale

    def split(idx: list[int]) -> list[list[int]]:
        if len(idx) == 1:
            return [idx]
        sub = values[idx]
        if np.max(np.abs(sub[:, None] - sub[None, :])) <= radius(len(idx)):
            return [idx]
        for m in range(len(idx) - 1, 0, -1):
            comps = _single_linkage(values, idx, radius(m))
            if len(comps) > 1:
                return [g for c in comps for g in split(c)]
        return [[i] for i in idx]

    groups = split(list(range(values.size))) if values.size else []
    out = [np.array(g) for g in groups]
    out.sort(key=lambda g: (values[g].mean().real, values[g].mean().imag))
    return out


def _largest_edge_split(values: np.ndarray, idx: list[int]):
    """Split ``idx`` at the longest edge of its minimum spanning tree."""
    pts = values[idx]
    d = np.abs(pts[:, None] - pts[None, :])
    inside = np.zeros(len(idx), dtype=bool)
    inside[0] = True
    best = d[0].copy()
    edge = 0.0
    for _ in range(len(idx) - 1):
        cand = np.where(inside, np.inf, best)
        k = int(np.argmin(cand))
        edge = max(edge, cand[k])
        inside[k] = True
        best = np.minimum(best, d[k])
    return edge, _single_linkage(values, idx, edge * (1.0 - 1e-9))


def _projector_condition(T: np.ndarray, Z: np.ndarray, members) -> float:
    """Reciprocal condition of the spectral projector onto ``members`` of the Schur form."""
    n = T.shape[0]
    select = np.zeros(n, dtype=np.int32)
    select[list(members)] = 1
    s = lapack.ztrsen(select, T, Z, job="B", lwork=max(1, n * n))[4]
    return float(s)


@dataclass(frozen=True)
class SpectralGroups:
    """Eigenvalues of a matrix grouped into numerically multiple eigenvalues.

    ``T, Z`` is the complex Schur form the eigenvalues were read from.
    """

    values: np.ndarray
    groups: list
    T: np.ndarray
    Z: np.ndarray

    def means(self) -> np.ndarray:
        return np.array([self.values[g].mean() for g in self.groups])

    def basis(self, k: int) -> np.ndarray:
        """Orthonormal basis of the invariant subspace of group ``k``."""
        n = self.T.shape[0]
        select = np.zeros(n, dtype=np.int32)
        select[self.groups[k]] = 1
        out = lapack.ztrsen(select, self.T, self.Z, job="N", lwork=max(1, n))
        return out[1][:, :int(out[3])]


def spectral_groups(X: np.ndarray) -> SpectralGroups:
    """Group the eigenvalues of ``X`` into multiplets.

    Candidates come from :func:`multiplets`; a candidate is split at its
    longest spanning-tree edge only when the pieces are genuinely distinct
    eigenvalues: their means differ on the scale of the edge and each piece
    has a well-conditioned spectral projector. Fragments of a perturbed
    Jordan block fail the second test, since their projectors blow up.
    """
    X = np.asarray(X, dtype=complex)
    T, Z = sla.schur(X, output="complex")
    values = np.diag(T).copy()
    tight = cluster_radius(X)

    def refine(idx: list[int]) -> list[list[int]]:
        if len(idx) == 1:
            return [idx]
        edge, comps = _largest_edge_split(values, idx)
        if edge <= tight or len(comps) < 2:
            return [idx]
        means = np.array([values[c].mean() for c in comps])
        gaps = np.abs(means[:, None] - means[None, :]) + np.diag(np.full(len(comps), np.inf))
        if gaps.min() <= 1e-2 * edge:
            return [idx]
        if min(_projector_condition(T, Z, c) for c in comps) < PROJECTOR_TOL:
            return [idx]
        return [g for c in comps for g in refine(c)]

    scale = max(1.0, np.linalg.norm(X, 2))
    groups = [g for cand in multiplets(values, scale) for g in refine([int(i) for i in cand])]
    groups.sort(key=lambda g: (values[g].mean().real, values[g].mean().imag))
    return SpectralGroups(values, groups, T, Z)


def _pencil_eigenvalues(A: np.ndarray, C: np.ndarray):
    """Candidate roots of ``det(A + tC)`` as ``(mean, members)`` per multiplet."""
    if _is_invertible(C, 1e-12):
        sg = spectral_groups(-np.linalg.solve(C, A))
        return [(complex(sg.values[g].mean()), sg.values[g]) for g in sg.groups]
    stacked = null_space(np.vstack([A, C]), RANK_TOL)
    if stacked.shape[1]:
        raise NonIsolatedCrossingError("A + tC is singular for every t (common kernel)")
    w = sla.eigvals(A, -C)
    ev = w[np.isfinite(w)]
    scale = max(1.0, float(np.max(np.abs(ev), initial=1.0)))
    return [(complex(ev[g].mean()), ev[g]) for g in multiplets(ev, scale)]


def _is_singular_at(path, t: float) -> bool:
    return null_space(path.at(t), RANK_TOL).shape[1] > 0


def find_crossings_affine(path: HermitianPath, include_endpoints: bool = True) -> list[float]:
    """Sorted crossing instants of ``A + tC`` in ``[a, b]``."""
    lo, hi = path.a, path.b

    def accept(t: complex) -> float | None:
        if abs(t.imag) > IMAG_TOL * max(1.0, abs(t)):
            return None
        tr = float(t.real)
        inside = lo <= tr <= hi if include_endpoints else lo < tr < hi
        if inside and _is_singular_at(path, tr):
            return tr
        return None

    out = []
    for mean, members in _pencil_eigenvalues(path.A, path.C):
        t = accept(mean)
        if t is None and members.size > 1:
            # a spurious merge: fall back to the individual members
            hits = [accept(m) for m in members]
            out.extend(h for h in hits if h is not None)
        elif t is not None:
            out.append(t)
    return sorted(set(out))


@dataclass(frozen=True)
class CrossingForm:
    t_star: float
    kernel: np.ndarray
    form: np.ndarray
    inertia: object
    regular: bool

    @property
    def signature(self) -> int:
        return self.inertia.signature

    @property
    def kernel_dim(self) -> int:
        return self.kernel.shape[1]


def crossing_form(path: HermitianPath, t_star: float) -> CrossingForm:
    """``Q C Q`` restricted to ``ker(A + t* C)``."""
    Q = null_space(path.at(t_star), RANK_TOL)
    if Q.shape[1] == 0:
        raise NotACrossingError(f"A + tC is invertible at t = {t_star:g}")
    form = hermitian_part(Q.conj().T @ path.C @ Q)
    ine = _signature(form, NONDEG_TOL, scale=max(np.linalg.norm(path.C, 2), 1e-300))
    return CrossingForm(float(t_star), Q, form, ine, ine.zero == 0)


def spectral_flow_regular(path: HermitianPath) -> int:
    """Sum of crossing-form signatures; every crossing must be regular."""
    spectral_flow_endpoints(path)
    total = 0
    for t in find_crossings_affine(path):
        cf = crossing_form(path, t)
        if not cf.regular:
            raise DegenerateCrossingError(f"degenerate crossing at t = {t:.12g}", t_star=t)
        total += cf.signature
    return total


@dataclass(frozen=True)
class CrossingReport:
    """Local data at one crossing.

    ``partial_signatures[k-1]`` is the k-th partial signature and
    ``filtration_dims[k-1]`` the dimension of ``W_k``.
    """

    t_star: float
    kernel_dim: int
    crossing_form_signature: int
    regular: bool
    partial_signatures: tuple[int, ...]
    filtration_dims: tuple[int, ...]
    generalized_space_dim: int
    generalized_form_signature: int
    local_flow: int

    @property
    def odd_partial_sum(self) -> int:
        return int(sum(self.partial_signatures[0::2]))

    def to_dict(self) -> dict:
        return {
            "t_star": self.t_star,
            "kernel_dim": self.kernel_dim,
            "crossing_form_signature": self.crossing_form_signature,
            "regular": self.regular,
            "partial_signatures": list(self.partial_signatures),
            "filtration_dims": list(self.filtration_dims),
            "generalized_space_dim": self.generalized_space_dim,
            "generalized_form_signature": self.generalized_form_signature,
            "local_flow": self.local_flow,
        }


def _multiplet_basis(Y: np.ndarray, value: complex):
    """Cluster mean and invariant-subspace basis of the multiplet of ``Y`` nearest ``value``."""
    sg = spectral_groups(Y)
    means = sg.means()
    best = int(np.argmin(np.abs(means - value)))
    members = sg.values[sg.groups[best]]
    eps = np.finfo(float).eps
    scale = max(1.0, np.linalg.norm(Y, 2))
    bound = 10.0 * eps ** (1.0 / members.size) * scale + cluster_radius(Y)
    if abs(means[best] - value) > bound:
        return complex(value), np.zeros((Y.shape[0], 0), dtype=complex)
    V = sg.basis(best)
    if V.shape[1] != members.size:
        raise NonIsolatedCrossingError(
            f"could not separate the invariant subspace at {means[best]:.6g}")
    return complex(means[best]), V


def _generalized_space(Y: np.ndarray, value: complex) -> np.ndarray:
    return _multiplet_basis(Y, value)[1]


def partial_signatures_affine(path: HermitianPath, t_star: float) -> CrossingReport:
    """Partial signatures and local flow of ``A + tC`` at the crossing ``t_star``.

    Requires ``C`` invertible, which makes every crossing isolated.
    """
    A, C = path.A, path.C
    if not _is_invertible(C, 1e-12):
        raise UnsupportedPathError("partial signatures need an invertible derivative C")
    Y = np.linalg.solve(C, A)
    V = _generalized_space(Y, -t_star)
    d = V.shape[1]
    if d == 0 or null_space(path.at(t_star), RANK_TOL).shape[1] == 0:
        raise NotACrossingError(f"A + tC is invertible at t = {t_star:g}")
    scale_c = max(np.linalg.norm(C, 2), 1e-300)
    gen_form = V.conj().T @ C @ V
    gen_sig = _signature(gen_form, NONDEG_TOL, scale=scale_c)
    if gen_sig.zero:
        raise NonIsolatedCrossingError(
            f"<C., .> is degenerate on the generalised eigenspace at t = {t_star:g}")

    # X restricted to the invariant subspace, nilpotent up to rounding
    X = Y + t_star * np.eye(Y.shape[0])
    N = V.conj().T @ X @ V
    scale_x = max(np.linalg.norm(X, 2), 1.0)
    signatures, dims = [], []
    k = 1
    while k <= d:
        Nk = np.linalg.matrix_power(N, k)
        _, s, vh = np.linalg.svd(Nk)
        ker = vh[int(np.sum(s > RANK_TOL * scale_x ** k)):].conj().T
        P = np.linalg.matrix_power(-N, k - 1) @ ker
        U, sv, wh = np.linalg.svd(P, full_matrices=False)
        rank = int(np.sum(sv > RANK_TOL * scale_x ** (k - 1)))
        U, sv, wh = U[:, :rank], sv[:rank], wh[:rank]
        if rank == 0:
            break
        pre = ker @ wh.conj().T / sv
        w0 = V @ U
        B = w0.conj().T @ C @ (V @ pre)
        ine = _signature(hermitian_part(B), NONDEG_TOL, scale=scale_c)
        signatures.append(ine.signature)
        dims.append(U.shape[1])
        if ker.shape[1] == d:
            break
        k += 1
    report = CrossingReport(
        t_star=float(t_star),
        kernel_dim=dims[0] if dims else 0,
        crossing_form_signature=signatures[0] if signatures else 0,
        regular=len(dims) < 2,
        partial_signatures=tuple(signatures),
        filtration_dims=tuple(dims),
        generalized_space_dim=d,
        generalized_form_signature=gen_sig.signature,
        local_flow=gen_sig.signature,
    )
    return report


def local_flow_inverted(A, C, s_star: float) -> int:
    """Local flow of ``s -> s A + C`` at ``s_star``: ``-sgn <C., .>`` on the
    generalised eigenspace of ``C^-1 A`` for ``-1/s_star``."""
    A = np.asarray(A, dtype=complex)
    C = np.asarray(C, dtype=complex)
    V = _generalized_space(np.linalg.solve(C, A), -1.0 / s_star)
    if V.shape[1] == 0:
        raise NotACrossingError(f"s A + C is invertible at s = {s_star:g}")
    return -_signature(V.conj().T @ C @ V, NONDEG_TOL,
                       scale=max(np.linalg.norm(C, 2), 1e-300)).signature


@dataclass(frozen=True)
class FlowReport:
    """Spectral flow of an affine path by three independent routes."""

    interval: tuple[float, float]
    crossings: tuple[CrossingReport, ...]
    endpoint_flow: int
    crossing_sum: int | None
    partial_sum: int
    sign_convention: str = "+sgn B1"
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def consistent(self) -> bool:
        values = {self.endpoint_flow, self.partial_sum}
        if self.crossing_sum is not None:
            values.add(self.crossing_sum)
        return len(values) == 1

    def to_dict(self) -> dict:
        return {
            "interval": list(self.interval),
            "crossings": [c.to_dict() for c in self.crossings],
            "endpoint_flow": self.endpoint_flow,
            "crossing_sum": self.crossing_sum,
            "partial_signature_sum": self.partial_sum,
            "sign_convention": self.sign_convention,
            "consistent": self.consistent,
            "notes": list(self.notes),
        }


def spectral_flow_partial(path: HermitianPath) -> int:
    """Sum of local flows from partial signatures over the interior crossings."""
    spectral_flow_endpoints(path)
    return sum(partial_signatures_affine(path, t).odd_partial_sum
               for t in find_crossings_affine(path, include_endpoints=False))


def analyze_path(path: HermitianPath) -> FlowReport:
    """Endpoint formula, crossing-form sum (when all crossings are regular) and
    partial-signature sum for one affine path."""
    endpoint = spectral_flow_endpoints(path)
    reports = tuple(partial_signatures_affine(path, t)
                    for t in find_crossings_affine(path, include_endpoints=False))
    notes = []
    crossing_sum = None
    if all(r.regular for r in reports):
        crossing_sum = int(sum(r.crossing_form_signature for r in reports))
    else:
        notes.append("degenerate crossings present; crossing-form sum not defined")
    partial = int(sum(r.odd_partial_sum for r in reports))
    return FlowReport((path.a, path.b), reports, endpoint, crossing_sum, partial,
                      notes=tuple(notes))


@dataclass(frozen=True)
class KreinReport:
    eigenvalue: complex
    space_dim: int
    signature: int
    nondegenerate: bool
    form_inertia: object

    def to_dict(self) -> dict:
        return {
            "eigenvalue": [self.eigenvalue.real, self.eigenvalue.imag],
            "space_dim": self.space_dim,
            "signature": self.signature,
            "nondegenerate": self.nondegenerate,
        }


def _krein_on(V: np.ndarray, value: complex) -> KreinReport:
    G = krein_operator(V.shape[0])
    form = V.conj().T @ G @ V
    ine = _signature(form, NONDEG_TOL, scale=1.0)
    return KreinReport(complex(value), V.shape[1], ine.signature, ine.zero == 0, ine)


def _eigen_cluster_basis(H: np.ndarray, lam: complex):
    value, V = _multiplet_basis(H, lam)
    if V.shape[1] == 0:
        raise NotAnEigenvalueError(f"{lam} is not an eigenvalue")
    return value, V


def krein_signature(H, lam: complex) -> KreinReport:
    """Signature of ``<G v, w>``, ``G = iJ``, on the generalised eigenspace of ``H`` at ``lam``."""
    H = np.asarray(H)
    value, V = _eigen_cluster_basis(H, lam)
    return _krein_on(V, value)


def krein_signature_symplectic(S, lam: complex, tol: float = 1e-10) -> KreinReport:
    """Krein signature for an eigenvalue of a real symplectic matrix ``S``."""
    S = np.asarray(S)
    J = complex_structure(S.shape[0])
    if np.linalg.norm(S.T @ J @ S - J) > tol * max(1.0, np.linalg.norm(S) ** 2):
        raise NotSymplecticError("S^T J S != J")
    value, V = _eigen_cluster_basis(S, lam)
    return _krein_on(V, value)


def krein_signature_pair(S, lam: complex) -> KreinReport:
    """Signature on ``E_lam + E_(1/conj(lam))`` for a symplectic ``S``."""
    S = np.asarray(S)
    v1, V1 = _eigen_cluster_basis(S, lam)
    v2, V2 = _eigen_cluster_basis(S, 1.0 / np.conj(lam))
    if abs(v1 - v2) <= cluster_radius(S):
        V = V1
    else:
        V = np.linalg.qr(np.hstack([V1, V2]))[0]
    return _krein_on(V, v1)
