"""Scenarios, verification suites and reports.

A scenario names an operator pair, a grid, an epsilon schedule, test points,
rational test functions and the suites to run. :func:`run_scenario` computes
the shared boundary data once, then runs the remaining suites (in parallel
when more than one thread is allowed) and collects their residuals into a
:class:`Report`.

Scenario files are JSON; complex numbers are ``[re, im]`` pairs and matrices
are nested arrays whose entries are numbers or ``[re, im]`` pairs.
"""

import concurrent.futures as futures
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import (
    TYPE_CHECKING,
    Any,
    Callable,
    Dict,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
from loguru import logger

from ssf_lab.cache import CacheManager, boundary_cache_key
from ssf_lab.errors import (
    DimensionError,
    NotHermitianError,
    RuleNotAdmissibleError,
    ScenarioParseError,
    ScenarioValidationError,
    SsfLabError,
)
from ssf_lab.genint import (
    GridFunction,
    SequenceRule,
    WeakL1Profile,
    a_integral,
    aleksandrov_reconstruct,
    divergence_study,
    integrate,
    transform_profile,
    weak_l1_profile,
)
from ssf_lab.linop import (
    MAX_DIM,
    AccumulativePair,
    HermitianMatrix,
    eig_general,
    eig_hermitian,
)
from ssf_lab.pertdet import (
    BoundaryData,
    EpsilonSchedule,
    asymptotic_check,
    boundary_relation,
    boundary_values,
    default_grid,
    finite_rank_sweep,
    limit_representation_check,
    log_det_path,
    pert_det,
    pert_det_adjoint,
    xi_bounds,
    zeta_norm,
)
from ssf_lab.representation import (
    blaschke_condition,
    cauchy_exp_rep,
    fit_lhp_representation,
    outer_factor,
    outer_phase,
    reflection_check,
    verify_inner_purity,
)
from ssf_lab.traceform import (
    RationalFunction,
    Term,
    krein_baseline,
    trace_adjoint_formula,
    trace_lhs,
    trace_rhs_xi,
    trace_rhs_zeta,
)

if TYPE_CHECKING:
    from ssf_lab.config import LabConfig

__all__ = [
    "SUITES",
    "REPORT_SCHEMA",
    "PairSpec",
    "GridSpec",
    "Scenario",
    "Residual",
    "SuiteResult",
    "Report",
    "load_scenario",
    "scenario_from_dict",
    "run_scenario",
    "random_pair",
    "default_test_points",
    "default_rational_functions",
]

SUITES = (
    "boundary",
    "rep_uhp",
    "rep_lhp",
    "weakl1",
    "aintegral",
    "trace",
    "adjoint",
    "krein",
    "divergence",
)
REPORT_SCHEMA = "ssf-lab/report/1"
PAIR_KINDS = ("rank_one", "diagonal_series", "random", "explicit", "explicit_self_adjoint")

# Suites that read the shared boundary data.
_NEEDS_BOUNDARY = {"boundary", "rep_uhp", "rep_lhp", "weakl1", "aintegral", "trace"}
# Minimum distance between a test point and spec(H), its mirror or spec(H0).
_POINT_CLEARANCE = 0.05
# Denominator floor for relative residuals.
_REL_FLOOR = 1e-2
# Allowed overshoot of |xi| above rank/2, as in xi_bounds.
_XI_BOUND_SLACK = 1e-6


# ---------------------------------------------------------------------------
# Scenario types
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class PairSpec:
    """How to build the operator pair.

    :param kind: one of ``rank_one``, ``diagonal_series``, ``random``,
        ``explicit`` or ``explicit_self_adjoint``
    """

    kind: str
    alpha: float = 1.0
    n: int = 10
    rule: SequenceRule = field(default_factory=SequenceRule)
    dim: int = 4
    seed: int = 0
    h0: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "rank_one":
            return {"kind": self.kind, "alpha": self.alpha}
        if self.kind == "diagonal_series":
            rule = {"kind": self.rule.kind, "param": self.rule.param}
            if self.rule.values:
                rule["values"] = list(self.rule.values)
            return {"kind": self.kind, "n": self.n, "rule": rule}
        if self.kind == "random":
            return {"kind": self.kind, "dim": self.dim, "seed": self.seed}
        return {"kind": self.kind, "h0": _matrix_to_json(self.h0), "v": _matrix_to_json(self.v)}


@dataclass(frozen=True)
class GridSpec:
    """Default grid parameters: symmetric range, base points and refinement levels."""

    half_width: float = 50.0
    points: int = 4000
    refine_levels: int = 8
    gap_rel: float = 1e-3


@dataclass(eq=False)
class Scenario:
    """A validated scenario.

    ``test_points_upper``/``test_points_lower`` and ``rational_functions``
    are None when the file leaves them out; defaults are chosen per pair
    at run time.
    """

    name: str
    pair_spec: PairSpec
    grid_spec: GridSpec = field(default_factory=GridSpec)
    epsilon: EpsilonSchedule = field(default_factory=EpsilonSchedule.geometric)
    test_points_upper: Optional[List[complex]] = None
    test_points_lower: Optional[List[complex]] = None
    rational_functions: Optional[List[RationalFunction]] = None
    suites: Tuple[str, ...] = SUITES
    sweep: int = 0
    divergence_n: Tuple[int, ...] = (10, 100, 1000)
    tol_psd: float = 1e-12

    def build_pair(self) -> AccumulativePair:
        """The accumulative pair; for ``explicit_self_adjoint`` V is replaced by |V|."""
        spec = self.pair_spec
        if spec.kind == "rank_one":
            return AccumulativePair.from_arrays([[0.0]], [[spec.alpha]])
        if spec.kind == "diagonal_series":
            alphas = spec.rule.alphas(min(spec.n, MAX_DIM))
            return AccumulativePair.from_arrays(np.zeros((alphas.size,) * 2), np.diag(alphas))
        if spec.kind == "random":
            return random_pair(spec.dim, spec.seed)
        if spec.kind == "explicit":
            return AccumulativePair.from_arrays(
                spec.h0, spec.v, tol_psd=self.tol_psd, check_tol=1e-10
            )
        h0, v = self.self_adjoint_pair()
        values, vectors = eig_hermitian(v)
        return AccumulativePair.from_arrays(
            h0.entries, (vectors * np.abs(values)) @ vectors.conj().T
        )

    def self_adjoint_pair(self) -> Tuple[HermitianMatrix, HermitianMatrix]:
        """(H0, V) for the self-adjoint baseline ``H = H0 + V``."""
        if self.pair_spec.kind == "explicit_self_adjoint":
            return (
                HermitianMatrix.from_array(self.pair_spec.h0, check_tol=1e-10),
                HermitianMatrix.from_array(self.pair_spec.v, check_tol=1e-10),
            )
        pair = self.build_pair()
        return pair.h0, pair.v.underlying

    def to_dict(self) -> Dict[str, Any]:
        """JSON form accepted by :func:`scenario_from_dict`."""
        out: Dict[str, Any] = {
            "name": self.name,
            "pair": self.pair_spec.to_dict(),
            "grid": {
                "half_width": self.grid_spec.half_width,
                "points": self.grid_spec.points,
                "refine_levels": self.grid_spec.refine_levels,
                "gap_rel": self.grid_spec.gap_rel,
            },
            "epsilon": {
                "values": list(self.epsilon.values),
                "order": self.epsilon.extrapolation_order,
            },
            "suites": list(self.suites),
            "sweep": self.sweep,
            "divergence": {"n_values": list(self.divergence_n)},
        }
        if self.test_points_upper is not None or self.test_points_lower is not None:
            out["test_points"] = {
                "upper": [[z.real, z.imag] for z in self.test_points_upper or []],
                "lower": [[z.real, z.imag] for z in self.test_points_lower or []],
            }
        if self.rational_functions is not None:
            out["rational_functions"] = [
                [
                    {"pole": [t.pole.real, t.pole.imag], "order": t.order,
                     "coeff": [t.coeff.real, t.coeff.imag]}
                    for t in f.terms
                ]
                for f in self.rational_functions
            ]
        return out


class Residual(NamedTuple):
    name: str
    value: float
    tolerance: float
    passed: bool


def _residual(name: str, value: float, tolerance: float) -> Residual:
    value = float(value)
    return Residual(name, value, float(tolerance), bool(np.isfinite(value) and value <= tolerance))


@dataclass
class SuiteResult:
    """Outcome of one suite: residuals and, on failure, the error message."""

    name: str
    residuals: List[Residual] = field(default_factory=list)
    error: Optional[str] = None
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.error is None and all(r.passed for r in self.residuals)

    def add(self, name: str, value: float, tolerance: float) -> Residual:
        residual = _residual(name, value, tolerance)
        self.residuals.append(residual)
        return residual

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "error": self.error,
            "residuals": [r._asdict() for r in self.residuals],
            "details": self.details,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SuiteResult":
        return cls(
            name=data["name"],
            residuals=[Residual(**r) for r in data.get("residuals", [])],
            error=data.get("error"),
            details=dict(data.get("details", {})),
        )


@dataclass
class Report:
    """All suite results of one run plus the data needed to draw artifacts."""

    scenario: str
    suites: List[SuiteResult]
    boundary: Optional[BoundaryData] = None
    profiles: Dict[str, WeakL1Profile] = field(default_factory=dict)
    truncations: Dict[str, List[Tuple[float, float, complex]]] = field(default_factory=dict)
    artifacts: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)

    def suite(self, name: str) -> SuiteResult:
        for s in self.suites:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> Dict[str, Any]:
        """Versioned summary; contains no timings so equal runs give equal JSON."""
        return {
            "schema": REPORT_SCHEMA,
            "scenario": self.scenario,
            "passed": self.passed,
            "suites": [s.to_dict() for s in self.suites],
            "boundary": None if self.boundary is None else self.boundary.to_dict(),
            "profiles": {
                name: {
                    "t": p.t_values.tolist(),
                    "t_times_measure": p.t_times_measure.tolist(),
                    "weight": p.weight,
                }
                for name, p in self.profiles.items()
            },
            "truncations": {
                name: [[b, big, [complex(v).real, complex(v).imag]] for b, big, v in rows]
                for name, rows in self.truncations.items()
            },
            "artifacts": list(self.artifacts),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Report":
        schema = data.get("schema")
        if schema != REPORT_SCHEMA:
            raise ScenarioParseError(f"unsupported report schema {schema!r}", field="schema")
        boundary = data.get("boundary")
        return cls(
            scenario=data["scenario"],
            suites=[SuiteResult.from_dict(s) for s in data.get("suites", [])],
            boundary=None if boundary is None else BoundaryData.from_dict(boundary),
            profiles={
                name: WeakL1Profile(
                    t_values=np.asarray(p["t"], float),
                    t_times_measure=np.asarray(p["t_times_measure"], float),
                    weight=p.get("weight", "lebesgue"),
                )
                for name, p in data.get("profiles", {}).items()
            },
            truncations={
                name: [(float(b), float(big), complex(v[0], v[1])) for b, big, v in rows]
                for name, rows in data.get("truncations", {}).items()
            },
            artifacts=list(data.get("artifacts", [])),
        )


# ---------------------------------------------------------------------------
# Defaults
# ---------------------------------------------------------------------------


def random_pair(dim: int, seed: int) -> AccumulativePair:
    """Gaussian Hermitian H0 with ||H0|| = 1 and V = W W* with tr V = 1.

    The rank of W is drawn uniformly from 1..dim, so V is often rank deficient.
    """
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h0 = 0.5 * (a + a.conj().T)
    h0 /= np.linalg.norm(h0, 2)
    rank = int(rng.integers(1, dim + 1))
    w = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    v = w @ w.conj().T
    v /= np.trace(v).real
    return AccumulativePair.from_arrays(h0, v)


def default_test_points() -> Tuple[List[complex], List[complex]]:
    """12 points per half-plane: angles pi/6..2pi/3 on radii 1, 3 and 10."""
    upper = [
        complex(r * np.cos(a), r * np.sin(a))
        for r in (1.0, 3.0, 10.0)
        for a in (np.pi / 6, np.pi / 3, np.pi / 2, 2 * np.pi / 3)
    ]
    return upper, [z.conjugate() for z in upper]


def default_rational_functions(pair: AccumulativePair) -> List[RationalFunction]:
    """Six test functions: two with upper poles, two with lower poles, two mixed.

    Lower poles sit below every eigenvalue of H (|Im| > ||V||).
    """
    depth = pair.norm_v + 1.0
    return [
        RationalFunction.simple(1j),
        RationalFunction.simple(1.0 + 2j, order=2),
        RationalFunction.simple(-1j * depth),
        RationalFunction.simple(-1.0 - 1j * (depth + 1.0), order=2),
        RationalFunction.simple(1j) + RationalFunction.simple(-1j * depth),
        RationalFunction.simple(2j, order=2) + RationalFunction.simple(1.0 - 1j * depth, coeff=-0.5),
    ]


def _clear_points(points: Sequence[complex], avoid: np.ndarray, label: str) -> List[complex]:
    kept = []
    for z in points:
        if avoid.size and np.min(np.abs(avoid - z)) < _POINT_CLEARANCE:
            logger.warning(f"Dropping {label} test point {z}: too close to the spectrum")
            continue
        kept.append(complex(z))
    return kept


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _matrix_to_json(m: Optional[np.ndarray]):
    if m is None:
        return None
    m = np.asarray(m, dtype=complex)
    return [[[x.real, x.imag] for x in row] for row in m]


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioParseError(f"expected a number, got {value!r}", field=name)
    return float(value)


def _integer(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioParseError(f"expected an integer, got {value!r}", field=name)
    return value


def _complex(value: Any, name: str) -> complex:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(_number(value[0], name), _number(value[1], name))
    return complex(_number(value, name), 0.0)


def _matrix(value: Any, name: str) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ScenarioParseError("expected a nested array", field=name)
    try:
        rows = [[_complex(x, f"{name}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(value)]
        return np.array(rows, dtype=complex)
    except ValueError as e:
        raise ScenarioParseError(f"ragged matrix: {e}", field=name) from e


def _section(data: Dict[str, Any], key: str) -> Dict[str, Any]:
    value = data.get(key, {})
    if not isinstance(value, dict):
        raise ScenarioParseError("expected an object", field=key)
    return value


def _parse_rule(value: Any) -> SequenceRule:
    if value is None:
        return SequenceRule()
    if not isinstance(value, dict):
        raise ScenarioParseError("expected an object", field="pair.rule")
    kind = value.get("kind", "log_power")
    if kind not in ("log_power", "power", "explicit"):
        raise ScenarioParseError(f"unknown rule kind {kind!r}", field="pair.rule.kind")
    values = tuple(
        _number(x, f"pair.rule.values[{i}]") for i, x in enumerate(value.get("values", []))
    )
    param = _number(value.get("param", 2.0 if kind == "log_power" else 1.0), "pair.rule.param")
    return SequenceRule(kind=kind, param=param, values=values)


def _parse_pair(value: Any) -> PairSpec:
    if not isinstance(value, dict):
        raise ScenarioParseError("expected an object", field="pair")
    kind = value.get("kind")
    if kind not in PAIR_KINDS:
        raise ScenarioParseError(
            f"unknown kind {kind!r}; expected one of {', '.join(PAIR_KINDS)}", field="pair.kind"
        )
    if kind == "rank_one":
        return PairSpec(kind, alpha=_number(value.get("alpha", 1.0), "pair.alpha"))
    if kind == "diagonal_series":
        return PairSpec(
            kind, n=_integer(value.get("n", 10), "pair.n"), rule=_parse_rule(value.get("rule"))
        )
    if kind == "random":
        return PairSpec(
            kind,
            dim=_integer(value.get("dim", 4), "pair.dim"),
            seed=_integer(value.get("seed", 0), "pair.seed"),
        )
    for key in ("h0", "v"):
        if key not in value:
            raise ScenarioParseError("missing matrix", field=f"pair.{key}")
    return PairSpec(kind, h0=_matrix(value["h0"], "pair.h0"), v=_matrix(value["v"], "pair.v"))


def _parse_epsilon(value: Dict[str, Any], defaults: Dict[str, float]) -> EpsilonSchedule:
    order = _integer(value.get("order", int(defaults["order"])), "epsilon.order")
    try:
        if "values" in value:
            values = tuple(
                _number(x, f"epsilon.values[{i}]") for i, x in enumerate(value["values"])
            )
            return EpsilonSchedule(values, order)
        return EpsilonSchedule.geometric(
            start=_number(value.get("start", defaults["start"]), "epsilon.start"),
            stop=_number(value.get("stop", defaults["stop"]), "epsilon.stop"),
            ratio=_number(value.get("ratio", defaults["ratio"]), "epsilon.ratio"),
            order=order,
        )
    except ValueError as e:
        raise ScenarioValidationError(f"epsilon: {e}") from e


def _parse_function(value: Any, index: int) -> RationalFunction:
    name = f"rational_functions[{index}]"
    if not isinstance(value, list) or not value:
        raise ScenarioParseError("expected a nonempty list of terms", field=name)
    terms = []
    for j, term in enumerate(value):
        if not isinstance(term, dict) or "pole" not in term:
            raise ScenarioParseError("expected an object with a pole", field=f"{name}[{j}]")
        terms.append(
            Term(
                _complex(term["pole"], f"{name}[{j}].pole"),
                _integer(term.get("order", 1), f"{name}[{j}].order"),
                _complex(term.get("coeff", 1.0), f"{name}[{j}].coeff"),
            )
        )
    try:
        return RationalFunction(tuple(terms))
    except ValueError as e:
        raise ScenarioValidationError(f"{name}: {e}") from e


def scenario_from_dict(data: Any, config: Optional["LabConfig"] = None) -> Scenario:
    """Build and validate a scenario from parsed JSON.

    :param data: the decoded document
    :param config: source of epsilon and tolerance defaults, built-in when None
    :raises ScenarioParseError: on a malformed field
    :raises ScenarioValidationError: on a violated invariant
    """
    if not isinstance(data, dict):
        raise ScenarioParseError("top level must be an object")
    eps_defaults = {"start": 1e-2, "stop": 1e-5, "ratio": 10.0**-0.5, "order": 2}
    tolerances = {"tol_psd": 1e-12, "gap_rel": 1e-3}
    if config is not None:
        eps_defaults = config.epsilon
        tolerances = config.tolerances

    name = data.get("name", "scenario")
    if not isinstance(name, str) or not name.strip():
        raise ScenarioParseError("expected a nonempty string", field="name")
    pair_spec = _parse_pair(data.get("pair"))

    grid = _section(data, "grid")
    grid_spec = GridSpec(
        half_width=_number(grid.get("half_width", 50.0), "grid.half_width"),
        points=_integer(grid.get("points", 4000), "grid.points"),
        refine_levels=_integer(grid.get("refine_levels", 8), "grid.refine_levels"),
        gap_rel=_number(grid.get("gap_rel", tolerances["gap_rel"]), "grid.gap_rel"),
    )
    epsilon = _parse_epsilon(_section(data, "epsilon"), eps_defaults)

    upper = lower = None
    if "test_points" in data:
        points = _section(data, "test_points")
        upper = [_complex(z, f"test_points.upper[{i}]") for i, z in enumerate(points.get("upper", []))]
        lower = [_complex(z, f"test_points.lower[{i}]") for i, z in enumerate(points.get("lower", []))]

    functions = None
    if "rational_functions" in data:
        raw = data["rational_functions"]
        if not isinstance(raw, list):
            raise ScenarioParseError("expected a list", field="rational_functions")
        functions = [_parse_function(f, i) for i, f in enumerate(raw)]

    suites = data.get("suites", list(SUITES))
    if not isinstance(suites, list) or not all(isinstance(s, str) for s in suites):
        raise ScenarioParseError("expected a list of suite names", field="suites")
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        raise ScenarioParseError(f"unknown suites {unknown}", field="suites")

    divergence = _section(data, "divergence")
    divergence_n = tuple(
        _integer(n, f"divergence.n_values[{i}]")
        for i, n in enumerate(divergence.get("n_values", [10, 100, 1000]))
    )

    scenario = Scenario(
        name=name,
        pair_spec=pair_spec,
        grid_spec=grid_spec,
        epsilon=epsilon,
        test_points_upper=upper,
        test_points_lower=lower,
        rational_functions=functions,
        # Requested order is kept; duplicates are dropped.
        suites=tuple(dict.fromkeys(suites)),
        sweep=_integer(data.get("sweep", 0), "sweep"),
        divergence_n=divergence_n,
        tol_psd=float(tolerances["tol_psd"]),
    )
    _validate(scenario)
    return scenario


def _validate(s: Scenario):
    spec = s.pair_spec
    g = s.grid_spec
    if g.half_width <= 0 or g.points < 16 or g.refine_levels < 0 or not 0 < g.gap_rel < 1:
        raise ScenarioValidationError(
            "grid needs half_width > 0, points >= 16, refine_levels >= 0 and 0 < gap_rel < 1"
        )
    if any(z.imag <= 0 for z in s.test_points_upper or []):
        raise ScenarioValidationError("upper test points must have Im z > 0")
    if any(z.imag >= 0 for z in s.test_points_lower or []):
        raise ScenarioValidationError("lower test points must have Im z < 0")
    if spec.kind == "rank_one" and not spec.alpha > 0:
        raise ScenarioValidationError(f"rank_one needs alpha > 0, got {spec.alpha}")
    if spec.kind == "diagonal_series":
        if spec.n < 1:
            raise ScenarioValidationError(f"diagonal_series needs n >= 1, got {spec.n}")
        try:
            n_max = max((spec.n, *s.divergence_n)) if "divergence" in s.suites else spec.n
            spec.rule.check_admissible(n_max)
        except RuleNotAdmissibleError as e:
            raise ScenarioValidationError(f"diagonal_series rule: {e}") from e
        if spec.n > MAX_DIM:
            logger.warning(
                f"diagonal_series n = {spec.n} exceeds {MAX_DIM}; matrix suites use the "
                f"first {MAX_DIM} terms, the divergence study uses all of them"
            )
    if spec.kind == "random" and not 1 <= spec.dim <= MAX_DIM:
        raise ScenarioValidationError(f"random dim must be between 1 and {MAX_DIM}")
    if spec.kind == "explicit_self_adjoint":
        extra = [x for x in s.suites if x != "krein"]
        if extra:
            raise ScenarioValidationError(
                f"explicit_self_adjoint pairs only support the krein suite, not {extra}"
            )
    if s.divergence_n and (
        s.divergence_n[0] < 1 or any(b <= a for a, b in zip(s.divergence_n, s.divergence_n[1:]))
    ):
        raise ScenarioValidationError("divergence.n_values must be positive and increasing")
    try:
        pair = s.build_pair()
        if spec.kind == "explicit_self_adjoint":
            s.self_adjoint_pair()
    except (NotHermitianError, DimensionError) as e:
        raise ScenarioValidationError(f"pair: {e}") from e
    except ValueError as e:
        raise ScenarioValidationError(f"pair: {e}") from e
    if not 0 <= s.sweep <= pair.dim:
        raise ScenarioValidationError(f"sweep must be between 0 and {pair.dim}")


def load_scenario(path: Union[str, Path], config: Optional["LabConfig"] = None) -> Scenario:
    """Read and validate a JSON scenario file.

    :param path: scenario file
    :param config: source of epsilon and tolerance defaults
    :raises ScenarioParseError: with line (syntax) or field (content) information
    :raises ScenarioValidationError: naming the violated invariant
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioParseError(f"cannot read {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(e.msg, line=e.lineno) from e
    scenario = scenario_from_dict(data, config=config)
    logger.debug(f"Loaded scenario '{scenario.name}' from {path}")
    return scenario


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class _RunContext:
    scenario: Scenario
    pair: AccumulativePair
    upper: List[complex]
    lower: List[complex]
    functions: List[RationalFunction]
    threads: int
    data: Optional[BoundaryData] = None
    profiles: Dict[str, WeakL1Profile] = field(default_factory=dict)
    truncations: Dict[str, List[Tuple[float, float, complex]]] = field(default_factory=dict)


def _rel(a: complex, b: complex) -> float:
    return float(abs(a - b) / max(abs(b), _REL_FLOOR))


def _suite_boundary(ctx: _RunContext, result: SuiteResult):
    pair, data = ctx.pair, ctx.data
    value, estimate = zeta_norm(data)
    expected = np.pi * pair.trace_v
    result.add("norm_identity", abs(value - expected) / max(expected, _REL_FLOOR), 1e-4)
    result.details["zeta_integral"] = value
    result.add("zeta_nonnegative", max(0.0, -float(np.min(data.zeta))), 1e-6)

    scale = max(pair.norm_h0 + pair.norm_v, 1.0)
    worst = 0.0
    for y, measured, predicted in asymptotic_check(pair, [100.0 * scale, 1000.0 * scale]):
        worst = max(worst, abs(measured - predicted) * y / max(pair.trace_v, _REL_FLOOR))
    result.add("asymptotics", worst, 0.05)

    sample_grid = data.grid[:: max(data.grid.size // 400, 1)]
    result.add("boundary_relation", boundary_relation(pair, sample_grid, 1e-5), 1e-4)
    _, peak = xi_bounds(data, pair.v.rank)
    result.add("xi_bound", max(0.0, peak - pair.v.rank / 2), 1e-6)

    spec = ctx.scenario.pair_spec
    if spec.kind in ("rank_one", "diagonal_series") and np.allclose(pair.h0.entries, 0):
        alphas = pair.v.eigenvalues
        away = np.abs(data.grid) >= 0.1
        lam = data.grid[away]
        zeta = 0.5 * np.sum(np.log1p((alphas[:, None] / lam[None, :]) ** 2), axis=0)
        xi = np.sum(np.arctan(alphas[:, None] / lam[None, :]), axis=0) / np.pi
        result.add("zeta_closed_form", float(np.max(np.abs(data.zeta[away] - zeta))), 1e-6)
        result.add("xi_closed_form", float(np.max(np.abs(data.xi[away] - xi))), 1e-6)

    if ctx.scenario.sweep:
        sweep = finite_rank_sweep(
            pair, ctx.scenario.sweep, grid=data.grid, schedule=ctx.scenario.epsilon,
            threads=ctx.threads,
        )
        excess = max(peak - k / 2 for k, peak in enumerate(sweep.xi_max, start=1))
        result.add("sweep_xi_bounds", max(0.0, excess), 1e-6)
        result.add("sweep_product_rule", sweep.product_residual, 1e-9)


def _suite_rep_uhp(ctx: _RunContext, result: SuiteResult):
    pair, data = ctx.pair, ctx.data
    gamma = outer_phase(data)
    worst = worst_outer = worst_limit = 0.0
    for k, z in enumerate(ctx.upper):
        direct = pert_det(pair, z).value
        worst = max(worst, _rel(cauchy_exp_rep(data, z), direct))
        worst_outer = max(worst_outer, _rel(np.exp(-1j * gamma) * outer_factor(data, z), direct))
        if k < 3:
            _, _, residual = limit_representation_check(pair, data, z)
            worst_limit = max(worst_limit, residual)
    result.add("cauchy_representation", worst, 1e-4)
    result.add("outer_factor", worst_outer, 1e-4)
    result.add("limit_representation", worst_limit, 1e-3)
    result.details["gamma"] = gamma


def _suite_rep_lhp(ctx: _RunContext, result: SuiteResult):
    pair, data = ctx.pair, ctx.data
    rep = fit_lhp_representation(pair, data, ctx.lower, tol=1e-3)
    result.add("lower_representation", max(rep.residuals), 1e-3)
    result.details["gamma"] = rep.gamma
    result.details["blaschke_zeros"] = len(rep.blaschke)
    result.add("reflection", reflection_check(pair, data, ctx.lower), 1e-4)
    sample_grid = data.grid[:: max(data.grid.size // 400, 1)]
    result.add("inner_purity", verify_inner_purity(pair, sample_grid), 1e-8)

    rng = np.random.default_rng(12345)
    samples = rng.uniform(-10, 10, 200) - 1j * rng.uniform(0.05, 10, 200)
    avoid = eig_general(pair).eigenvalues
    peak = 0.0
    for z in list(samples) + list(ctx.lower):
        if avoid.size and np.min(np.abs(avoid - z)) < 1e-6:
            continue
        peak = max(peak, abs(pert_det_adjoint(pair, z).value))
    result.add("adjoint_contraction", max(0.0, peak - 1.0), 1e-10)
    vectorized, direct = blaschke_condition(rep.blaschke)
    result.add("blaschke_sum", abs(vectorized - direct), 1e-12)


def _bump_functions() -> List[GridFunction]:
    grid = np.linspace(-20.0, 20.0, 4001)
    return [
        GridFunction(grid, np.exp(-(((grid - c) / w) ** 2)))
        for c, w in ((0.0, 1.0), (2.0, 0.5), (-3.0, 1.5))
    ]


def _suite_weakl1(ctx: _RunContext, result: SuiteResult):
    pair, data = ctx.pair, ctx.data
    xi_profile = weak_l1_profile(data.xi_function())
    zeta_profile = weak_l1_profile(data.zeta_function())
    ctx.profiles["xi"] = xi_profile
    ctx.profiles["zeta"] = zeta_profile
    expected = 2.0 * pair.trace_v / np.pi
    result.add("xi_small_t", abs(xi_profile.small_t - expected) / max(expected, _REL_FLOOR), 0.02)
    # Level sets above rank/2 from the samples alone, excluded zones bridged linearly.
    xi = data.xi_function()
    bridged = GridFunction(xi.grid, xi.values, left_tail=xi.left_tail, right_tail=xi.right_tail)
    levels = pair.v.rank / 2 + _XI_BOUND_SLACK + np.logspace(-6, 0, 13)
    above = weak_l1_profile(bridged, t_values=levels)
    result.add("xi_above_bound", float(np.max(above.t_times_measure)), 1e-12)
    peak = zeta_profile.peak
    ends = max(zeta_profile.small_t, zeta_profile.large_t) / peak if peak > 0 else 0.0
    result.add("zeta_vanishes_at_ends", ends, 0.05)
    worst = 0.0
    for k, f in enumerate(_bump_functions()):
        profile = transform_profile(f)
        worst = max(worst, 0.95 - profile.ratio)
        if k == 0:
            ctx.profiles["transform"] = profile.profile
    result.add("transform_lower_bound", max(0.0, worst), 0.0)


def _log_det_at(pair: AccumulativePair, z: complex) -> complex:
    anchor = 1j * max(10.0 * (pair.norm_h0 + pair.norm_v), 1.0)
    return log_det_path(pair, [anchor, z])[-1].log_value


def _suite_aintegral(ctx: _RunContext, result: SuiteResult):
    pair, data = ctx.pair, ctx.data
    zeta = data.zeta_function()
    lebesgue, estimate = integrate(zeta)
    generalized = a_integral(zeta)
    ctx.truncations["zeta"] = generalized.truncations
    result.add(
        "a_equals_lebesgue",
        abs(generalized.value - lebesgue) / max(abs(lebesgue), 1.0),
        1e-5 + estimate + generalized.estimate,
    )

    worst = 0.0
    for k, f in enumerate(ctx.functions):
        uppers = all(t.pole.imag > 0 for t in f.terms)
        lowers = all(t.pole.imag < 0 for t in f.terms)
        if not (uppers or lowers):
            continue
        fprime = f.derivative()
        a_value = a_integral(data.xi_function().multiply(fprime))
        ctx.truncations.setdefault(f"xi_f{k}", a_value.truncations)
        moment, _ = integrate(zeta.multiply(fprime))
        sign = 1.0 if uppers else -1.0
        worst = max(worst, _rel(a_value.value, sign * complex(moment) / (np.pi * 1j)))
    result.add("xi_zeta_exchange", worst, 1e-3)

    worst_real = worst_imag = 0.0
    anchor = _log_det_at(pair, 1j)
    for z in ctx.upper[:3]:
        direct = _log_det_at(pair, z)
        from_real = aleksandrov_reconstruct("real", zeta, anchor, z)
        from_imag = aleksandrov_reconstruct("imag", data.xi_function().scaled(np.pi), anchor, z)
        worst_real = max(worst_real, _rel(from_real, direct))
        worst_imag = max(worst_imag, _rel(from_imag, direct))
    result.add("reconstruct_from_real", worst_real, 1e-3)
    result.add("reconstruct_from_imag", worst_imag, 1e-3)


def _suite_trace(ctx: _RunContext, result: SuiteResult):
    pair, data = ctx.pair, ctx.data
    worst_zeta = worst_xi = worst_gap = 0.0
    for f in ctx.functions:
        lhs = trace_lhs(pair, f)
        worst_zeta = max(worst_zeta, _rel(trace_rhs_zeta(pair, data, f), lhs))
        report = trace_rhs_xi(pair, data, f, lhs=lhs)
        worst_xi = max(worst_xi, report.residual / max(abs(lhs), _REL_FLOOR))
        worst_gap = max(worst_gap, report.duality_gap / max(abs(lhs), _REL_FLOOR))
    result.add("zeta_form", worst_zeta, 1e-3)
    result.add("xi_form", worst_xi, 1e-3)
    result.add("duality", worst_gap, 1e-3)


def _adjoint_functions(pair: AccumulativePair, functions: Sequence[RationalFunction]):
    """Functions whose poles clear both spec(H) and spec(H*)."""
    spectrum = eig_general(pair).eigenvalues
    both = np.concatenate([spectrum, spectrum.conj()])
    kept = []
    for k, f in enumerate(functions):
        gap = min(float(np.min(np.abs(both - t.pole))) for t in f.terms)
        if gap < _POINT_CLEARANCE:
            logger.info(
                f"Adjoint suite skips function {k}: a pole is {gap:.1e} from spec(H) or spec(H*)"
            )
            continue
        kept.append(f)
    if not kept:
        reach = 1j * (pair.norm_h0 + pair.norm_v + 2.0)
        kept.append(RationalFunction.simple(reach) + RationalFunction.simple(-reach, order=2))
    return kept


def _suite_adjoint(ctx: _RunContext, result: SuiteResult):
    worst = 0.0
    functions = _adjoint_functions(ctx.pair, ctx.functions)
    result.details["functions_checked"] = len(functions)
    for f in functions:
        lhs, _, residual = trace_adjoint_formula(ctx.pair, f)
        worst = max(worst, residual / max(abs(lhs), 1.0))
    result.add("adjoint_trace", worst, 1e-9)


def _suite_krein(ctx: _RunContext, result: SuiteResult):
    h0, v = ctx.scenario.self_adjoint_pair()
    g = ctx.scenario.grid_spec
    worst = 0.0
    for f in ctx.functions:
        lhs, _, residual = krein_baseline(
            h0, v, f, schedule=ctx.scenario.epsilon, gap_rel=g.gap_rel
        )
        worst = max(worst, residual / max(abs(lhs), _REL_FLOOR))
    result.add("krein_trace", worst, 1e-3)


def _suite_divergence(ctx: _RunContext, result: SuiteResult):
    spec = ctx.scenario.pair_spec
    rule = spec.rule if spec.kind == "diagonal_series" else SequenceRule()
    study = divergence_study(rule, ctx.scenario.divergence_n)
    result.add("closed_form_vs_quadrature", study.max_error, 1e-6)
    result.add("strictly_increasing", 0.0 if study.increasing else 1.0, 0.0)
    ratios = study.growth_ratios
    result.add("unbounded_growth", max(0.0, 0.5 - min(ratios)) if ratios else 1.0, 0.0)
    result.details["values"] = [row.closed_form for row in study.rows]
    result.details["growth_ratios"] = ratios


_SUITE_RUNNERS: Dict[str, Callable[[_RunContext, SuiteResult], None]] = {
    "boundary": _suite_boundary,
    "rep_uhp": _suite_rep_uhp,
    "rep_lhp": _suite_rep_lhp,
    "weakl1": _suite_weakl1,
    "aintegral": _suite_aintegral,
    "trace": _suite_trace,
    "adjoint": _suite_adjoint,
    "krein": _suite_krein,
    "divergence": _suite_divergence,
}


def _run_suite(name: str, ctx: _RunContext, boundary_error: Optional[str]) -> SuiteResult:
    result = SuiteResult(name=name)
    if name in _NEEDS_BOUNDARY and ctx.data is None:
        result.error = f"boundary data unavailable: {boundary_error}"
        return result
    start = time.perf_counter()
    try:
        _SUITE_RUNNERS[name](ctx, result)
    except (SsfLabError, ValueError, ArithmeticError) as e:
        result.error = f"{type(e).__name__}: {e}"
        logger.error(f"Suite {name} failed: {result.error}")
    status = "passed" if result.passed else "FAILED"
    logger.info(f"Suite {name} {status} in {time.perf_counter() - start:.2f}s")
    return result


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


def _boundary(
    scenario: Scenario, pair: AccumulativePair, threads: int, cache: Optional[CacheManager]
) -> BoundaryData:
    g = scenario.grid_spec
    grid, _ = default_grid(
        pair, half_width=g.half_width, points=g.points, refine_levels=g.refine_levels,
        gap_rel=g.gap_rel,
    )
    key = None
    if cache is not None:
        key = boundary_cache_key(
            scenario.name,
            pair.h0.entries,
            pair.v.entries,
            grid,
            scenario.epsilon.values,
            scenario.epsilon.extrapolation_order,
        )
        entry = cache.load(key)
        if entry is not None:
            logger.info(f"Using cached boundary data {key} ({entry.get('version')})")
            return BoundaryData.from_dict(entry["data"])
    data = boundary_values(
        pair, grid=grid, schedule=scenario.epsilon, gap_rel=g.gap_rel, threads=threads
    )
    if cache is not None:
        cache.save(key, data.to_dict(), metadata={"scenario": scenario.name, "dim": pair.dim})
    return data


def run_scenario(
    scenario: Scenario, threads: int = 1, cache: Optional[CacheManager] = None
) -> Report:
    """Run every requested suite and collect a report.

    Boundary data is computed first (or read from ``cache``); the remaining
    suites then run independently, so one failure does not stop the others.

    :param scenario: a validated scenario
    :param threads: worker threads for epsilon lines and suites
    :param cache: optional boundary-data cache
    """
    threads = max(int(threads), 1)
    pair = scenario.build_pair()
    spectrum = eig_general(pair).eigenvalues
    avoid = np.concatenate([spectrum, spectrum.conj(), eig_hermitian(pair.h0)[0]])
    default_upper, default_lower = default_test_points()
    upper = _clear_points(
        scenario.test_points_upper if scenario.test_points_upper is not None else default_upper,
        avoid, "upper",
    )
    lower = _clear_points(
        scenario.test_points_lower if scenario.test_points_lower is not None else default_lower,
        avoid, "lower",
    )
    functions = (
        scenario.rational_functions
        if scenario.rational_functions is not None
        else default_rational_functions(pair)
    )
    ctx = _RunContext(scenario, pair, upper, lower, functions, threads)
    logger.info(
        f"Running scenario '{scenario.name}' ({scenario.pair_spec.kind}, dim {pair.dim}) "
        f"suites: {', '.join(scenario.suites)}"
    )

    boundary_error = None
    if _NEEDS_BOUNDARY.intersection(scenario.suites):
        start = time.perf_counter()
        try:
            ctx.data = _boundary(scenario, pair, threads, cache)
            logger.info(f"Boundary data ready in {time.perf_counter() - start:.2f}s")
        except (SsfLabError, ValueError, ArithmeticError) as e:
            boundary_error = f"{type(e).__name__}: {e}"
            logger.error(f"Boundary computation failed: {boundary_error}")

    if threads > 1 and len(scenario.suites) > 1:
        with futures.ThreadPoolExecutor(max_workers=threads) as executor:
            jobs = [executor.submit(_run_suite, s, ctx, boundary_error) for s in scenario.suites]
            results = [job.result() for job in jobs]
    else:
        results = [_run_suite(s, ctx, boundary_error) for s in scenario.suites]

    return Report(
        scenario=scenario.name,
        suites=results,
        boundary=ctx.data,
        profiles=dict(ctx.profiles),
        truncations=dict(ctx.truncations),
    )
