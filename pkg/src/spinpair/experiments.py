"""Figure scenarios, distance sweeps and polarization-swap runs with CSV output."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from . import __version__
from . import analytic
from .analytic import EQUAL, SuperpositionCoeffs
from .dynamics import Trajectory, instantaneous_rate, propagate
from .engine import DriveParams, GeneratorOptions, GroundDensity, PairGeometry, assemble_generator
from .errors import ConfigError, RateUndefinedError

__all__ = [
    "SMALL_R",
    "SMALL_R_X",
    "InitialState",
    "Scenario",
    "SweepSpec",
    "ScenarioResult",
    "SweepResult",
    "PRESETS",
    "preset",
    "run_scenario",
    "run_sweep",
    "run_swap",
    "format_number",
    "scenario_generators",
    "ORIENTATIONS",
]

SMALL_R = "small-r"
SMALL_R_X = 1e-4
CSV_SCHEMA = "spinpair-csv v1"
ORIENTATIONS = ("parallel", "perpendicular")
OBSERVABLE_NAMES = ("coherence", "population", "one_atom")

AtomState = Union[str, SuperpositionCoeffs]
Separation = Union[str, float]


def format_number(v: float) -> str:
    return "" if v is None or not math.isfinite(v) else f"{v:.12g}"


def _state_text(s: AtomState) -> str:
    if isinstance(s, SuperpositionCoeffs):
        return f"a={s.a!r},b={s.b!r}"
    return s


@dataclass(frozen=True)
class InitialState:
    """Product state: each atom is 'up', 'down' or a real superposition."""

    atom1: AtomState = EQUAL
    atom2: AtomState = EQUAL

    def __post_init__(self):
        for s in (self.atom1, self.atom2):
            if not isinstance(s, SuperpositionCoeffs) and s not in ("up", "down"):
                raise ConfigError(f"atom state must be 'up', 'down' or coefficients, got {s!r}")

    def density(self) -> GroundDensity:
        return GroundDensity.product(self.atom1, self.atom2)

    @property
    def label(self) -> str:
        parts = []
        for s in (self.atom1, self.atom2):
            parts.append(f"a{s.a:.4g}b{s.b:.4g}" if isinstance(s, SuperpositionCoeffs) else s)
        return "_".join(parts)

    def describe(self) -> str:
        return f"atom1 {_state_text(self.atom1)}; atom2 {_state_text(self.atom2)}"


@dataclass(frozen=True)
class Scenario:
    """A set of curves: every initial state at every geometry.

    ``separations`` holds x = k_L R values or ``SMALL_R``; the small-R
    geometry is x = 1e-4 with the collective level shift always off.
    """

    id: str
    initial: tuple[InitialState, ...] = (InitialState(),)
    separations: tuple[Separation, ...] = (SMALL_R,)
    orientations: tuple[str, ...] = ("parallel",)
    t_max: float = 3.0
    samples: int = 61
    observables: tuple[str, ...] = ("coherence",)
    baseline: bool = True
    include_im_shift: bool = False
    include_stark: bool = False
    far_detuned: bool = False
    chi_over_delta: float = 0.1
    gamma_over_delta: float = 1e-3
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if not self.initial:
            raise ConfigError("at least one initial state is required", "a")
        for x in self.separations:
            if x != SMALL_R and not (isinstance(x, (int, float)) and x > 0 and math.isfinite(x)):
                raise ConfigError("x must be > 0; x = 0 is singular, use 'small-r' or the closed "
                                  "forms in spinpair.analytic", "x")
        if not self.separations:
            raise ConfigError("at least one separation is required", "x")
        for o in self.orientations:
            if o not in ORIENTATIONS:
                raise ConfigError(f"orientation must be one of {ORIENTATIONS}, got {o!r}", "orientation")
        for o in self.observables:
            if o not in OBSERVABLE_NAMES:
                raise ConfigError(f"observable must be one of {OBSERVABLE_NAMES}, got {o!r}", "observables")
        if not self.t_max > 0:
            raise ConfigError("t_max must be positive", "t_max")
        if self.samples < 2:
            raise ConfigError("samples must be at least 2", "samples")
        if not 0 < self.chi_over_delta < 1:
            raise ConfigError("chi_over_delta must lie in (0, 1)", "chi_over_delta")
        if not self.gamma_over_delta > 0:
            raise ConfigError("gamma_over_delta must be positive", "gamma_over_delta")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.samples)

    @property
    def params(self) -> DriveParams:
        return DriveParams.from_ratios(self.chi_over_delta, self.gamma_over_delta)

    def geometries(self) -> list[tuple[str, PairGeometry, bool]]:
        """(label, geometry, im_shift) for every curve geometry."""
        out = []
        for x in self.separations:
            if x == SMALL_R:
                out.append(("small_r", PairGeometry.parallel(SMALL_R_X), False))
                continue
            for o in self.orientations:
                g = PairGeometry.parallel(x) if o == "parallel" else PairGeometry.perpendicular(x)
                out.append((f"{o}_x{x:g}", g, self.include_im_shift))
        return out


@dataclass(frozen=True)
class SweepSpec:
    """Instantaneous rate at a fixed time t* over a range of separations."""

    x_min: float
    x_max: float
    samples: int = 100
    orientations: tuple[str, ...] = ORIENTATIONS
    t_star: float = 1.0
    observable: str = "coherence"
    include_im_shift: bool = False
    chi_over_delta: float = 0.1
    gamma_over_delta: float = 1e-3
    id: str = "sweep"

    def __post_init__(self):
        if not 0 < self.x_min < self.x_max:
            raise ConfigError("need 0 < x_min < x_max", "x_min")
        if self.samples < 2:
            raise ConfigError("samples must be at least 2", "samples")
        if not self.t_star > 0:
            raise ConfigError("t_star must be positive", "t_star")
        if self.observable not in ("coherence", "population"):
            raise ConfigError("sweep observable must be 'coherence' or 'population'", "observable")
        for o in self.orientations:
            if o not in ORIENTATIONS:
                raise ConfigError(f"orientation must be one of {ORIENTATIONS}, got {o!r}", "orientation")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.samples)

    @property
    def initial(self) -> InitialState:
        return InitialState() if self.observable == "coherence" else InitialState("down", "down")


def _fmt_meta(d: dict) -> list[str]:
    return [f"# {k} = {v}" for k, v in d.items()]


def _onoff(b: bool) -> str:
    return "on" if b else "off"


@dataclass
class ScenarioResult:
    scenario: Scenario
    times: np.ndarray
    curves: dict[str, Trajectory]
    baselines: dict[str, np.ndarray]
    metadata: dict[str, str]

    def columns(self) -> dict[str, np.ndarray]:
        cols = {"t_gamma_op": self.times}
        for label, traj in self.curves.items():
            for name in self.scenario.observables:
                v = traj.observables[name]
                if np.iscomplexobj(v):
                    cols[f"{label}_{name}_re"] = v.real
                    cols[f"{label}_{name}_im"] = v.imag
                else:
                    cols[f"{label}_{name}"] = v
        cols.update(self.baselines)
        return cols

    def to_csv(self) -> str:
        cols = self.columns()
        lines = [f"# {CSV_SCHEMA}"] + _fmt_meta(self.metadata)
        lines.append(",".join(cols))
        for row in zip(*cols.values()):
            lines.append(",".join(format_number(float(v)) for v in row))
        return "\n".join(lines) + "\n"


def _baselines(s: Scenario, times: np.ndarray) -> dict[str, np.ndarray]:
    out = {}
    if not s.baseline:
        return out
    multi = len(s.initial) > 1
    for init in s.initial:
        suffix = f"_{init.label}" if multi else ""
        same = init.atom1 == init.atom2
        if "coherence" in s.observables and same and isinstance(init.atom1, SuperpositionCoeffs):
            out[f"independent_coherence{suffix}"] = analytic.independent_coherence(times, init.atom1)
        if "population" in s.observables and same and init.atom1 == "down":
            out[f"independent_population{suffix}"] = analytic.independent_population(times)
    return out


def _metadata(s: Scenario) -> dict[str, str]:
    meta = {
        "package_version": __version__,
        "id": s.id,
        "units": "time in 1/gamma_op; rates in gamma_op",
        "chi_over_delta": repr(s.chi_over_delta),
        "gamma_over_delta": repr(s.gamma_over_delta),
        "include_im_shift": _onoff(s.include_im_shift),
        "include_stark": _onoff(s.include_stark),
        "far_detuned": _onoff(s.far_detuned),
    }
    if SMALL_R in s.separations:
        meta["small_r"] = f"x = {SMALL_R_X:g}, parallel, im shift off"
    for i, init in enumerate(s.initial):
        meta[f"initial_{i}"] = init.describe()
    for i, note in enumerate(s.notes):
        meta[f"note_{i}"] = note
    return meta


def scenario_generators(s: Scenario):
    """(label, Generator) for every geometry of the scenario."""
    p = s.params
    return [(label, assemble_generator(p, g, GeneratorOptions(im, s.include_stark, s.far_detuned)))
            for label, g, im in s.geometries()]


def run_scenario(s: Scenario) -> ScenarioResult:
    times = s.times
    curves = {}
    multi = len(s.initial) > 1
    for label, gen in scenario_generators(s):
        for init in s.initial:
            key = f"{init.label}_{label}" if multi else label
            curves[key] = propagate(gen, init.density(), times)
    meta = _metadata(s)
    _swap_check(s, curves, meta)
    return ScenarioResult(s, times, curves, _baselines(s, times), meta)


def _swap_check(s: Scenario, curves: dict[str, Trajectory], meta: dict[str, str]) -> None:
    """Record engine vs closed-form initial slopes for small-R swap curves."""
    if "one_atom" not in s.observables or SMALL_R not in s.separations:
        return
    multi = len(s.initial) > 1
    for init in s.initial:
        if init.atom1 not in ("up", "down") or not isinstance(init.atom2, SuperpositionCoeffs):
            continue
        traj = curves[f"{init.label}_small_r" if multi else "small_r"]
        engine = one_atom_slope(traj.generator @ traj.rho0)
        out_rate, in_rate = analytic.swap_rates_smallR(init.atom1, init.atom2)
        suffix = f"_{init.label}" if multi else ""
        meta[f"small_r_initial_slope_engine{suffix}"] = format_number(engine.real)
        meta[f"small_r_initial_slope_closed_form{suffix}"] = format_number(out_rate + in_rate)


@dataclass
class SweepResult:
    spec: SweepSpec
    xs: np.ndarray
    rates: dict[str, list[float | None]]
    baseline: float

    def to_csv(self) -> str:
        w = self.spec
        meta = {
            "package_version": __version__,
            "id": w.id,
            "units": "time in 1/gamma_op; rates in gamma_op",
            "observable": w.observable,
            "rate": "-d ln|O|/dt at t_star",
            "t_star": repr(w.t_star),
            "chi_over_delta": repr(w.chi_over_delta),
            "gamma_over_delta": repr(w.gamma_over_delta),
            "include_im_shift": _onoff(w.include_im_shift),
            "initial": w.initial.describe(),
        }
        head = ["x"] + [f"rate_{o}" for o in w.orientations] + ["rate_independent"]
        lines = [f"# {CSV_SCHEMA}"] + _fmt_meta(meta) + [",".join(head)]
        for i, x in enumerate(self.xs):
            row = [x] + [self.rates[o][i] for o in w.orientations] + [self.baseline]
            lines.append(",".join(format_number(v) for v in row))
        return "\n".join(lines) + "\n"


def _sweep_params(w: SweepSpec) -> DriveParams:
    return DriveParams.from_ratios(w.chi_over_delta, w.gamma_over_delta)


def _sweep_point(w: SweepSpec, orientation: str, x: float) -> float | None:
    g = PairGeometry.parallel(x) if orientation == "parallel" else PairGeometry.perpendicular(x)
    gen = assemble_generator(_sweep_params(w), g, include_im_shift=w.include_im_shift)
    traj = propagate(gen, w.initial.density(), [0.0, w.t_star])
    try:
        return instantaneous_rate(traj, w.observable, w.t_star)
    except RateUndefinedError:
        return None


def run_sweep(w: SweepSpec, max_workers: int | None = None) -> SweepResult:
    """Rates for every (orientation, x), computed concurrently, collected in order."""
    tasks = [(o, float(x)) for o in w.orientations for x in w.xs]
    workers = max_workers or min(8, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        values = list(pool.map(lambda ox: _sweep_point(w, *ox), tasks))
    n = len(w.xs)
    rates = {o: values[i * n:(i + 1) * n] for i, o in enumerate(w.orientations)}
    if w.observable == "coherence":
        baseline = 1.0
    else:
        baseline = -analytic.independent_population_slope(w.t_star) / analytic.independent_population(w.t_star)
    return SweepResult(w, w.xs, rates, float(baseline))


def run_swap(initial: str, coeffs: SuperpositionCoeffs, xs, orientation: str = "parallel",
             t_max: float = 5.0, samples: int = 101, include_im_shift: bool = False,
             id: str = "swap") -> ScenarioResult:
    """Coherence of atom 1 (prepared in z state ``initial``) induced by atom 2.

    A small-R entry in ``xs`` adds engine and closed-form initial slopes to
    the CSV metadata.
    """
    if initial not in ("up", "down"):
        raise ConfigError(f"initial must be 'up' or 'down', got {initial!r}", "initial")
    s = Scenario(
        id=id,
        initial=(InitialState(initial, coeffs),),
        separations=tuple(xs),
        orientations=(orientation,),
        t_max=t_max,
        samples=samples,
        observables=("one_atom",),
        baseline=False,
        include_im_shift=include_im_shift,
        notes=(f"atom 2 coefficients a={coeffs.a!r}, b={coeffs.b!r}",),
    )
    return run_scenario(s)


def one_atom_slope(drho_vec) -> complex:
    m = np.asarray(drho_vec).reshape(4, 4)
    return complex(m[3, 1] + m[2, 0])


_A_SMALL = 0.1
_B_LARGE = math.sqrt(0.99)
_IMBALANCED = (InitialState(SuperpositionCoeffs(_A_SMALL, _B_LARGE), SuperpositionCoeffs(_A_SMALL, _B_LARGE)),
               InitialState(SuperpositionCoeffs(_B_LARGE, _A_SMALL), SuperpositionCoeffs(_B_LARGE, _A_SMALL)))
_DOWN_DOWN = (InitialState("down", "down"),)
_SWAP_NOTE = ("atom 2 superposition a = b = 1/sqrt(2) is a preset default",)

PRESETS: dict[str, Scenario | SweepSpec] = {
    "fig3": Scenario("fig3"),
    "fig4": Scenario("fig4", initial=_IMBALANCED),
    "fig5": Scenario("fig5", initial=_DOWN_DOWN, observables=("population",)),
    "fig6": Scenario("fig6", separations=(0.7,), orientations=ORIENTATIONS),
    "fig7": SweepSpec(0.05, 10.0, samples=200, id="fig7"),
    "fig8": Scenario("fig8", initial=_IMBALANCED, separations=(1.0,), orientations=ORIENTATIONS),
    "fig9": Scenario("fig9", initial=_DOWN_DOWN, separations=(0.7,), orientations=ORIENTATIONS,
                     t_max=10.0, samples=201, observables=("population",)),
    "fig10": Scenario("fig10", initial=(InitialState("down", EQUAL),), separations=(SMALL_R, 1.0, 2.0),
                      t_max=5.0, samples=101, observables=("one_atom",), baseline=False, notes=_SWAP_NOTE),
    "fig11": Scenario("fig11", initial=(InitialState("up", EQUAL),), separations=(SMALL_R, 1.0, 2.0),
                      t_max=5.0, samples=101, observables=("one_atom",), baseline=False, notes=_SWAP_NOTE),
}


def preset(name: str, include_im_shift: bool | None = None) -> Scenario | SweepSpec:
    try:
        s = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown figure {name!r}; choose from {', '.join(PRESETS)}") from None
    if include_im_shift is None:
        return s
    return replace(s, include_im_shift=include_im_shift)
