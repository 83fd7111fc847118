"""
   Scenario and sweep documents. Each class wraps the raw JSON, fills the documented defaults and exposes the
   solver objects it describes; the raw document stays available through .json.
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from backports.cached_property import cached_property

from zoomfem.multiscale.assembly import (
    DEFAULT_BETA,
    Material,
    MultiscaleConfig,
    PlaneModel,
    RegularizationMode,
    boundary_conditions,
)
from zoomfem.multiscale.experiments.presets import resolve
from zoomfem.multiscale.homogenize import AccumulationMode, MMTParams, PorePopulation, mmt_effective
from zoomfem.multiscale.levelset import Circle, LevelSet, pore_level_set, zoom_level_set
from zoomfem.multiscale.mesh import BoundaryTag, Rectangle
from zoomfem.multiscale.mixing import MixingProfile, MixingWeight
from zoomfem.multiscale.protocol import ConfigError
from zoomfem.multiscale.utils import merged, read_json

logger = logging.getLogger(__name__)

RVE_WHOLE_DOMAIN: str = "whole_domain"
RVE_INSIDE_ZOOMS: str = "inside_zooms"
ZOOM_EVERYWHERE: str = "whole_domain"
REFINE_TARGETS = ("zooms", "pores")

SCENARIO_DEFAULTS: Dict[str, Any] = {
    "name": "scenario",
    "domain": [0.0, 0.0, 12.0, 10.0],
    "mesh": {"nx": 24, "ny": 20, "refine_levels": 0, "refine_band": 0.0, "refine_target": "zooms"},
    "pores": [],
    "zooms": [],
    "mixing": {"width": 0.1, "profile": MixingProfile.SINE.value},
    "stabilization": {"beta": DEFAULT_BETA, "mode": RegularizationMode.CUT_ONLY.value},
    "materials": {
        "micro": {"E": 1.0, "nu": 0.3},
        "macro": {"E": 1.0, "nu": 0.3},
        "rve": RVE_WHOLE_DOMAIN,
        "eshelby": 3.0,
        "accumulation": AccumulationMode.INCREMENTAL.value,
        "plane": PlaneModel.STRAIN.value,
    },
    "bcs": {"clamped": BoundaryTag.BOTTOM.value, "loaded": BoundaryTag.TOP.value},
    "body_force": {"macro": [0.0, 0.0], "micro": [0.0, 0.0]},
    "quadrature": {"transition": 4, "cut": 2},
    "output": {"vtk": "fields.vtk", "metrics": "metrics.csv"},
    "reference": None,
}

SWEEP_DEFAULTS: Dict[str, Any] = {
    "name": "sweep",
    "scenario": None,
    "meshes": [],
    "two_eps": [],
    "betas": [],
    "modes": [],
    "offsets": [[0.0, 0.0]],
    "output": {"table": "condstudy.csv", "slopes": "slopes.csv"},
}


class ScenarioData:
    def __init__(self, json: Dict[str, Any]):
        self._json = json

    def _onchange(self):
        # sub classes should clear any cached items here
        pass

    @property
    def json(self) -> Dict[str, Any]:
        return self._json

    @json.setter
    def json(self, json):
        self._json = json
        self._onchange()

    def __getitem__(self, name):
        return self.json.get(name)


def _section(value: Any, name: str) -> Dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError(f"{name} must be an object, got {value!r}")
    return value


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _integer(value: Any, name: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


def _vector(value: Any, name: str) -> List[float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{name} must be a pair of numbers, got {value!r}")
    return [_number(v, name) for v in value]


def _circles(value: Any, name: str) -> List[Circle]:
    if not isinstance(value, list):
        raise ConfigError(f"{name} must be a list of {{center, radius}} objects, got {value!r}")
    circles = []
    for i, entry in enumerate(value):
        entry = _section(entry, f"{name}[{i}]")
        center = _vector(entry.get("center"), f"{name}[{i}].center")
        circles.append(Circle(center, _number(entry.get("radius"), f"{name}[{i}].radius")))
    return circles


def _material(value: Any, name: str, plane: PlaneModel) -> Material:
    value = _section(value, name)
    return Material(_number(value.get("E"), f"{name}.E"), _number(value.get("nu"), f"{name}.nu"), plane)


class Scenario(ScenarioData):
    """
    one run: geometry, mesh, materials, mixing, stabilization and loading
    """

    def __init__(self, json: Dict[str, Any], source: Optional[Path] = None):
        """
        :param json: the scenario document; missing keys take the documented defaults
        :param source: the file it was read from, if any
        """
        super().__init__(_section(json, "scenario"))
        self.source = source
        self.validate()

    @staticmethod
    def load(config: Union[str, Path]) -> "Scenario":
        """
        :param config: a scenario file or the name of a bundled preset
        """
        path = resolve(str(config))
        logger.info("loading scenario %s", path)
        return Scenario(read_json(path), source=path)

    def _onchange(self):
        for name in list(self.__dict__):
            if name not in ("_json", "source"):
                del self.__dict__[name]
        self.validate()

    @cached_property
    def effective_json(self) -> Dict[str, Any]:
        """
        the document with every default filled in; running it again reproduces the run
        """
        unknown = sorted(set(self.json) - set(SCENARIO_DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown scenario keys: {', '.join(unknown)}")
        return merged(SCENARIO_DEFAULTS, self.json)

    def _get(self, *keys: str) -> Any:
        value = self.effective_json
        for key in keys:
            value = _section(value, ".".join(keys[:-1]) or "scenario").get(key)
        return value

    @property
    def name(self) -> str:
        return str(self._get("name"))

    @cached_property
    def domain(self) -> Rectangle:
        value = self._get("domain")
        if not isinstance(value, list):
            raise ConfigError(f"domain must be [xmin, ymin, xmax, ymax], got {value!r}")
        return Rectangle.from_sequence([_number(v, "domain") for v in value])

    @property
    def nx(self) -> int:
        return _integer(self._get("mesh", "nx"), "mesh.nx", 1)

    @property
    def ny(self) -> int:
        return _integer(self._get("mesh", "ny"), "mesh.ny", 1)

    @property
    def refine_levels(self) -> int:
        return _integer(self._get("mesh", "refine_levels"), "mesh.refine_levels")

    @property
    def refine_band(self) -> float:
        band = _number(self._get("mesh", "refine_band"), "mesh.refine_band")
        if band < 0:
            raise ConfigError(f"mesh.refine_band must be non-negative, got {band!r}")
        return band

    @property
    def refine_target(self) -> Union[str, List[Circle]]:
        """
        "zooms", "pores" or an explicit list of circles
        """
        target = self._get("mesh", "refine_target")
        if isinstance(target, list):
            return _circles(target, "mesh.refine_target")
        if target not in REFINE_TARGETS:
            raise ConfigError(f"mesh.refine_target must be one of {list(REFINE_TARGETS)} or circles, got {target!r}")
        return target

    @cached_property
    def refine_level_set(self) -> LevelSet:
        """
        negative inside the regions whose neighbourhood is refined
        """
        target = self.refine_target
        if isinstance(target, list):
            return zoom_level_set(target)
        if target == "pores":
            return zoom_level_set(self.pores)
        return self.zoom_level_set

    @cached_property
    def pores(self) -> List[Circle]:
        return _circles(self._get("pores"), "pores")

    @property
    def zoom_everywhere(self) -> bool:
        return self._get("zooms") == ZOOM_EVERYWHERE

    @cached_property
    def zooms(self) -> List[Circle]:
        if self.zoom_everywhere:
            return []
        return _circles(self._get("zooms"), "zooms")

    @cached_property
    def pore_level_set(self) -> LevelSet:
        return pore_level_set(self.pores)

    @cached_property
    def zoom_level_set(self) -> LevelSet:
        return zoom_level_set(self.zooms, whole_domain=self.zoom_everywhere)

    @cached_property
    def mixing(self) -> MixingWeight:
        width = _number(self._get("mixing", "width"), "mixing.width")
        try:
            profile = MixingProfile(self._get("mixing", "profile"))
        except ValueError:
            raise ConfigError(f"mixing.profile must be one of {[p.value for p in MixingProfile]}") from None
        return MixingWeight.from_full_width(width, profile)

    @property
    def beta(self) -> float:
        return _number(self._get("stabilization", "beta"), "stabilization.beta")

    @property
    def mode(self) -> RegularizationMode:
        try:
            return RegularizationMode(self._get("stabilization", "mode"))
        except ValueError:
            raise ConfigError(
                f"stabilization.mode must be one of {[m.value for m in RegularizationMode]}"
            ) from None

    @property
    def plane(self) -> PlaneModel:
        try:
            return PlaneModel(self._get("materials", "plane"))
        except ValueError:
            raise ConfigError("materials.plane must be strain or stress") from None

    @cached_property
    def micro_material(self) -> Material:
        return _material(self._get("materials", "micro"), "materials.micro", self.plane)

    @property
    def macro_is_auto(self) -> bool:
        return self._get("materials", "macro") == "auto"

    @property
    def rve(self) -> str:
        return self._get("materials", "rve")

    @cached_property
    def mmt_params(self) -> MMTParams:
        try:
            mode = AccumulationMode(self._get("materials", "accumulation"))
        except ValueError:
            raise ConfigError("materials.accumulation must be incremental or cumulative") from None
        return MMTParams(_number(self._get("materials", "eshelby"), "materials.eshelby"), mode)

    @cached_property
    def rve_population(self) -> PorePopulation:
        population = PorePopulation(self.pores, self.domain.area)
        if self.rve == RVE_INSIDE_ZOOMS:
            return population.inside(self.zooms)
        return population

    @cached_property
    def macro_material(self) -> Material:
        if not self.macro_is_auto:
            return _material(self._get("materials", "macro"), "materials.macro", self.plane)
        micro = self.micro_material
        modulus = mmt_effective(micro.young, self.rve_population, self.mmt_params)
        logger.info("homogenized macro modulus %.6g over the %s RVE", modulus, self.rve)
        return micro.with_young(modulus)

    @cached_property
    def boundary(self):
        bcs = _section(self._get("bcs"), "bcs")
        unknown = sorted(set(bcs) - {"clamped", "loaded", "displacement", "traction"})
        if unknown:
            raise ConfigError(f"unknown bcs keys: {', '.join(unknown)}")
        tags = {}
        for key in ("clamped", "loaded"):
            try:
                tags[key] = BoundaryTag(bcs.get(key))
            except ValueError:
                raise ConfigError(f"bcs.{key} must be one of {[t.value for t in BoundaryTag]}") from None
        displacement = bcs.get("displacement")
        traction = bcs.get("traction")
        return boundary_conditions(
            tags["clamped"],
            tags["loaded"],
            None if displacement is None else _vector(displacement, "bcs.displacement"),
            None if traction is None else _vector(traction, "bcs.traction"),
        )

    @cached_property
    def multiscale_config(self) -> MultiscaleConfig:
        dirichlet, tractions = self.boundary
        return MultiscaleConfig(
            micro=self.micro_material,
            macro=self.macro_material,
            mixing=self.mixing,
            dirichlet=dirichlet,
            tractions=tractions,
            beta=self.beta,
            mode=self.mode,
            body_macro=_vector(self._get("body_force", "macro"), "body_force.macro"),
            body_micro=_vector(self._get("body_force", "micro"), "body_force.micro"),
            transition_degree=_integer(self._get("quadrature", "transition"), "quadrature.transition", 1),
            cut_degree=_integer(self._get("quadrature", "cut"), "quadrature.cut", 1),
        )

    @property
    def vtk_name(self) -> str:
        return str(self._get("output", "vtk"))

    @property
    def metrics_name(self) -> str:
        return str(self._get("output", "metrics"))

    def validate(self) -> None:
        """
        :raises ConfigError: on any invalid or inconsistent entry
        """
        domain = self.domain
        for i, pore in enumerate(self.pores):
            lo, hi = pore.center - pore.radius, pore.center + pore.radius
            if not (domain.contains(lo[None, :])[0] and domain.contains(hi[None, :])[0]):
                raise ConfigError(f"pores[{i}] {pore!r} does not lie within the domain {domain!r}")
        zooms = self._get("zooms")
        if not (isinstance(zooms, list) or zooms == ZOOM_EVERYWHERE):
            raise ConfigError(f"zooms must be a list of circles or {ZOOM_EVERYWHERE!r}, got {zooms!r}")
        if self.macro_is_auto:
            if self.rve not in (RVE_WHOLE_DOMAIN, RVE_INSIDE_ZOOMS):
                raise ConfigError(f"materials.rve must be {RVE_WHOLE_DOMAIN} or {RVE_INSIDE_ZOOMS}, got {self.rve!r}")
            if self.rve == RVE_INSIDE_ZOOMS and not self.zooms:
                raise ConfigError("materials.rve inside_zooms needs at least one zoom")
        _ = (self.nx, self.ny, self.refine_levels, self.refine_band, self.refine_target)
        _ = (self.mixing, self.mode, self.beta, self.multiscale_config, self.reference_mesh)

    @cached_property
    def reference_mesh(self) -> Optional[Dict[str, Any]]:
        """
        the mesh of the full microscale reference run, if one is requested
        """
        value = self._get("reference")
        if value is None:
            return None
        requested = _section(_section(value, "reference").get("mesh", {}), "reference.mesh")
        mesh = merged(SCENARIO_DEFAULTS["mesh"], requested)
        _integer(mesh["nx"], "reference.mesh.nx", 1)
        _integer(mesh["ny"], "reference.mesh.ny", 1)
        return mesh

    def with_overrides(self, overrides: Dict[str, Any]) -> "Scenario":
        return Scenario(merged(self.json, overrides), source=self.source)

    def shifted(self, offset: Sequence[float]) -> "Scenario":
        """
        the same scenario with every pore moved by offset
        """
        dx, dy = _vector(list(offset), "offset")
        pores = [{"center": [p.center[0] + dx, p.center[1] + dy], "radius": p.radius} for p in self.pores]
        return self.with_overrides({"pores": pores})

    def reference(self) -> Optional["Scenario"]:
        """
        the full microscale run this scenario is compared against: same geometry and loading, zoom everywhere
        """
        if self.reference_mesh is None:
            return None
        document = merged(self.json, {"mesh": self.reference_mesh, "name": f"{self.name}-reference"})
        document["zooms"] = ZOOM_EVERYWHERE
        document["reference"] = None
        document["materials"] = merged(self.effective_json["materials"], {"macro": self._get("materials", "micro")})
        return Scenario(document, source=self.source)

    def __repr__(self):
        return f"<Scenario {self.name} pores={len(self.pores)} zooms={len(self.zooms)} mesh={self.nx}x{self.ny}>"


class Sweep(ScenarioData):
    """
    a condition number study: the cross product of meshes, transition widths, betas, modes and pore offsets
    over one base scenario
    """

    def __init__(self, json: Dict[str, Any], source: Optional[Path] = None):
        super().__init__(_section(json, "sweep"))
        self.source = source
        unknown = sorted(set(self.json) - set(SWEEP_DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown sweep keys: {', '.join(unknown)}")
        self.effective_json = merged(SWEEP_DEFAULTS, self.json)
        _ = self.base

    @staticmethod
    def load(config: Union[str, Path]) -> "Sweep":
        path = resolve(str(config))
        return Sweep(read_json(path), source=path)

    @property
    def name(self) -> str:
        return str(self.effective_json["name"])

    @cached_property
    def base(self) -> Scenario:
        value = self.effective_json["scenario"]
        if isinstance(value, str):
            if self.source is not None and (self.source.parent / value).is_file():
                return Scenario.load(self.source.parent / value)
            return Scenario.load(value)
        if isinstance(value, dict):
            return Scenario(value, source=self.source)
        raise ConfigError("sweep.scenario must be a scenario object, a file or a preset name")

    def _list(self, key: str, default: List[Any]) -> List[Any]:
        value = self.effective_json[key]
        if not isinstance(value, list):
            raise ConfigError(f"sweep.{key} must be a list, got {value!r}")
        return value or default

    @property
    def meshes(self) -> List[Dict[str, Any]]:
        base = self.base.effective_json["mesh"]
        return [merged(base, _section(m, "sweep.meshes[]")) for m in self._list("meshes", [base])]

    @property
    def two_eps(self) -> List[float]:
        return [_number(v, "sweep.two_eps") for v in self._list("two_eps", [self.base.mixing.full_width])]

    @property
    def betas(self) -> List[float]:
        return [_number(v, "sweep.betas") for v in self._list("betas", [self.base.beta])]

    @property
    def modes(self) -> List[str]:
        modes = self._list("modes", [self.base.mode.value])
        for m in modes:
            try:
                RegularizationMode(m)
            except ValueError:
                raise ConfigError(f"sweep.modes entry {m!r} is not a regularization mode") from None
        return modes

    @property
    def offsets(self) -> List[Tuple[float, float]]:
        return [tuple(_vector(o, "sweep.offsets")) for o in self._list("offsets", [[0.0, 0.0]])]

    def table_name(self) -> str:
        return str(self.effective_json["output"]["table"])

    def slopes_name(self) -> str:
        return str(self.effective_json["output"]["slopes"])

    def points(self) -> List["SweepPoint"]:
        """
        every combination in a fixed order: offset, mode, beta, transition width, then mesh
        """
        return [
            SweepPoint(self, mesh, two_eps, beta, mode, offset)
            for offset in self.offsets
            for mode in self.modes
            for beta in self.betas
            for two_eps in self.two_eps
            for mesh in self.meshes
        ]

    def __repr__(self):
        return f"<Sweep {self.name} base={self.base.name}>"


class SweepPoint:
    def __init__(
        self, sweep: Sweep, mesh: Dict[str, Any], two_eps: float, beta: float, mode: str, offset: Tuple[float, float]
    ):
        self.sweep = sweep
        self.mesh = mesh
        self.two_eps = two_eps
        self.beta = beta
        self.mode = mode
        self.offset = offset

    @property
    def series(self) -> Tuple[str, float, float, Tuple[float, float]]:
        """
        the key of the curve this point belongs to; points of one series differ only in the mesh
        """
        return self.mode, self.two_eps, self.beta, self.offset

    def scenario(self) -> Scenario:
        """
        :raises ConfigError: when the combination is invalid, e.g. an offset pushes a pore out of the domain
        """
        base = self.sweep.base.shifted(self.offset) if any(self.offset) else self.sweep.base
        return base.with_overrides(
            {
                "mesh": self.mesh,
                "mixing": {"width": self.two_eps},
                "stabilization": {"beta": self.beta, "mode": self.mode},
            }
        )

    def __repr__(self):
        return f"<SweepPoint mesh={self.mesh} 2eps={self.two_eps:g} beta={self.beta:g} {self.mode} {self.offset}>"
