"""Experiment registry — decorator-based experiment registration and lookup."""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

logger = logging.getLogger(__name__)


@dataclass
class ExperimentParam:
    name: str
    type: str = "float"
    description: str = ""
    required: bool = False
    default: Any = None


@dataclass
class Table:
    columns: List[str]
    rows: List[Sequence[Any]] = field(default_factory=list)

    def add(self, *row: Any) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} values for {len(self.columns)} columns")
        self.rows.append(row)

    def column(self, name: str) -> List[Any]:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


@dataclass
class Plot:
    table: str
    x: str
    ys: List[str]
    group: Optional[str] = None   # one series per distinct value of this column
    scatter: bool = False
    logx: bool = False
    logy: bool = False


@dataclass
class ExperimentResult:
    type: str  # "data" | "error"
    text: str = ""
    tables: Dict[str, Table] = field(default_factory=dict)
    summary: Dict[str, Any] = field(default_factory=dict)
    plots: Dict[str, Plot] = field(default_factory=dict)
    module: str = ""


@dataclass
class ExperimentDef:
    name: str
    description: str
    params: List[ExperimentParam]
    handler: Callable[..., ExperimentResult]
    category: str = ""

    def defaults(self) -> Dict[str, Any]:
        return {p.name: p.default for p in self.params if not p.required}


_experiments: Dict[str, ExperimentDef] = {}


def register_experiment(
    name: str,
    description: str = "",
    params: Optional[List[ExperimentParam]] = None,
    category: str = "",
):
    """Decorator to register an experiment function."""
    def decorator(func):
        exp = ExperimentDef(
            name=name,
            description=description or func.__doc__ or "",
            params=params or [],
            handler=func,
            category=category,
        )
        _experiments[name] = exp
        logger.debug(f"Registered experiment: {name}")
        return func
    return decorator


def get_experiment(name: str) -> Optional[ExperimentDef]:
    return _experiments.get(name)


def all_experiments() -> Dict[str, ExperimentDef]:
    return dict(_experiments)


def experiment_descriptions() -> str:
    """One line per experiment for the CLI help epilog."""
    lines = []
    for name, exp in sorted(_experiments.items()):
        params = []
        for p in exp.params:
            req = "required" if p.required else f"default {p.default!r}"
            params.append(f"{p.name}({req})")
        params_text = ", ".join(params) if params else "none"
        cat = f" [{exp.category}]" if exp.category else ""
        lines.append(f"- {name}{cat}: {exp.description} | params: {params_text}")
    return "\n".join(lines)
