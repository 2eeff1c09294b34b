from pathlib import Path
from typing import Any, Dict, Optional

from jinja2 import Environment, FileSystemLoader

from apparent_loci.protocol import FuncElemModel, PlaceModel

PACKAGE_TEMPLATES = Path(__file__).parent / "templates"


def place_label(place: PlaceModel) -> str:
    """The place in divisor notation, e.g. (0,1), inf, closed[x^2 + 1]."""
    if place.kind == "infinity":
        return "inf"
    if place.kind == "affine":
        return f"({place.x},{place.y})"
    if place.branch:
        return f"closed[{place.minpoly}; y={place.branch}]"
    return f"closed[{place.minpoly}]"


def function_label(u: FuncElemModel) -> str:
    if u.b == "0":
        return u.a
    ytext = "y" if u.b == "1" else f"({u.b})*y"
    return ytext if u.a == "0" else f"{u.a} + {ytext}"


def get_jinja_env(template_dir: str) -> Environment:
    """
    Creates a Jinja2 environment with filters for places and functions.
    """
    env = Environment(
        loader=FileSystemLoader(template_dir),
        trim_blocks=True,
        lstrip_blocks=True,
    )
    env.filters["place"] = place_label
    env.filters["function"] = function_label
    return env


def render_report(
    template_name: str, template_dir: Optional[str], context: Dict[str, Any]
) -> str:
    """
    Renders a text or Markdown report from a Jinja2 template file.
    """
    env = get_jinja_env(template_dir or str(PACKAGE_TEMPLATES))
    template = env.get_template(template_name)
    return template.render(**context)
