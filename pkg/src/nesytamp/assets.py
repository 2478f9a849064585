"""Access to the domain and problem files shipped with the package."""
from __future__ import annotations

from importlib import resources

from .pddl import Domain, Problem, parse_domain, parse_problem

DOMAIN_FILE = "bolt_disassembly.pddl"
PROBLEM_FILE = "bolt_task.pddl"


def read_asset(name: str) -> str:
    return resources.files("nesytamp").joinpath("domains").joinpath(name).read_text(encoding="utf-8")


def load_bolt_domain() -> Domain:
    return parse_domain(read_asset(DOMAIN_FILE))


def load_bolt_problem(domain: Domain | None = None) -> Problem:
    return parse_problem(read_asset(PROBLEM_FILE), domain or load_bolt_domain())
