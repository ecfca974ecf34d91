"""Bundled instance fixtures (see README.md in this directory)."""

from importlib import resources

from ..core import PersuasionInstance, instance_from_json
import json


def load_fixture(name: str) -> PersuasionInstance:
    text = resources.files(__package__).joinpath(f"{name}.json").read_text()
    return instance_from_json(json.loads(text))


def scenario1() -> PersuasionInstance:
    return load_fixture("scenario1")


def scenario2() -> PersuasionInstance:
    return load_fixture("scenario2")


def advisor5() -> PersuasionInstance:
    return load_fixture("advisor5")


def merge_failure3() -> PersuasionInstance:
    return load_fixture("merge_failure3")


def local3() -> PersuasionInstance:
    return load_fixture("local3")
