# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#     http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

# Created date: 19th October 2026
# Copyright 2026 The Polysynapse Authors

"""
Simple functions used across the package.
"""

import inspect
from typing import Callable, Iterable, Optional


def get_parameters(function: Callable) -> dict:
    """Gets the default parameters and its values from the function."""
    signature = inspect.signature(function)
    parameter_items = signature.parameters.items()
    is_empty = inspect.Parameter.empty
    parameters = {key: value.default for key, value in parameter_items if value.default is not is_empty}
    return parameters


def get_required_parameters(function: Callable, skip: int = 0) -> list:
    """Names of the parameters without a default, ignoring the first `skip` (the data arguments)."""
    parameter_items = list(inspect.signature(function).parameters.items())[skip:]
    return [key for key, value in parameter_items if value.default is inspect.Parameter.empty]


def make_registry(functions: Iterable[Callable], names: Optional[Iterable[str]] = None, skip: int = 0) -> dict:
    """Dictionary of {name: {"function", "parameters", "required"}} for a list of functions."""
    functions = list(functions)
    names = [ii_function.__name__ for ii_function in functions] if names is None else list(names)
    return {
        ii_name: {
            "function": ii_function,
            "parameters": get_parameters(ii_function),
            "required": get_required_parameters(ii_function, skip),
        }
        for ii_name, ii_function in zip(names, functions)
    }


def check_strictly_increasing(values: Iterable[float], name: str = "thresholds") -> list:
    """Returns the values as a list, raising ValueError unless they are strictly increasing."""
    values = list(values)
    for ii_previous, ii_next in zip(values, values[1:]):
        if not ii_next > ii_previous:
            raise ValueError(f"The {name} must be strictly increasing, got {values}.")
    return values
