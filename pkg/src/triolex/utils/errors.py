# Copyright 2025 Lucas Zampieri
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Exception hierarchy shared by every triolex module."""


class TriolexError(Exception):
    """Base class for all triolex errors"""


class RingMismatchError(TriolexError, ValueError):
    """Operands live in different coordinate rings"""


class AxisError(TriolexError, IndexError):
    """Coordinate axis out of range"""


class ShapeError(TriolexError, ValueError):
    """Array or matrix shape does not match the algebra ranks"""


class OrderError(TriolexError, ValueError):
    """Requested order is below the operator order"""


class DegreeError(TriolexError, ValueError):
    """Inadmissible degree or degree combination"""


class NonUnitDeterminantError(TriolexError, ValueError):
    """Matrix is not invertible over the polynomial ring"""


class DegenerateFormError(TriolexError, ValueError):
    """Operation needs a nondegenerate metric"""


class RankCapError(TriolexError, ValueError):
    """Construction would exceed a configured rank or valence cap"""


class SubstitutionError(TriolexError, ValueError):
    """Malformed ring substitution"""


class NotCharacterizedError(TriolexError, NotImplementedError):
    """Degree admitted in principle but without a known characterization"""


class SchemaError(TriolexError, ValueError):
    """Workspace JSON does not follow the schema"""


class UnknownObjectError(TriolexError, KeyError):
    """Named object is missing from a workspace"""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown object"


class ClosureError(TriolexError, ValueError):
    """Family of derivations is not closed under the bracket"""


class InvalidOperatorError(TriolexError, ValueError):
    """Operator fails the triolic relations it is required to satisfy"""
