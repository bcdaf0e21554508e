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

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Optional


@dataclass(frozen=True)
class Report:
    """Outcome of a validator: a flag, a witness of the first failure and free-form details."""

    valid: bool
    witness: Optional[Any] = None
    message: str = ""
    details: Dict[str, Any] = field(default_factory=dict)

    def __bool__(self):
        return self.valid

    def to_dict(self) -> Dict[str, Any]:
        data = {"valid": self.valid, "witness": self.witness}
        if self.message:
            data["message"] = self.message
        data.update(self.details)
        return data

    @classmethod
    def ok(cls, message: str = "", **details) -> "Report":
        return cls(True, None, message, details)

    @classmethod
    def fail(cls, witness: Any, message: str = "", **details) -> "Report":
        return cls(False, witness, message, details)


def combine(named: Dict[str, Report]) -> Report:
    """Fold several reports into one; the first failing entry supplies the witness."""
    for name, report in named.items():
        if not report.valid:
            return Report.fail(
                {"check": name, "witness": report.witness},
                report.message or f"{name} failed",
                checks={key: value.valid for key, value in named.items()},
            )
    return Report.ok(checks={key: value.valid for key, value in named.items()})
