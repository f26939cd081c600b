#!/usr/bin/env python3
# Copyright 2026 The planereg Authors.
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

"""Prepends the Apache-2.0 header to C++ and Python sources that do not carry it yet."""

import pathlib
import sys

HEADER = """\
// Copyright 2026 The planereg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

"""

DIRS = ("include", "src", "tests", "tools")
SUFFIXES = {".cpp", ".hpp", ".h", ".cc", ".py"}


def header_for(path: pathlib.Path) -> str:
    if path.suffix == ".py":
        return "".join("#" + line[2:] + "\n" for line in HEADER.rstrip().splitlines()) + "\n"
    return HEADER


def main() -> int:
    root = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent)
    changed = 0
    for d in DIRS:
        for path in sorted((root / d).rglob("*")):
            if path.suffix not in SUFFIXES or not path.is_file():
                continue
            text = path.read_text(encoding="utf-8")
            header = header_for(path)
            shebang = ""
            if text.startswith("#!"):
                shebang, _, text = text.partition("\n")
                shebang += "\n"
            if text.startswith(header.splitlines()[0]):
                continue
            path.write_text(shebang + header + text, encoding="utf-8")
            changed += 1
    print(f"added header to {changed} file(s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
