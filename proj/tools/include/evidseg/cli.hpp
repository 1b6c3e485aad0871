// Copyright 2026 The evidseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iostream>

namespace evidseg::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kUnsafeOverwrite = 3,
  kMissingArtifact = 4,
  kNumericalFailure = 5,
};

// Entry point of the `evidseg` tool: generate-data, train, evaluate, compare.
int run(int argc, const char* const* argv, std::ostream& out = std::cout,
        std::ostream& err = std::cerr);

}  // namespace evidseg::cli
