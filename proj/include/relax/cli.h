// Copyright 2026 The relax Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: explain, filter, evaluate, bound, corpus, render.

#ifndef RELAX_CLI_H_
#define RELAX_CLI_H_

#include <ostream>
#include <string>

#include "relax/maskgen.h"

namespace relax {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Parses "n=3000,h=7,w=7,p=0.5,block=7" (any subset, any order) into `spec`.
void parse_mask_option(const std::string& text, MaskBatchSpec& spec);

// Runs one command line. argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace relax

#endif  // RELAX_CLI_H_
