//==============================================================================
// Copyright 2026 The fewbeam Authors
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
//==============================================================================

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fewbeam
{

/// Exit codes of RunCli.
enum CliExit : int
{
  kExitOk = 0,
  kExitRuntime = 1,
  kExitUsage = 2,
};

/// Runs the `fewbeam` command line. `args` excludes the program name.
/// Subcommands: sparsify, project, synth, optimize, pnp, eval, cdr.
/// The default seed comes from the FEWBEAM_SEED environment variable.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace fewbeam
