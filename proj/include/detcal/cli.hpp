/* Copyright 2026 The detcal Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef DETCAL_CLI_HPP_
#define DETCAL_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace detcal::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitValidation = 2;

// Runs the command line (argv[0] is the program name). Reports go to the
// --out file when given and to out otherwise; diagnostics go to err.
int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace detcal::cli

#endif  // DETCAL_CLI_HPP_
