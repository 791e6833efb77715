#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chromatwin::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kVision = 2,
    kStorage = 3,
    kModel = 4,
};

// Runs one command line. Results go to `out`; failures print a single
// "error: <kind>: <message>" line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace chromatwin::cli
