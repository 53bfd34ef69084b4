#pragma once

#include "ostop/funcmodel.hpp"

#include <string>

namespace ostop {

// Malformed problem description (names the offending field/segment).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parse a stopping problem from its JSON description (schema in README.md).
// The returned problem is not yet validated; call Problem::validate().
Problem parse_problem_json(const std::string& text);

// Read and parse a JSON problem file.
Problem load_problem_file(const std::string& path);

} // namespace ostop
