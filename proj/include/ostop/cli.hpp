#pragma once

namespace ostop {

// Command-line driver (classify / solve / payoff / shoot / verify / curve).
// Exit codes: 0 success, 2 numeric or verification failure, 3 no optimal
// rule / no smooth-fit root, 4 malformed input or usage error.
int run_cli(int argc, char** argv);

} // namespace ostop
