#include "ostop/cli.hpp"

int main(int argc, char** argv) { return ostop::run_cli(argc, argv); }
