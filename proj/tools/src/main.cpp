#include "spectralds_cli/run_cli.hpp"

int main(int argc, char** argv) { return spectralds::cli::run_cli(argc, argv); }
