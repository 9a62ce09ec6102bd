#include "psl/cli.hpp"

int main(int argc, char** argv) { return psl::cli::run(argc, argv); }
