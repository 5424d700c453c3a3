// tools/main.cpp

// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "specrec/cli.hpp"

int main(int argc, char** argv) { return specrec::cli::run_cli(argc, argv); }
