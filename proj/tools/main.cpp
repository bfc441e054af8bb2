// SPDX-License-Identifier: Apache-2.0
#include "csiarm/cli/cli.hpp"

int main(int argc, char** argv) { return csiarm::cli::run(argc, argv); }
