// SPDX-License-Identifier: Apache-2.0

#include "jumplan/cli.hpp"

int main(int argc, char** argv) { return jumplan::cli::run_main(argc, argv); }
