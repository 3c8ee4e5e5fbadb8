// SPDX-License-Identifier: Apache-2.0
#include "psytraj/cli.hpp"

int main(int argc, char** argv) { return psytraj::cli::run(argc, argv); }
