// SPDX-License-Identifier: Apache-2.0

#include <beampred/harness/cli.hpp>

int main(int argc, char **argv) { return beampred::harness::cli(argc, argv); }
