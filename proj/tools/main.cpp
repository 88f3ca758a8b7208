// SPDX-License-Identifier: Apache-2.0
#include "seq2graph/cli.hpp"

int main(int argc, char** argv) { return seq2graph::cli::run_cli(argc, argv); }
