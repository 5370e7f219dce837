// Copyright 2026 privmap contributors
// SPDX-License-Identifier: Apache-2.0

#include "privmap/cli.hpp"

int main(int argc, char** argv) { return privmap::cli_run(argc, argv); }
