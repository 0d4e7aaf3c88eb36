// Copyright (C) 2026 signanon contributors
// SPDX-License-Identifier: Apache-2.0

#include "signanon/cli.hpp"

int main(int argc, char** argv) { return signanon::run_cli(argc, argv); }
