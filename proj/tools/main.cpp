// Copyright (c) 2026 the retime authors
// SPDX-License-Identifier: Apache-2.0
//
// CLI entry point. Placeholder while the pipeline is under construction.
#include <cstdio>

int main() {
    std::puts("retime: pipeline under construction");
    return 0;
}
