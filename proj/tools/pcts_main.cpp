#include "pcts/cli.hpp"

int main(int argc, char** argv) { return pcts::cli::run(argc, argv); }
