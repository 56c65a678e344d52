#include "speechparse/cli.h"

int main(int argc, char** argv) { return speechparse::cli::run_cli(argc, argv); }
