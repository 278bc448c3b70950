#include "dspec_cli.hpp"

int main(int argc, char** argv) { return dspec::cli::run_cli(argc, argv); }
