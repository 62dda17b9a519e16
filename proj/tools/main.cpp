#include "ambicon/cli_runner.hpp"

int main(int argc, char** argv) { return ambicon::run_cli(argc, argv); }
