#include "hellinger_lab/cli.hpp"

int main(int argc, char** argv) { return hlab::cli::run_command(argc, argv); }
