#include "hpot/cli.hpp"

int main(int argc, char** argv) { return hpot::cli::cli_main(argc, argv); }
