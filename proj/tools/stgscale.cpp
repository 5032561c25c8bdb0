#include "stg/cli.hpp"

int main(int argc, char **argv) { return stg::run_cli(argc, argv); }
