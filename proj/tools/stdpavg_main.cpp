#include "stdpavg/cli.hpp"

int main(int argc, char** argv) { return stdpavg::run_cli(argc, argv); }
