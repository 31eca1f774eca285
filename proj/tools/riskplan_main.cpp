#include "riskplan/cli.hpp"

int main(int argc, char** argv) { return riskplan::cli_main(argc, argv); }
