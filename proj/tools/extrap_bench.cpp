#include "extrap/cli.hpp"

int main(int argc, char** argv) { return extrap::cli_main(argc, argv); }
