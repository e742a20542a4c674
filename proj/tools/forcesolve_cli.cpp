#include "forcesolve/cli.hpp"

int main(int argc, char** argv) { return forcesolve::cli_main(argc, argv); }
