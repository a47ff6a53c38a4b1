#include "stablehomog/harness.hpp"

int main(int argc, char** argv) { return stablehomog::cli_main(argc, argv); }
