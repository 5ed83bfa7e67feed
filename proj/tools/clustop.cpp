#include "clustop/cli.hpp"

int main(int argc, char** argv) { return clustop::cli_main(argc, argv); }
