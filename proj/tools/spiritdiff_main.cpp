#include "spiritdiff/cli.hpp"

int main(int argc, char **argv) { return spiritdiff::cli_main(argc, argv); }
